"""Quantum channels in operator-sum (Kraus) form."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .matcore import (
    DEFAULT_TOL,
    DimensionError,
    DomainError,
    OperatorBasis,
    as_matrix,
    check_tol,
    dagger,
    expm,
    fro_norm,
    is_hermitian,
    op_norm,
    orthonormalize,
    require_isometry,
    svd,
)


@dataclass(frozen=True)
class KrausChannel:
    """Channel ``rho -> sum_k E_k rho E_k^dagger`` with ``E_k`` of shape ``(d_out, d_in)``.

    Trace preservation is *not* enforced on construction (correction channels
    are only trace preserving on a support); use :func:`validate`.
    """

    kraus: np.ndarray

    def __post_init__(self):
        ops = self.kraus
        if isinstance(ops, np.ndarray) and ops.ndim == 2:
            ops = ops[None]
        if not isinstance(ops, np.ndarray):
            ops = list(ops)
            if not ops:
                raise DimensionError("a channel needs at least one Kraus operator")
            ops = [as_matrix(e, "Kraus operator") for e in ops]
            shape = ops[0].shape
            for e in ops:
                if e.shape != shape:
                    raise DimensionError(f"Kraus operators disagree in shape: {shape} vs {e.shape}")
            ops = np.stack(ops)
        ops = np.array(ops, dtype=complex)
        if ops.ndim != 3 or ops.shape[0] == 0 or 0 in ops.shape[1:]:
            raise DimensionError(f"Kraus array must have shape (k, d_out, d_in), got {ops.shape}")
        if not np.all(np.isfinite(ops)):
            raise DomainError("Kraus operators have non-finite entries")
        ops.setflags(write=False)
        object.__setattr__(self, "kraus", ops)

    @property
    def d_in(self) -> int:
        return self.kraus.shape[2]

    @property
    def d_out(self) -> int:
        return self.kraus.shape[1]

    def __len__(self) -> int:
        return self.kraus.shape[0]

    def __iter__(self):
        return iter(self.kraus)


@dataclass(frozen=True)
class ValidationReport:
    tp_residual: float
    choi_min_eigenvalue: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.tp_residual <= self.tol and self.choi_min_eigenvalue >= -self.tol


def identity_channel(d: int) -> KrausChannel:
    return KrausChannel(np.eye(d, dtype=complex)[None])


def unitary_channel(u) -> KrausChannel:
    return KrausChannel(as_matrix(u)[None])


def tp_residual(ch: KrausChannel, support: np.ndarray | None = None) -> float:
    """``||sum E^dagger E - 1||`` (operator norm); ``support`` replaces the identity."""
    target = np.eye(ch.d_in) if support is None else support
    return op_norm(np.einsum("kji,kjl->il", ch.kraus.conj(), ch.kraus) - target)


def validate(ch: KrausChannel, tol: float = DEFAULT_TOL) -> ValidationReport:
    tol = check_tol(tol)
    j = choi(ch)
    w = np.linalg.eigvalsh((j + dagger(j)) / 2)
    return ValidationReport(tp_residual(ch), float(w[0]), tol)


def apply(ch: KrausChannel, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (ch.d_in, ch.d_in):
        raise DimensionError(f"state must be {ch.d_in}x{ch.d_in}, got {rho.shape}")
    return np.einsum("kij,jl,kml->im", ch.kraus, rho, ch.kraus.conj())


def apply_dual(ch: KrausChannel, a) -> np.ndarray:
    """Heisenberg picture ``A -> sum_k E_k^dagger A E_k``."""
    a = np.asarray(a, dtype=complex)
    if a.shape != (ch.d_out, ch.d_out):
        raise DimensionError(f"observable must be {ch.d_out}x{ch.d_out}, got {a.shape}")
    return np.einsum("kji,jl,klm->im", ch.kraus.conj(), a, ch.kraus)


def apply_weighted(ch: KrausChannel, a, weights) -> np.ndarray:
    """``sum_k w_k E_k A E_k^dagger`` for arbitrary ``d_in x d_in`` operators."""
    a = np.asarray(a, dtype=complex)
    w = np.asarray(weights, dtype=float)
    return np.einsum("k,kij,jl,kml->im", w, ch.kraus, a, ch.kraus.conj())


def choi(ch: KrausChannel) -> np.ndarray:
    """``sum_ij |i><j| (x) E(|i><j|)``, of size ``d_in*d_out``; input factor first."""
    vs = ch.kraus.transpose(0, 2, 1).reshape(len(ch), -1)
    return vs.T @ vs.conj()


def choi_distance(ch1: KrausChannel, ch2: KrausChannel) -> float:
    if (ch1.d_in, ch1.d_out) != (ch2.d_in, ch2.d_out):
        raise DimensionError("channels act between different spaces")
    return fro_norm(choi(ch1) - choi(ch2))


def channels_equal(ch1: KrausChannel, ch2: KrausChannel, tol: float = DEFAULT_TOL) -> bool:
    return choi_distance(ch1, ch2) <= tol


def compose(ch2: KrausChannel, ch1: KrausChannel) -> KrausChannel:
    """``ch2 o ch1`` (apply ``ch1`` first)."""
    if ch1.d_out != ch2.d_in:
        raise DimensionError(f"cannot compose: ch1 outputs {ch1.d_out}, ch2 expects {ch2.d_in}")
    ops = np.einsum("aij,bjk->baik", ch2.kraus, ch1.kraus)
    return KrausChannel(ops.reshape(-1, ch2.d_out, ch1.d_in))


def restrict(ch: KrausChannel, v, tol: float = DEFAULT_TOL) -> KrausChannel:
    """Channel ``rho -> E(v rho v^dagger)`` with Kraus ``{E_k v}``."""
    v = require_isometry(v, tol)
    if v.shape[0] != ch.d_in:
        raise DimensionError(f"isometry maps into C^{v.shape[0]}, channel expects C^{ch.d_in}")
    return KrausChannel(ch.kraus @ v)


def remix(ch: KrausChannel, gamma) -> KrausChannel:
    """Channel with elements ``F_i = sum_j gamma_ij E_j`` (not checked for TP)."""
    gamma = np.asarray(gamma, dtype=complex)
    if gamma.ndim != 2 or gamma.shape[1] != len(ch):
        raise DimensionError(f"mixing matrix must have {len(ch)} columns, got shape {gamma.shape}")
    return KrausChannel(np.einsum("ij,jkl->ikl", gamma, ch.kraus))


def compress(ch: KrausChannel, tol: float = DEFAULT_TOL) -> KrausChannel:
    """Minimal Kraus list from the Choi eigendecomposition."""
    j = choi(ch)
    w, u = np.linalg.eigh((j + dagger(j)) / 2)
    top = max(float(w[-1]), 0.0)
    keep = np.flatnonzero(w > tol * top)[::-1] if top > 0 else np.array([len(w) - 1])
    ops = [np.sqrt(max(w[i], 0.0)) * u[:, i].reshape(ch.d_in, ch.d_out).T for i in keep]
    return KrausChannel(ops)


def drop_negligible(ch: KrausChannel, tol: float = DEFAULT_TOL) -> KrausChannel:
    """Remove Kraus operators whose Frobenius norm is at most ``tol`` (keeps at least one)."""
    norms = np.linalg.norm(ch.kraus, axis=(1, 2))
    keep = norms > tol
    if not keep.any():
        keep[np.argmax(norms)] = True
    return KrausChannel(ch.kraus[keep])


@dataclass(frozen=True)
class DilationModel:
    """System-environment Hamiltonian with the environment starting in ``psi_env``.

    ``h_total`` acts on ``C^d_sys (x) C^d_env`` (system factor first).
    """

    h_total: np.ndarray
    psi_env: np.ndarray
    t: float

    def __post_init__(self):
        h = as_matrix(self.h_total, "Hamiltonian")
        psi = np.asarray(self.psi_env, dtype=complex).reshape(-1)
        if h.shape[0] != h.shape[1]:
            raise DimensionError(f"Hamiltonian must be square, got {h.shape}")
        if psi.size == 0 or h.shape[0] % psi.size:
            raise DimensionError(f"Hamiltonian size {h.shape[0]} is not a multiple of d_env={psi.size}")
        object.__setattr__(self, "h_total", h)
        object.__setattr__(self, "psi_env", psi)
        object.__setattr__(self, "t", float(self.t))

    @property
    def d_env(self) -> int:
        return self.psi_env.size

    @property
    def d_sys(self) -> int:
        return self.h_total.shape[0] // self.d_env


def dilate_to_kraus(dm: DilationModel, env_basis=None, tol: float = DEFAULT_TOL, drop_zeros: bool = True) -> KrausChannel:
    """Kraus elements ``E_k = (1 (x) <k|) exp(-i t H) (1 (x) |psi>)``.

    ``env_basis`` holds the environment basis vectors as columns (defaults to
    the computational basis). Numerically vanishing elements are dropped
    unless ``drop_zeros`` is false.
    """
    tol = check_tol(tol)
    if not is_hermitian(dm.h_total, tol):
        raise DomainError("Hamiltonian is not Hermitian")
    if abs(np.linalg.norm(dm.psi_env) - 1.0) > max(tol, 1e-12):
        raise DomainError("environment state is not normalized")
    ds, de = dm.d_sys, dm.d_env
    basis = np.eye(de, dtype=complex) if env_basis is None else as_matrix(env_basis, "environment basis")
    if basis.shape != (de, de) or op_norm(dagger(basis) @ basis - np.eye(de)) > max(tol, 1e-12):
        raise DomainError("environment basis must be a unitary d_env x d_env matrix")
    u = expm(-1j * dm.t * dm.h_total).reshape(ds, de, ds, de)
    ops = np.einsum("fk,afbe,e->kab", basis.conj(), u, dm.psi_env)
    ch = KrausChannel(ops)
    return drop_negligible(ch, tol) if drop_zeros else ch


def interaction_operators(h, d_sys: int, d_env: int, tol: float = DEFAULT_TOL) -> list[np.ndarray]:
    """System operators ``J_i`` of a minimal decomposition ``H = sum_i J_i (x) K_i``.

    Uses the operator-Schmidt decomposition; the ``J_i`` are HS-orthonormal.
    """
    h = as_matrix(h, "Hamiltonian")
    if h.shape != (d_sys * d_env, d_sys * d_env):
        raise DimensionError(f"Hamiltonian of shape {h.shape} does not factor as {d_sys}x{d_env}")
    r = h.reshape(d_sys, d_env, d_sys, d_env).transpose(0, 2, 1, 3).reshape(d_sys * d_sys, d_env * d_env)
    u, s, _ = svd(r, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return []
    rank = int(np.sum(s > tol * s[0]))
    return [u[:, i].reshape(d_sys, d_sys) for i in range(rank)]


def error_span_levels(interaction_ops: Sequence, order: int, tol: float = DEFAULT_TOL) -> list[OperatorBasis]:
    """Cumulative bases of ``span{J_j1 ... J_jn : n <= N}`` for ``N = 0..order``."""
    if order < 0:
        raise ValueError("order must be nonnegative")
    ops = [as_matrix(j, "interaction operator") for j in interaction_ops]
    d = ops[0].shape[0] if ops else None
    if ops and any(j.shape != (d, d) for j in ops):
        raise DimensionError("interaction operators must be square and equally sized")
    if d is None:
        raise DimensionError("need at least one interaction operator to fix the dimension")
    ops = [j / fro_norm(j) for j in ops if fro_norm(j) > 0]
    level = orthonormalize([np.eye(d)], tol)
    total = level
    out = [total]
    for _ in range(order):
        # exact-length-n words are spanned by J * (basis of length-(n-1) words)
        level = orthonormalize([j @ b for j in ops for b in level], tol, shape=(d, d))
        total = orthonormalize([*total, *level], tol, shape=(d, d))
        out.append(total)
    return out


def error_span(interaction_ops: Sequence, order: int, tol: float = DEFAULT_TOL) -> OperatorBasis:
    """Orthonormal basis of all products of at most ``order`` interaction operators (plus ``1``)."""
    return error_span_levels(interaction_ops, order, tol)[-1]
