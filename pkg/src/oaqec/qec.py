"""Correctable and noiseless algebras, the explicit correction channel, and checks.

For a channel with Kraus operators ``E_i`` the correctable algebra is the
commutant of ``{E_i^dagger E_j}`` and the noiseless algebra the commutant of
``{E_i}``. The correction channel has Kraus operators
``sqrt(lambda_i) E_i^dagger K`` with ``K = (sum_i lambda_i E_i E_i^dagger)^{-1/2}``
taken on its support; its dual is therefore

    R*(A) = K (sum_i lambda_i E_i A E_i^dagger) K.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import algebra as alg_mod
from .algebra import VnAlgebra, commutant
from .channel import KrausChannel, apply_dual, apply_weighted, choi_distance, restrict, remix, tp_residual
from .matcore import (
    DEFAULT_TOL,
    DimensionError,
    DomainError,
    OperatorBasis,
    check_tol,
    dagger,
    inv_sqrt_on_support,
    mutual_containment,
    op_norm,
    orthonormalize,
    require_isometry,
    span_intersection,
    stacked_nullspace,
    support_projector,
)


def _products(ch: KrausChannel) -> list[np.ndarray]:
    return [ei.conj().T @ ej for ei in ch.kraus for ej in ch.kraus]


def correctable_algebra(noise: KrausChannel, tol: float = DEFAULT_TOL) -> VnAlgebra:
    """Commutant of all ``E_i^dagger E_j`` on the input space."""
    tol = check_tol(tol)
    # O(K^2) products are usually rank deficient; orthonormalize before the commutant solve
    prods = orthonormalize(_products(noise), tol, shape=(noise.d_in, noise.d_in))
    return commutant(list(prods), noise.d_in, tol)


def noiseless_algebra(noise: KrausChannel, tol: float = DEFAULT_TOL) -> VnAlgebra:
    """Commutant of the Kraus operators themselves; fixed pointwise by the dual channel."""
    if noise.d_in != noise.d_out:
        raise DomainError(f"noiseless algebra needs a channel on one space, got {noise.d_in}->{noise.d_out}")
    return commutant(list(noise.kraus), noise.d_in, tol)


def _weights(noise: KrausChannel, lambda_weights) -> np.ndarray:
    if lambda_weights is None:
        return np.ones(len(noise))
    w = np.asarray(lambda_weights, dtype=float).reshape(-1)
    if w.size != len(noise):
        raise DimensionError(f"need {len(noise)} weights, got {w.size}")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise DomainError("weights must be positive")
    return w


def geometric_weights(k: int) -> np.ndarray:
    """``lambda_i = 2^{-i}`` for ``i = 0..k-1``."""
    return 2.0 ** -np.arange(k)


def correction_channel(
    noise: KrausChannel,
    lambda_weights: Sequence[float] | None = None,
    tol: float = DEFAULT_TOL,
    complete: bool = False,
) -> KrausChannel:
    """Correction channel with Kraus ``{sqrt(lambda_i) E_i^dagger K}``.

    The result is trace preserving on the support of
    ``sum_i lambda_i E_i E_i^dagger``. With ``complete=True`` extra Kraus
    operators send the orthogonal complement of that support to the first
    basis state, making the map trace preserving everywhere without changing
    what it does on the correctable algebra.
    """
    tol = check_tol(tol)
    w = _weights(noise, lambda_weights)
    e_lam_one = apply_weighted(noise, np.eye(noise.d_in), w)
    k = inv_sqrt_on_support(e_lam_one, tol)
    ops = [np.sqrt(wi) * dagger(e) @ k for wi, e in zip(w, noise.kraus)]
    if complete:
        proj = np.eye(noise.d_out) - k @ e_lam_one @ k
        vals, vecs = np.linalg.eigh((proj + dagger(proj)) / 2)
        for i in np.flatnonzero(vals > 0.5):
            f = np.zeros((noise.d_in, noise.d_out), dtype=complex)
            f[0] = vecs[:, i].conj()
            ops.append(f)
    return KrausChannel(ops)


def correction_support(noise: KrausChannel, lambda_weights=None, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Projector onto the support of ``sum_i lambda_i E_i E_i^dagger``."""
    w = _weights(noise, lambda_weights)
    return support_projector(apply_weighted(noise, np.eye(noise.d_in), w), tol)


def effect_preimage(noise: KrausChannel, p, lambda_weights=None, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Candidate effect ``B = E_lambda(1)^{-1} E_lambda(P)`` (inverse taken on the support)."""
    w = _weights(noise, lambda_weights)
    k = inv_sqrt_on_support(apply_weighted(noise, np.eye(noise.d_in), w), tol)
    return k @ k @ apply_weighted(noise, np.asarray(p, dtype=complex), w)


@dataclass(frozen=True)
class CorrectionPackage:
    noise: KrausChannel
    correctable: VnAlgebra
    correction: KrausChannel
    lambda_weights: np.ndarray
    support_rank: int

    def recover_dual(self, a) -> np.ndarray:
        return apply_dual(self.correction, a)


def build_package(noise: KrausChannel, lambda_weights=None, tol: float = DEFAULT_TOL) -> CorrectionPackage:
    w = _weights(noise, lambda_weights)
    corr = correction_channel(noise, w, tol)
    supp = correction_support(noise, w, tol)
    rank = int(round(np.real(np.trace(supp))))
    return CorrectionPackage(noise, correctable_algebra(noise, tol), corr, w, rank)


def correction_tp_residual(pkg: CorrectionPackage, tol: float = DEFAULT_TOL) -> float:
    """Trace-preservation defect of the correction, measured on its support."""
    supp = correction_support(pkg.noise, pkg.lambda_weights, tol)
    return tp_residual(pkg.correction, support=supp)


def verify_fixed(noise: KrausChannel, alg: VnAlgebra, tol: float = DEFAULT_TOL) -> float:
    """``max_A ||E*(A) - A||`` over the orthonormal basis of ``alg``."""
    if noise.d_in != noise.d_out or alg.dim_h != noise.d_in:
        raise DimensionError("fixed points need a channel on the algebra's own space")
    return max((op_norm(apply_dual(noise, a) - a) for a in alg.basis), default=0.0)


def verify_correction(noise: KrausChannel, correction: KrausChannel, alg: VnAlgebra, tol: float = DEFAULT_TOL) -> float:
    """``max_A ||E*(R*(A)) - A||`` over the orthonormal basis of ``alg``."""
    if correction.d_in != noise.d_out or correction.d_out != noise.d_in:
        raise DimensionError(
            f"correction maps {correction.d_in}->{correction.d_out}, noise maps {noise.d_in}->{noise.d_out}"
        )
    if alg.dim_h != noise.d_in:
        raise DimensionError(f"algebra lives on C^{alg.dim_h}, noise input is C^{noise.d_in}")
    return max((op_norm(apply_dual(noise, apply_dual(correction, a)) - a) for a in alg.basis), default=0.0)


@dataclass(frozen=True)
class KLResult:
    lambda_matrix: np.ndarray
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tol


def _restricted_products(v: np.ndarray, noise: KrausChannel) -> np.ndarray:
    ev = noise.kraus @ v
    return np.einsum("iab,jac->ijbc", ev.conj(), ev)


def check_kl(v, noise: KrausChannel, tol: float = DEFAULT_TOL) -> KLResult:
    """Knill-Laflamme test ``V^dagger E_i^dagger E_j V = lambda_ij 1``."""
    tol = check_tol(tol)
    v = require_isometry(v, tol)
    if v.shape[0] != noise.d_in:
        raise DimensionError(f"isometry maps into C^{v.shape[0]}, channel input is C^{noise.d_in}")
    d0 = v.shape[1]
    x = _restricted_products(v, noise)
    lam = np.trace(x, axis1=2, axis2=3) / d0
    res = max(op_norm(x[i, j] - lam[i, j] * np.eye(d0)) for i in range(len(noise)) for j in range(len(noise)))
    return KLResult(lam, float(res), tol)


@dataclass(frozen=True)
class SubsystemResult:
    lambda_ops: np.ndarray
    residual: float
    tol: float
    algebra_residual: float | None

    @property
    def passed(self) -> bool:
        return self.residual <= self.tol


def check_subsystem(v, d_a: int, d_b: int, noise: KrausChannel, tol: float = DEFAULT_TOL) -> SubsystemResult:
    """Subsystem test ``V^dagger E_i^dagger E_j V = 1_A (x) Lambda_ij``.

    ``C^{d0}`` is read as ``C^{d_a} (x) C^{d_b}`` with the A factor first.
    When the test passes, ``algebra_residual`` reports how well
    ``B(C^{d_a}) (x) 1`` sits inside the correctable algebra of the
    restricted channel.
    """
    tol = check_tol(tol)
    v = require_isometry(v, tol)
    if v.shape[0] != noise.d_in:
        raise DimensionError(f"isometry maps into C^{v.shape[0]}, channel input is C^{noise.d_in}")
    if d_a * d_b != v.shape[1] or d_a < 1 or d_b < 1:
        raise DimensionError(f"code dimension {v.shape[1]} is not {d_a}x{d_b}")
    k = len(noise)
    x = _restricted_products(v, noise)
    xt = x.reshape(k, k, d_a, d_b, d_a, d_b)
    lam = np.einsum("ijabac->ijbc", xt) / d_a
    eye_a = np.eye(d_a)
    res = max(op_norm(x[i, j] - np.kron(eye_a, lam[i, j])) for i in range(k) for j in range(k))
    alg_res = None
    if res <= tol:
        a0 = correctable_algebra(restrict(noise, v, tol), tol)
        alg_res = 0.0
        for a in range(d_a):
            for b in range(d_a):
                unit = np.zeros((d_a, d_a))
                unit[a, b] = 1.0
                alg_res = max(alg_res, a0.basis.residual(np.kron(unit, np.eye(d_b))) / np.sqrt(d_b))
    return SubsystemResult(lam, float(res), tol, alg_res)


@dataclass(frozen=True)
class RestrictedNoiseless:
    algebra: VnAlgebra
    residual: float


def check_restricted_noiseless(v, noise: KrausChannel, tol: float = DEFAULT_TOL) -> RestrictedNoiseless:
    """Operators ``A`` on the code space with ``V A V^dagger E_k V = E_k V A`` (and for ``A^dagger``).

    The solution set of the linear constraints is intersected with its
    adjoint. The unit of the returned algebra is the projector onto the
    largest invariant subspace it acts on (it may be zero).
    """
    tol = check_tol(tol)
    v = require_isometry(v, tol)
    if noise.d_in != noise.d_out:
        raise DomainError("restricted noiseless algebra needs a channel on one space")
    if v.shape[0] != noise.d_in:
        raise DimensionError(f"isometry maps into C^{v.shape[0]}, channel input is C^{noise.d_in}")
    d0 = v.shape[1]
    eye0 = np.eye(d0)
    scale = max(op_norm(e) for e in noise.kraus) or 1.0
    maps = []
    for e in noise.kraus:
        ev = e @ v / scale
        inner = dagger(v) @ ev
        # vec(V A inner) - vec(EV A) = (inner^T kron V - 1 kron EV) vec(A)
        maps.append(np.kron(inner.T, v) - np.kron(eye0, ev))
    ker = stacked_nullspace(maps, d0 * d0, tol, scale=1.0)
    sol = OperatorBasis.from_columns(ker.T, d0, d0) if len(ker) else OperatorBasis.empty(d0)
    star = span_intersection(sol, sol.adjoint(), max(tol, 1e-12)) if len(sol) else sol
    unit = _algebra_unit(star, tol)
    alg = VnAlgebra(d0, star, unit)
    res = 0.0
    for a in star:
        for x in (a, dagger(a)):
            for e in noise.kraus:
                res = max(res, op_norm(v @ x @ dagger(v) @ e @ v - e @ v @ x))
    return RestrictedNoiseless(alg, float(res))


def _algebra_unit(basis: OperatorBasis, tol: float) -> np.ndarray:
    """Identity element of a finite-dimensional *-algebra given by a basis."""
    d = basis.shape[0]
    if len(basis) == 0:
        return np.zeros((d, d), dtype=complex)
    # the unit is the projector onto the joint range of the algebra
    gram = sum(b @ dagger(b) for b in basis)
    return support_projector(gram, tol)


@dataclass(frozen=True)
class RestrictedCode:
    v: np.ndarray
    a0: VnAlgebra
    r0: KrausChannel
    s0: OperatorBasis
    a0_residual: float
    simultaneous_residual: float
    s0_product_residual: float

    def s0_is_algebra(self, tol: float = DEFAULT_TOL) -> bool:
        return self.s0_product_residual <= tol


def restricted_code(noise: KrausChannel, v, tol: float = DEFAULT_TOL) -> RestrictedCode:
    """Code on the subspace ``range(v)`` and its operator system ``S0 = E*(R0*(A0))``.

    ``a0_residual`` measures ``span(V^dagger S0 V) = A0``;
    ``simultaneous_residual`` is ``max ||E*(R0*(V^dagger S V)) - S||`` over
    an orthonormal basis of ``S0``; ``s0_product_residual`` is how far
    ``S0`` is from being closed under products.
    """
    tol = check_tol(tol)
    v = require_isometry(v, tol)
    e0 = restrict(noise, v, tol)
    a0 = correctable_algebra(e0, tol)
    r0 = correction_channel(e0, None, tol)
    images = [apply_dual(noise, apply_dual(r0, a)) for a in a0.basis]
    s0 = orthonormalize(images, tol, shape=(noise.d_in, noise.d_in))
    back = orthonormalize([dagger(v) @ s @ v for s in s0], tol, shape=(v.shape[1], v.shape[1]))
    a0_res = mutual_containment(back, a0.basis)
    sim = max((op_norm(apply_dual(noise, apply_dual(r0, dagger(v) @ s @ v)) - s) for s in s0), default=0.0)
    prod = 0.0
    for x in s0:
        for y in s0:
            prod = max(prod, s0.residual(x @ y))
    return RestrictedCode(v, a0, r0, s0, float(a0_res), float(sim), float(prod))


@dataclass(frozen=True)
class HomomorphismReport:
    homomorphism: float
    faithful: float


def homomorphism_residual(pkg: CorrectionPackage, tol: float = DEFAULT_TOL) -> HomomorphismReport:
    """Multiplicativity defects on the correctable algebra.

    ``homomorphism``: ``max ||E*(B B') - E*(B) E*(B')||`` with ``B = R*(A)``.
    ``faithful``: ``max ||R*(A) R*(A') - R*(A A')||``.
    """
    basis = pkg.correctable.basis
    rs = [apply_dual(pkg.correction, a) for a in basis]
    es = [apply_dual(pkg.noise, b) for b in rs]
    hom = faith = 0.0
    for i, a in enumerate(basis):
        for j, a2 in enumerate(basis):
            hom = max(hom, op_norm(apply_dual(pkg.noise, rs[i] @ rs[j]) - es[i] @ es[j]))
            faith = max(faith, op_norm(rs[i] @ rs[j] - apply_dual(pkg.correction, a @ a2)))
    return HomomorphismReport(float(hom), float(faith))


@dataclass(frozen=True)
class RemixReport:
    algebra_residual: float
    cross_correction_residual: float
    correction_choi_distance: float
    tp_residual: float
    remixed: KrausChannel

    def passed(self, tol: float = DEFAULT_TOL) -> bool:
        return self.algebra_residual <= tol and self.cross_correction_residual <= tol


def remix_robustness(noise: KrausChannel, gamma, tol: float = DEFAULT_TOL) -> RemixReport:
    """Re-mix the Kraus operators as ``F_i = sum_j gamma_ij E_j`` and re-check correction.

    Compares correctable algebras (mutual containment) and applies the
    original correction channel to the re-mixed noise.
    """
    tol = check_tol(tol)
    mixed = remix(noise, gamma)
    tp = tp_residual(mixed)
    if tp > max(tol, 1e-12) * 10:
        raise DomainError(f"re-mixed Kraus operators are not trace preserving (residual {tp:.3e})")
    a = correctable_algebra(noise, tol)
    a2 = correctable_algebra(mixed, tol)
    corr = correction_channel(noise, None, tol)
    corr2 = correction_channel(mixed, None, tol)
    return RemixReport(
        algebra_residual=float(alg_mod.equality_residual(a, a2)),
        cross_correction_residual=float(verify_correction(mixed, corr, a, tol)),
        correction_choi_distance=float(choi_distance(corr, corr2)),
        tp_residual=float(tp),
        remixed=mixed,
    )


def intertwiner_residual(noise: KrausChannel, p, tol: float = DEFAULT_TOL) -> float:
    """``max_k ||B E_k - E_k P||`` with ``B = R*(P)``; zero for correctable projectors."""
    corr = correction_channel(noise, None, tol)
    b = apply_dual(corr, np.asarray(p, dtype=complex))
    return max(op_norm(b @ e - e @ p) for e in noise.kraus)


def commutes_with_products(noise: KrausChannel, x) -> float:
    """``max_ij ||[X, E_i^dagger E_j]||``."""
    x = np.asarray(x, dtype=complex)
    return max(op_norm(x @ q - q @ x) for q in _products(noise))


@dataclass(frozen=True)
class LambdaDependence:
    choi_distance: float
    algebra_dual_distance: float


def lambda_dependence(noise: KrausChannel, weights_a=None, weights_b=None, tol: float = DEFAULT_TOL) -> LambdaDependence:
    """Compare correction channels built from two weight vectors.

    ``choi_distance`` compares the channels outright; it vanishes only for
    special noise (orthogonal error ranges). ``algebra_dual_distance`` is
    ``max ||R_a*(A) - R_b*(A)||`` over the correctable algebra, which is
    what the recovered observables depend on.
    """
    ra = correction_channel(noise, weights_a, tol)
    rb = correction_channel(noise, weights_b, tol)
    alg = correctable_algebra(noise, tol)
    dual = max((op_norm(apply_dual(ra, a) - apply_dual(rb, a)) for a in alg.basis), default=0.0)
    return LambdaDependence(float(choi_distance(ra, rb)), float(dual))
