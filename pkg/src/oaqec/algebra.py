"""Finite-dimensional von Neumann (*-)algebras given by an operator basis.

Every finite-dimensional *-algebra is unitarily equivalent to a direct sum
``(+)_k M_{n_k} (x) 1_{m_k}``. :func:`structure` finds that form explicitly:
the minimal central projections come from the spectrum of a generic
self-adjoint central element, and matrix units inside each block give the
change of basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .matcore import (
    DEFAULT_TOL,
    DimensionError,
    NumericalInstabilityError,
    OperatorBasis,
    check_tol,
    dagger,
    fro_norm,
    mutual_containment,
    op_norm,
    orthonormalize,
    span_intersection,
    stacked_nullspace,
    svd,
)


class DegeneracyError(RuntimeError):
    """Repeated random draws failed to separate the spectrum of a central element."""


@dataclass(frozen=True)
class VnAlgebra:
    """A *-algebra of ``dim_h x dim_h`` matrices, stored as an HS-orthonormal basis.

    ``unit`` is the identity of the algebra: ``1`` for unital algebras, a
    projector for algebras embedded under a subspace.
    """

    dim_h: int
    basis: OperatorBasis
    unit: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.basis.shape != (self.dim_h, self.dim_h):
            raise DimensionError(f"basis matrices are {self.basis.shape}, expected {self.dim_h}x{self.dim_h}")
        unit = np.eye(self.dim_h, dtype=complex) if self.unit is None else np.asarray(self.unit, dtype=complex)
        object.__setattr__(self, "unit", unit)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def __len__(self) -> int:
        return self.dim

    def contains(self, x, tol: float = DEFAULT_TOL) -> tuple[bool, float]:
        return contains(self, x, tol)


def full_algebra(d: int) -> VnAlgebra:
    mats = np.zeros((d * d, d, d), dtype=complex)
    for k in range(d * d):
        mats[k, k % d, k // d] = 1.0
    return VnAlgebra(d, OperatorBasis(mats))


def scalars(d: int) -> VnAlgebra:
    return VnAlgebra(d, OperatorBasis((np.eye(d, dtype=complex) / np.sqrt(d))[None]))


def from_matrices(mats: Sequence, dim_h: int, tol: float = DEFAULT_TOL, unit=None) -> VnAlgebra:
    """Wrap the span of ``mats`` (assumed to already be a *-algebra)."""
    return VnAlgebra(dim_h, orthonormalize(mats, tol, shape=(dim_h, dim_h)), unit)


def contains(alg: VnAlgebra, x, tol: float = DEFAULT_TOL) -> tuple[bool, float]:
    """Whether ``x`` lies in the algebra, with the Frobenius residual ``||x - Pi(x)||``."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (alg.dim_h, alg.dim_h):
        raise DimensionError(f"expected a {alg.dim_h}x{alg.dim_h} matrix, got {x.shape}")
    res = alg.basis.residual(x)
    return res <= tol * max(fro_norm(x), 1e-300), res


def containment_residual(inner: VnAlgebra, outer: VnAlgebra) -> float:
    """Largest residual of an orthonormal element of ``inner`` projected on ``outer``."""
    return max((outer.basis.residual(b) for b in inner.basis), default=0.0)


def equality_residual(a: VnAlgebra, b: VnAlgebra) -> float:
    return mutual_containment(a.basis, b.basis)


def closure_residuals(alg: VnAlgebra) -> dict[str, float]:
    """How far the stored span is from being a *-algebra with the given unit."""
    b = alg.basis
    adj = max((b.residual(dagger(x)) for x in b), default=0.0)
    prod = 0.0
    for x in b:
        for y in b:
            prod = max(prod, b.residual(x @ y))
    unit_in = b.residual(alg.unit)
    unit_act = max((max(op_norm(alg.unit @ x - x), op_norm(x @ alg.unit - x)) for x in b), default=0.0)
    return {"adjoint": adj, "product": prod, "unit_in_span": unit_in, "unit_action": unit_act}


def _commutator_maps(gens: Sequence[np.ndarray], groups: list[np.ndarray]):
    """Commutator constraints on block-diagonal ``X = (+)_c X_c`` (blocks = ``groups``).

    For each generator block ``B = M[a, b]``: ``vec(X_a B - B X_b) =
    (B^T kron 1_a) vec(X_a) - (1_b kron B) vec(X_b)``. The rows for one
    pair ``(a, b)`` only touch two blocks, so they are compressed by QR
    before being widened to the full set of unknowns.
    """
    sizes = [len(g) for g in groups]
    offsets = np.concatenate([[0], np.cumsum([m * m for m in sizes])])
    ncols = int(offsets[-1])
    for a, ga in enumerate(groups):
        for b, gb in enumerate(groups):
            ma, mb = sizes[a], sizes[b]
            width = ma * ma if a == b else ma * ma + mb * mb
            local = []
            for m in gens:
                blk = m[np.ix_(ga, gb)]
                if not np.any(np.abs(blk) > 1e-14):
                    continue
                left, right = np.kron(blk.T, np.eye(ma)), np.kron(np.eye(mb), blk)
                local.append(left - right if a == b else np.hstack([left, -right]))
            if not local:
                continue
            loc = np.vstack(local)
            if loc.shape[0] > width:
                loc = np.linalg.qr(loc, mode="r")
            row = np.zeros((loc.shape[0], ncols), dtype=complex)
            row[:, offsets[a]:offsets[a + 1]] = loc[:, :ma * ma]
            if a != b:
                row[:, offsets[b]:offsets[b + 1]] = loc[:, ma * ma:]
            yield row


def _normalized_traceless(gens: Sequence, d: int, tol: float) -> list[np.ndarray]:
    """Drop identity components and rescale; the commutant is unchanged."""
    out = []
    for g in gens:
        g = np.asarray(g, dtype=complex)
        if g.shape != (d, d):
            raise DimensionError(f"generator of shape {g.shape}, expected {d}x{d}")
        n = fro_norm(g)
        if n == 0:
            continue
        t = g - np.trace(g) / d * np.eye(d)
        if fro_norm(t) > tol * n:
            out.append(t / fro_norm(t))
    return out


def commutant(gens: Sequence, dim_h: int, tol: float = DEFAULT_TOL) -> VnAlgebra:
    """``{X : [X, M] = [X, M^dagger] = 0 for every generator M}``.

    Any such ``X`` commutes with a generic hermitian combination ``H`` of the
    generators, so it is block diagonal in the eigenspaces of ``H``. The
    commutator equations are stacked and solved for those blocks only, which
    shrinks the system from ``d^2`` unknowns to ``sum m_c^2``.
    """
    tol = check_tol(tol)
    d = int(dim_h)
    base = _normalized_traceless(gens, d, tol)
    if not base:
        return full_algebra(d)
    # hermitian and anti-hermitian parts cover M and M^dagger at once
    herm = [(g + dagger(g)) / 2 for g in base] + [(g - dagger(g)) / 2j for g in base]
    span = orthonormalize(herm, tol, shape=(d, d))
    if len(span) == 0:
        return full_algebra(d)
    coeffs = np.random.default_rng(0).uniform(1.0, 2.0, size=len(herm))
    h = sum(c * x for c, x in zip(coeffs, herm))
    w, q = np.linalg.eigh((h + dagger(h)) / 2)
    scale = float(np.max(np.abs(w)))
    # merging two close eigenvalues only enlarges the ansatz, so a coarse gap is safe
    groups = _cluster(w, max(np.sqrt(tol), 1e-7) * scale) if scale > 0 else [np.arange(d)]
    rotated = [dagger(q) @ m @ q for m in span]
    ncols = sum(len(g) ** 2 for g in groups)
    # generators have unit norm, so the full system has scale ~1 even when the reduced one is all round-off
    ker = stacked_nullspace(_commutator_maps(rotated, groups), ncols, tol, scale=1.0)
    if len(ker) == 0:
        raise NumericalInstabilityError("commutant came out empty; it must contain the identity")
    mats = np.zeros((len(ker), d, d), dtype=complex)
    start = 0
    for g in groups:
        m = len(g)
        blk = ker[:, start:start + m * m].reshape(len(ker), m, m).transpose(0, 2, 1)
        mats[:, g[:, None], g[None, :]] = blk
        start += m * m
    return VnAlgebra(d, OperatorBasis(q @ mats @ dagger(q)))


def generated_algebra(gens: Sequence, dim_h: int, tol: float = DEFAULT_TOL) -> VnAlgebra:
    """Smallest unital *-algebra containing ``gens``.

    Starting from ``span{1}``, the span is repeatedly enlarged by left
    products with the generators and their adjoints until it stops growing;
    the words obtained this way span the algebra.
    """
    tol = check_tol(tol)
    d = int(dim_h)
    ops = []
    for g in gens:
        g = np.asarray(g, dtype=complex)
        if g.shape != (d, d):
            raise DimensionError(f"generator of shape {g.shape}, expected {d}x{d}")
        n = fro_norm(g)
        if n > 0:
            ops += [g / n, dagger(g) / n]
    current = orthonormalize([np.eye(d)], tol)
    for _ in range(d * d + 1):
        new = [g @ b for g in ops for b in current]
        grown = orthonormalize([*current, *new], tol, shape=(d, d))
        if len(grown) == len(current):
            return VnAlgebra(d, grown)
        current = grown
    raise NumericalInstabilityError(f"generated algebra did not stabilise within {d * d} steps")


def center(alg: VnAlgebra, tol: float = DEFAULT_TOL) -> VnAlgebra:
    """``Z(A) = A & A'`` computed as an intersection of spans."""
    comm = commutant(list(alg.basis), alg.dim_h, tol)
    z = span_intersection(alg.basis, comm.basis, tol)
    return VnAlgebra(alg.dim_h, z, alg.unit)


def is_factor(alg: VnAlgebra, tol: float = DEFAULT_TOL) -> bool:
    return center(alg, tol).dim == 1


@dataclass(frozen=True)
class Block:
    """One summand ``M_n (x) 1_m``; ``projector`` is its minimal central projection."""

    projector: np.ndarray
    n: int
    m: int

    @property
    def rank(self) -> int:
        return self.n * self.m


@dataclass(frozen=True)
class AlgebraStructure:
    """Block decomposition of a *-algebra.

    ``change_of_basis`` is a unitary ``U`` whose leading columns run through
    the blocks in order; inside a block the multiplicity index is the outer
    one, so ``U^dagger A U`` restricted to block ``k`` reads
    ``diag(X, X, ..., X)`` with ``m_k`` copies of an ``n_k x n_k`` matrix
    ``X``. Trailing columns (if any) span the kernel of the algebra's unit.
    """

    blocks: list[Block]
    change_of_basis: np.ndarray

    @property
    def pattern(self) -> list[tuple[int, int]]:
        return [(b.n, b.m) for b in self.blocks]

    @property
    def algebra_dim(self) -> int:
        return sum(b.n * b.n for b in self.blocks)

    @property
    def commutant_dim(self) -> int:
        return sum(b.m * b.m for b in self.blocks)

    @property
    def support_rank(self) -> int:
        return sum(b.n * b.m for b in self.blocks)

    def block_slices(self) -> list[slice]:
        out, start = [], 0
        for b in self.blocks:
            out.append(slice(start, start + b.rank))
            start += b.rank
        return out

    def block_form_residual(self, x) -> float:
        """Distance of ``U^dagger x U`` from the block form (zero for elements of the algebra)."""
        u = self.change_of_basis
        y = dagger(u) @ np.asarray(x, dtype=complex) @ u
        model = np.zeros_like(y)
        for b, sl in zip(self.blocks, self.block_slices()):
            sub = y[sl, sl]
            # average the m diagonal copies to get the n x n block
            copies = [sub[j * b.n:(j + 1) * b.n, j * b.n:(j + 1) * b.n] for j in range(b.m)]
            x_k = sum(copies) / b.m
            model[sl, sl] = np.kron(np.eye(b.m), x_k)
        return fro_norm(y - model)


def _hermitian_basis(basis: OperatorBasis, tol: float) -> list[np.ndarray]:
    """Real-orthonormal Hermitian basis of a *-closed span."""
    herm = []
    for z in basis:
        herm.append((z + dagger(z)) / 2)
        herm.append((z - dagger(z)) / 2j)
    if not herm:
        return []
    d = basis.shape[0]
    real = np.stack([np.concatenate([h.real.ravel(), h.imag.ravel()]) for h in herm], axis=1)
    u, s, _ = svd(real, full_matrices=False)
    rank = int(np.sum(s > tol * s[0])) if s.size and s[0] > 0 else 0
    out = []
    for i in range(rank):
        v = u[:, i]
        h = (v[: d * d] + 1j * v[d * d:]).reshape(d, d)
        out.append((h + dagger(h)) / 2)
    return out


def _cluster(w: np.ndarray, gap: float) -> list[np.ndarray]:
    """Group sorted eigenvalue indices wherever consecutive values differ by more than ``gap``."""
    groups, start = [], 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > gap:
            groups.append(np.arange(start, i))
            start = i
    return groups


def _unit_range(alg: VnAlgebra) -> np.ndarray:
    w, u = np.linalg.eigh((alg.unit + dagger(alg.unit)) / 2)
    return u[:, w > 0.5]


def _central_projections(zbasis: list[np.ndarray], w_unit: np.ndarray, rng, gap: float):
    coeffs = rng.uniform(1.0, 2.0, size=len(zbasis))
    c = sum(a * h for a, h in zip(coeffs, zbasis))
    c_small = dagger(w_unit) @ c @ w_unit
    w, u = np.linalg.eigh((c_small + dagger(c_small)) / 2)
    scale = max(1.0, float(np.max(np.abs(w))))
    groups = _cluster(w, gap * scale)
    return [w_unit @ u[:, g] for g in groups]


def _matrix_units(alg: VnAlgebra, iso: np.ndarray, n: int, m: int, rng, gap: float, tol: float) -> np.ndarray | None:
    """Columns ``u_{i1} f_j`` ordered with ``j`` outer, or ``None`` on an unlucky draw."""
    comp = [dagger(iso) @ b @ iso for b in alg.basis]
    if n == 1:
        return iso
    herm = _hermitian_basis(orthonormalize(comp, tol), tol)
    h = sum(rng.uniform(1.0, 2.0) * x for x in herm)
    w, u = np.linalg.eigh(h)
    scale = max(1.0, float(np.max(np.abs(w))))
    groups = _cluster(w, gap * scale)
    if len(groups) != n or any(len(g) != m for g in groups):
        return None
    projs = [u[:, g] @ dagger(u[:, g]) for g in groups]
    f = u[:, groups[0]]
    generic = sum((rng.uniform(1.0, 2.0) + 1j * rng.uniform(1.0, 2.0)) * x for x in comp)
    cols = np.zeros((iso.shape[1], n, m), dtype=complex)
    cols[:, 0, :] = f
    for i in range(1, n):
        u_i1 = projs[i] @ generic @ projs[0]
        norm2 = fro_norm(u_i1) ** 2 / m
        if norm2 <= gap:
            return None
        cols[:, i, :] = (u_i1 / np.sqrt(norm2)) @ f
    # column index j*n + i: multiplicity outer, logical inner
    local = cols.transpose(0, 2, 1).reshape(iso.shape[1], n * m)
    if op_norm(dagger(local) @ local - np.eye(n * m)) > 1e-6:
        return None
    return iso @ local


def _position_key(p: np.ndarray) -> float:
    diag = np.real(np.diag(p))
    return float(np.dot(np.arange(len(diag)), diag) / max(diag.sum(), 1e-300))


def _block_key(b: Block):
    return (-b.rank, -b.n, -b.m, _position_key(b.projector))


def structure(alg: VnAlgebra, tol: float = DEFAULT_TOL, seed: int | None = 0, retries: int = 5) -> AlgebraStructure:
    """Decompose ``alg`` as ``(+)_k M_{n_k} (x) 1_{m_k}``.

    Blocks are sorted by ``(n*m desc, n desc, m desc, mean diagonal position asc)``.
    Raises :class:`DegeneracyError` when ``retries`` extra random draws all
    fail to produce a separated spectrum.
    """
    tol = check_tol(tol)
    rng = np.random.default_rng(seed)
    gap = max(np.sqrt(tol), 1e-7)
    z = center(alg, tol)
    zbasis = _hermitian_basis(z.basis, tol)
    w_unit = _unit_range(alg)
    d = alg.dim_h
    for _ in range(retries + 1):
        isos = _central_projections(zbasis, w_unit, rng, gap)
        if len(isos) != z.dim:
            continue
        blocks, units = [], []
        ok = True
        for iso in isos:
            p = iso @ dagger(iso)
            comp = orthonormalize([p @ b for b in alg.basis], tol, shape=(d, d))
            n = int(round(np.sqrt(len(comp))))
            r = iso.shape[1]
            if n * n != len(comp) or n == 0 or r % n:
                ok = False
                break
            mu = _matrix_units(alg, iso, n, r // n, rng, gap, tol)
            if mu is None:
                ok = False
                break
            blocks.append(Block(p, n, r // n))
            units.append(mu)
        if not ok:
            continue
        order = sorted(range(len(blocks)), key=lambda k: _block_key(blocks[k]))
        blocks = [blocks[k] for k in order]
        units = [units[k] for k in order]
        cols = np.hstack(units)
        if cols.shape[1] < d:
            # kernel of a non-unital algebra
            proj = np.eye(d) - cols @ dagger(cols)
            w, u = np.linalg.eigh((proj + dagger(proj)) / 2)
            cols = np.hstack([cols, u[:, w > 0.5]])
        return AlgebraStructure(blocks, cols)
    raise DegeneracyError(f"could not separate the block structure after {retries} retries")
