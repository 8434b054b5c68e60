"""Dense complex linear-algebra kernels.

Matrices are plain ``numpy`` complex arrays. Whenever a matrix is turned into a
vector the *column-stacking* convention is used (``vec(X) = X.reshape(-1,
order="F")``), so that ``vec(A X B) = (B.T kron A) vec(X)``.

Rank decisions follow one rule everywhere: a singular value (or eigenvalue) is
treated as zero when it is at most ``tol`` times the largest one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
import scipy.linalg

DEFAULT_TOL = 1e-9


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class DomainError(ValueError):
    """An operand violates a mathematical precondition (PSD, isometry, ...)."""


class NumericalInstabilityError(RuntimeError):
    """An iterative procedure failed to settle."""


def check_tol(tol: float) -> float:
    tol = float(tol)
    if not np.isfinite(tol) or tol <= 0:
        raise ValueError(f"tolerance must be a positive finite number, got {tol!r}")
    return tol


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-d complex array."""
    arr = np.asarray(a, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DimensionError(f"{name} must be a non-empty 2-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} has non-finite entries")
    return arr


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def op_norm(a: np.ndarray) -> float:
    """Spectral norm (largest singular value)."""
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def fro_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def vec(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).reshape(-1, order="F")


def unvec(v: np.ndarray, rows: int, cols: int | None = None) -> np.ndarray:
    return np.asarray(v).reshape((rows, rows if cols is None else cols), order="F")


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt pairing ``Tr(a^dagger b)``."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


@dataclass(frozen=True)
class OperatorBasis:
    """Hilbert-Schmidt orthonormal family of equally shaped matrices.

    ``mats`` has shape ``(k, rows, cols)``; ``k`` may be zero.
    """

    mats: np.ndarray

    def __post_init__(self):
        mats = np.asarray(self.mats, dtype=complex)
        if mats.ndim != 3:
            raise DimensionError(f"basis array must be 3-d, got shape {mats.shape}")
        mats.setflags(write=False)
        object.__setattr__(self, "mats", mats)

    @classmethod
    def empty(cls, rows: int, cols: int | None = None) -> OperatorBasis:
        return cls(np.zeros((0, rows, rows if cols is None else cols), dtype=complex))

    @classmethod
    def from_columns(cls, q: np.ndarray, rows: int, cols: int) -> OperatorBasis:
        """Build from column-stacked vectors held in the columns of ``q``."""
        k = q.shape[1]
        mats = q.T.reshape(k, cols, rows).transpose(0, 2, 1)
        return cls(mats)

    @property
    def shape(self) -> tuple[int, int]:
        return self.mats.shape[1], self.mats.shape[2]

    def __len__(self) -> int:
        return self.mats.shape[0]

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self.mats)

    def __getitem__(self, i) -> np.ndarray:
        return self.mats[i]

    def columns(self) -> np.ndarray:
        """Column-stacked vectors as the columns of a ``(rows*cols, k)`` array."""
        k = len(self)
        return self.mats.transpose(0, 2, 1).reshape(k, -1).T

    def coefficients(self, x) -> np.ndarray:
        return np.einsum("kij,ij->k", self.mats.conj(), np.asarray(x, dtype=complex))

    def project(self, x) -> np.ndarray:
        if len(self) == 0:
            return np.zeros(self.shape, dtype=complex)
        return np.einsum("k,kij->ij", self.coefficients(x), self.mats)

    def residual(self, x) -> float:
        """Frobenius distance from ``x`` to the span."""
        x = np.asarray(x, dtype=complex)
        return fro_norm(x - self.project(x))

    def adjoint(self) -> OperatorBasis:
        return OperatorBasis(dagger(self.mats))


def svd(a: np.ndarray, full_matrices: bool):
    """SVD via the divide-and-conquer driver, falling back to ``gesvd`` if it fails to converge."""
    try:
        return np.linalg.svd(a, full_matrices=full_matrices)
    except np.linalg.LinAlgError:
        return scipy.linalg.svd(a, full_matrices=full_matrices, lapack_driver="gesvd")


def orthonormalize(mats: Iterable, tol: float = DEFAULT_TOL, shape: tuple[int, int] | None = None) -> OperatorBasis:
    """HS-orthonormal basis of the span of ``mats``.

    Directions whose singular value is at most ``tol`` times the largest are
    dropped, so linearly dependent inputs collapse. An empty input gives an
    empty basis (pass ``shape`` to fix its matrix shape).
    """
    tol = check_tol(tol)
    mats = [np.asarray(m, dtype=complex) for m in mats]
    if not mats:
        rows, cols = shape if shape is not None else (0, 0)
        return OperatorBasis.empty(rows, cols)
    rows, cols = mats[0].shape
    if any(m.shape != (rows, cols) for m in mats):
        raise DimensionError("all matrices must share one shape")
    a = np.stack([vec(m) for m in mats], axis=1)
    u, s, _ = svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return OperatorBasis.empty(rows, cols)
    rank = int(np.sum(s > tol * s[0]))
    return OperatorBasis.from_columns(u[:, :rank], rows, cols)


def _compress_rows(blocks: Iterable[np.ndarray], ncols: int, max_rows: int | None = None) -> np.ndarray:
    """Triangular factor ``R`` with ``R^H R = sum_b b^H b`` built blockwise by QR.

    Keeps memory at O(ncols^2) for long stacked systems while preserving the
    singular values of the full stack.
    """
    max_rows = max_rows or max(4 * ncols, 256)
    r = np.zeros((0, ncols), dtype=complex)
    pending: list[np.ndarray] = []
    count = 0
    for b in blocks:
        pending.append(b)
        count += b.shape[0]
        if count >= max_rows:
            r = np.linalg.qr(np.vstack([r, *pending]), mode="r")
            pending, count = [], 0
    if pending:
        stacked = np.vstack([r, *pending])
        r = np.linalg.qr(stacked, mode="r") if stacked.shape[0] > ncols else stacked
    return r


def nullspace(l, tol: float = DEFAULT_TOL, scale: float = 0.0) -> np.ndarray:
    """Orthonormal basis of the numerical kernel of ``l``.

    Returns an array of shape ``(k, cols)``; each row is a kernel vector.
    Singular values up to ``tol * max(s_max, scale)`` count as zero; a
    positive ``scale`` stops pure round-off from being read as rank.
    """
    tol = check_tol(tol)
    l = np.asarray(l, dtype=complex)
    if l.ndim != 2:
        raise DimensionError(f"expected a 2-d array, got shape {l.shape}")
    n = l.shape[1]
    if l.shape[0] == 0:
        return np.eye(n, dtype=complex)
    _, s, vh = svd(l, full_matrices=True)
    ref = max(float(s[0]) if s.size else 0.0, scale)
    if ref == 0.0:
        return np.eye(n, dtype=complex)
    rank = int(np.sum(s > tol * ref))
    return vh[rank:].conj()


def stacked_nullspace(blocks: Iterable[np.ndarray], ncols: int, tol: float = DEFAULT_TOL, scale: float = 0.0) -> np.ndarray:
    """Joint kernel of several linear maps acting on the same space."""
    r = _compress_rows(blocks, ncols)
    if r.shape[0] == 0 or not np.any(r):
        return np.eye(ncols, dtype=complex)
    return nullspace(r, tol, scale)


def is_hermitian(a: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    return fro_norm(a - dagger(a)) <= tol * max(1.0, fro_norm(a))


def is_isometry(v: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    v = np.asarray(v)
    if v.ndim != 2 or v.shape[1] > v.shape[0]:
        return False
    return op_norm(dagger(v) @ v - np.eye(v.shape[1])) <= tol


def require_isometry(v, tol: float = DEFAULT_TOL, name: str = "isometry") -> np.ndarray:
    v = as_matrix(v, name)
    if not is_isometry(v, max(tol, 1e-12)):
        raise DomainError(f"{name} of shape {v.shape} does not satisfy v^dagger v = 1")
    return v


def inv_sqrt_on_support(a, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``a^{-1/2}`` on the support of a PSD matrix, zero on its kernel.

    The support consists of the eigenvectors whose eigenvalue exceeds
    ``tol * lambda_max``; the result ``K`` satisfies ``K a K = Pi_supp``.
    """
    tol = check_tol(tol)
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got {a.shape}")
    if not is_hermitian(a, tol):
        raise DomainError("matrix is not Hermitian")
    w, u = np.linalg.eigh((a + dagger(a)) / 2)
    top = max(float(w[-1]), 0.0)
    if w[0] < -tol * max(top, 1.0):
        raise DomainError(f"matrix is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    keep = w > tol * top if top > 0 else np.zeros_like(w, dtype=bool)
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / np.sqrt(w[keep])
    return (u * inv) @ dagger(u)


def support_projector(a, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Projector onto eigenvectors of a PSD matrix above ``tol * lambda_max``."""
    a = as_matrix(a)
    w, u = np.linalg.eigh((a + dagger(a)) / 2)
    top = max(float(w[-1]), 0.0)
    keep = w > tol * top if top > 0 else np.zeros_like(w, dtype=bool)
    return u[:, keep] @ dagger(u[:, keep])


def expm(a) -> np.ndarray:
    """Matrix exponential (scaling and squaring with Pade approximants)."""
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"expm needs a square matrix, got {a.shape}")
    return scipy.linalg.expm(a)


def span_containment(inner: OperatorBasis, outer: OperatorBasis) -> float:
    """Largest Frobenius residual of an ON element of ``inner`` against ``outer``."""
    if len(inner) == 0:
        return 0.0
    if len(outer) == 0:
        return max(fro_norm(m) for m in inner)
    return max(outer.residual(m) for m in inner)


def mutual_containment(a: OperatorBasis, b: OperatorBasis) -> float:
    return max(span_containment(a, b), span_containment(b, a))


def span_intersection(a: OperatorBasis, b: OperatorBasis, tol: float = DEFAULT_TOL) -> OperatorBasis:
    """Orthonormal basis of ``span(a) & span(b)``.

    Solves for coefficients ``y`` with ``(1 - P_a) Q_b y = 0``; because the
    columns of ``Q_b`` are orthonormal the threshold is absolute.
    """
    rows, cols = a.shape
    if len(a) == 0 or len(b) == 0:
        return OperatorBasis.empty(rows, cols)
    qa, qb = a.columns(), b.columns()
    m = qb - qa @ (qa.conj().T @ qb)
    _, s, vh = svd(m, full_matrices=True)
    rank = int(np.sum(s > tol))
    y = vh[rank:].conj().T
    if y.shape[1] == 0:
        return OperatorBasis.empty(rows, cols)
    q, _ = np.linalg.qr(qb @ y)
    return OperatorBasis.from_columns(q, rows, cols)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_isometry(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    if cols > rows:
        raise DimensionError(f"no isometry from C^{cols} into C^{rows}")
    return random_unitary(rows, rng)[:, :cols]

