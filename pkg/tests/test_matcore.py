import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oaqec.matcore import (
    DimensionError,
    DomainError,
    OperatorBasis,
    expm,
    hs_inner,
    inv_sqrt_on_support,
    is_isometry,
    mutual_containment,
    nullspace,
    orthonormalize,
    random_isometry,
    random_unitary,
    span_intersection,
    support_projector,
    unvec,
    vec,
)

from conftest import random_complex

I2 = np.eye(2)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)


def test_hs_inner_examples():
    assert hs_inner(I2, I2) == 2
    assert hs_inner(I2, SX) == 0
    a = np.array([[1, 2], [3, 4]])
    assert hs_inner(a, a) == 30


def test_hs_inner_conjugate_symmetric(rng):
    a, b = random_complex(rng, 3, 3), random_complex(rng, 3, 3)
    assert np.isclose(hs_inner(a, b), np.conj(hs_inner(b, a)))


def test_hs_inner_shape_mismatch():
    with pytest.raises(DimensionError):
        hs_inner(I2, np.eye(3))


def test_vec_is_column_stacking(rng):
    a, x, b = (random_complex(rng, 3, 3) for _ in range(3))
    assert np.allclose(vec(a @ x @ b), np.kron(b.T, a) @ vec(x))
    assert np.allclose(unvec(vec(x), 3), x)


def test_orthonormalize_examples(rng):
    assert len(orthonormalize([I2, 2 * I2])) == 1
    b = orthonormalize([I2, SX])
    assert len(b) == 2
    assert abs(hs_inner(b[0], b[1])) < 1e-12
    many = [random_complex(rng, 2, 2) for _ in range(16)]
    assert len(orthonormalize(many)) == np.linalg.matrix_rank(np.array([m.ravel() for m in many])) == 4


def test_orthonormalize_empty():
    b = orthonormalize([], shape=(3, 3))
    assert len(b) == 0 and b.shape == (3, 3)


def test_orthonormalize_idempotent_and_spanning(rng):
    mats = [random_complex(rng, 3, 3) for _ in range(4)]
    mats.append(mats[0] + 2 * mats[1])
    b = orthonormalize(mats)
    assert len(b) == 4
    gram = np.einsum("kij,lij->kl", b.mats.conj(), b.mats)
    assert np.allclose(gram, np.eye(4), atol=1e-12)
    for m in mats:
        assert b.residual(m) <= 1e-9 * np.linalg.norm(m)
    assert mutual_containment(b, orthonormalize(list(b))) < 1e-12


def test_nullspace_examples():
    assert len(nullspace(np.zeros((3, 3)))) == 3
    assert len(nullspace(np.eye(3))) == 0
    ns = nullspace(np.array([[1.0, 1.0], [1.0, 1.0]]))
    assert len(ns) == 1
    v = ns[0] * np.sign(ns[0][0])
    assert np.allclose(v, np.array([1, -1]) / np.sqrt(2))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_nullspace_orthonormal_and_annihilated(rank, cols, seed):
    rng = np.random.default_rng(seed)
    rank = min(rank, cols)
    l = random_complex(rng, 7, rank) @ random_complex(rng, rank, cols)
    ns = nullspace(l)
    assert len(ns) == cols - rank
    if len(ns):
        assert np.allclose(ns.conj() @ ns.T, np.eye(len(ns)), atol=1e-10)
        assert np.linalg.norm(l @ ns.T, 2) <= 1e-9 * np.linalg.norm(l, 2)


def test_inv_sqrt_examples():
    assert np.allclose(inv_sqrt_on_support(np.eye(3)), np.eye(3))
    assert np.allclose(inv_sqrt_on_support(np.diag([4.0, 0.0])), np.diag([0.5, 0.0]))
    assert np.allclose(inv_sqrt_on_support(np.diag([0.25, 0.75])), np.diag([2.0, 2 / np.sqrt(3)]))


def test_inv_sqrt_rejects_non_psd():
    with pytest.raises(DomainError):
        inv_sqrt_on_support(np.diag([1.0, -0.5]))
    with pytest.raises(DomainError):
        inv_sqrt_on_support(np.array([[1.0, 1.0], [0.0, 1.0]]))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_inv_sqrt_squared_times_a_is_support_projector(d, r, seed):
    rng = np.random.default_rng(seed)
    r = min(r, d)
    g = random_complex(rng, d, r)
    a = g @ g.conj().T
    k = inv_sqrt_on_support(a)
    p = support_projector(a)
    assert np.allclose(k @ k @ a, p, atol=1e-8)
    assert np.allclose(k @ a @ k, p, atol=1e-8)
    assert round(np.trace(p).real) == r


def test_expm_examples():
    assert np.allclose(expm(np.zeros((3, 3))), np.eye(3))
    assert np.allclose(expm(1j * np.pi / 2 * SX), 1j * SX, atol=1e-12)
    assert np.allclose(expm(np.diag([0.3, -1.2])), np.diag(np.exp([0.3, -1.2])))
    with pytest.raises(DimensionError):
        expm(np.zeros((2, 3)))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_expm_inverse_and_unitarity(d, seed):
    rng = np.random.default_rng(seed)
    a = random_complex(rng, d, d)
    a *= 5 * rng.uniform() / np.linalg.norm(a, 2)
    assert np.allclose(expm(a) @ expm(-a), np.eye(d), atol=1e-9)
    h = a - a.conj().T
    u = expm(h)
    assert np.allclose(u.conj().T @ u, np.eye(d), atol=1e-9)


def test_random_unitary_and_isometry(rng):
    u = random_unitary(5, rng)
    assert np.allclose(u.conj().T @ u, np.eye(5))
    v = random_isometry(5, 2, rng)
    assert is_isometry(v)
    with pytest.raises(DimensionError):
        random_isometry(2, 3, rng)


def test_span_intersection():
    diag = orthonormalize([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
    paulis = orthonormalize([I2, SX])
    inter = span_intersection(diag, paulis)
    assert len(inter) == 1
    assert inter.residual(I2) < 1e-12


def test_operator_basis_roundtrip(rng):
    mats = [random_complex(rng, 2, 3) for _ in range(3)]
    b = orthonormalize(mats)
    again = OperatorBasis.from_columns(b.columns(), 2, 3)
    assert np.allclose(again.mats, b.mats)
    assert b.mats.flags.writeable is False
