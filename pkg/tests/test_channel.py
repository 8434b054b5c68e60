import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oaqec.channel import (
    DilationModel,
    KrausChannel,
    apply,
    apply_dual,
    choi,
    choi_distance,
    channels_equal,
    compose,
    compress,
    dilate_to_kraus,
    error_span,
    error_span_levels,
    identity_channel,
    interaction_operators,
    remix,
    restrict,
    tp_residual,
    unitary_channel,
    validate,
)
from oaqec.constructions import PAULI_X, PAULI_Y, PAULI_Z, bit_flip, bit_flip_code, random_channel
from oaqec.matcore import DimensionError, DomainError, random_unitary

from conftest import random_complex, random_density

I2 = np.eye(2)


def test_validate_examples():
    rep = validate(identity_channel(3))
    assert rep.tp_residual == 0 and rep.passed
    rep = validate(KrausChannel([np.sqrt(0.7) * I2, np.sqrt(0.3) * PAULI_X]))
    assert rep.tp_residual < 1e-15 and rep.passed
    rep = validate(KrausChannel([I2, I2]))
    assert rep.tp_residual == pytest.approx(1.0) and not rep.passed


def test_kraus_shape_mismatch():
    with pytest.raises(DimensionError):
        KrausChannel([np.eye(2), np.eye(3)])


def test_apply_examples(rng):
    rho = random_density(rng, 3)
    assert np.allclose(apply(identity_channel(3), rho), rho)
    out = apply(bit_flip(0.3), np.diag([1.0, 0.0]))
    assert np.allclose(out, np.diag([0.7, 0.3]))
    with pytest.raises(DimensionError):
        apply(identity_channel(2), np.eye(3))


def test_depolarizing_dual_scales_sigma_z():
    # {sqrt(1-3p/4) I, sqrt(p/4) X, Y, Z}: dual on Z gives (1 - p) Z
    p = 0.4
    ch = KrausChannel([np.sqrt(1 - 3 * p / 4) * I2] + [np.sqrt(p / 4) * s for s in (PAULI_X, PAULI_Y, PAULI_Z)])
    assert np.allclose(apply_dual(ch, PAULI_Z), (1 - p) * PAULI_Z)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_duality_and_unital_dual(d_in, d_out, k, seed):
    k = max(k, -(-d_in // d_out))
    ch = random_channel(d_in, d_out, k, seed)
    rng = np.random.default_rng(seed)
    for _ in range(5):
        rho = random_density(rng, d_in)
        a = random_complex(rng, d_out, d_out)
        assert np.isclose(np.trace(apply(ch, rho) @ a), np.trace(rho @ apply_dual(ch, a)), atol=1e-9)
    assert np.allclose(apply_dual(ch, np.eye(d_out)), np.eye(d_in), atol=1e-9)


def test_choi_examples():
    j = choi(identity_channel(2))
    assert np.linalg.matrix_rank(j) == 1 and np.isclose(np.trace(j), 2)
    assert np.linalg.matrix_rank(choi(unitary_channel(PAULI_X))) == 1
    w = np.sort(np.linalg.eigvalsh(choi(bit_flip(0.3))))
    assert np.allclose(w, [0, 0, 0.6, 1.4])


def test_choi_partial_trace_is_identity():
    ch = random_channel(3, 2, 3, seed=4)
    j = choi(ch).reshape(3, 2, 3, 2)
    assert np.allclose(np.einsum("iaja->ij", j), np.eye(3))


def test_compose_examples():
    ch = random_channel(3, 3, 2, seed=1)
    assert choi_distance(compose(identity_channel(3), ch), ch) < 1e-12
    x = unitary_channel(PAULI_X)
    assert choi_distance(compose(x, x), identity_channel(2)) < 1e-12
    p, q = 0.2, 0.35
    assert choi_distance(compose(bit_flip(p), bit_flip(q)), bit_flip(p + q - 2 * p * q)) < 1e-12
    with pytest.raises(DimensionError):
        compose(identity_channel(2), identity_channel(3))


def test_compose_dual_reverses_order(rng):
    c1, c2 = random_channel(2, 3, 2, seed=5), random_channel(3, 2, 3, seed=6)
    a = random_complex(rng, 2, 2)
    assert np.allclose(apply_dual(compose(c2, c1), a), apply_dual(c1, apply_dual(c2, a)))


def test_restrict_examples(rng):
    ch = random_channel(3, 3, 2, seed=2)
    assert choi_distance(restrict(ch, np.eye(3)), ch) < 1e-12
    v = np.zeros((3, 1))
    v[1, 0] = 1
    r = restrict(ch, v)
    assert np.allclose(apply(r, np.ones((1, 1))), apply(ch, v @ v.T))
    fx = bit_flip_code()
    r = restrict(fx.channel, fx.isometry)
    assert r.kraus.shape == (4, 8, 2)
    assert np.allclose(r.kraus[1][:, 0], np.eye(8)[4] * r.kraus[1][4, 0])
    assert validate(r).passed
    with pytest.raises(DomainError):
        restrict(ch, np.ones((3, 1)))


def test_remix_preserves_channel(rng):
    ch = random_channel(3, 3, 3, seed=3)
    g = random_unitary(3, rng)
    assert channels_equal(remix(ch, g), ch)


def test_compress_keeps_channel():
    ch = KrausChannel([np.sqrt(0.5) * I2, np.sqrt(0.5) * I2, np.zeros((2, 2))])
    c = compress(ch)
    assert len(c) == 1 and choi_distance(c, ch) < 1e-12


def _dm(h, t):
    psi = np.array([1.0, 0.0])
    return DilationModel(h, psi, t)


def test_dilation_t_zero_is_identity():
    rng = np.random.default_rng(0)
    h = random_complex(rng, 4, 4)
    h = h + h.conj().T
    ch = dilate_to_kraus(_dm(h, 0.0))
    assert choi_distance(ch, identity_channel(2)) < 1e-12


def test_dilation_zz_closed_form():
    t = 0.83
    ch = dilate_to_kraus(_dm(np.kron(PAULI_Z, PAULI_Z), t))
    assert len(ch) == 1
    assert np.allclose(ch.kraus[0], np.diag(np.exp([-1j * t, 1j * t])))


def test_dilation_xx_closed_form():
    t = np.pi / 2
    ch = dilate_to_kraus(_dm(np.kron(PAULI_X, PAULI_X), t), drop_zeros=False)
    # exp(-it XX) = cos t - i sin t XX; env <0| and <1| pick the two terms
    assert np.allclose(ch.kraus[0], np.cos(t) * I2, atol=1e-12)
    assert np.allclose(ch.kraus[1], -1j * np.sin(t) * PAULI_X)
    assert abs(ch.kraus[1][0, 1]) > 0.99


def test_dilation_rejects_non_hermitian():
    with pytest.raises(DomainError):
        dilate_to_kraus(_dm(np.kron(PAULI_X, PAULI_X) + 0.1j * np.eye(4), 1.0))


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.floats(-3, 3), st.integers(0, 2**32 - 1))
def test_dilation_trace_preserving(ds, de, t, seed):
    rng = np.random.default_rng(seed)
    h = random_complex(rng, ds * de, ds * de)
    h = h + h.conj().T
    psi = random_complex(rng, de)
    psi /= np.linalg.norm(psi)
    ch = dilate_to_kraus(DilationModel(h, psi, t))
    assert tp_residual(ch) < 1e-9


def test_dilation_env_basis_independent():
    rng = np.random.default_rng(7)
    h = random_complex(rng, 6, 6)
    h = h + h.conj().T
    dm = DilationModel(h, np.array([0.6, 0.8, 0.0]), 0.7)
    a = dilate_to_kraus(dm)
    b = dilate_to_kraus(dm, env_basis=random_unitary(3, rng))
    assert choi_distance(a, b) < 1e-10


def test_error_span_examples():
    assert len(error_span([PAULI_X], 1)) == 2
    assert len(error_span([PAULI_X, PAULI_Z], 2)) == 4
    assert [len(b) for b in error_span_levels([PAULI_X, PAULI_Z], 2)] == [1, 3, 4]
    assert all(len(error_span([I2], n)) == 1 for n in range(4))


def test_error_span_monotone_and_stabilizes():
    rng = np.random.default_rng(1)
    ops = [np.kron(random_complex(rng, 2, 2), np.eye(2)) for _ in range(2)]
    dims = [len(b) for b in error_span_levels(ops, 5)]
    assert dims == sorted(dims)
    assert dims[-1] == dims[-2] == 4


def test_interaction_operators_recover_span():
    h = np.kron(PAULI_X, PAULI_Z) + 0.5 * np.kron(PAULI_Z, PAULI_X) + np.kron(PAULI_X, PAULI_X)
    ops = interaction_operators(h, 2, 2)
    assert len(ops) == 2
    span = error_span(ops, 1)
    assert span.residual(PAULI_X) < 1e-12 and span.residual(PAULI_Z) < 1e-12
