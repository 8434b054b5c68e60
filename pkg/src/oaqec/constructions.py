"""Built-in channels and codes with their analytically expected answers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import KrausChannel
from .matcore import DomainError, dagger, expm, random_isometry, random_unitary

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class LabeledFixture:
    """A channel bundled with the algebra data it is known to produce.

    ``expected_structure`` lists ``(n_k, m_k)`` for the correctable algebra
    in the block order used by :func:`oaqec.algebra.structure`.
    """

    name: str
    channel: KrausChannel
    expected_correctable_dim: int
    expected_structure: list[tuple[int, int]]
    notes: str = ""
    expected_noiseless_dim: int | None = None
    expected_noiseless_structure: list[tuple[int, int]] | None = None
    isometry: np.ndarray | None = None
    expected_code_dim: int | None = None
    params: dict = field(default_factory=dict)


def kron_all(*ops) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def _check_probs(probs, m: int) -> np.ndarray:
    p = np.asarray(probs, dtype=float).reshape(-1)
    if p.size != m:
        raise DomainError(f"need {m} probabilities, got {p.size}")
    if np.any(p <= 0) or abs(p.sum() - 1.0) > 1e-12:
        raise DomainError("probabilities must be positive and sum to 1")
    return p


def type1_isometries(d0: int, m: int, d_total: int, seed: int | None = 0) -> list[np.ndarray]:
    """``m`` isometries ``C^d0 -> C^d_total`` with mutually orthogonal ranges."""
    rng = np.random.default_rng(seed)
    frame = random_isometry(d_total, m * d0, rng)
    return [frame[:, i * d0:(i + 1) * d0] for i in range(m)]


def type1_code(d0: int, m: int, probs: Sequence[float] | None = None, d_total: int | None = None, seed: int | None = 0) -> LabeledFixture:
    """Channel ``rho -> sum_i p_i V_i rho V_i^dagger`` with ``V_i^dagger V_j = delta_ij``.

    The whole input space ``C^d0`` is correctable, and the correction
    ``rho -> sum_i V_i^dagger rho V_i`` does not depend on the ``p_i``.
    """
    if d0 < 1 or m < 1:
        raise DomainError("need d0 >= 1 and m >= 1")
    d_total = (m + 1) * d0 if d_total is None else int(d_total)
    if d_total < m * d0:
        raise DomainError(f"d_total must be at least m*d0 = {m * d0}, got {d_total}")
    p = _check_probs(np.full(m, 1.0 / m) if probs is None else probs, m)
    vs = type1_isometries(d0, m, d_total, seed)
    ch = KrausChannel([np.sqrt(pi) * v for pi, v in zip(p, vs)])
    return LabeledFixture(
        name="type1",
        channel=ch,
        expected_correctable_dim=d0 * d0,
        expected_structure=[(d0, 1)],
        notes="correction Kraus {V_i^dagger}, independent of the probabilities",
        params={"d0": d0, "m": m, "probs": [float(x) for x in p], "d_total": d_total, "seed": seed},
    )


def type1_expected_correction(d0: int, m: int, d_total: int | None = None, seed: int | None = 0) -> KrausChannel:
    d_total = (m + 1) * d0 if d_total is None else d_total
    return KrausChannel([dagger(v) for v in type1_isometries(d0, m, d_total, seed)])


def clock_shift(q: int) -> tuple[np.ndarray, np.ndarray]:
    """Clock ``U = diag(omega^k)`` and shift ``V|k> = |k+1>`` with ``U V = omega V U``."""
    if q < 2:
        raise DomainError("clock and shift need q >= 2")
    omega = np.exp(2j * np.pi / q)
    k = np.arange(q)
    u = np.diag(omega ** k)
    # exact entries where they are representable
    if q == 2:
        u = np.diag([1.0, -1.0]).astype(complex)
    elif q == 4:
        u = np.diag([1.0, 1j, -1.0, -1j]).astype(complex)
    v = np.roll(np.eye(q, dtype=complex), 1, axis=0)
    return u, v


def rotation_analog(q: int, include_identity: bool = True, seed: int | None = 0) -> LabeledFixture:
    """Finite stand-in for noise generated by a rotation-algebra pair.

    Acts on ``C^q (x) C^q``; the errors are the clock and shift on the first
    factor. Kraus operators are ``sqrt(p_w) W (x) 1`` for the words
    ``W in {1, U, V, UV}`` (``1`` only if ``include_identity``) with seeded
    random positive weights ``p_w``. The noiseless algebra is ``1 (x) M_q``,
    a factor; this checks the commutant/noiseless mechanism only, not any
    type-II behaviour (which has no finite-dimensional counterpart).
    """
    u, v = clock_shift(q)
    words = [u, v, u @ v]
    if include_identity:
        words = [np.eye(q, dtype=complex)] + words
    rng = np.random.default_rng(seed)
    p = rng.uniform(0.5, 1.5, size=len(words))
    p /= p.sum()
    eye = np.eye(q)
    ch = KrausChannel([np.sqrt(pi) * np.kron(w, eye) for pi, w in zip(p, words)])
    return LabeledFixture(
        name="rotation-analog",
        channel=ch,
        expected_correctable_dim=q * q,
        expected_structure=[(q, q)],
        expected_noiseless_dim=q * q,
        expected_noiseless_structure=[(q, q)],
        notes=(
            "clock-shift errors on the first factor; noiseless algebra 1 (x) M_q is a factor. "
            "Rational angle 1/q: exercises the commutant mechanism, not type II."
        ),
        params={"q": q, "include_identity": include_identity, "seed": seed},
    )


def bit_flip_code(seed: int | None = 0) -> LabeledFixture:
    """Three-qubit repetition code against single bit flips.

    Kraus operators ``sqrt(p_k) {1, X_1, X_2, X_3}`` with seeded weights;
    the code space is ``span{|000>, |111>}``.
    """
    rng = np.random.default_rng(seed)
    p = rng.uniform(0.5, 1.5, size=4)
    p /= p.sum()
    flips = [kron_all(PAULI_I, PAULI_I, PAULI_I), kron_all(PAULI_X, PAULI_I, PAULI_I),
             kron_all(PAULI_I, PAULI_X, PAULI_I), kron_all(PAULI_I, PAULI_I, PAULI_X)]
    ch = KrausChannel([np.sqrt(pk) * f for pk, f in zip(p, flips)])
    enc = np.zeros((8, 2), dtype=complex)
    enc[0, 0] = enc[7, 1] = 1.0
    return LabeledFixture(
        name="bit-flip",
        channel=ch,
        # the products E_i^dagger E_j span all X-strings: a maximal abelian algebra
        expected_correctable_dim=8,
        expected_structure=[(1, 1)] * 8,
        expected_noiseless_dim=8,
        expected_noiseless_structure=[(1, 1)] * 8,
        isometry=enc,
        expected_code_dim=4,
        notes="restricted to span{|000>,|111>} the code algebra is B(C^2)",
        params={"seed": seed},
    )


def dephasing(d: int = 2) -> KrausChannel:
    """Complete dephasing in the computational basis."""
    ops = []
    for k in range(d):
        p = np.zeros((d, d), dtype=complex)
        p[k, k] = 1.0
        ops.append(p)
    return KrausChannel(ops)


def bit_flip(p: float) -> KrausChannel:
    return KrausChannel([np.sqrt(1 - p) * PAULI_I, np.sqrt(p) * PAULI_X])


def block_partitions(d: int, max_blocks: int = 3) -> list[list[tuple[int, int]]]:
    """All multisets of blocks ``(n, m)`` with ``sum n*m = d`` and at most ``max_blocks`` blocks."""
    pairs = [(n, m) for n in range(1, d + 1) for m in range(1, d + 1) if n * m <= d]
    out: list[list[tuple[int, int]]] = []

    def rec(rest: int, start: int, acc: list):
        if rest == 0:
            out.append(list(acc))
            return
        if len(acc) == max_blocks:
            return
        for idx in range(start, len(pairs)):
            n, m = pairs[idx]
            if n * m <= rest:
                acc.append((n, m))
                rec(rest - n * m, idx, acc)
                acc.pop()

    rec(d, 0, [])
    return out


def random_channel(d_in: int, d_out: int, k: int, seed: int | None = 0) -> KrausChannel:
    """Generic channel: Kraus operators cut from a Haar-random isometry."""
    rng = np.random.default_rng(seed)
    w = random_isometry(k * d_out, d_in, rng)
    return KrausChannel(w.reshape(k, d_out, d_in))


def block_algebra_element(blocks: Sequence[tuple[int, int]], rng: np.random.Generator) -> np.ndarray:
    """Random element of ``(+)_k M_{n_k} (x) 1_{m_k}`` in the standard basis (multiplicity outer)."""
    parts = []
    for n, m in blocks:
        x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        parts.append(np.kron(np.eye(m), x))
    d = sum(n * m for n, m in blocks)
    out = np.zeros((d, d), dtype=complex)
    s = 0
    for part in parts:
        r = part.shape[0]
        out[s:s + r, s:s + r] = part
        s += r
    return out


def random_structured_channel(blocks: Sequence[tuple[int, int]], k: int, seed: int | None = 0, hidden: bool = True) -> tuple[KrausChannel, np.ndarray]:
    """Channel whose correctable algebra contains ``W^dagger ((+) M_{n_k} (x) 1_{m_k}) W``.

    Kraus operators are ``U (+)_b (G_{i,b} (x) 1_{n_b}) W`` where the
    ``G_{i,b}`` act on the multiplicity factor and satisfy
    ``sum_i G^dagger G = 1``. ``U`` and (if ``hidden``) ``W`` are random
    unitaries. Returns the channel and ``W``.
    """
    rng = np.random.default_rng(seed)
    d = sum(n * m for n, m in blocks)
    ops = np.zeros((k, d, d), dtype=complex)
    s = 0
    for n, m in blocks:
        g = random_isometry(k * m, m, rng).reshape(k, m, m)
        for i in range(k):
            ops[i, s:s + n * m, s:s + n * m] = np.kron(g[i], np.eye(n))
        s += n * m
    u = random_unitary(d, rng)
    w = random_unitary(d, rng) if hidden else np.eye(d, dtype=complex)
    return KrausChannel(u @ ops @ w), w


def random_block_generators(blocks: Sequence[tuple[int, int]], count: int, seed: int | None = 0) -> tuple[list[np.ndarray], np.ndarray]:
    """``count`` random elements of a rotated block algebra, plus the rotation."""
    rng = np.random.default_rng(seed)
    d = sum(n * m for n, m in blocks)
    w = random_unitary(d, rng)
    gens = [w @ block_algebra_element(blocks, rng) @ dagger(w) for _ in range(count)]
    return gens, w


def collective_rotation(theta: float, axis: Sequence[float], nqubits: int) -> np.ndarray:
    """``exp(-i theta n.S)`` with ``S = (1/2) sum_q sigma^(q)`` on ``nqubits`` qubits."""
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    s = np.zeros((2 ** nqubits, 2 ** nqubits), dtype=complex)
    for q in range(nqubits):
        for comp, pauli in zip(n, (PAULI_X, PAULI_Y, PAULI_Z)):
            ops = [PAULI_I] * nqubits
            ops[q] = pauli
            s += 0.5 * comp * kron_all(*ops)
    return expm(-1j * theta * s)


def three_qubit_subsystem_isometry() -> np.ndarray:
    """Isometry ``C^2 (x) C^2 -> (C^2)^{(x)3}`` onto the total-spin-1/2 sector.

    The first tensor factor labels the two spin-1/2 copies (protected under
    collective noise), the second the ``m = +-1/2`` index the noise acts on.
    """
    up, dn = np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)
    singlet = (np.kron(up, dn) - np.kron(dn, up)) / np.sqrt(2)
    lower = sum(kron_all(*[np.array([[0, 0], [1, 0]], dtype=complex) if i == q else PAULI_I for i in range(3)]) for q in range(3))
    a_up = np.kron(singlet, up)
    # the other j = 1/2, m = +1/2 state: orthogonal to a_up inside the m = +1/2 sector
    t_plus, t0 = np.kron(up, up), (np.kron(up, dn) + np.kron(dn, up)) / np.sqrt(2)
    b_up = np.sqrt(2 / 3) * np.kron(t_plus, dn) - np.sqrt(1 / 3) * np.kron(t0, up)
    cols = []
    for top in (a_up, b_up):
        low = lower @ top
        cols += [top, low / np.linalg.norm(low)]
    return np.stack(cols, axis=1)


def collective_noise(nqubits: int = 3, count: int = 3, seed: int | None = 0) -> KrausChannel:
    """Random mixture of collective rotations (unitaries weighted by random probabilities)."""
    rng = np.random.default_rng(seed)
    p = rng.uniform(0.5, 1.5, size=count)
    p /= p.sum()
    ops = [np.sqrt(pi) * collective_rotation(rng.uniform(0.3, 2.5), rng.standard_normal(3), nqubits) for pi in p]
    return KrausChannel(ops)


def two_sector_code(p: float = 0.5, x: float = 0.3, y: float = 0.8) -> tuple[KrausChannel, np.ndarray]:
    """Code on ``span{|0>,|1>}`` of ``C^4`` whose operator system is not an algebra.

    ``E_1 = diag(sqrt p, sqrt p, x, y)``, ``E_2 = S diag(sqrt(1-p), sqrt(1-p),
    sqrt(1-x^2), sqrt(1-y^2))`` with ``S`` swapping the two sectors. The code
    satisfies Knill-Laflamme, and ``S0 = {A (+) (D A D + D' A D')}`` with
    ``D = diag(x, y)``, which is not closed under products for ``x != y``.
    """
    e1 = np.diag([np.sqrt(p), np.sqrt(p), x, y]).astype(complex)
    swap = np.zeros((4, 4), dtype=complex)
    swap[2, 0] = swap[3, 1] = swap[0, 2] = swap[1, 3] = 1.0
    e2 = swap @ np.diag([np.sqrt(1 - p), np.sqrt(1 - p), np.sqrt(1 - x * x), np.sqrt(1 - y * y)])
    v = np.zeros((4, 2), dtype=complex)
    v[0, 0] = v[1, 1] = 1.0
    return KrausChannel([e1, e2]), v


FIXTURES = ("type1", "rotation-analog", "bit-flip")


def make_fixture(name: str, **params) -> LabeledFixture:
    if name == "type1":
        return type1_code(params.get("d0", 2), params.get("m", 3), params.get("probs"), params.get("d_total"), params.get("seed", 0))
    if name == "rotation-analog":
        return rotation_analog(params.get("q", 2), params.get("include_identity", True), params.get("seed", 0))
    if name == "bit-flip":
        return bit_flip_code(params.get("seed", 0))
    raise KeyError(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}")
