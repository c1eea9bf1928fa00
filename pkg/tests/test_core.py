from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest

import oracles
from cddsim.core import kernels, linalg, structured
from cddsim.core.dd import DDArray, as_dd, dd_scalar
from cddsim.core.pauli import PauliString, PauliSum, dense_blocks, popcount_groups
from cddsim.core.precision import EXTENDED, STANDARD, get_precision
from cddsim.errors import DimensionMismatch, NotHermitian

X, Y, Z = (oracles.PAULI[a] for a in "xyz")
I2 = np.eye(2)


def random_hermitian(d: int, rng) -> np.ndarray:
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2


def random_density(d: int, rng) -> np.ndarray:
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


# --- kron ---------------------------------------------------------------------------

def test_kron_identity():
    assert np.array_equal(linalg.kron(I2, I2), np.eye(4))


def test_kron_layout():
    out = linalg.kron(X, Z)
    zero = np.zeros((2, 2))
    assert np.array_equal(out, np.block([[zero, Z], [Z, zero]]))


def test_kron_matches_loop_oracle():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    b = rng.normal(size=(4, 4))
    assert np.abs(linalg.kron(a, b) - oracles.kron_loop(a, b)).max() < 1e-15


def test_kron_double_double_agrees():
    rng = np.random.default_rng(2)
    a, b = random_hermitian(2, rng), random_hermitian(4, rng)
    out = linalg.kron(as_dd(a), b)
    assert isinstance(out, DDArray)
    assert np.abs(out.to_complex() - np.kron(a, b)).max() < 1e-15


# --- exponentials ---------------------------------------------------------------------

def test_expm_zero_generator():
    assert np.abs(linalg.expm_hermitian(np.zeros((4, 4)), 0.7) - np.eye(4)).max() < 1e-15


def test_expm_pauli_rotation():
    assert np.abs(linalg.expm_hermitian(X, math.pi / 2) - (-1j * X)).max() < 1e-15


def test_expm_matches_taylor_oracle():
    rng = np.random.default_rng(3)
    h = random_hermitian(4, rng)
    assert np.abs(linalg.expm_hermitian(h, 0.3) - oracles.taylor_expm(h, 0.3)).max() < 1e-10


def test_expm_inverse_and_unitarity():
    rng = np.random.default_rng(4)
    h = random_hermitian(8, rng)
    u = linalg.expm_hermitian(h, 1.7)
    assert np.abs(u @ linalg.expm_hermitian(h, -1.7) - np.eye(8)).max() < 1e-10
    assert linalg.is_unitary(u)


def test_expm_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        linalg.expm_hermitian(np.array([[0, 1], [0, 0]], dtype=complex), 1.0)


def test_eigensystem_detects_blocks():
    h = np.zeros((4, 4))
    h[0, 1] = h[1, 0] = 1.0
    h[2, 2], h[3, 3] = 2.0, -1.0
    es = linalg.eigensystem(h)
    assert [list(idx) for idx, _, _ in es.blocks] == [[0, 1], [2], [3]]
    assert np.abs(es.unitary(0.4) - oracles.taylor_expm(h, 0.4)).max() < 1e-12


# --- partial trace ----------------------------------------------------------------------

def test_partial_trace_product_state():
    rng = np.random.default_rng(5)
    rs, rb = random_density(2, rng), random_density(4, rng)
    out = linalg.partial_trace_bath(np.kron(rs, rb), 1, 2)
    assert np.abs(out - rs).max() < 1e-14


def test_partial_trace_bell_state():
    psi = np.array([1, 0, 0, 1]) / math.sqrt(2)
    out = linalg.partial_trace_bath(np.outer(psi, psi.conj()), 1, 1)
    assert np.abs(out - np.eye(2) / 2).max() < 1e-15


def test_partial_trace_matches_loop_oracle():
    rng = np.random.default_rng(6)
    rho = random_density(4, rng)
    out = linalg.partial_trace_bath(rho, 1, 1)
    assert np.abs(out - oracles.partial_trace_loop(rho, 2, 2)).max() < 1e-12
    assert abs(np.trace(out) - 1) < 1e-12
    assert np.linalg.eigvalsh(out).min() > -1e-12


def test_partial_trace_shape_check():
    with pytest.raises(DimensionMismatch):
        linalg.partial_trace_bath(np.eye(8), 1, 1)


# --- spectral norm ----------------------------------------------------------------------

def test_spectral_norm_examples():
    assert linalg.spectral_norm(Z) == pytest.approx(1.0, abs=1e-15)
    assert linalg.spectral_norm(-3.5 * np.eye(3)) == pytest.approx(3.5, abs=1e-15)
    J = 1e4
    heis = (J / 2) * sum(np.kron(p, p) for p in (X, Y, Z))
    assert linalg.spectral_norm(heis) == pytest.approx(1.5 * J, rel=1e-14)


def test_spectral_norm_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        linalg.spectral_norm(np.array([[1, 2], [0, 1]], dtype=complex))


# --- compose --------------------------------------------------------------------------------

def test_compose_empty_and_involution():
    assert np.array_equal(linalg.compose([]), np.eye(1))
    assert np.array_equal(linalg.compose([], dim=4), np.eye(4))
    assert np.array_equal(linalg.compose([X, X]), np.eye(2))


def test_compose_order_last_acts_first():
    rng = np.random.default_rng(7)
    a, b = random_hermitian(2, rng), random_hermitian(2, rng)
    assert np.abs(linalg.compose([a, b]) - a @ b).max() < 1e-15


def test_compose_dimension_check():
    with pytest.raises(DimensionMismatch):
        linalg.compose([np.eye(2), np.eye(4)])


# --- Hermiticity tolerance scales with the backend ------------------------------------------

def test_hermitian_tolerance_per_backend():
    h = np.array([[1.0, 1e-13], [0.0, 1.0]], dtype=complex)
    assert linalg.is_hermitian(h)
    assert not linalg.is_hermitian(as_dd(h))


def test_precision_lookup():
    assert get_precision("standard") is STANDARD
    assert get_precision(EXTENDED) is EXTENDED
    assert EXTENDED.epsilon < STANDARD.epsilon
    with pytest.raises(ValueError):
        get_precision("quad")


# --- Walsh-Hadamard and Pauli strings -------------------------------------------------------

def test_walsh_hadamard_matches_dense():
    rng = np.random.default_rng(8)
    a = rng.normal(size=(8, 3)) + 1j * rng.normal(size=(8, 3))
    h = oracles.op_on(3, {q: np.array([[1, 1], [1, -1]]) / math.sqrt(2) for q in range(3)})
    assert np.abs(linalg.walsh_hadamard(a, 0) - h @ a).max() < 1e-14


def test_pauli_string_dense_and_xframe():
    p = PauliString.from_map(3, {0: "x", 2: "y"})
    assert np.abs(p.dense() - oracles.pauli_on(3, {0: "x", 2: "y"})).max() == 0
    sign, q = p.in_xframe()
    h = oracles.op_on(3, {k: np.array([[1, 1], [1, -1]]) / math.sqrt(2) for k in range(3)})
    assert np.abs(sign * q.dense() - h @ p.dense() @ h).max() < 1e-14


def test_dense_blocks_follow_popcount():
    # exchange and the dipolar mix conserve x-frame popcount as sums only
    terms = [(1.0, {0: a, 1: a}) for a in "xyz"]
    terms += [(0.3, {1: "y", 2: "y"}), (0.3, {1: "z", 2: "z"}), (-0.6, {1: "x", 2: "x"})]
    psum = PauliSum.from_terms(3, terms)
    groups = popcount_groups(3)
    blocks = dense_blocks(psum, groups, frame="x")
    assert blocks is not None
    full = psum.dense(frame="x")
    for idx, blk in zip(groups, blocks):
        assert np.abs(full[np.ix_(idx, idx)] - blk).max() < 1e-15
    lone = PauliSum.from_terms(3, [(1.0, {1: "z", 2: "z"})])
    assert dense_blocks(lone, groups, frame="x") is None


# --- structured products --------------------------------------------------------------------

def test_structured_matmul_matches_dense():
    rng = np.random.default_rng(9)
    part = structured.Partition((np.array([0, 2]), np.array([1, 3])), 4)
    bd = structured.BlockDiag(part, [linalg.expm_hermitian(random_hermitian(2, rng), 1.0) for _ in range(2)])
    mono = structured.Monomial(np.array([1, 0, 3, 2]), np.array([1, -1, 1j, -1j]))
    diag = structured.Monomial(np.arange(4), np.array([1, -1, -1, 1], dtype=complex))
    dense = structured.Dense(linalg.expm_hermitian(random_hermitian(4, rng), 0.5))
    ops = [bd, mono, diag, dense]
    for a in ops:
        for b in ops:
            got = structured.to_dense(structured.matmul(a, b))
            want = structured.to_dense(a) @ structured.to_dense(b)
            assert np.abs(got - want).max() < 1e-14
    v = rng.normal(size=4) + 0j
    for op in ops:
        assert np.abs(structured.apply(op, v) - structured.to_dense(op) @ v).max() < 1e-14


# --- double-double arithmetic ---------------------------------------------------------------

def test_dd_roundtrip_beyond_double():
    with mpmath.workprec(200):
        x = mpmath.mpf(1) / 3
        d = dd_scalar(x)
        back = d.to_mp().ravel()[0]
        assert abs(mpmath.re(back) - x) < mpmath.mpf(2) ** -100


def test_dd_matmul_is_more_accurate():
    rng = np.random.default_rng(10)
    a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    b = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    prod = (as_dd(a) @ as_dd(b)).to_mp()
    with mpmath.workprec(200):
        exact = mpmath.matrix(a.tolist()) * mpmath.matrix(b.tolist())
        err = max(abs(prod[i, j] - exact[i, j]) for i in range(6) for j in range(6))
    assert err < 1e-28


def test_dd_eigh_residual():
    rng = np.random.default_rng(11)
    h = as_dd(random_hermitian(5, rng))
    w, v = linalg.eigh(h)
    res = v @ DDArray(np.diag(w.hi), np.diag(w.lo)) @ v.H - h
    assert linalg.max_abs(res) < 1e-28
    assert linalg.unitarity_error(v) < 1e-28


def test_compiled_and_python_kernels_bit_identical():
    impls = kernels.implementations()
    if "compiled" not in impls:
        pytest.skip("compiled extension not built")
    py, cy = impls["python"], impls["compiled"]
    rng = np.random.default_rng(12)
    ah, bh = (rng.normal(size=(7, 7)) + 1j * rng.normal(size=(7, 7)) for _ in range(2))
    al, bl = ah * 1e-17, bh * 3e-17
    for x, y in zip(py.gemm(ah, al, bh, bl), cy.gemm(ah, al, bh, bl)):
        assert np.array_equal(x, y)
    h = random_hermitian(6, rng)
    outs = []
    for mod in (py, cy):
        a_h, a_l = h.copy(), np.zeros_like(h)
        v_h, v_l = np.eye(6, dtype=complex), np.zeros((6, 6), dtype=complex)
        sweeps = mod.jacobi(a_h, a_l, v_h, v_l, 2.0 ** -112 * 4, 30)
        outs.append((sweeps, a_h, a_l, v_h, v_l))
    assert outs[0][0] == outs[1][0]
    for x, y in zip(outs[0][1:], outs[1][1:]):
        assert np.array_equal(x, y)
