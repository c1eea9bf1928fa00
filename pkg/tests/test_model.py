from __future__ import annotations

import math

import numpy as np
import pytest

import oracles
from cddsim.core import linalg
from cddsim.errors import IndexOutOfRange, NegativeWidth, UnsupportedCount
from cddsim.model import (Geometry, SystemModel, build_exchange_generator, build_geometry, build_h_b,
                          build_h_sb, build_pulse)


def test_linear_geometry_unit_spacing():
    geo = build_geometry("linear", 4, 2)
    assert geo.n_qubits == 6
    for k in range(5):
        assert geo.distance(k, k + 1) == pytest.approx(1.0, abs=1e-15)
    assert geo.distance(0, 5) == pytest.approx(5.0)


def test_circular_geometry_unit_chord():
    geo = build_geometry("circular", 4, 2)
    for k in range(6):
        assert geo.distance(k, (k + 1) % 6) == pytest.approx(1.0, abs=1e-12)
    d = geo.distances()
    assert (d[~np.eye(6, dtype=bool)] > 0).all()


@pytest.mark.parametrize("bath", [1, 2, 3, 4])
def test_polygonal_geometry_distinct_points(bath):
    geo = build_geometry("polygonal", 4, bath)
    d = geo.distances()
    assert (d[~np.eye(geo.n_qubits, dtype=bool)] > 0).all()


def test_geometry_rejects_bad_system_count():
    with pytest.raises(UnsupportedCount):
        build_geometry("linear", 5, 2)
    with pytest.raises(ValueError):
        build_geometry("spiral", 4, 2)


def test_h_sb_zero_coupling():
    geo = build_geometry("linear", 4, 2)
    assert not np.abs(build_h_sb(geo, 0.0)).any()


def test_h_sb_single_pair_norm():
    # one system and one bath qubit at unit distance
    geo = Geometry("linear", 1, 1, ((0.0, 0.0), (1.0, 0.0)))
    J = 1e4
    h = build_h_sb(geo, J)
    want = (J / 2) * sum(oracles.pauli_on(2, {0: a, 1: a}) for a in "xyz")
    assert np.abs(h - want).max() < 1e-10
    assert linalg.spectral_norm(h) == pytest.approx(1.5 * J, rel=1e-14)


def test_h_sb_matches_kron_oracle_and_is_linear():
    geo = build_geometry("linear", 4, 2)
    h = build_h_sb(geo, 1e4)
    assert np.abs(h - oracles.h_sb(4, 2, 1e4)).max() < 1e-10
    assert np.abs(build_h_sb(geo, 3e4) - 3 * h).max() < 1e-9
    assert linalg.is_hermitian(h)


def test_h_b_two_qubits_against_hand_matrix():
    geo = Geometry("linear", 0, 2, ((0.0, 0.0), (1.0, 0.0)))
    beta = 1e6
    h = build_h_b(geo, beta)
    # hand expansion of YY + ZZ - 2XX in the |00>,|01>,|10>,|11> basis
    hand = beta * np.array([[1, 0, 0, -3],
                            [0, -1, -1, 0],
                            [0, -1, -1, 0],
                            [-3, 0, 0, 1]], dtype=complex)
    assert np.abs(h - hand).max() < 1e-9
    assert abs(np.trace(h)) < 1e-9
    # Bell-state eigenvalues -2, 4, -2, 0 (in units of beta)
    assert linalg.spectral_norm(h) == pytest.approx(4 * beta, rel=1e-14)


def test_h_b_identity_on_system_and_zero_cases():
    geo = build_geometry("linear", 4, 2)
    h = build_h_b(geo, 1e6)
    assert np.abs(h - oracles.h_b(4, 2, 1e6)).max() < 1e-6
    # commutes with every system Pauli
    for q in range(4):
        for a in "xyz":
            p = oracles.pauli_on(6, {q: a})
            assert np.abs(h @ p - p @ h).max() < 1e-6
    assert not np.abs(build_h_b(geo, 0.0)).any()
    assert not np.abs(build_h_b(build_geometry("linear", 4, 1), 1e6)).any()


def test_exchange_generator_examples():
    assert not np.abs(build_exchange_generator([], 4, 0)).any()
    w = 2.5
    h = build_exchange_generator([((1, 2), w)], 4, 0)
    assert np.abs(h - oracles.h_exchange(4, [((1, 2), w)])).max() < 1e-14
    vals = np.unique(np.round(np.linalg.eigvalsh(h), 12))
    assert np.allclose(vals, [-3 * w, w])


def test_exchange_generator_index_check():
    with pytest.raises(IndexOutOfRange):
        build_exchange_generator([((1, 4), 1.0)], 4, 2)
    with pytest.raises(IndexOutOfRange):
        build_exchange_generator([((2, 2), 1.0)], 4, 0)


def test_exchange_commutators():
    # s1.s2 and s2.s3 do not commute; s1.s2 and s3.s4 do
    a = build_exchange_generator([((0, 1), 1.0)], 4)
    b = build_exchange_generator([((1, 2), 1.0)], 4)
    c = build_exchange_generator([((2, 3), 1.0)], 4)
    assert np.abs(a @ b - b @ a).max() > 1
    assert np.abs(a @ c - c @ a).max() == 0


def test_ideal_pulse_is_exact_pauli_string():
    p = build_pulse("x", 0.0, 4)
    assert p.ideal
    assert np.array_equal(p.unitary(), oracles.pauli_on(4, {q: "x" for q in range(4)}))


def test_finite_pulse_amplitude_and_action():
    p = build_pulse("z", 1e-9, 4, 1)
    assert p.amplitude == pytest.approx(math.pi / 2e-9, rel=1e-15)
    u = linalg.expm_hermitian(p.generator(), 1e-9)
    ideal = oracles.pauli_on(5, {q: "z" for q in range(4)})
    # exp(-i pi/2 Z) = -i Z per qubit; four qubits give (-i)^4 = 1
    assert np.abs(u - ideal).max() < 1e-12


def test_negative_pulse_width():
    with pytest.raises(NegativeWidth):
        build_pulse("x", -1e-9, 4)


def test_system_model_norm_scaling():
    m = SystemModel.build(J=1e4, beta=1e6)
    m2 = m.with_couplings(J=2e4, beta=3e6)
    assert linalg.spectral_norm(m2.h_sb) == pytest.approx(2 * linalg.spectral_norm(m.h_sb), rel=1e-12)
    assert linalg.spectral_norm(m2.h_b) == pytest.approx(3 * linalg.spectral_norm(m.h_b), rel=1e-12)
    scaled = m.with_couplings(bath_scaling=2.0)
    assert np.abs(scaled.h_sb - 2 * m.h_sb).max() < 1e-9
    assert scaled.fingerprint() != m.fingerprint()
