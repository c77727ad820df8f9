import itertools

import numpy as np
import pytest
from hypothesis import given

from absneg.quantum_core import (
    Effect,
    QuantumState,
    UnsupportedDimensionError,
    rotate_effect,
    rotate_state,
    random_effect,
    random_state,
    state_from_bloch,
)
from absneg.wigner_frames import (
    born_probability,
    build_frame,
    qubit_coefficients,
    qubit_wigner,
    reconstruct,
    wigner_effect,
    wigner_state,
)
from absneg.free_geometry import BETA
from strategies import bloch_vectors, seeds, unitaries


@pytest.mark.parametrize("d", [2, 3, 5, 7])
def test_dual_orthogonality_and_unit_sum(d):
    f = build_frame(d)
    gram = np.einsum("aij,bji->ab", f.g_ops, f.g_ops).real
    assert np.allclose(gram, d * np.eye(d * d), atol=1e-10)
    assert np.allclose(f.v_ops.sum(axis=0), np.eye(d), atol=1e-12)
    assert f.points == tuple(itertools.product(range(d), range(d)))


def test_d3_exhaustive_pairs():
    f = build_frame(3)
    for a in range(9):
        for b in range(9):
            assert abs(np.trace(f.g_ops[a] @ f.g_ops[b]) - 3 * (a == b)) < 1e-12


@pytest.mark.parametrize("d", [1, 4, 6, 11])
def test_unsupported_dimension(d):
    with pytest.raises(UnsupportedDimensionError):
        build_frame(d)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_frame_duality(d):
    rng = np.random.default_rng(d)
    f = build_frame(d)
    for _ in range(20):
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        a = g + g.conj().T
        w = np.einsum("aij,ji->a", f.v_ops, a)
        assert np.allclose(np.einsum("a,aij->ij", w, f.g_ops), a, atol=1e-10)


def test_qubit_examples():
    f = build_frame(2)
    assert np.allclose(wigner_state(QuantumState(np.eye(2) / 2), f), 0.25)
    w0 = wigner_state(state_from_bloch([0, 0, 1]), f)
    assert sorted(np.round(w0, 12)) == [0, 0, 0.5, 0.5]
    w1 = wigner_state(state_from_bloch(BETA[0]), f)
    neg = w1[w1 < 0]
    assert len(neg) == 1 and abs(neg[0] - (1 - np.sqrt(3)) / 4) < 1e-12
    e0 = Effect(np.diag([1.0, 0.0]))
    we = wigner_effect(e0, f)
    assert set(np.round(we, 12)) <= {0.0, 1.0}
    assert abs(born_probability(state_from_bloch([0, 0, 1]), e0, f) - 1) < 1e-12
    assert abs(born_probability(state_from_bloch([0, 0, -1]), e0, f)) < 1e-12


def test_identity_effect_born_is_one_over_d():
    for d in (2, 3):
        f = build_frame(d)
        rho = random_state(np.random.default_rng(1), d)
        assert abs(born_probability(rho, Effect(np.eye(d) / d), f) - 1 / d) < 1e-12


@given(bloch_vectors())
def test_qubit_sign_pattern(v):
    # W = (1 + c . r)/4 with c one of (1,1,1), (-1,-1,1), (1,-1,-1), (-1,1,-1)
    w = wigner_state(state_from_bloch(v), build_frame(2))
    x, y, z = v
    oracle = 0.25 * np.array([1 + x + y + z, 1 - x - y + z, 1 + x - y - z, 1 - x + y - z])
    assert np.allclose(w, oracle, atol=1e-12)
    assert np.allclose(qubit_wigner(v), oracle, atol=1e-12)


def test_coefficients_are_tetrahedron():
    c = qubit_coefficients()
    assert np.allclose(np.abs(c), 1)
    assert np.allclose(c @ c.T, 4 * np.eye(4) - 1)


@given(unitaries(), seeds)
def test_unitary_covariance(u, seed):
    rng = np.random.default_rng(seed)
    f = build_frame(2)
    rho, e = random_state(rng), random_effect(rng)
    assert np.allclose(wigner_state(rho, f, u), wigner_state(rotate_state(rho, u), f), atol=1e-12)
    assert np.allclose(wigner_effect(e, f, u), wigner_effect(rotate_effect(e, u), f), atol=1e-12)
    assert np.allclose(wigner_state(rho, f.rotated(u)), wigner_state(rho, f, u), atol=1e-15)


@given(unitaries(), seeds)
def test_born_rule(u, seed):
    rng = np.random.default_rng(seed)
    f = build_frame(2)
    rho, e = random_state(rng), random_effect(rng)
    assert abs(born_probability(rho, e, f, u) - np.trace(rho.matrix @ e.matrix).real) < 1e-12


@given(seeds)
def test_state_reconstruction(seed):
    rng = np.random.default_rng(seed)
    for d in (2, 3):
        f = build_frame(d)
        rho = random_state(rng, d)
        assert np.allclose(reconstruct(wigner_state(rho, f), f), rho.matrix, atol=1e-12)
        assert abs(wigner_state(rho, f).sum() - 1) < 1e-12


def test_double_rotation_rejected():
    f = build_frame(2)
    from absneg.quantum_core import UnitarySU2
    u = UnitarySU2(np.array([0.6, 0.8, 0, 0]))
    with pytest.raises(ValueError):
        wigner_state(random_state(np.random.default_rng(0)), f.rotated(u), u)
