import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from absneg.free_geometry import BETA, INV_SQRT3, ConeFamily, make_cone_states, tetrahedral_povm
from absneg.quantifiers import (
    NEGATIVITY_SCALE,
    ROBUSTNESS_SCALE,
    CppMatrix,
    DegenerateEffectError,
    UnsupportedConfigurationError,
    apply_cpp,
    depolarize_povms,
    depolarize_states,
    effect_sum_negativity,
    mean_robustness,
    measurement_sum_negativity,
    negativity_from_bloch,
    negativity_monotone,
    negativity_report,
    product_monotone,
    qubit_robustness,
    random_cpp,
    robustness_from_bloch,
    state_sum_negativity,
)
from absneg.quantum_core import (
    Effect,
    MultiObject,
    Povm,
    QuantumState,
    UnitarySU2,
    UnsupportedDimensionError,
    rotate_povm,
    rotate_state,
    random_povm,
    random_state,
    random_su2,
    state_from_bloch,
)
from absneg.wigner_frames import build_frame
from strategies import bloch_vectors, seeds, unitaries

SQ3 = np.sqrt(3)


def _direct_negativity(v):
    """Four-term sum of |(1 + c . r)/4| minus one, from explicit traces."""
    rho = state_from_bloch(v).matrix
    f = build_frame(2)
    return sum(abs(np.trace(a @ rho).real) for a in f.v_ops) - 1


def _identity_measurement(d=2):
    return Povm(tuple(Effect(np.eye(d) / d) for _ in range(d)))


def test_frozen_values_beta1():
    rho = state_from_bloch(BETA[0])
    n = state_sum_negativity(rho)
    assert abs(n - (SQ3 - 1) / 2) < 1e-12
    assert abs(n - _direct_negativity(BETA[0])) < 1e-12
    assert abs(qubit_robustness(rho) - (2 - SQ3)) < 1e-12
    assert abs(n / qubit_robustness(rho) - NEGATIVITY_SCALE / ROBUSTNESS_SCALE) < 1e-12
    assert abs(NEGATIVITY_SCALE / ROBUSTNESS_SCALE - (1 + SQ3) / 2) < 1e-15


def test_state_examples():
    assert state_sum_negativity(QuantumState(np.eye(2) / 2)) == 0
    assert abs(state_sum_negativity(state_from_bloch([0, 0, 1]))) < 1e-15
    assert qubit_robustness(state_from_bloch([0, 0, 0.3])) == 0


def test_effect_examples():
    assert abs(effect_sum_negativity(Effect(np.eye(2) / 2)) - 1) < 1e-12
    assert abs(effect_sum_negativity(Effect(np.eye(2))) - 2) < 1e-12
    assert abs(measurement_sum_negativity(_identity_measurement())) < 1e-12
    assert abs(measurement_sum_negativity(tetrahedral_povm())) < 1e-12
    pvm = Povm((Effect(np.diag([1.0, 0.0])), Effect(np.diag([0.0, 1.0]))))
    assert measurement_sum_negativity(pvm) >= 0
    assert abs(measurement_sum_negativity(pvm)) < 1e-12  # z basis sits on the free boundary


@given(seeds)
def test_nonnegative_effect_scores_trace(seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=3)
    v *= INV_SQRT3 * rng.random() / np.linalg.norm(v)
    t = rng.uniform(0.1, 1.0)
    e = Effect(t * state_from_bloch(v).matrix)
    assert abs(effect_sum_negativity(e) - t) < 1e-12


def test_degenerate_effect():
    m = Povm((Effect(np.zeros((2, 2))), Effect(np.eye(2))))
    with pytest.raises(DegenerateEffectError):
        measurement_sum_negativity(m)


@given(bloch_vectors(), unitaries())
def test_closed_forms_match_direct_sum(v, u):
    rho = state_from_bloch(v)
    w = u.rotation @ v
    assert abs(state_sum_negativity(rho, None, u) - _direct_negativity(w)) < 1e-12
    assert abs(negativity_from_bloch(w) - state_sum_negativity(rho, None, u)) < 1e-12
    assert abs(robustness_from_bloch(w) - qubit_robustness(rho, u)) < 1e-15


@given(bloch_vectors(), unitaries())
def test_proportionality(v, u):
    rho = state_from_bloch(v)
    r = qubit_robustness(rho, u)
    assert abs(state_sum_negativity(rho, None, u) - NEGATIVITY_SCALE / ROBUSTNESS_SCALE * r) < 1e-12


@given(unitaries(), seeds)
def test_unitary_covariance(u, seed):
    rng = np.random.default_rng(seed)
    rho, m = random_state(rng), random_povm(rng, 2, 3)
    assert abs(state_sum_negativity(rho, None, u) - state_sum_negativity(rotate_state(rho, u))) < 1e-12
    assert abs(qubit_robustness(rho, u) - qubit_robustness(rotate_state(rho, u))) < 1e-12
    assert abs(measurement_sum_negativity(m, None, u)
               - measurement_sum_negativity(rotate_povm(m, u))) < 1e-12


@given(unitaries(), unitaries(), seeds)
def test_monotone_basis_covariance(u, v, seed):
    rng = np.random.default_rng(seed)
    mo = MultiObject(tuple((random_state(rng), random_povm(rng, 2, 3)) for _ in range(3)))
    rotated = MultiObject(tuple((rotate_state(s, v), rotate_povm(m, v)) for s, m in mo.pairs))
    # conjugating everything by V and rotating the frame by V^dagger leaves values fixed
    vinv = UnitarySU2(v.quaternion * np.array([1, -1, -1, -1]))
    from absneg.quantum_core import quaternion_multiply
    uv = UnitarySU2(quaternion_multiply(u.quaternion, vinv.quaternion))
    assert abs(negativity_monotone(mo, u) - negativity_monotone(rotated, uv)) < 1e-10


@given(st.floats(0, 1), seeds)
def test_depolarizing_monotone(eps, seed):
    rng = np.random.default_rng(seed)
    u = random_su2(rng)
    states = [random_state(rng, 2, pure=True) for _ in range(5)]
    povms = [random_povm(rng, 2, int(rng.integers(2, 5))) for _ in range(5)]
    for a, b in zip(states, depolarize_states(states, eps)):
        assert qubit_robustness(b, u) <= qubit_robustness(a, u) + 1e-10
        assert state_sum_negativity(b, None, u) <= state_sum_negativity(a, None, u) + 1e-10
    for a, b in zip(povms, depolarize_povms(povms, eps)):
        assert measurement_sum_negativity(b, None, u) <= measurement_sum_negativity(a, None, u) + 1e-10


def test_depolarizing_examples():
    rho = state_from_bloch(BETA[0])
    assert np.allclose(depolarize_states([rho], 0.0)[0].matrix, rho.matrix)
    assert np.allclose(depolarize_states([rho], 1.0)[0].matrix, np.eye(2) / 2)
    half = depolarize_states([rho], 0.5)[0]
    assert np.allclose(half.bloch, BETA[0] / 2)
    assert qubit_robustness(half) == 0
    m = random_povm(np.random.default_rng(0), 2, 3)
    full = depolarize_povms([m], 1.0)[0]
    assert all(np.allclose(e.matrix, np.eye(2) / 3) for e in full.effects)
    two = depolarize_povms([tetrahedral_povm()], 1.0)[0]
    assert len(two) == 4
    with pytest.raises(ValueError):
        depolarize_states([rho], 1.5)


@given(seeds)
def test_cpp_monotone(seed):
    rng = np.random.default_rng(seed)
    u = random_su2(rng)
    m = random_povm(rng, 2, int(rng.integers(2, 5)))
    p = random_cpp(rng, int(rng.integers(1, 5)), len(m))
    out = apply_cpp([m], p)[0]
    assert measurement_sum_negativity(out, None, u) <= measurement_sum_negativity(m, None, u) + 1e-10


def test_cpp_examples():
    rng = np.random.default_rng(2)
    m = random_povm(rng, 2, 3)
    same = apply_cpp([m], CppMatrix(np.eye(3)))[0]
    assert all(np.allclose(a.matrix, b.matrix) for a, b in zip(m.effects, same.effects))
    merged = apply_cpp([m], CppMatrix(np.ones((1, 3))))[0]
    assert len(merged) == 1 and np.allclose(merged.effects[0].matrix, np.eye(2))
    with pytest.raises(ValueError):
        CppMatrix(np.array([[0.5, 0.5], [0.6, 0.5]]))
    with pytest.raises(ValueError):
        apply_cpp([m], CppMatrix(np.eye(2)))


def test_robustness_qubit_only():
    with pytest.raises(UnsupportedDimensionError):
        qubit_robustness(random_state(np.random.default_rng(0), 3))


def test_monotone_examples():
    quad = make_cone_states(ConeFamily("regular_quadruplet", np.pi))
    tet = tetrahedral_povm()
    mo = MultiObject(tuple((s, tet) for s in quad))
    assert abs(product_monotone(mo) - mean_robustness(quad)) < 1e-12
    ident = MultiObject(tuple((s, _identity_measurement()) for s in quad))
    mean_n = np.mean([state_sum_negativity(s) for s in quad])
    assert abs(negativity_monotone(ident) - mean_n) < 1e-12
    free = MultiObject(((QuantumState(np.eye(2) / 2), tet),))
    assert abs(negativity_monotone(free)) < 1e-12 and product_monotone(free) == 0
    doubled = MultiObject(mo.pairs + mo.pairs)
    assert abs(product_monotone(doubled) - product_monotone(mo)) < 1e-12
    pvm = Povm((Effect(state_from_bloch(BETA[0]).matrix), Effect(state_from_bloch(-BETA[0]).matrix)))
    with pytest.raises(UnsupportedConfigurationError):
        product_monotone(MultiObject(((quad[0], pvm),)))


def test_quadruplet_flat_mean_robustness():
    quad = make_cone_states(ConeFamily("regular_quadruplet", np.pi))
    per = [ROBUSTNESS_SCALE * max(0.0, (s.bloch @ BETA.T).max() - INV_SQRT3) for s in quad]
    assert abs(mean_robustness(quad) - np.mean(per)) < 1e-12
    rep = negativity_report(quad, UnitarySU2.identity(), "negativity")
    assert len(rep.per_object) == 4
