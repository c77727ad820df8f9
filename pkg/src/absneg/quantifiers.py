"""Resource quantifiers and free operations.

Sum-negativities work in any prime dimension through the frame; the
robustness is the closed-form qubit expression. Every quantifier takes the
frame rotation U explicitly; minimizing over U is left to the optimizers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .free_geometry import face_excess, is_free_effect, rotated_bloch
from .quantum_core import (
    Effect,
    MultiObject,
    Povm,
    QuantumError,
    QuantumState,
    UnitarySU2,
    UnsupportedDimensionError,
    bloch_from_state,
)
from .wigner_frames import Frame, build_frame, wigner_effect, wigner_state

ROBUSTNESS_SCALE = np.sqrt(3) / (1 + np.sqrt(3))
# with the unit-sum frame, sum |W| - 1 = (sqrt 3 / 2) * (excess over the face)
NEGATIVITY_SCALE = np.sqrt(3) / 2


class DegenerateEffectError(QuantumError):
    pass


class UnsupportedConfigurationError(QuantumError):
    pass


@dataclass(frozen=True)
class NegativityReport:
    per_object: tuple
    mean: float
    unitary: UnitarySU2


@dataclass(frozen=True)
class CppMatrix:
    """Column-stochastic p(x|a): rows are new outcomes x, columns old outcomes a."""

    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 2:
            raise ValueError("CPP matrix must be two-dimensional")
        if p.min() < 0:
            raise ValueError("CPP matrix has negative entries")
        if np.max(np.abs(p.sum(axis=0) - 1)) > 1e-12:
            raise ValueError("CPP matrix columns must sum to one")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)


def _frame(f: Frame | None, d: int) -> Frame:
    return build_frame(d) if f is None else f


def state_sum_negativity(rho: QuantumState, f: Frame | None = None, u: UnitarySU2 | None = None) -> float:
    w = wigner_state(rho, _frame(f, rho.dim), u)
    return max(float(np.abs(w).sum() - 1.0), 0.0)


def effect_sum_negativity(e: Effect, f: Frame | None = None, u: UnitarySU2 | None = None) -> float:
    """sum_alpha |tr(E V(alpha))|, i.e. the dual-frame weights divided by d.

    Weighing effects against V rather than G = d V makes a nonnegative effect
    score exactly tr(E), so the identity measurement has zero measurement
    sum-negativity.
    """
    f = _frame(f, e.dim)
    return float(np.abs(wigner_effect(e, f, u)).sum() / f.dim)


def measurement_sum_negativity(m: Povm, f: Frame | None = None, u: UnitarySU2 | None = None) -> float:
    """max_a N(M_a)/tr(M_a) - 1; the first outcome wins ties."""
    best = -np.inf
    for e in m.effects:
        tr = np.trace(e.matrix).real
        if tr <= 1e-12:
            raise DegenerateEffectError("effect with zero trace has no normalized negativity")
        best = max(best, effect_sum_negativity(e, f, u) / tr)
    return max(float(best - 1.0), 0.0)


def qubit_robustness(rho: QuantumState, u: UnitarySU2 | None = None) -> float:
    if rho.dim != 2:
        raise UnsupportedDimensionError("analytic robustness is for qubits")
    r = rotated_bloch(bloch_from_state(rho), u)
    return float(ROBUSTNESS_SCALE * max(face_excess(r).max(), 0.0))


def robustness_from_bloch(bloch) -> np.ndarray:
    """Per-vector robustness for Bloch arrays of shape (..., 3)."""
    return ROBUSTNESS_SCALE * np.maximum(face_excess(bloch).max(axis=-1), 0.0)


def negativity_from_bloch(bloch) -> np.ndarray:
    """Per-vector state sum-negativity for Bloch arrays of shape (..., 3)."""
    return NEGATIVITY_SCALE * np.maximum(face_excess(bloch).max(axis=-1), 0.0)


def mean_robustness(states, u: UnitarySU2 | None = None) -> float:
    if not states:
        raise ValueError("empty state list")
    return float(np.mean([qubit_robustness(s, u) for s in states]))


def mean_state_sum_negativity(states, f: Frame | None = None, u: UnitarySU2 | None = None) -> float:
    if not states:
        raise ValueError("empty state list")
    return float(np.mean([state_sum_negativity(s, f, u) for s in states]))


def negativity_report(states, u: UnitarySU2, measure: str = "robustness") -> NegativityReport:
    if measure == "robustness":
        vals = [qubit_robustness(s, u) for s in states]
    elif measure == "negativity":
        vals = [state_sum_negativity(s, None, u) for s in states]
    else:
        raise ValueError(f"unknown measure {measure!r}")
    return NegativityReport(tuple(vals), float(np.mean(vals)), u)


def product_monotone(mo: MultiObject, u: UnitarySU2 | None = None) -> float:
    """E_j[(1 + R_state)(1 + R_meas)] - 1 with free measurements only.

    Measurement robustness needs a conic program unless the POVM is free in
    the rotated frame, where it vanishes; anything else is rejected.
    """
    if mo.dim != 2:
        raise UnsupportedDimensionError("product monotone is implemented for qubits")
    for m in mo.povms:
        if not all(is_free_effect(e, u) for e in m.effects):
            raise UnsupportedConfigurationError("measurement is not free in this frame")
    return float(np.mean([(1 + qubit_robustness(s, u)) for s in mo.states]) - 1.0)


def negativity_monotone(mo: MultiObject, u: UnitarySU2 | None = None) -> float:
    """E_j[(1 + N_state)(1 + N_meas)] - 1 at a fixed frame rotation."""
    f = build_frame(mo.dim)
    vals = [(1 + state_sum_negativity(s, f, u)) * (1 + measurement_sum_negativity(m, f, u))
            for s, m in mo.pairs]
    return float(np.mean(vals) - 1.0)


# free operations

def _check_eps(eps: float):
    if not 0 <= eps <= 1:
        raise ValueError("depolarizing strength must lie in [0, 1]")


def depolarize_states(states, eps: float) -> list:
    _check_eps(eps)
    out = []
    for s in states:
        d = s.dim
        out.append(QuantumState((1 - eps) * s.matrix + eps * np.eye(d) / d))
    return out


def depolarize_povms(povms, eps: float) -> list:
    """M_a -> (1 - eps) M_a + eps I/n for an n-outcome POVM.

    For n = d this is the mixture with the identity measurement I_a = I/d.
    Other outcome counts use the uninformative n-outcome measurement so the
    result is still a POVM.
    """
    _check_eps(eps)
    out = []
    for m in povms:
        share = np.eye(m.dim) / len(m)
        out.append(Povm(tuple(Effect((1 - eps) * e.matrix + eps * share) for e in m.effects)))
    return out


def apply_cpp(povms, p: CppMatrix) -> list:
    """K_x = sum_a p(x|a) M_a applied to every POVM."""
    out = []
    for m in povms:
        if p.p.shape[1] != len(m):
            raise ValueError("CPP column count does not match outcome count")
        mats = np.stack([e.matrix for e in m.effects])
        new = np.einsum("xa,aij->xij", p.p, mats)
        out.append(Povm(tuple(Effect(0.5 * (k + k.conj().T)) for k in new)))
    return out


def random_cpp(rng, rows: int, cols: int) -> CppMatrix:
    p = rng.exponential(size=(rows, cols))
    p /= p.sum(axis=0, keepdims=True)
    # fix rounding so each column sums to one within 1e-12
    p[-1] = 1 - p[:-1].sum(axis=0)
    p = np.clip(p, 0, None)
    return CppMatrix(p)
