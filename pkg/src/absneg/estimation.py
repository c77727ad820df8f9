"""Sampling-cost bounds for quasi-probability estimation of Born probabilities."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .quantum_core import Effect, MultiObject, QuantumState, UnitarySU2
from .quantifiers import effect_sum_negativity, measurement_sum_negativity, state_sum_negativity
from .wigner_frames import Frame, build_frame, wigner_effect, wigner_state


@dataclass(frozen=True)
class CostParams:
    epsilon: float
    delta: float
    c: float = field(init=False)

    def __post_init__(self):
        if not 0 < self.epsilon < 1 or not 0 < self.delta < 1:
            raise ValueError("epsilon and delta must lie in (0, 1)")
        object.__setattr__(self, "c", 2 / self.epsilon ** 2 * math.log(2 / self.delta))


def hoeffding_samples(cp: CostParams) -> float:
    """Samples for accuracy epsilon with confidence 1 - delta, unit-range variables."""
    return math.log(2 / cp.delta) / (2 * cp.epsilon ** 2)


def _f(f, d):
    return build_frame(d) if f is None else f


def forward_cost(rho: QuantumState, e: Effect, f: Frame | None, u: UnitarySU2 | None, cp: CostParams) -> float:
    """Sample the state's quasi-probability, weight by the effect's dual values."""
    f = _f(f, rho.dim)
    ws = wigner_state(rho, f, u)
    we = wigner_effect(e, f, u)
    return cp.c * (np.abs(ws).sum() * np.abs(we).max()) ** 2


def reverse_cost(rho: QuantumState, e: Effect, f: Frame | None, u: UnitarySU2 | None, cp: CostParams) -> float:
    """Time-reversed picture: sample the effect, weight by the state.

    The effect weight is its sum-negativity, which equals tr(E) for free
    effects.
    """
    f = _f(f, rho.dim)
    ws = wigner_state(rho, f, u)
    return cp.c * (effect_sum_negativity(e, f, u) * np.abs(ws).max()) ** 2


def free_state_forward_cost(e: Effect, f: Frame | None, u: UnitarySU2 | None, cp: CostParams) -> float:
    """Forward cost for any free state: the absolute sum is exactly one."""
    f = _f(f, e.dim)
    return cp.c * np.abs(wigner_effect(e, f, u)).max() ** 2


def free_effect_reverse_cost(rho: QuantumState, f: Frame | None, u: UnitarySU2 | None, cp: CostParams) -> float:
    """Costliest free effect in reverse, the one with tr(L) = d."""
    f = _f(f, rho.dim)
    return cp.c * (rho.dim * np.abs(wigner_state(rho, f, u)).max()) ** 2


def cost_bound_record(mo: MultiObject, u: UnitarySU2 | None, cp: CostParams | None = None) -> dict:
    """Check the cost identity and the two cost bounds at one frame rotation.

    identity: 1 + mean_j N(rho_j) = mean_j sqrt(max_o s_fwd(rho_j, M_o) / s_fwd(free, M_o)).
    bound on measurements: 1 + mean_j N(M_j) >= mean_j sqrt(max_o s_rev(rho_j, M_o) / s_rev(rho_j, L)).
    combined: the negativity monotone dominates the mean product of both ratios.
    """
    cp = cp or CostParams(0.1, 0.05)
    f = build_frame(mo.dim)
    lhs_terms, rhs_terms, meas_terms, rev_terms, comb_lhs, comb_rhs = [], [], [], [], [], []
    for rho, m in mo.pairs:
        ns = state_sum_negativity(rho, f, u)
        nm = measurement_sum_negativity(m, f, u)
        fwd = max(forward_cost(rho, e, f, u, cp) / free_state_forward_cost(e, f, u, cp)
                  for e in m.effects)
        rev = max(reverse_cost(rho, e, f, u, cp) for e in m.effects) / free_effect_reverse_cost(rho, f, u, cp)
        lhs_terms.append(1 + ns)
        rhs_terms.append(math.sqrt(fwd))
        meas_terms.append(1 + nm)
        rev_terms.append(math.sqrt(rev))
        comb_lhs.append((1 + ns) * (1 + nm))
        comb_rhs.append(math.sqrt(fwd) * math.sqrt(rev))
    return {
        "quaternion": [float(x) for x in (u.quaternion if u is not None else (1.0, 0.0, 0.0, 0.0))],
        "identity_lhs": float(np.mean(lhs_terms)),
        "identity_rhs": float(np.mean(rhs_terms)),
        "measurement_slack": float(np.mean(meas_terms) - np.mean(rev_terms)),
        "combined_slack": float(np.mean(comb_lhs) - np.mean(comb_rhs)),
    }


def cost_bound_report(mo: MultiObject, u_list, cp: CostParams | None = None) -> dict:
    records = [cost_bound_record(mo, u, cp) for u in u_list]
    return {
        "n": mo.n,
        "records": records,
        "max_identity_error": max(abs(r["identity_lhs"] - r["identity_rhs"]) for r in records),
        "min_measurement_slack": min(r["measurement_slack"] for r in records),
        "min_combined_slack": min(r["combined_slack"] for r in records),
    }
