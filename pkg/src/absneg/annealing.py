"""Simulated annealing over SU(2) for the mean negativity of a set of qubit states.

Each chain walks on unit quaternions with Metropolis acceptance and a
geometric cooling schedule, and its best point is then polished by a local
simplex search. Random numbers are drawn up front with numpy
(one generator per chain seeded by (seed, point, chain)), so a run is a pure
function of its inputs; the inner loop is compiled with numba.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numba
import numpy as np
from scipy.optimize import minimize

from .free_geometry import BETA, INV_SQRT3, ConeFamily, cone_bloch_vectors, quadruplet_bloch
from .quantifiers import NEGATIVITY_SCALE, ROBUSTNESS_SCALE, mean_state_sum_negativity
from .quantum_core import (
    UnitarySU2,
    axis_angle_quaternion,
    bloch_from_state,
    canonical_quaternion,
    quaternion_multiply,
    state_from_bloch,
)
from .wigner_frames import build_frame

FREE_THRESHOLD = 1e-6

_max_workers = os.cpu_count() or 1


def set_threads(n: int | None):
    """Cap the number of chains run concurrently; None means all logical cores."""
    global _max_workers
    if n is not None and n < 1:
        raise ValueError("thread count must be positive")
    _max_workers = n or os.cpu_count() or 1


def get_threads() -> int:
    return _max_workers


class AnnealingError(RuntimeError):
    pass


@dataclass(frozen=True)
class AnnealConfig:
    initial_temp: float = 1.0
    cooling_factor: float = 0.95
    steps_per_temp: int = 200
    min_temp: float = 1e-5
    proposal_sigma: float = 0.5
    restarts: int = 8
    rng_seed: int = 42
    polish: bool = True

    def __post_init__(self):
        if not 0 < self.cooling_factor < 1:
            raise ValueError("cooling factor must lie in (0, 1)")
        if self.initial_temp <= 0 or self.min_temp <= 0 or self.proposal_sigma <= 0:
            raise ValueError("temperatures and proposal width must be positive")
        if self.steps_per_temp < 0 or self.restarts < 0:
            raise ValueError("step and restart counts must be nonnegative")

    def temperatures(self) -> np.ndarray:
        if self.steps_per_temp == 0 or self.initial_temp < self.min_temp:
            return np.zeros(0)
        n = int(math.floor(math.log(self.min_temp / self.initial_temp) / math.log(self.cooling_factor))) + 1
        return self.initial_temp * self.cooling_factor ** np.arange(n)


@dataclass(frozen=True)
class AnnealResult:
    best_value: float
    best_unitary: UnitarySU2
    trace: np.ndarray | None
    restarts_used: int


@numba.njit(cache=True, nogil=True)
def _objective(q, bloch, faces):
    w, x, y, z = q[0], q[1], q[2], q[3]
    r00 = 1 - 2 * (y * y + z * z)
    r01 = 2 * (x * y - w * z)
    r02 = 2 * (x * z + w * y)
    r10 = 2 * (x * y + w * z)
    r11 = 1 - 2 * (x * x + z * z)
    r12 = 2 * (y * z - w * x)
    r20 = 2 * (x * z - w * y)
    r21 = 2 * (y * z + w * x)
    r22 = 1 - 2 * (x * x + y * y)
    total = 0.0
    for j in range(bloch.shape[0]):
        a, b, c = bloch[j, 0], bloch[j, 1], bloch[j, 2]
        u0 = r00 * a + r01 * b + r02 * c
        u1 = r10 * a + r11 * b + r12 * c
        u2 = r20 * a + r21 * b + r22 * c
        worst = 0.0
        for k in range(faces.shape[0]):
            e = u0 * faces[k, 0] + u1 * faces[k, 1] + u2 * faces[k, 2] - faces[k, 3]
            if e > worst:
                worst = e
        total += worst
    return total / bloch.shape[0]


@numba.njit(cache=True, nogil=True)
def _run_chain(q0, bloch, faces, temps, steps, sigma, axes, gauss, unif, trace):
    q = q0.copy()
    cur = _objective(q, bloch, faces)
    best = cur
    best_q = q.copy()
    t0 = temps[0] if temps.shape[0] > 0 else 1.0
    cand = np.empty(4)
    i = 0
    for lvl in range(temps.shape[0]):
        t = temps[lvl]
        width = sigma * t / t0
        for _ in range(steps):
            ang = abs(gauss[i]) * width
            s = math.sin(ang / 2)
            dw, dx, dy, dz = math.cos(ang / 2), s * axes[i, 0], s * axes[i, 1], s * axes[i, 2]
            w, x, y, z = q[0], q[1], q[2], q[3]
            cand[0] = dw * w - dx * x - dy * y - dz * z
            cand[1] = dw * x + dx * w + dy * z - dz * y
            cand[2] = dw * y - dx * z + dy * w + dz * x
            cand[3] = dw * z + dx * y - dy * x + dz * w
            n = math.sqrt(cand[0] ** 2 + cand[1] ** 2 + cand[2] ** 2 + cand[3] ** 2)
            for c in range(4):
                cand[c] /= n
            val = _objective(cand, bloch, faces)
            if not math.isfinite(val):
                return math.nan, cand, i
            delta = val - cur
            if delta <= 0 or unif[i] < math.exp(-delta / t):
                q[:] = cand
                cur = val
                if cur < best:
                    best = cur
                    best_q[:] = q
            i += 1
        trace[lvl] = best
    return best, best_q, -1


_FACES = np.hstack([BETA, np.full((4, 1), INV_SQRT3)])


def _polish(q0: np.ndarray, bloch: np.ndarray) -> tuple:
    """Nelder-Mead on a rotation vector around q0, twice with shrinking simplex."""
    def f(v):
        ang = np.linalg.norm(v)
        if ang < 1e-15:
            return _objective(q0, bloch, _FACES)
        dq = axis_angle_quaternion(v / ang, ang)
        return _objective(quaternion_multiply(dq, q0), bloch, _FACES)

    best_val, best_v = f(np.zeros(3)), np.zeros(3)
    for scale in (1e-2, 1e-3):
        simplex = best_v + scale * np.vstack([np.zeros(3), np.eye(3)])
        res = minimize(f, best_v, method="Nelder-Mead",
                       options=dict(initial_simplex=simplex, xatol=1e-12, fatol=1e-15, maxiter=4000))
        if res.fun < best_val:
            best_val, best_v = float(res.fun), res.x
    ang = np.linalg.norm(best_v)
    q = q0 if ang < 1e-15 else quaternion_multiply(axis_angle_quaternion(best_v / ang, ang), q0)
    return best_val, q / np.linalg.norm(q)


def _random_quaternion(rng) -> np.ndarray:
    q = rng.normal(size=4)
    return q / np.linalg.norm(q)


def _scale(measure: str) -> float:
    if measure == "robustness":
        return ROBUSTNESS_SCALE
    if measure == "negativity":
        return NEGATIVITY_SCALE
    raise ValueError(f"unknown measure {measure!r}")


def anneal_bloch(bloch, cfg: AnnealConfig, measure: str = "robustness", initial=None,
                 point: int = 0, keep_trace: bool = False) -> AnnealResult:
    """Anneal a Bloch set of shape (n, 3).

    Chain 0 starts from ``initial`` (identity by default); chains 1..restarts-1
    start uniformly at random. The best chain wins, lowest index on ties.
    """
    bloch = np.ascontiguousarray(np.asarray(bloch, dtype=float).reshape(-1, 3))
    scale = _scale(measure)
    temps = cfg.temperatures()
    steps = cfg.steps_per_temp if len(temps) else 0
    n_steps = len(temps) * steps
    n_chains = max(cfg.restarts, 1)
    q_init = np.array([1.0, 0.0, 0.0, 0.0]) if initial is None else np.asarray(
        initial.quaternion if isinstance(initial, UnitarySU2) else initial, dtype=float)

    def chain(c):
        rng = np.random.default_rng([cfg.rng_seed, point, c])
        start = q_init / np.linalg.norm(q_init) if c == 0 else _random_quaternion(rng)
        axes = rng.normal(size=(n_steps, 3))
        axes /= np.linalg.norm(axes, axis=1, keepdims=True)
        gauss = rng.normal(size=n_steps)
        unif = rng.random(size=n_steps)
        trace = np.empty(len(temps))
        val, q, bad = _run_chain(start, bloch, _FACES, temps, steps, cfg.proposal_sigma,
                                 axes, gauss, unif, trace)
        if bad >= 0 or not math.isfinite(val):
            raise AnnealingError(f"non-finite objective at quaternion {q.tolist()}")
        if cfg.polish and val > 0:
            pval, pq = _polish(q, bloch)
            if pval < val:
                val, q = pval, pq
        return val, q, trace

    workers = min(_max_workers, n_chains)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(chain, range(n_chains)))
    else:
        results = [chain(c) for c in range(n_chains)]
    # deterministic merge, lowest chain index wins ties
    best_val, best_q = np.inf, None
    for val, q, _ in results:
        if val < best_val:
            best_val, best_q = val, q.copy()
    traces = [scale * t for _, _, t in results]
    return AnnealResult(float(scale * best_val), UnitarySU2(canonical_quaternion(best_q)),
                        np.array(traces) if keep_trace else None, n_chains)


def anneal(states, cfg: AnnealConfig, measure: str = "robustness", initial=None,
           keep_trace: bool = False) -> AnnealResult:
    if not states:
        raise ValueError("empty state list")
    bloch = np.array([bloch_from_state(s) for s in states])
    return anneal_bloch(bloch, cfg, measure, initial, keep_trace=keep_trace)


@dataclass(frozen=True)
class CurvePoint:
    theta: float
    mean_robustness: float
    mean_sum_negativity: float
    ratio: float
    quaternion: tuple


def curve_for_sets(thetas, bloch_sets, cfg: AnnealConfig, warm_start: bool = True) -> list:
    """Anneal a sequence of Bloch sets, chain 0 warm-started from the last best.

    The sum-negativity column is evaluated by direct trace against the frame
    at the annealed unitary, independently of the robustness objective.
    """
    f = build_frame(2)
    out = []
    prev = None
    for i, (th, bl) in enumerate(zip(thetas, bloch_sets)):
        res = anneal_bloch(bl, cfg, "robustness", prev if warm_start else None, point=i)
        prev = res.best_unitary
        states = [state_from_bloch(v) for v in bl]
        neg = mean_state_sum_negativity(states, f, res.best_unitary)
        ratio = neg / res.best_value if res.best_value > 1e-8 else float("nan")
        out.append(CurvePoint(float(th), res.best_value, neg, ratio,
                              tuple(float(x) for x in res.best_unitary.quaternion)))
    return out


def quadruplet_curve(theta_grid, r: float, cfg: AnnealConfig, warm_start: bool = True) -> list:
    if not 0 <= r <= 1:
        raise ValueError("radius must lie in [0, 1]")
    theta_grid = np.asarray(theta_grid, dtype=float)
    return curve_for_sets(theta_grid, quadruplet_bloch(theta_grid, r), cfg, warm_start)


def quadruplet_max(r: float, theta_scan, cfg: AnnealConfig) -> tuple:
    """Largest annealed quadruplet value over the scan, and where it occurs."""
    curve = quadruplet_curve(theta_scan, r, cfg)
    vals = np.array([p.mean_robustness for p in curve])
    k = int(np.argmax(vals))
    return float(vals[k]), float(curve[k].theta)


@dataclass(frozen=True)
class ThresholdResult:
    threshold: float
    lower: float
    upper: float
    history: tuple


def radius_threshold(cfg: AnnealConfig, theta_scan, lo: float = 0.6, hi: float = 0.9,
                     width: float = 2e-3, tol: float = 1e-7) -> ThresholdResult:
    """Bisect the radius at which some regular quadruplet first becomes resourceful.

    The predicate is "the annealed value stays below tol for every theta in
    the scan". It must hold at lo and fail at hi.
    """
    history = []

    def free(r):
        val, th = quadruplet_max(r, theta_scan, cfg)
        history.append((r, val, th))
        return val < tol

    if not free(lo):
        raise AnnealingError(f"quadruplets at radius {lo} already look resourceful; annealer under-converged?")
    if free(hi):
        raise AnnealingError(f"quadruplets at radius {hi} all look free; annealer under-converged?")
    while hi - lo >= width:
        mid = 0.5 * (lo + hi)
        if free(mid):
            lo = mid
        else:
            hi = mid
    return ThresholdResult(0.5 * (lo + hi), lo, hi, tuple(history))


@dataclass(frozen=True)
class TripletRecord:
    theta: float
    phi2: float
    phi3: float
    best_value: float
    resourceful: bool


def triplet_scan(thetas, phi2s, n_phi3: int, cfg: AnnealConfig) -> list:
    """Anneal irregular triplets over theta, phi2 and phi3 in [phi2, pi - phi2/2]."""
    out = []
    point = 0
    for th in thetas:
        for p2 in phi2s:
            for p3 in np.linspace(p2, np.pi - p2 / 2, n_phi3):
                fam = ConeFamily("irregular_triplet", float(th), 1.0, (float(p2), float(p3)))
                res = anneal_bloch(cone_bloch_vectors(fam), cfg, point=point)
                point += 1
                out.append(TripletRecord(float(th), float(p2), float(p3), res.best_value,
                                         res.best_value > FREE_THRESHOLD))
    return out


def quick_config(**kw) -> AnnealConfig:
    """Default config with overrides, a convenience for tests and sweeps."""
    return replace(AnnealConfig(), **kw)
