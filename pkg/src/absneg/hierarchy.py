"""Geodesic unitary hierarchy for qubits.

Step m takes the vertices of the m-th geodesic subdivision of the
octahedron. O_m collects, for every vertex v, the minimal rotation taking
x1 = (1, 0, 0) to v composed with spins about x1 by the azimuths of the
vertices on the great circle x = 0. U_m keeps one representative per class
of unitaries that rotate the free tetrahedron onto the same set of faces.
Minimizing a mean quantifier over U_m gives an upper bound that can only
shrink as m grows, since the sets are nested.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import curve_fit
from scipy.spatial import cKDTree

from .free_geometry import BETA, INV_SQRT3, orthoplex_geodesic_vertices
from .quantifiers import NEGATIVITY_SCALE, ROBUSTNESS_SCALE
from .quantum_core import (
    QuantumState,
    UnitarySU2,
    axis_angle_quaternion,
    bloch_from_state,
    canonical_quaternion,
    quaternion_multiply,
    quaternion_to_rotation,
)

# published (|O_m|, |U_m|), used by the CLI self-check
PUBLISHED_COUNTS = {0: (24, 2), 1: (672, 26), 2: (4368, 198), 3: (30960, 1410),
                    4: (234720, 10304)}

MAX_STEP = 6
MAX_ROTATION_STEP = 4


@dataclass(frozen=True)
class GeodesicPolyhedron:
    m: int
    vertices: np.ndarray


@dataclass(frozen=True)
class RotationSet:
    m: int
    o_m: np.ndarray  # canonical quaternions, shape (|O_m|, 4)
    u_m: np.ndarray  # class representatives, shape (|U_m|, 4)

    @property
    def counts(self) -> tuple:
        return (len(self.o_m), len(self.u_m))

    def unitaries(self, which: str = "u") -> list:
        arr = self.u_m if which == "u" else self.o_m
        return [UnitarySU2(q) for q in arr]


def build_geodesic(m: int) -> GeodesicPolyhedron:
    if not 0 <= m <= MAX_STEP:
        raise ValueError(f"geodesic step must lie in [0, {MAX_STEP}]")
    return GeodesicPolyhedron(m, orthoplex_geodesic_vertices(3, m))


# The rotation group of the free tetrahedron: identity, half turns about the
# axes and third turns about the body diagonals.
_T_QUATS = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
    + [[0.5, sx * 0.5, sy * 0.5, sz * 0.5] for sx in (1, -1) for sy in (1, -1) for sz in (1, -1)],
    dtype=float,
)


def tetrahedral_group() -> np.ndarray:
    return _T_QUATS.copy()


def _rotation_x_to(v: np.ndarray) -> np.ndarray:
    """Minimal rotation quaternions taking x1 to each row of v."""
    x = np.array([1.0, 0.0, 0.0])
    q = np.zeros((len(v), 4))
    cosang = np.clip(v @ x, -1, 1)
    axis = np.cross(x, v)
    norm = np.linalg.norm(axis, axis=1)
    generic = norm > 1e-12
    q[generic] = axis_angle_quaternion(axis[generic], np.arccos(cosang[generic]))
    q[~generic & (cosang > 0)] = [1, 0, 0, 0]
    # antipode: half turn about y
    q[~generic & (cosang < 0)] = [0, 0, 1, 0]
    return q


def _ring_azimuths(vertices: np.ndarray) -> np.ndarray:
    ring = vertices[np.abs(vertices[:, 0]) < 1e-12]
    return np.sort(np.arctan2(ring[:, 2], ring[:, 1]))


def _canonical(q: np.ndarray) -> np.ndarray:
    return canonical_quaternion(q) + 0.0


def unique_rows(x: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Rows of x with near-duplicates (max-norm below tol) removed, sorted."""
    tree = cKDTree(x)
    pairs = tree.query_pairs(tol, p=np.inf, output_type="ndarray")
    keep = np.ones(len(x), dtype=bool)
    if len(pairs):
        keep[np.maximum(pairs[:, 0], pairs[:, 1])] = False
    out = x[keep]
    return out[np.lexsort(out.T[::-1])]


def _lexmin_rows(cand: np.ndarray) -> np.ndarray:
    """Lexicographically smallest row among axis 1 of cand, shape (N, K, 4)."""
    n, k, _ = cand.shape
    alive = np.ones((n, k), dtype=bool)
    for c in range(4):
        vals = np.where(alive, cand[:, :, c], np.inf)
        alive &= vals <= vals.min(axis=1, keepdims=True) + 1e-9
    first = np.argmax(alive, axis=1)
    return cand[np.arange(n), first]


def coset_representatives(quats: np.ndarray) -> np.ndarray:
    """Map each quaternion to the canonical member of its class T * q."""
    cand = quaternion_multiply(_T_QUATS[None, :, :], quats[:, None, :])
    return _lexmin_rows(_canonical(cand))


@lru_cache(maxsize=None)
def build_rotation_set(m: int, allow_large: bool = False) -> RotationSet:
    if m < 0 or (m > MAX_ROTATION_STEP and not allow_large):
        raise ValueError(f"rotation sets beyond m = {MAX_ROTATION_STEP} need allow_large")
    verts = build_geodesic(m).vertices
    to_v = _rotation_x_to(verts)
    spins = axis_angle_quaternion(np.tile([1.0, 0.0, 0.0], (len(_ring_azimuths(verts)), 1)),
                                  _ring_azimuths(verts))
    o = quaternion_multiply(to_v[:, None, :], spins[None, :, :]).reshape(-1, 4)
    o = unique_rows(_canonical(o))
    reps = unique_rows(coset_representatives(o))
    o.setflags(write=False)
    reps.setflags(write=False)
    return RotationSet(m, o, reps)


# bounds

def _states_bloch(states) -> np.ndarray:
    return np.array([bloch_from_state(s) if isinstance(s, QuantumState) else np.asarray(s, float)
                     for s in states])


def _scale(measure: str) -> float:
    if measure == "robustness":
        return ROBUSTNESS_SCALE
    if measure == "negativity":
        return NEGATIVITY_SCALE
    raise ValueError(f"unknown measure {measure!r}")


def mean_values_over(quats: np.ndarray, bloch: np.ndarray, measure: str = "robustness",
                     chunk: int = 4096) -> np.ndarray:
    """Mean quantifier of the Bloch set (n, 3) in every frame of quats (K, 4)."""
    out = np.empty(len(quats))
    for s in range(0, len(quats), chunk):
        rot = quaternion_to_rotation(quats[s:s + chunk])
        # (U r) . beta = r . (U^T beta)
        faces = np.einsum("kji,bj->kbi", rot, BETA)
        exc = np.einsum("nc,kbc->knb", bloch, faces).max(axis=2) - INV_SQRT3
        out[s:s + chunk] = np.maximum(exc, 0).mean(axis=1)
    return _scale(measure) * out


def hierarchy_bound(states, m: int, measure: str = "robustness") -> tuple:
    """min over U_m of the mean quantifier, with the first minimizer."""
    rs = build_rotation_set(m)
    vals = mean_values_over(rs.u_m, _states_bloch(states), measure)
    k = int(np.argmin(vals))
    return float(vals[k]), UnitarySU2(rs.u_m[k])


def hierarchy_curve(bloch_sets: np.ndarray, m: int, measure: str = "robustness") -> tuple:
    """Bounds for a stack of Bloch sets (T, n, 3); returns (values, quaternions)."""
    rs = build_rotation_set(m)
    rot = quaternion_to_rotation(rs.u_m)
    faces = np.einsum("kji,bj->kbi", rot, BETA)
    vals = np.empty(len(bloch_sets))
    best = np.empty((len(bloch_sets), 4))
    for t, bl in enumerate(bloch_sets):
        exc = np.einsum("nc,kbc->knb", bl, faces).max(axis=2) - INV_SQRT3
        mv = np.maximum(exc, 0).mean(axis=1)
        k = int(np.argmin(mv))
        vals[t] = mv[k]
        best[t] = rs.u_m[k]
    return _scale(measure) * vals, best


def convergence_report(curves, reference, theta=None, steps=None) -> dict:
    """L2 distances of hierarchy curves to a reference and an exponential fit.

    Distances use the trapezoid rule over theta (in units of pi when theta is
    given in radians). The fit is d_n = A exp(-k n) by least squares.
    """
    curves = [np.asarray(c, dtype=float) for c in curves]
    reference = np.asarray(reference, dtype=float)
    if len(curves) < 2:
        raise ValueError("need at least two hierarchy steps")
    if any(c.shape != reference.shape for c in curves):
        raise ValueError("curves and reference live on different grids")
    steps = np.arange(1, len(curves) + 1) if steps is None else np.asarray(steps, dtype=float)
    x = np.linspace(0, 1, len(reference)) if theta is None else np.asarray(theta) / np.pi
    dist = np.array([np.sqrt(np.trapezoid((c - reference) ** 2, x)) for c in curves])
    report = {"steps": steps.tolist(), "l2": dist.tolist(),
              "non_increasing": bool(np.all(np.diff(dist) <= 1e-15))}
    if np.all(dist > 0):
        slope, icpt = np.polyfit(steps, np.log(dist), 1)
        try:
            (amp, rate), _ = curve_fit(lambda n, a, k: a * np.exp(-k * n), steps, dist,
                                       p0=(np.exp(icpt), -slope), maxfev=10000)
        except RuntimeError:
            amp, rate = np.exp(icpt), -slope
        report.update(amplitude=float(amp), rate=float(rate), log_linear_rate=float(-slope))
    else:
        report.update(amplitude=0.0, rate=float("inf"), log_linear_rate=float("inf"))
    return report
