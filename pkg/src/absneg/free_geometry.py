"""Qubit free-set geometry.

The qubit free set in a frame rotated by U is the tetrahedron
{r : (U r) . beta_k <= 1/sqrt(3) for all k}. This module holds the beta
vectors, membership tests, cone families of states, the critical opening
angles of the regular quadruplet and orthoplex geodesic vertices.
"""

from __future__ import annotations

import itertools
import warnings
from math import comb
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, linprog
from scipy.spatial.transform import Rotation

from .quantum_core import (
    PAULIS,
    Effect,
    Povm,
    QuantumState,
    UnitarySU2,
    UnsupportedDimensionError,
    bloch_from_state,
    state_from_bloch,
)
from .wigner_frames import build_frame, qubit_coefficients, wigner_effect

FREE_TOL = 1e-9
INV_SQRT3 = 1 / np.sqrt(3)

# beta_1 .. beta_4; face k of the free tetrahedron has outward normal beta_k
BETA = np.array([
    [-1.0, -1.0, -1.0],
    [-1.0, 1.0, 1.0],
    [1.0, 1.0, -1.0],
    [1.0, -1.0, 1.0],
]) / np.sqrt(3)
BETA.setflags(write=False)


class SolverError(RuntimeError):
    pass


def _require_qubit(d: int):
    if d != 2:
        raise UnsupportedDimensionError("free-set geometry is implemented for qubits only")


def rotated_bloch(bloch, u: UnitarySU2 | None = None) -> np.ndarray:
    b = np.asarray(bloch, dtype=float)
    if u is None:
        return b
    return b @ u.rotation.T


def face_excess(bloch) -> np.ndarray:
    """(r . beta_k) - 1/sqrt(3) for Bloch vectors of shape (..., 3)."""
    return np.asarray(bloch) @ BETA.T - INV_SQRT3


def is_free_state(rho: QuantumState, u: UnitarySU2 | None = None) -> bool:
    _require_qubit(rho.dim)
    r = rotated_bloch(bloch_from_state(rho), u)
    return bool(face_excess(r).max() <= FREE_TOL)


def is_free_effect(e: Effect, u: UnitarySU2 | None = None) -> bool:
    _require_qubit(e.dim)
    return bool(wigner_effect(e, build_frame(2), u).min() >= -FREE_TOL)


def tetrahedral_povm() -> Povm:
    """Effects K_i = (I + beta_i . sigma / sqrt 3) / 4, free in every frame."""
    effects = [0.25 * (np.eye(2) + INV_SQRT3 * np.einsum("k,kij->ij", b, PAULIS)) for b in BETA]
    return Povm(tuple(Effect(e) for e in effects))


# state families on cones about z

CONE_KINDS = ("regular_quadruplet", "regular_triplet", "regular_pair", "irregular_triplet")


@dataclass(frozen=True)
class ConeFamily:
    kind: str
    theta: float
    r: float = 1.0
    phis: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in CONE_KINDS:
            raise ValueError(f"unknown cone family {self.kind!r}")
        if not 0 <= self.theta <= np.pi + 1e-12:
            raise ValueError("theta must lie in [0, pi]")
        if not 0 <= self.r <= 1:
            raise ValueError("radius must lie in [0, 1]")
        if self.kind == "irregular_triplet" and len(self.phis) != 2:
            raise ValueError("irregular triplet needs (phi2, phi3)")

    def azimuths(self) -> np.ndarray:
        if self.kind == "regular_quadruplet":
            return np.arange(4) * np.pi / 2
        if self.kind == "regular_triplet":
            return np.arange(3) * 2 * np.pi / 3
        if self.kind == "regular_pair":
            return np.array([0.0, np.pi])
        phi2, phi3 = self.phis
        return np.array([0.0, phi2, -phi3])


def cone_bloch_vectors(fam: ConeFamily) -> np.ndarray:
    """Bloch vectors of the family, shape (n, 3).

    The opening angle theta is the angle between opposite members, so each
    vector sits at polar angle theta/2.
    """
    phi = fam.azimuths()
    s, c = np.sin(fam.theta / 2), np.cos(fam.theta / 2)
    return fam.r * np.stack([s * np.cos(phi), s * np.sin(phi), np.full_like(phi, c)], axis=1)


def make_cone_states(fam: ConeFamily) -> list:
    return [state_from_bloch(v) for v in cone_bloch_vectors(fam)]


def quadruplet_bloch(theta, r: float = 1.0) -> np.ndarray:
    """Vectorized regular quadruplet: theta of shape (T,) gives (T, 4, 3)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.arange(4) * np.pi / 2
    s, c = np.sin(theta / 2)[:, None], np.cos(theta / 2)[:, None]
    return r * np.stack([s * np.cos(phi), s * np.sin(phi), c * np.ones(4)], axis=-1)


# critical opening angles of the regular quadruplet

@dataclass(frozen=True)
class CriticalAngles:
    theta1: float
    theta2: float
    theta3: float

    def as_pi(self) -> tuple:
        return (self.theta1 / np.pi, self.theta2 / np.pi, self.theta3 / np.pi)


# The free tetrahedron turned so one face normal is z and the square's
# mirror plane is x = 0. Two square vertices ride on the z face, the other
# two on the faces with normals _FACES[1] and _FACES[2].
_S23 = np.sqrt(2 / 3)
_FACES = np.array([
    [0.0, 0.0, 1.0],
    [_S23, np.sqrt(2) / 3, -1 / 3],
    [-_S23, np.sqrt(2) / 3, -1 / 3],
    [0.0, -np.sqrt(8) / 3, -1 / 3],
])
_MIRROR_X = np.array([-1.0, 1.0, 1.0])


def _square_vertices(a: float, b: float) -> np.ndarray:
    v1 = np.array([_S23 * np.cos(a), _S23 * np.sin(a), INV_SQRT3])
    v3 = np.array([
        np.sqrt(2) / 3 * (np.sin(b) + 1),
        np.sqrt(2) / 3 * (-2 * np.sin(b) / np.sqrt(3) + np.cos(b) + INV_SQRT3),
        (2 * np.sin(b) + 2 * np.sqrt(3) * np.cos(b) - 1) / (3 * np.sqrt(3)),
    ])
    return np.array([v1, v1 * _MIRROR_X, v3, v3 * _MIRROR_X])


def _branch_b(a: float, s1: int, s2: int, s3: int):
    arg = -3 * np.cos(a) ** 2 + s1 * 2 * np.sqrt(3) * np.cos(a)
    if not -1e-15 <= arg <= 1 + 1e-15:
        return None
    return s3 * np.arccos(s2 * np.sqrt(min(max(arg, 0.0), 1.0)))


def _feasible_direction(w: np.ndarray, theta: float, sign: int) -> float:
    """Margin of the best first-order move keeping all contacts inside.

    Positive when some infinitesimal rotation keeps the quadruplet free while
    the opening angle moves by ``sign``; negative when every rotation breaks
    a contact.
    """
    phi = np.arange(4) * np.pi / 2
    q = np.stack([np.sin(theta / 2) * np.cos(phi), np.sin(theta / 2) * np.sin(phi),
                  np.full(4, np.cos(theta / 2))], axis=1)
    dq = 0.5 * np.stack([np.cos(theta / 2) * np.cos(phi), np.cos(theta / 2) * np.sin(phi),
                         np.full(4, -np.sin(theta / 2))], axis=1)
    # the corners may run clockwise relative to the canonical azimuths
    best = None
    for order in ([0, 1, 2, 3], [0, 3, 2, 1]):
        with warnings.catch_warnings():
            # the mirrored order fits badly and scipy says so; rssd decides
            warnings.simplefilter("ignore", UserWarning)
            rot, rssd = Rotation.align_vectors(w[order], q)
        if best is None or rssd < best[1]:
            best = (rot, rssd, order)
    rot, rssd, order = best
    if rssd > 1e-6:
        raise SolverError("contact square does not match a regular quadruplet")
    w = w[order]
    dw = rot.apply(dq)
    rows, rhs = [], []
    for k in range(4):
        for n in _FACES:
            if w[k] @ n > INV_SQRT3 - 1e-7:
                rows.append(np.append(np.cross(w[k], n), 1.0))
                rhs.append(-sign * (n @ dw[k]))
    res = linprog(c=[0, 0, 0, -1], A_ub=np.array(rows), b_ub=np.array(rhs),
                  bounds=[(-1, 1)] * 3 + [(None, 1)], method="highs")
    if res.status != 0:
        return -np.inf
    return -res.fun


def _critical_candidates(grid: int = 4001) -> list:
    """All solutions of the two square conditions on every sign branch."""
    out = []
    a_grid = np.linspace(-np.pi, np.pi, grid)
    ca = np.cos(a_grid)
    for s1, s2, s3 in itertools.product((1, -1), repeat=3):
        def resid(a, s1=s1, s2=s2, s3=s3):
            v = _square_vertices(a, _branch_b(a, s1, s2, s3))
            return v[1] @ v[3] - v[0] @ v[1]

        # vectorized residual on the grid, nan where b(a) is complex
        arg = -3 * ca ** 2 + s1 * 2 * np.sqrt(3) * ca
        ok = (arg >= 0) & (arg <= 1)
        b = s3 * np.arccos(s2 * np.sqrt(np.clip(arg, 0, 1)))
        v1 = np.stack([_S23 * ca, _S23 * np.sin(a_grid), np.full(grid, INV_SQRT3)], axis=1)
        v3 = np.stack([
            np.sqrt(2) / 3 * (np.sin(b) + 1),
            np.sqrt(2) / 3 * (-2 * np.sin(b) / np.sqrt(3) + np.cos(b) + INV_SQRT3),
            (2 * np.sin(b) + 2 * np.sqrt(3) * np.cos(b) - 1) / (3 * np.sqrt(3)),
        ], axis=1)
        vals = np.einsum("ij,ij->i", v1 * _MIRROR_X, v3 * _MIRROR_X) - np.einsum("ij,ij->i", v1, v1 * _MIRROR_X)
        vals[~ok] = np.nan
        hits = np.nonzero(np.isfinite(vals[:-1]) & np.isfinite(vals[1:]) & (vals[:-1] * vals[1:] <= 0))[0]
        for i in hits:
            if vals[i] == 0:
                a = a_grid[i]
            else:
                a = brentq(resid, a_grid[i], a_grid[i + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps)
            out.append((a, _square_vertices(a, _branch_b(a, s1, s2, s3)), (s1, s2, s3)))
    return out


def solve_critical_angles() -> CriticalAngles:
    """Opening angles where the regular quadruplet enters or leaves the free set.

    theta2 = arccos(-1/3) is exact (the quadruplet then matches four faces of
    the tetrahedron pairwise). theta1 and theta3 come from squares whose four
    corners touch three faces: two corners on one face and one on each of two
    others. Candidate squares are found by root finding on a closed form
    b(a); a candidate is kept when it is a genuine square inside the free set
    and the opening angle cannot be pushed past it in one direction.
    """
    boundaries = []
    for a, v, branch in _critical_candidates():
        g = v @ v.T
        sides = np.array([g[0, 1], g[1, 3], g[3, 2], g[2, 0]])
        if abs(g[0, 1] - g[2, 3]) > 1e-9:
            continue  # branch does not satisfy the first condition
        if np.ptp(sides) > 1e-9 or abs(g[0, 3] - g[1, 2]) > 1e-9:
            continue  # trapezoid
        theta = float(np.arccos(np.clip(g[0, 3], -1, 1)))
        if theta < 1e-6 or theta > np.pi - 1e-6:
            continue  # collapsed or flat
        if (v @ _FACES.T).max() - INV_SQRT3 > FREE_TOL:
            continue
        w = v[[0, 1, 3, 2]]  # corners in cyclic order
        grow = _feasible_direction(w, theta, +1)
        shrink = _feasible_direction(w, theta, -1)
        if (grow > 1e-9) == (shrink > 1e-9):
            continue  # interior contact, not a window edge
        if not any(abs(theta - t) < 1e-9 for t in boundaries):
            boundaries.append(theta)
    boundaries.sort()
    theta2 = float(np.arccos(-1 / 3))
    lower = [t for t in boundaries if t < theta2]
    upper = [t for t in boundaries if t > theta2]
    if len(lower) != 1 or len(upper) != 1:
        raise SolverError(f"expected one window edge on each side of arccos(-1/3), got {boundaries}")
    return CriticalAngles(lower[0], theta2, upper[0])


# orthoplex geodesic vertices

def orthoplex_geodesic_vertices(D: int, m: int, max_vertices: int = 10 ** 7) -> np.ndarray:
    """Unit vectors of the m-th geodesic subdivision of the D-orthoplex.

    On every facet (one signed axis per coordinate) take the lattice points
    q with nonnegative integer entries summing to N = D 2^(m-1), project onto
    the sphere and remove duplicates. m = 0 gives the 2D orthoplex vertices.
    """
    if D < 3 or m < 0:
        raise ValueError("need D >= 3 and m >= 0")
    if m == 0:
        eye = np.eye(D)
        return np.concatenate([eye, -eye])
    n = D * 2 ** (m - 1)
    estimate = comb(n + D - 1, D - 1) * 2 ** D
    if estimate > max_vertices:
        raise ValueError(f"vertex count bound {estimate} exceeds {max_vertices}")
    pts = _compositions(n, D)
    pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    signs = np.array(list(itertools.product((1.0, -1.0), repeat=D)))
    allv = (pts[None, :, :] * signs[:, None, :]).reshape(-1, D)
    allv = np.round(allv, 10) + 0.0
    uniq = np.unique(allv, axis=0)
    return uniq / np.linalg.norm(uniq, axis=1, keepdims=True)


def _compositions(n: int, k: int) -> np.ndarray:
    """All nonnegative integer k-vectors summing to n."""
    if k == 1:
        return np.array([[n]], dtype=float)
    rows = []
    for first in range(n + 1):
        rest = _compositions(n - first, k - 1)
        rows.append(np.hstack([np.full((len(rest), 1), first), rest]))
    return np.vstack(rows).astype(float)
