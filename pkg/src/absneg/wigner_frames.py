"""Discrete Wigner frames for prime dimension and quasi-probability maps."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .quantum_core import (
    PAULIS,
    DimensionError,
    Effect,
    QuantumState,
    UnitarySU2,
    UnsupportedDimensionError,
    clock_shift,
)


def _is_prime(d: int) -> bool:
    return d >= 2 and all(d % k for k in range(2, int(d ** 0.5) + 1))


def _phase_point_operators(d: int) -> np.ndarray:
    """Phase-point operators A(q, p), shape (d*d, d, d), lexicographic in (q, p).

    A(q, p) = (1/d) sum_{j,m} w^{p j - q m + j m / 2} X^j Z^m. For odd d the
    half is the inverse of 2 mod d; for d = 2 the factor w^{jm/2} is read as
    i^{jm}.
    """
    x, z = clock_shift(d)
    xp = [np.linalg.matrix_power(x, j) for j in range(d)]
    zp = [np.linalg.matrix_power(z, m) for m in range(d)]
    ops = np.zeros((d * d, d, d), dtype=complex)
    for q in range(d):
        for p in range(d):
            acc = np.zeros((d, d), dtype=complex)
            for j in range(d):
                for m in range(d):
                    if d == 2:
                        half = j * m / 2
                    else:
                        half = j * m * (d + 1) // 2
                    phase = np.exp(2j * np.pi * (p * j - q * m + half) / d)
                    acc += phase * xp[j] @ zp[m]
            ops[q * d + p] = acc / d
    return ops


@dataclass(frozen=True)
class Frame:
    """Frame V(alpha) = A(alpha)/d with dual G(alpha) = d V(alpha).

    ``rotation`` records the unitary U that the operators were rotated by,
    V_U(alpha) = U^dagger V(alpha) U, so that tr(V_U rho) = tr(V U rho U^dagger).
    """

    dim: int
    points: tuple
    v_ops: np.ndarray
    g_ops: np.ndarray
    rotation: UnitarySU2 | None = None

    def rotated(self, u: UnitarySU2 | None) -> "Frame":
        if u is None:
            return self
        if self.rotation is not None:
            raise ValueError("frame is already rotated")
        if u.matrix.shape[0] != self.dim:
            raise DimensionError("unitary does not match frame dimension")
        return _rotated_frame(self.dim, u.key())


@lru_cache(maxsize=None)
def build_frame(d: int = 2) -> Frame:
    if not isinstance(d, (int, np.integer)) or not _is_prime(int(d)) or d > 7:
        raise UnsupportedDimensionError(f"dimension {d} is not a supported prime")
    d = int(d)
    a = _phase_point_operators(d)
    v = a / d
    v.setflags(write=False)
    g = d * v
    g.setflags(write=False)
    points = tuple((q, p) for q in range(d) for p in range(d))
    return Frame(d, points, v, g)


@lru_cache(maxsize=4096)
def _rotated_frame(d: int, key: tuple) -> Frame:
    base = build_frame(d)
    u = UnitarySU2(np.array(key))
    um = u.matrix
    v = np.einsum("ji,ajk,kl->ail", um.conj(), base.v_ops, um)
    v.setflags(write=False)
    g = d * v
    g.setflags(write=False)
    return Frame(d, base.points, v, g, u)


def _resolve(f: Frame, u: UnitarySU2 | None) -> Frame:
    if u is None:
        return f
    if f.rotation is not None:
        raise ValueError("pass either a rotated frame or a unitary, not both")
    return f.rotated(u)


def wigner_state(rho: QuantumState, f: Frame, u: UnitarySU2 | None = None) -> np.ndarray:
    """W_alpha = tr(V(alpha) U rho U^dagger), ordered as ``f.points``."""
    if rho.dim != f.dim:
        raise DimensionError("state and frame dimensions differ")
    ff = _resolve(f, u)
    return np.einsum("aij,ji->a", ff.v_ops, rho.matrix).real


def wigner_effect(e: Effect, f: Frame, u: UnitarySU2 | None = None) -> np.ndarray:
    """W(E|alpha) = tr(U E U^dagger G(alpha))."""
    if e.dim != f.dim:
        raise DimensionError("effect and frame dimensions differ")
    ff = _resolve(f, u)
    return np.einsum("aij,ji->a", ff.g_ops, e.matrix).real


def born_probability(rho: QuantumState, e: Effect, f: Frame, u: UnitarySU2 | None = None) -> float:
    return float(wigner_effect(e, f, u) @ wigner_state(rho, f, u))


def reconstruct(w: np.ndarray, f: Frame) -> np.ndarray:
    """Invert a state representation: A = sum_alpha W_alpha G(alpha)."""
    return np.einsum("a,aij->ij", np.asarray(w, dtype=float), f.g_ops)


@lru_cache(maxsize=None)
def qubit_coefficients() -> np.ndarray:
    """Rows c_alpha with W_alpha(rho) = (1 + c_alpha . r) / 4 for a qubit."""
    f = build_frame(2)
    c = 2 * np.einsum("aij,kji->ak", f.v_ops, PAULIS).real
    c = np.round(c, 12)
    c.setflags(write=False)
    return c


def qubit_wigner(bloch) -> np.ndarray:
    """Vectorized qubit Wigner values for Bloch vectors of shape (..., 3)."""
    return 0.25 * (1 + np.asarray(bloch) @ qubit_coefficients().T)
