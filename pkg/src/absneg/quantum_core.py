"""Small dense quantum objects: states, effects, POVMs and SU(2) elements.

Everything here is a frozen value object wrapping a numpy array. Validation
happens once at construction so downstream code can assume well-formed input.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

HERM_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
POVM_TOL = 1e-10
BLOCH_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = np.stack([SX, SY, SZ])


class QuantumError(ValueError):
    """Base class for invalid quantum input."""


class InvalidBlochError(QuantumError):
    pass


class DimensionError(QuantumError):
    pass


class DegenerateRotationError(QuantumError):
    pass


class UnsupportedDimensionError(QuantumError):
    pass


def _as_square(a) -> np.ndarray:
    m = np.array(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise QuantumError("matrix has non-finite entries")
    m.setflags(write=False)
    return m


def _check_hermitian(m: np.ndarray, what: str):
    if np.max(np.abs(m - m.conj().T)) > HERM_TOL:
        raise QuantumError(f"{what} is not Hermitian")


@dataclass(frozen=True)
class QuantumState:
    matrix: np.ndarray

    def __post_init__(self):
        m = _as_square(self.matrix)
        _check_hermitian(m, "state")
        if abs(np.trace(m).real - 1.0) > TRACE_TOL or abs(np.trace(m).imag) > TRACE_TOL:
            raise QuantumError("state does not have unit trace")
        if np.linalg.eigvalsh(m).min() < -PSD_TOL:
            raise QuantumError("state is not positive semidefinite")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def bloch(self) -> np.ndarray:
        return bloch_from_state(self)


@dataclass(frozen=True)
class Effect:
    matrix: np.ndarray

    def __post_init__(self):
        m = _as_square(self.matrix)
        _check_hermitian(m, "effect")
        ev = np.linalg.eigvalsh(m)
        if ev.min() < -PSD_TOL or ev.max() > 1 + PSD_TOL:
            raise QuantumError("effect eigenvalues outside [0, 1]")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class Povm:
    effects: tuple

    def __post_init__(self):
        effects = tuple(e if isinstance(e, Effect) else Effect(e) for e in self.effects)
        if not effects:
            raise QuantumError("POVM needs at least one effect")
        d = effects[0].dim
        if any(e.dim != d for e in effects):
            raise DimensionError("POVM effects have mixed dimensions")
        total = sum(e.matrix for e in effects)
        if np.max(np.abs(total - np.eye(d))) > POVM_TOL:
            raise QuantumError("POVM effects do not sum to identity")
        object.__setattr__(self, "effects", effects)

    @property
    def dim(self) -> int:
        return self.effects[0].dim

    def __len__(self):
        return len(self.effects)


@dataclass(frozen=True)
class UnitarySU2:
    """Unit quaternion (w, x, y, z) standing for w I - i (x sx + y sy + z sz)."""

    quaternion: np.ndarray
    matrix: np.ndarray = field(init=False, repr=False, compare=False)
    _rot: np.ndarray = field(init=False, repr=False, compare=False)
    _key: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        q = np.asarray(self.quaternion, dtype=float).reshape(4)
        n = np.linalg.norm(q)
        if not np.isfinite(n) or n < 1e-15:
            raise DegenerateRotationError("zero quaternion has no rotation")
        q = q / n
        q.setflags(write=False)
        w, x, y, z = q
        u = w * I2 - 1j * (x * SX + y * SY + z * SZ)
        u.setflags(write=False)
        object.__setattr__(self, "quaternion", q)
        object.__setattr__(self, "matrix", u)
        rot = quaternion_to_rotation(q)
        rot.setflags(write=False)
        object.__setattr__(self, "_rot", rot)
        object.__setattr__(self, "_key", tuple(np.round(canonical_quaternion(q), 12) + 0.0))

    @classmethod
    def identity(cls) -> "UnitarySU2":
        return cls(np.array([1.0, 0.0, 0.0, 0.0]))

    @property
    def rotation(self) -> np.ndarray:
        """3x3 rotation matrix of the adjoint action on Bloch vectors."""
        return self._rot

    def canonical(self) -> "UnitarySU2":
        return UnitarySU2(canonical_quaternion(self.quaternion))

    def key(self, decimals: int = 12) -> tuple:
        if decimals == 12:
            return self._key
        return tuple(np.round(canonical_quaternion(self.quaternion), decimals) + 0.0)


@dataclass(frozen=True)
class MultiObject:
    pairs: tuple

    def __post_init__(self):
        pairs = tuple((s, m) for s, m in self.pairs)
        if not pairs:
            raise QuantumError("multi-object needs at least one pair")
        d = pairs[0][0].dim
        for s, m in pairs:
            if s.dim != d or m.dim != d:
                raise DimensionError("multi-object mixes dimensions")
        object.__setattr__(self, "pairs", pairs)

    @property
    def n(self) -> int:
        return len(self.pairs)

    @property
    def dim(self) -> int:
        return self.pairs[0][0].dim

    @property
    def states(self) -> list:
        return [s for s, _ in self.pairs]

    @property
    def povms(self) -> list:
        return [m for _, m in self.pairs]


# quaternion helpers, vectorized over leading axes

def canonical_quaternion(q) -> np.ndarray:
    """Pick the sign of q with w > 0, or the first nonzero component positive."""
    q = np.array(q, dtype=float)
    flat = q.reshape(-1, 4)
    lead = np.zeros(len(flat))
    for i in range(4):
        unset = lead == 0
        lead[unset] = np.where(np.abs(flat[unset, i]) > 1e-12, np.sign(flat[unset, i]), 0)
    lead[lead == 0] = 1
    return (flat * lead[:, None]).reshape(q.shape)


def quaternion_multiply(a, b) -> np.ndarray:
    """Hamilton product; composition a*b applies b first."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    aw, ax, ay, az = np.moveaxis(a, -1, 0)
    bw, bx, by, bz = np.moveaxis(b, -1, 0)
    return np.stack([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ], axis=-1)


def quaternion_to_rotation(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return Rotation.from_quat(q[..., [1, 2, 3, 0]]).as_matrix()


def axis_angle_quaternion(axis, angle) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    angle = np.asarray(angle, dtype=float)
    axis = axis / np.linalg.norm(axis, axis=-1, keepdims=True)
    half = angle[..., None] / 2
    return np.concatenate([np.cos(half), np.sin(half) * axis], axis=-1)


# operations

def state_from_bloch(v) -> QuantumState:
    v = np.asarray(v, dtype=float).reshape(3)
    if np.linalg.norm(v) > 1 + BLOCH_TOL:
        raise InvalidBlochError(f"Bloch vector norm {np.linalg.norm(v):.6g} exceeds 1")
    return QuantumState(0.5 * (I2 + np.einsum("i,ijk->jk", v, PAULIS)))


def bloch_from_state(rho: QuantumState) -> np.ndarray:
    if rho.dim != 2:
        raise DimensionError("Bloch vectors are defined for qubits only")
    return np.einsum("ij,kji->k", rho.matrix, PAULIS).real


def su2_from_quaternion(q) -> UnitarySU2:
    return UnitarySU2(np.asarray(q, dtype=float))


def conjugate(a, u: UnitarySU2, inverse: bool = False) -> np.ndarray:
    """U A U^dagger, or U^dagger A U when ``inverse`` is set."""
    a = np.asarray(a, dtype=complex)
    um = u.matrix
    if a.shape != um.shape:
        raise DimensionError(f"cannot conjugate {a.shape} by {um.shape}")
    if inverse:
        return um.conj().T @ a @ um
    return um @ a @ um.conj().T


def rotate_state(rho: QuantumState, u: UnitarySU2) -> QuantumState:
    return QuantumState(conjugate(rho.matrix, u))


def rotate_effect(e: Effect, u: UnitarySU2) -> Effect:
    return Effect(conjugate(e.matrix, u))


def rotate_povm(m: Povm, u: UnitarySU2) -> Povm:
    return Povm(tuple(rotate_effect(e, u) for e in m.effects))


def clock_shift(d: int):
    """Generalized Pauli shift X|j> = |j+1> and clock Z|j> = w^j |j>."""
    x = np.roll(np.eye(d, dtype=complex), 1, axis=0)
    z = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    return x, z


# random objects for tests and sweeps

def random_quaternion(rng, size=None) -> np.ndarray:
    shape = (4,) if size is None else (size, 4)
    q = rng.normal(size=shape)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def random_su2(rng) -> UnitarySU2:
    return UnitarySU2(random_quaternion(rng))


def random_unitary(rng, d: int) -> np.ndarray:
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state(rng, d: int = 2, pure: bool = False) -> QuantumState:
    if pure:
        psi = rng.normal(size=d) + 1j * rng.normal(size=d)
        psi /= np.linalg.norm(psi)
        return QuantumState(np.outer(psi, psi.conj()))
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return QuantumState(rho / np.trace(rho).real)


def random_povm(rng, d: int = 2, outcomes: int = 3) -> Povm:
    """Random POVM from A_a A_a^dagger normalized by S^(-1/2)."""
    mats = []
    for _ in range(outcomes):
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        mats.append(g @ g.conj().T)
    s = sum(mats)
    w, v = np.linalg.eigh(s)
    s_inv_half = v @ np.diag(w ** -0.5) @ v.conj().T
    effects = [s_inv_half @ m @ s_inv_half for m in mats]
    effects = [0.5 * (e + e.conj().T) for e in effects]
    # absorb rounding so the sum is exactly the identity
    effects[-1] = np.eye(d) - sum(effects[:-1])
    return Povm(tuple(Effect(e) for e in effects))


def random_effect(rng, d: int = 2) -> Effect:
    return random_povm(rng, d, 2).effects[0]
