"""Geometry of the honeycomb period lattice, its dual, and the rotation action on Fourier indices.

Conventions follow the triangular lattice spanned by

    v1 = a (sqrt3/2,  1/2),   v2 = a (sqrt3/2, -1/2)
    k1 = q (1/2,  sqrt3/2),   k2 = q (1/2, -sqrt3/2),   q = 4 pi / (a sqrt3)

with K = (k1 - k2)/3, K' = -K and R the clockwise rotation by 2 pi/3.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, NamedTuple, Tuple

import numpy as np

from .errors import DomainError

logger = logging.getLogger(__name__)

SQRT3 = np.sqrt(3.0)
TAU = complex(-0.5, SQRT3 / 2.0)

K_SHIFT = (0, 1)
KPRIME_SHIFT = (0, -1)


class FourierIndex(NamedTuple):
    m1: int
    m2: int

    def __neg__(self):
        return FourierIndex(-self.m1, -self.m2)

    def __sub__(self, other):
        return FourierIndex(self.m1 - other[0], self.m2 - other[1])

    def __add__(self, other):
        return FourierIndex(self.m1 + other[0], self.m2 + other[1])


class SymmetrySector(Enum):
    """Eigenvalue of the rotation operator on L^2 at a vertex."""

    ONE = "1"
    TAU = "tau"
    TAUBAR = "taubar"

    @property
    def sigma(self) -> complex:
        return {"1": 1.0 + 0j, "tau": TAU, "taubar": TAU.conjugate()}[self.value]

    @property
    def conjugate(self) -> "SymmetrySector":
        return {
            SymmetrySector.ONE: SymmetrySector.ONE,
            SymmetrySector.TAU: SymmetrySector.TAUBAR,
            SymmetrySector.TAUBAR: SymmetrySector.TAU,
        }[self]

    @classmethod
    def parse(cls, value) -> "SymmetrySector":
        if isinstance(value, cls):
            return value
        aliases = {"1": "1", "one": "1", "tau": "tau", "taubar": "taubar", "tau_bar": "taubar"}
        key = aliases.get(str(value).strip().lower())
        if key is None:
            raise DomainError(f"unknown symmetry sector {value!r}")
        return cls(key)


@dataclass(frozen=True, eq=False)
class LatticeGeometry:
    a: float
    v1: np.ndarray
    v2: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    q: float
    K: np.ndarray
    Kprime: np.ndarray
    R: np.ndarray
    cell_area: float

    def kvec(self, K_star, m) -> np.ndarray:
        return kvec_of_index(self, K_star, m)

    def vertex(self, name: str) -> np.ndarray:
        """``K`` or ``K'`` (also accepts ``Kprime``)."""
        key = name.replace("prime", "'").strip()
        if key == "K":
            return self.K.copy()
        if key == "K'":
            return self.Kprime.copy()
        raise DomainError(f"unknown vertex {name!r}")

    def vertices(self) -> Tuple[np.ndarray, ...]:
        R2 = self.R @ self.R
        return (self.K, self.R @ self.K, R2 @ self.K,
                self.Kprime, self.R @ self.Kprime, R2 @ self.Kprime)

    def reduced(self, k) -> np.ndarray:
        """Coordinates of ``k`` in the dual basis."""
        k = np.asarray(k, dtype=float)
        return np.array([k @ self.v1, k @ self.v2]) / (2.0 * np.pi)


def build_geometry(a: float = 1.0) -> LatticeGeometry:
    if not np.isfinite(a) or a <= 0:
        raise DomainError(f"lattice constant must be positive, got {a!r}")

    a = float(a)
    q = 4.0 * np.pi / (a * SQRT3)
    v1 = a * np.array([SQRT3 / 2.0, 0.5])
    v2 = a * np.array([SQRT3 / 2.0, -0.5])
    k1 = q * np.array([0.5, SQRT3 / 2.0])
    k2 = q * np.array([0.5, -SQRT3 / 2.0])
    K = np.array([0.0, q / SQRT3])
    R = np.array([[-0.5, SQRT3 / 2.0],
                  [-SQRT3 / 2.0, -0.5]])

    for arr in (v1, v2, k1, k2, K, R):
        arr.setflags(write=False)
    Kprime = -K
    Kprime.setflags(write=False)

    return LatticeGeometry(
        a=a, v1=v1, v2=v2, k1=k1, k2=k2, q=q, K=K, Kprime=Kprime, R=R,
        cell_area=a * a * SQRT3 / 2.0,
    )


def vertex_shift(geom: LatticeGeometry, K_star) -> FourierIndex:
    """Integer d with R K_star = K_star + d1 k1 + d2 k2; fails if K_star is not a vertex."""
    K_star = np.asarray(K_star, dtype=float)
    raw = geom.reduced(geom.R @ K_star - K_star)
    d = np.rint(raw)
    if np.max(np.abs(raw - d)) > 1e-8 or not np.allclose(
            np.linalg.norm(K_star), np.linalg.norm(geom.K), rtol=1e-10):
        raise DomainError("quasi-momentum is not a Brillouin-zone vertex",
                          {"K_star": K_star.tolist(), "reduced_shift": raw.tolist()})
    return FourierIndex(int(d[0]), int(d[1]))


def index_R_action(m, shift=K_SHIFT) -> FourierIndex:
    """Index map induced by R at a vertex; (m1, m2) -> (-m2, m1 - m2 + 1) at K."""
    return FourierIndex(-m[1] + shift[0], m[0] - m[1] + shift[1])


def index_R2_action(m, shift=K_SHIFT) -> FourierIndex:
    return index_R_action(index_R_action(m, shift), shift)


def index_tR_action(m) -> FourierIndex:
    """Linear index map acting on potential coefficients: (m1, m2) -> (-m2, m1 - m2)."""
    return FourierIndex(-m[1], m[0] - m[1])


def kvec_of_index(geom: LatticeGeometry, K_star, m) -> np.ndarray:
    m = np.asarray(m)
    return np.asarray(K_star, dtype=float) + m[..., 0, None] * geom.k1 + m[..., 1, None] * geom.k2


@dataclass(frozen=True, eq=False)
class CycleTable:
    """Orbit representatives of the rotation action on a truncated index box."""

    M: int
    shift: FourierIndex
    representatives: Tuple[FourierIndex, ...]
    cycle_map: Dict[FourierIndex, Tuple[FourierIndex, FourierIndex]] = field(repr=False)

    def __len__(self):
        return len(self.representatives)

    def orbit(self, m) -> Tuple[FourierIndex, FourierIndex, FourierIndex]:
        m = FourierIndex(*m)
        r1, r2 = self.cycle_map[m]
        return m, r1, r2

    def rep_array(self) -> np.ndarray:
        return np.array(self.representatives, dtype=int).reshape(-1, 2)

    def branch_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Representatives and their first and second rotation images as (n, 2) arrays."""
        orbits = [self.orbit(m) for m in self.representatives]
        arr = np.array(orbits, dtype=int).reshape(-1, 3, 2)
        return arr[:, 0], arr[:, 1], arr[:, 2]

    def rep_of(self, m) -> FourierIndex:
        return min(self.orbit(m))


def _orbit(m, shift) -> Tuple[FourierIndex, FourierIndex, FourierIndex]:
    m = FourierIndex(*m)
    r1 = index_R_action(m, shift)
    return m, r1, index_R_action(r1, shift)


def cycle_representatives(M: int, shift=K_SHIFT) -> CycleTable:
    """Lexicographically smallest member of every orbit meeting the box |m1|, |m2| <= M."""
    if int(M) != M or M < 1:
        raise DomainError(f"truncation must be a positive integer, got {M!r}")
    shift = FourierIndex(*shift)

    cycle_map = {}
    reps = set()
    for m1 in range(-M, M + 1):
        for m2 in range(-M, M + 1):
            m = FourierIndex(m1, m2)
            if m in cycle_map:
                continue
            orbit = _orbit(m, shift)
            if len(set(orbit)) != 3:
                raise DomainError("rotation orbit of length < 3", {"index": tuple(m)})
            for i, member in enumerate(orbit):
                cycle_map[member] = (orbit[(i + 1) % 3], orbit[(i + 2) % 3])
            reps.add(min(orbit))

    representatives = tuple(sorted(reps))
    logger.debug("cycle table M=%d shift=%s: %d orbits", M, tuple(shift), len(representatives))
    return CycleTable(M=int(M), shift=shift, representatives=representatives, cycle_map=cycle_map)


def box_indices(M: int) -> np.ndarray:
    """All (m1, m2) with |m1|, |m2| <= M in lexicographic order, shape ((2M+1)^2, 2)."""
    if int(M) != M or M < 1:
        raise DomainError(f"truncation must be a positive integer, got {M!r}")
    ms = np.arange(-M, M + 1)
    m1, m2 = np.meshgrid(ms, ms, indexing="ij")
    return np.stack([m1.ravel(), m2.ravel()], axis=-1)


def iter_orbit_indices(table: CycleTable) -> Iterable[FourierIndex]:
    for m in table.representatives:
        yield from table.orbit(m)
