"""Real lattice-periodic potentials stored as finite Fourier coefficient maps.

A potential is V(x) = sum_m V_m exp(i m k . x) with m k = m1 k1 + m2 k2. Nothing is
kept in real space; ``evaluate`` and ``sample_grid`` derive values on demand.

Potential files are JSON::

    {"kind": "optical", "a": 1.0, "entries": [[m1, m2, re, im], ...]}
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from .errors import DomainError, SymmetryError
from .lattice import FourierIndex, box_indices, build_geometry, index_tR_action
from .output import write_json

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class HoneycombCheckReport:
    max_reality_defect: float
    max_evenness_defect: float
    max_Rinvariance_defect: float
    tolerance: float

    @property
    def is_real_valued(self) -> bool:
        return self.max_reality_defect <= self.tolerance

    @property
    def is_even(self) -> bool:
        return self.max_evenness_defect <= self.tolerance

    @property
    def is_R_invariant(self) -> bool:
        return self.max_Rinvariance_defect <= self.tolerance

    @property
    def verdict(self) -> bool:
        return self.is_real_valued and self.is_even and self.is_R_invariant

    def to_dict(self):
        return {
            "max_reality_defect": self.max_reality_defect,
            "max_evenness_defect": self.max_evenness_defect,
            "max_Rinvariance_defect": self.max_Rinvariance_defect,
            "tolerance": self.tolerance,
            "is_real_valued": self.is_real_valued,
            "is_even": self.is_even,
            "is_R_invariant": self.is_R_invariant,
            "verdict": self.verdict,
        }


@dataclass(frozen=True, eq=False)
class PotentialSpectrum:
    coeffs: Dict[FourierIndex, complex]
    a: float = 1.0
    kind: str = "fourier"
    _dense: np.ndarray = field(init=False, repr=False)
    _span: int = field(init=False, repr=False)

    def __post_init__(self):
        span = max((max(abs(m[0]), abs(m[1])) for m in self.coeffs), default=0)
        dense = np.zeros((2 * span + 1, 2 * span + 1), dtype=complex)
        for m, value in self.coeffs.items():
            dense[m[0] + span, m[1] + span] = value
        dense.setflags(write=False)
        object.__setattr__(self, "_span", span)
        object.__setattr__(self, "_dense", dense)

    # -- read-out ---------------------------------------------------------

    def coefficient(self, m) -> complex:
        return complex(self.coeffs.get(FourierIndex(*m), 0.0))

    def lookup(self, m1, m2) -> np.ndarray:
        """Vectorised coefficient read-out; indices outside the stored support give 0."""
        m1 = np.asarray(m1, dtype=int)
        m2 = np.asarray(m2, dtype=int)
        S = self._span
        inside = (np.abs(m1) <= S) & (np.abs(m2) <= S)
        out = np.zeros(np.broadcast(m1, m2).shape, dtype=complex)
        i1 = np.where(inside, m1 + S, 0)
        i2 = np.where(inside, m2 + S, 0)
        out[...] = np.where(inside, self._dense[i1, i2], 0.0)
        return out

    def entries(self) -> List[Tuple[FourierIndex, complex]]:
        return sorted(self.coeffs.items())

    @property
    def span(self) -> int:
        return self._span

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self._dense), initial=0.0))

    @property
    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self._dense)))

    @property
    def is_zero(self) -> bool:
        return self.sup_norm == 0.0

    # -- symmetry ---------------------------------------------------------

    def check(self, tol: float = SYMMETRY_TOL) -> HoneycombCheckReport:
        """Symmetry defects over the stored support, tolerance relative to the sup norm."""
        scale = self.sup_norm
        if not self.coeffs:
            return HoneycombCheckReport(0.0, 0.0, 0.0, 0.0)

        ms = np.array(list(self.coeffs), dtype=int)
        v = self.lookup(ms[:, 0], ms[:, 1])
        v_neg = self.lookup(-ms[:, 0], -ms[:, 1])
        r1 = np.array([index_tR_action(m) for m in ms], dtype=int)
        r2 = np.array([index_tR_action(m) for m in r1], dtype=int)
        v_r1 = self.lookup(r1[:, 0], r1[:, 1])
        v_r2 = self.lookup(r2[:, 0], r2[:, 1])

        return HoneycombCheckReport(
            max_reality_defect=float(np.max(np.abs(v_neg - np.conj(v)))),
            max_evenness_defect=float(np.max(np.abs(v_neg - v))),
            max_Rinvariance_defect=float(max(np.max(np.abs(v - v_r1)), np.max(np.abs(v - v_r2)))),
            tolerance=tol * scale,
        )

    @property
    def is_real_valued(self) -> bool:
        return self.check().is_real_valued

    @property
    def is_even(self) -> bool:
        return self.check().is_even

    @property
    def is_R_invariant(self) -> bool:
        return self.check().is_R_invariant

    @property
    def is_honeycomb(self) -> bool:
        return self.check().verdict

    def require_honeycomb(self, tol: float = SYMMETRY_TOL) -> HoneycombCheckReport:
        report = self.check(tol)
        if not report.verdict:
            raise SymmetryError(f"potential '{self.kind}' is not a honeycomb potential",
                                report.to_dict())
        return report

    # -- algebra ----------------------------------------------------------

    def _derive(self, coeffs, kind) -> "PotentialSpectrum":
        return PotentialSpectrum(coeffs=coeffs, a=self.a, kind=kind)

    def scale(self, c) -> "PotentialSpectrum":
        return self._derive({m: c * v for m, v in self.coeffs.items()}, self.kind)

    def __add__(self, other: "PotentialSpectrum") -> "PotentialSpectrum":
        if not np.isclose(self.a, other.a, rtol=1e-14):
            raise DomainError("cannot add potentials on different lattices",
                              {"a_left": self.a, "a_right": other.a})
        coeffs = dict(self.coeffs)
        for m, v in other.coeffs.items():
            coeffs[m] = coeffs.get(m, 0.0) + v
        return self._derive(coeffs, f"{self.kind}+{other.kind}")

    def shifted(self, c: float) -> "PotentialSpectrum":
        """V + c, i.e. the (0, 0) coefficient moved by c."""
        coeffs = dict(self.coeffs)
        origin = FourierIndex(0, 0)
        coeffs[origin] = coeffs.get(origin, 0.0) + c
        return self._derive(coeffs, self.kind)

    def reflected(self) -> "PotentialSpectrum":
        """x -> V(-x)."""
        return self._derive({-m: v for m, v in self.coeffs.items()}, self.kind)

    def even_part(self) -> "PotentialSpectrum":
        keys = set(self.coeffs) | {-m for m in self.coeffs}
        return self._derive({m: 0.5 * (self.coefficient(m) + self.coefficient(-m)) for m in keys},
                            f"even({self.kind})")

    def odd_part(self) -> "PotentialSpectrum":
        keys = set(self.coeffs) | {-m for m in self.coeffs}
        return self._derive({m: 0.5 * (self.coefficient(m) - self.coefficient(-m)) for m in keys},
                            f"odd({self.kind})")

    def to_dict(self):
        return {
            "kind": self.kind,
            "a": self.a,
            "entries": [[int(m[0]), int(m[1]), float(v.real), float(v.imag)]
                        for m, v in self.entries()],
        }


# -- constructors ---------------------------------------------------------

def from_fourier(entries: Iterable, a: float = 1.0, kind: str = "fourier") -> PotentialSpectrum:
    """Build a potential from (index, amplitude) pairs; duplicate indices are summed."""
    coeffs: Dict[FourierIndex, complex] = {}
    for m, value in entries:
        m = FourierIndex(int(m[0]), int(m[1]))
        coeffs[m] = coeffs.get(m, 0.0) + complex(value)
    return PotentialSpectrum(coeffs=coeffs, a=float(a), kind=kind)


def optical_lattice(V0: float, a: float = 1.0) -> PotentialSpectrum:
    """V0 (cos k1.x + cos k2.x + cos (k1+k2).x)."""
    half = 0.5 * V0
    support = [(1, 0), (0, 1), (1, 1)]
    entries = [(m, half) for m in support] + [((-m[0], -m[1]), half) for m in support]
    return from_fourier(entries, a=a, kind="optical")


def _gaussian_prefactor(geom, V0, s, M):
    if not np.isfinite(s) or s <= 0:
        raise DomainError(f"Gaussian width must be positive, got {s!r}")
    ms = box_indices(M)
    mk = ms[:, :1] * geom.k1 + ms[:, 1:] * geom.k2
    envelope = V0 * 2.0 * np.pi * s * s / geom.cell_area * np.exp(-0.5 * s * s * np.sum(mk * mk, axis=1))

    # smallest |mk| just outside the truncation box
    edge = geom.q * (M + 1) * np.sqrt(3.0) / 2.0
    tail = np.exp(-0.5 * (edge * s) ** 2)
    if tail > 1e-12:
        logger.warning("Gaussian width s=%g leaves a relative tail %.1e beyond truncation M=%d",
                       s, tail, M)
    return ms, envelope


def atomic_lattice(V0: float, s: float, M: int, a: float = 1.0) -> PotentialSpectrum:
    """Gaussian "atoms" on both honeycomb sublattices, centred on a hexagon.

    Atoms sit at A = 0 and B = a (1/sqrt3, 0); the potential is translated by B so the
    origin is a hexagon centre, giving atoms at +-B. With k_i . B = 2 pi / 3 the two-atom
    phase collapses to 2 when m1 + m2 = 0 mod 3 and to -1 otherwise, so all
    coefficients are real.
    """
    geom = build_geometry(a)
    ms, envelope = _gaussian_prefactor(geom, V0, s, M)
    phase = np.where((ms[:, 0] + ms[:, 1]) % 3 == 0, 2.0, -1.0)
    values = envelope * phase
    return from_fourier(zip(map(tuple, ms), values), a=a, kind="atomic")


def triangular_lattice(V0: float, s: float, M: int, a: float = 1.0) -> PotentialSpectrum:
    """One Gaussian per cell at the origin; also carries the honeycomb symmetries."""
    geom = build_geometry(a)
    ms, envelope = _gaussian_prefactor(geom, V0, s, M)
    return from_fourier(zip(map(tuple, ms), envelope), a=a, kind="triangular")


def cosine_mode(m, amplitude: float = 1.0, a: float = 1.0) -> PotentialSpectrum:
    """amplitude * cos(mk . x)."""
    m = FourierIndex(*m)
    if m == (0, 0):
        return from_fourier([(m, amplitude)], a=a, kind="cos")
    return from_fourier([(m, 0.5 * amplitude), (-m, 0.5 * amplitude)], a=a, kind="cos")


def sine_mode(m, amplitude: float = 1.0, a: float = 1.0) -> PotentialSpectrum:
    """amplitude * sin(mk . x)."""
    m = FourierIndex(*m)
    if m == (0, 0):
        return from_fourier([], a=a, kind="sin")
    return from_fourier([(m, -0.5j * amplitude), (-m, 0.5j * amplitude)], a=a, kind="sin")


# -- read-outs --------------------------------------------------------------

def coefficient_V11(V: PotentialSpectrum, tol: float = SYMMETRY_TOL) -> float:
    value = V.coefficient((1, 1))
    if abs(value.imag) > tol * max(V.sup_norm, 1.0):
        raise SymmetryError("V_{1,1} is not real", {"V11": [value.real, value.imag]})
    if value.real == 0.0:
        logger.warning("V_{1,1} vanishes; the Dirac point genericity condition fails")
    return float(value.real)


def evaluate(V: PotentialSpectrum, x, return_complex: bool = False):
    """Partial Fourier sum at one point (shape (2,)) or a batch (shape (..., 2))."""
    geom = build_geometry(V.a)
    x = np.asarray(x, dtype=float)
    if not V.coeffs:
        zero = np.zeros(x.shape[:-1], dtype=complex if return_complex else float)
        return zero if zero.ndim else zero.item()

    ms, values = zip(*V.entries())
    ms = np.array(ms, dtype=int)
    values = np.array(values, dtype=complex)
    mk = ms[:, :1] * geom.k1 + ms[:, 1:] * geom.k2
    total = np.exp(1j * (x @ mk.T)) @ values

    if return_complex:
        return total if np.ndim(total) else complex(total)

    residue = float(np.max(np.abs(total.imag), initial=0.0))
    if residue > 1e-10 * max(V.l1_norm, 1.0) and V.check().is_real_valued:
        logger.warning("imaginary residue %.2e in a real potential", residue)
    real = total.real
    return real if np.ndim(real) else float(real)


def sample_grid(V: PotentialSpectrum, n: int = 64):
    """Values on the n x n grid y = (i/n) v1 + (j/n) v2 covering one fundamental cell."""
    if n < 8:
        raise DomainError(f"grid resolution must be at least 8, got {n!r}")
    geom = build_geometry(V.a)
    t = np.arange(n) / n
    t1, t2 = np.meshgrid(t, t, indexing="ij")
    points = t1[..., None] * geom.v1 + t2[..., None] * geom.v2
    return points, evaluate(V, points)


def extrema(V: PotentialSpectrum, n: int = 64) -> Tuple[float, float]:
    _, values = sample_grid(V, n)
    return float(np.min(values)), float(np.max(values))


# -- files ------------------------------------------------------------------

def load_potential(path) -> PotentialSpectrum:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise DomainError(f"cannot read potential file {path}: {e}") from e
    try:
        entries = [((row[0], row[1]), complex(row[2], row[3])) for row in data["entries"]]
    except (KeyError, IndexError, TypeError) as e:
        raise DomainError(f"malformed potential file {path}: {e}") from e
    return from_fourier(entries, a=data.get("a", 1.0), kind=data.get("kind", "file"))


def save_potential(V: PotentialSpectrum, path) -> None:
    write_json(path, V.to_dict())


def potential_from_section(section, a: float = 1.0, default_M: Optional[int] = None) -> PotentialSpectrum:
    """Build a potential from a config ``potential`` section (mapping or pydantic model)."""
    get = section.get if isinstance(section, dict) else lambda k, d=None: getattr(section, k, d)
    kind = get("kind", "optical")
    if kind == "optical":
        return optical_lattice(get("V0", 1.0), a=a)
    if kind == "atomic":
        return atomic_lattice(get("V0", 1.0), get("s", 0.3), get("M", None) or default_M or 8, a=a)
    if kind == "triangular":
        return triangular_lattice(get("V0", 1.0), get("s", 0.3), get("M", None) or default_M or 8, a=a)
    if kind == "cos":
        return cosine_mode(tuple(get("m", (1, 0))), get("amplitude", 1.0), a=a)
    if kind == "sin":
        return sine_mode(tuple(get("m", (1, 0))), get("amplitude", 1.0), a=a)
    if kind == "file":
        path = get("path")
        if not path:
            raise DomainError("potential kind 'file' needs a path")
        return load_potential(path)
    raise DomainError(f"unknown potential kind {kind!r}")
