"""Sector eigenvalues as zeros of a regularised determinant.

With the potential shifted so the coupling term is non-negative, the base operator
B = I + H_sigma - offset is positive and

    E_sigma(mu, eps) = det2(I + A),   A = -(mu + 1 - offset) B^{-1},

vanishes exactly when mu is an eigenvalue of the sector problem. ``offset`` is
eps V_min for eps >= 0 and eps V_max otherwise.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import DiscrepancyError, DomainError, NumericalError
from .lattice import LatticeGeometry, SymmetrySector
from .output import complex_pair
from .potential import PotentialSpectrum, extrema
from .spectral import assemble_sector, solve

logger = logging.getLogger(__name__)

MATCH_TOL = 1e-8


def det2_of(eigenvalues) -> complex:
    """prod_j (1 + a_j) exp(-a_j)."""
    a = np.asarray(eigenvalues, dtype=complex)
    return complex(np.prod((1.0 + a) * np.exp(-a)))


@dataclass(frozen=True)
class Det2Evaluation:
    mu: float
    eps: float
    sigma: SymmetrySector
    M: int
    value: complex
    shifted: bool

    def to_dict(self):
        return {
            "mu": self.mu,
            "eps": self.eps,
            "sigma": self.sigma.value,
            "M": self.M,
            "value": complex_pair(self.value),
            "shifted": self.shifted,
        }


class Det2Evaluator:
    """E_sigma(., eps) at one truncation, with the base operator diagonalised once."""

    def __init__(self, geom: LatticeGeometry, V: PotentialSpectrum, sigma, eps: float, M: int,
                 K_star=None, grid_n: int = 64):
        self.geom = geom
        self.V = V
        self.sigma = SymmetrySector.parse(sigma)
        self.eps = float(eps)
        self.M = int(M)
        self.K_star = geom.K if K_star is None else np.asarray(K_star, dtype=float)

        vmin, vmax = extrema(V, grid_n)
        self.shifted = self.eps < 0
        self.offset = self.eps * (vmax if self.shifted else vmin)

        H = assemble_sector(geom, V, self.sigma, self.eps, self.M, self.K_star)
        B = H.matrix + (1.0 - self.offset) * np.eye(H.matrix.shape[0])
        try:
            self.base_eigenvalues = scipy.linalg.eigvalsh(B)
        except (scipy.linalg.LinAlgError, ValueError) as e:
            raise NumericalError(f"base operator diagonalisation failed: {e}") from e
        if self.base_eigenvalues[0] <= 0.0:
            raise NumericalError("base operator is not invertible",
                                 {"smallest": float(self.base_eigenvalues[0]), "offset": self.offset})
        logger.debug("det2 evaluator sigma=%s eps=%g: offset %.6g, dim %d",
                     self.sigma.value, self.eps, self.offset, len(self.base_eigenvalues))

    def spectral_parameter(self, mu):
        return np.asarray(mu, dtype=float) + 1.0 - self.offset

    def values(self, mus, chunk: int = 4096) -> np.ndarray:
        z = self.spectral_parameter(mus)
        flat = z.reshape(-1)
        out = np.empty(flat.shape, dtype=complex)
        for start in range(0, len(flat), chunk):
            a = -flat[start:start + chunk, None] / self.base_eigenvalues
            out[start:start + chunk] = np.prod((1.0 + a) * np.exp(-a), axis=-1)
        return out.reshape(z.shape)

    def __call__(self, mu: float) -> Det2Evaluation:
        z = float(self.spectral_parameter(mu))
        value = det2_of(-z / self.base_eigenvalues)
        if abs(value.imag) > 1e-10 * abs(value) + 1e-14:
            logger.warning("det2 value has imaginary part %.2e at mu=%g", value.imag, mu)
        return Det2Evaluation(mu=float(mu), eps=self.eps, sigma=self.sigma, M=self.M,
                              value=value, shifted=self.shifted)


def evaluate_E(geom: LatticeGeometry, V: PotentialSpectrum, sigma, mu: float, eps: float, M: int,
               K_star=None) -> Det2Evaluation:
    return Det2Evaluator(geom, V, sigma, eps, M, K_star)(mu)


@dataclass(frozen=True)
class ZeroMatch:
    mu_zero: float
    matched_eigenvalue: float
    defect: float

    def to_dict(self):
        return {"mu_zero": self.mu_zero, "matched_eigenvalue": self.matched_eigenvalue, "defect": self.defect}


@dataclass(frozen=True, eq=False)
class ZeroScan:
    sigma: SymmetrySector
    eps: float
    window: Tuple[float, float]
    grid: np.ndarray
    values: np.ndarray
    zeros: List[ZeroMatch] = field(default_factory=list)

    header = ["mu", "value"]

    def rows(self):
        for mu, value in zip(self.grid, self.values):
            yield [float(mu), float(value)]

    def to_dict(self):
        return {
            "sigma": self.sigma.value,
            "eps": self.eps,
            "window": list(self.window),
            "zeros": [z.to_dict() for z in self.zeros],
        }


def zero_scan(geom: LatticeGeometry, V: PotentialSpectrum, sigma, eps: float, mu_window: Sequence[float],
              grid_n: int, M: int, K_star=None, evaluator: Optional[Det2Evaluator] = None) -> ZeroScan:
    """Bracket sign changes of E_sigma on a grid, bisect them and match them to the sector spectrum."""
    lo, hi = (float(v) for v in mu_window)
    if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
        raise DomainError(f"invalid window {mu_window!r}")
    if grid_n < 8:
        raise DomainError(f"grid_n must be at least 8, got {grid_n!r}")

    E = evaluator or Det2Evaluator(geom, V, sigma, eps, M, K_star)
    grid = np.linspace(lo, hi, int(grid_n))
    values = E.values(grid).real

    def f(mu):
        return float(E.values(mu).real)

    zeros = []
    for i in np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) <= 0):
        a, b = grid[i], grid[i + 1]
        if values[i] == 0.0:
            root = a
        elif values[i + 1] == 0.0:
            continue  # picked up as the left end of the next cell
        else:
            root = scipy.optimize.bisect(f, a, b, xtol=1e-9 * (1.0 + abs(a)), rtol=4 * np.finfo(float).eps)
        zeros.append(float(root))

    H = assemble_sector(geom, V, E.sigma, eps, M, E.K_star)
    eigs = solve(H).eigenvalues
    expected = eigs[(eigs >= lo) & (eigs <= hi)]

    if len(expected) != len(zeros):
        raise DiscrepancyError("det2 zeros and sector eigenvalues differ in number",
                               {"zeros": zeros, "eigenvalues": expected.tolist()})

    matches = []
    for z, mu in zip(sorted(zeros), expected):
        defect = abs(z - mu)
        if defect > MATCH_TOL * (1.0 + abs(mu)):
            raise DiscrepancyError("det2 zero does not match a sector eigenvalue",
                                   {"zero": z, "eigenvalue": float(mu), "defect": defect})
        matches.append(ZeroMatch(mu_zero=z, matched_eigenvalue=float(mu), defect=defect))

    logger.info("det2 scan sigma=%s eps=%g on [%g, %g]: %d zeros matched",
                E.sigma.value, eps, lo, hi, len(matches))
    return ZeroScan(sigma=E.sigma, eps=float(eps), window=(lo, hi), grid=grid, values=values, zeros=matches)
