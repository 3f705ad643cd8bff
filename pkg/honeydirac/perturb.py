"""Small-eps splitting of the free triple eigenvalue and deformations V -> eps V + eta W.

At a vertex the free eigenvalue |K|^2 has multiplicity three. Switching on eps V
splits it into a double eigenvalue |K|^2 + eps (V00 - V11) and a simple one
|K|^2 + eps (V00 + 2 V11), up to O(eps^2). A perturbation W that is even keeps a
Dirac point, moved to K + eta K10 with

    K10 = -(Re, Im) (<Phi1, W Phi2> / conj(lambda_sharp));

a W with a non-zero odd part opens a gap of about 2 |eta| |<Phi1, W_odd Phi1>|.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.optimize

from .dirac import DiracReport, detect_dirac
from .errors import DeformationError, DiscrepancyError, SymmetryError
from .lattice import LatticeGeometry, SymmetrySector
from .output import complex_pair
from .potential import PotentialSpectrum, coefficient_V11
from .spectral import BlochVector, assemble_full, sector_spectra, solve

logger = logging.getLogger(__name__)

CLOSURE_COEFF = 10.0
EXPONENT_TOL = 0.3
GAP_FLOOR = 1e-8


@dataclass(frozen=True)
class SplitPrediction:
    eps: float
    mu_double_1st: float
    mu_simple_1st: float
    crossing_case: Optional[Tuple[int, int]]


def split_prediction(geom: LatticeGeometry, V: PotentialSpectrum, eps: float) -> SplitPrediction:
    V.require_honeycomb()
    K2 = float(geom.K @ geom.K)
    V00 = V.coefficient((0, 0)).real
    V11 = coefficient_V11(V)
    sign = eps * V11
    case = None if sign == 0 else ((1, 2) if sign > 0 else (2, 3))
    return SplitPrediction(
        eps=float(eps),
        mu_double_1st=K2 + eps * (V00 - V11),
        mu_simple_1st=K2 + eps * (V00 + 2.0 * V11),
        crossing_case=case,
    )


@dataclass(frozen=True)
class SplitRow:
    eps: float
    measured_double: float
    measured_simple: float
    defect_double: float
    defect_simple: float


@dataclass(frozen=True)
class SplitTable:
    rows: List[SplitRow]
    exponents_double: List[float]
    exponents_simple: List[float]
    ratios_double: List[float]
    ratios_simple: List[float]

    header = ["eps", "measured_double", "measured_simple", "defect_double", "defect_simple"]

    @property
    def quadratic(self) -> bool:
        """Observed defect exponents are 2 within EXPONENT_TOL for the two smallest eps pairs."""
        exponents = self.exponents_double[:2] + self.exponents_simple[:2]
        return bool(exponents) and all(abs(p - 2.0) <= EXPONENT_TOL for p in exponents)

    def as_rows(self):
        for row in self.rows:
            yield [row.eps, row.measured_double, row.measured_simple, row.defect_double, row.defect_simple]


def _measure_split(geom, V, eps, M) -> SplitRow:
    pred = split_prediction(geom, V, eps)
    spectra = sector_spectra(geom, V, eps, M, n_lowest=1)
    double = float(spectra[SymmetrySector.TAU].eigenvalues[0])
    partner = float(spectra[SymmetrySector.TAUBAR].eigenvalues[0])
    simple = float(spectra[SymmetrySector.ONE].eigenvalues[0])
    if abs(double - partner) > 1e-9 * (1.0 + abs(double)):
        raise DiscrepancyError("tau and taubar lowest eigenvalues differ",
                               {"eps": eps, "tau": double, "taubar": partner})
    return SplitRow(
        eps=float(eps),
        measured_double=double,
        measured_simple=simple,
        defect_double=abs(double - pred.mu_double_1st),
        defect_simple=abs(simple - pred.mu_simple_1st),
    )


def _doubling_ratios(rows: Sequence[SplitRow], attr: str):
    ratios, exponents = [], []
    ordered = sorted((r for r in rows if r.eps != 0.0), key=lambda r: abs(r.eps))
    for small, big in zip(ordered, ordered[1:]):
        d_small, d_big = getattr(small, attr), getattr(big, attr)
        if d_small <= 0.0 or np.sign(small.eps) != np.sign(big.eps):
            continue
        ratios.append(d_big / d_small)
        exponents.append(float(np.log(d_big / d_small) / np.log(big.eps / small.eps)))
    return ratios, exponents


def verify_split(geom: LatticeGeometry, V: PotentialSpectrum, eps_list: Sequence[float], M: int,
                 workers: int = 1) -> SplitTable:
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda e: _measure_split(geom, V, e, M), eps_list))
    else:
        rows = [_measure_split(geom, V, e, M) for e in eps_list]

    ratios_d, exps_d = _doubling_ratios(rows, "defect_double")
    ratios_s, exps_s = _doubling_ratios(rows, "defect_simple")
    table = SplitTable(rows=rows, exponents_double=exps_d, exponents_simple=exps_s,
                       ratios_double=ratios_d, ratios_simple=ratios_s)
    logger.info("split check over %d eps values: exponents %s / %s",
                len(rows), np.round(exps_d, 3).tolist(), np.round(exps_s, 3).tolist())
    return table


def inner_product_W(geom: LatticeGeometry, A: BlochVector, B: BlochVector, W: PotentialSpectrum) -> complex:
    """<A, W B> over one cell, with both vectors in full plane-wave form."""
    diff = A.indices[:, None, :] - B.indices[None, :, :]
    Wmat = W.lookup(diff[..., 0], diff[..., 1])
    return complex(geom.cell_area * np.conj(A.coeffs) @ Wmat @ B.coeffs)


# -- deformation --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DeformationReport:
    eta: float
    K_star: np.ndarray
    K_shifted: np.ndarray
    K_first_order: np.ndarray
    gap_at_optimum: float
    predicted_gap: float
    W_parity: str
    mu_at_optimum: float
    mu_first_order: float
    w11: complex
    w12: complex
    closure_bound: Optional[float] = None

    @property
    def shift_defect(self) -> float:
        return float(np.linalg.norm(self.K_shifted - self.K_first_order))

    def to_dict(self):
        return {
            "eta": self.eta,
            "W_parity": self.W_parity,
            "K_star": self.K_star.tolist(),
            "K_shifted": self.K_shifted.tolist(),
            "K_first_order": self.K_first_order.tolist(),
            "shift_defect": self.shift_defect,
            "gap_at_optimum": self.gap_at_optimum,
            "predicted_gap": self.predicted_gap,
            "closure_bound": self.closure_bound,
            "mu_at_optimum": self.mu_at_optimum,
            "mu_first_order": self.mu_first_order,
            "w11": complex_pair(self.w11),
            "w12": complex_pair(self.w12),
        }

    csv_header = ["eta", "W_parity", "K_shifted_x", "K_shifted_y", "K_first_x", "K_first_y",
                  "shift_defect", "gap_at_optimum", "predicted_gap", "mu_at_optimum", "mu_first_order"]

    def csv_row(self):
        return [self.eta, self.W_parity, self.K_shifted[0], self.K_shifted[1],
                self.K_first_order[0], self.K_first_order[1], self.shift_defect,
                self.gap_at_optimum, self.predicted_gap, self.mu_at_optimum, self.mu_first_order]


def _band_pair(geom, U, k, M, bands):
    lo, hi = bands
    values = solve(assemble_full(geom, U, k, 1.0, M), hi).eigenvalues
    return values[lo - 1], values[hi - 1]


def _minimize_gap(geom, U, M, bands, K_star, radius) -> Tuple[np.ndarray, float, float]:
    """Nelder-Mead search for the smallest gap between ``bands`` near ``K_star``."""
    def gap(k):
        lo, hi = _band_pair(geom, U, k, M, bands)
        return hi - lo

    simplex = np.array([K_star, K_star + [radius, 0.0], K_star + [0.0, radius]])
    result = scipy.optimize.minimize(
        gap, K_star, method="Nelder-Mead",
        options={"initial_simplex": simplex, "xatol": 1e-10 * geom.q, "fatol": 1e-9, "maxiter": 4000},
    )
    if not result.success:
        logger.warning("gap search stopped early: %s", result.message)
    k_opt = np.asarray(result.x, dtype=float)
    lo, hi = _band_pair(geom, U, k_opt, M, bands)
    logger.debug("gap search: %d evaluations, gap %.3e", result.nfev, hi - lo)
    return k_opt, float(hi - lo), 0.5 * float(hi + lo)


def _first_order(geom, report: DiracReport, W: PotentialSpectrum):
    phi1 = report.phi1(geom)
    phi2 = phi1.conj_reflection()
    w11 = inner_product_W(geom, phi1, phi1, W)
    w12 = inner_product_W(geom, phi1, phi2, W)
    z = w12 / np.conj(report.lambda_sharp)
    return phi1, w11, w12, -np.array([z.real, z.imag])


def _deform(geom, V, eps, W, eta, M, report, parity, predicted_gap):
    report = report or detect_dirac(geom, V, eps, M)
    phi1, w11, w12, K10 = _first_order(geom, report, W)
    w11_even = inner_product_W(geom, phi1, phi1, W.even_part())
    K_star = np.asarray(report.K_star, dtype=float)
    K_first = K_star + eta * K10
    mu_first = report.mu_star + eta * w11_even.real

    if eta == 0.0:
        lo, hi = _band_pair(geom, V.scale(eps), K_star, M, report.band_indices)
        k_opt, gap, mu_opt = K_star.copy(), float(hi - lo), 0.5 * float(hi + lo)
    else:
        U = V.scale(eps) + W.scale(eta)
        k_opt, gap, mu_opt = _minimize_gap(geom, U, M, report.band_indices, K_star,
                                           0.1 * geom.q * abs(eta))

    return DeformationReport(
        eta=float(eta), K_star=K_star, K_shifted=k_opt, K_first_order=K_first,
        gap_at_optimum=gap, predicted_gap=predicted_gap(phi1), W_parity=parity,
        mu_at_optimum=mu_opt, mu_first_order=mu_first, w11=w11, w12=w12,
    )


def _require_real(W: PotentialSpectrum):
    report = W.check()
    if not report.is_real_valued:
        raise SymmetryError("perturbation W must be real-valued", report.to_dict())
    return report


def deform_even(geom: LatticeGeometry, V: PotentialSpectrum, eps: float, W: PotentialSpectrum, eta: float,
                M: int, report: Optional[DiracReport] = None, closure_coeff: float = CLOSURE_COEFF,
                gap_floor: float = GAP_FLOOR) -> DeformationReport:
    """Track the Dirac point of eps V + eta W for an even W.

    Raises DeformationError if the gap at the located point is above
    max(closure_coeff eta^2, gap_floor).
    """
    if not _require_real(W).is_even:
        raise SymmetryError("deform_even needs an even W", W.check().to_dict())

    out = _deform(geom, V, eps, W, eta, M, report, "even", lambda phi1: 0.0)
    bound = max(closure_coeff * eta * eta, gap_floor)
    out = replace(out, closure_bound=bound)
    if out.gap_at_optimum > bound:
        raise DeformationError("gap does not close for an even perturbation",
                               {"eta": eta, "gap": out.gap_at_optimum, "bound": bound})
    logger.info("even deformation eta=%g: shift defect %.2e, gap %.2e",
                eta, out.shift_defect, out.gap_at_optimum)
    return out


def deform_odd_gap(geom: LatticeGeometry, V: PotentialSpectrum, eps: float, W: PotentialSpectrum, eta: float,
                   M: int, report: Optional[DiracReport] = None, odd_tol: float = 1e-12,
                   closure_coeff: float = CLOSURE_COEFF) -> DeformationReport:
    """Minimal gap opened by a W whose odd part does not vanish."""
    _require_real(W)
    W_odd = W.odd_part()
    if W_odd.sup_norm <= odd_tol * max(W.sup_norm, 1.0):
        logger.info("odd part of W vanishes; treating W as even")
        return deform_even(geom, V, eps, W, eta, M, report, closure_coeff=closure_coeff)

    def predicted(phi1):
        return 2.0 * abs(eta) * abs(inner_product_W(geom, phi1, phi1, W_odd))

    out = _deform(geom, V, eps, W, eta, M, report, "non-even", predicted)
    if out.predicted_gap > 0:
        rel = abs(out.gap_at_optimum - out.predicted_gap) / out.predicted_gap
        logger.info("odd deformation eta=%g: gap %.6e vs predicted %.6e (%.1f%%)",
                    eta, out.gap_at_optimum, out.predicted_gap, 100.0 * rel)
    return out


def deform_scan(geom: LatticeGeometry, V: PotentialSpectrum, eps: float, W: PotentialSpectrum,
                etas: Sequence[float], M: int, workers: int = 1,
                closure_coeff: float = CLOSURE_COEFF) -> List[DeformationReport]:
    """One deformation report per eta, even or odd path chosen from W."""
    report = detect_dirac(geom, V, eps, M)
    run = deform_even if W.check().is_even else deform_odd_gap

    def one(eta):
        return run(geom, V, eps, W, eta, M, report=report, closure_coeff=closure_coeff)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, etas))
    return [one(eta) for eta in etas]
