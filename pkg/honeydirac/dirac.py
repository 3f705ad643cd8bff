"""Dirac points at zone vertices: detection, the cone coefficient and cone fits.

The cone coefficient of a unit tau-sector eigenfunction with representative
coefficients c(m) is

    lambda_sharp = 3 |Omega| sum_m c(m)^2 (1, i) . K_star^m

and the two crossing bands leave the vertex as mu_star +- |lambda_sharp| |kappa|.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import DiracDetectionError
from .lattice import LatticeGeometry, SymmetrySector, kvec_of_index
from .output import complex_pair
from .potential import PotentialSpectrum
from .spectral import (
    BlochVector,
    SectorBasis,
    assemble_full,
    assemble_sector,
    conj_reflection,
    degeneracy_threshold,
    sector_spectra,
    solve,
)

logger = logging.getLogger(__name__)

# sector-1 eigenvalues are compared up to mu_star + SECTOR1_WINDOW q^2
SECTOR1_WINDOW = 10.0


@dataclass(frozen=True)
class DiracTolerances:
    degeneracy: float = 1e-8
    pair_match: float = 1e-9
    # relative to the dual scale q
    lambda_threshold: float = 1e-6
    isotropy: float = 0.01
    slope: float = 0.005
    radius_fraction: float = 0.02


@dataclass(frozen=True, eq=False)
class ConeFit:
    direction: np.ndarray
    radii: np.ndarray
    slopes_plus: np.ndarray
    slopes_minus: np.ndarray
    even_part: np.ndarray
    extrapolated_slope: float

    def to_dict(self):
        return {
            "direction": self.direction.tolist(),
            "radii": self.radii.tolist(),
            "slopes_plus": self.slopes_plus.tolist(),
            "slopes_minus": self.slopes_minus.tolist(),
            "even_part": self.even_part.tolist(),
            "extrapolated_slope": self.extrapolated_slope,
        }


@dataclass(frozen=True, eq=False)
class ConeSummary:
    fits: List[ConeFit]
    mu_reference: float
    anisotropy: float
    slope_defect: float

    @property
    def slopes(self) -> np.ndarray:
        return np.array([fit.extrapolated_slope for fit in self.fits])


@dataclass(frozen=True, eq=False)
class DiracReport:
    K_star: np.ndarray
    eps: float
    M: int
    mu_star: float
    lambda_sharp: complex
    band_indices: Tuple[int, int]
    basis: SectorBasis
    coeffs: np.ndarray
    isolation_gap: float
    conj_residual: float
    tolerances: DiracTolerances = field(default_factory=DiracTolerances)
    cone: Optional[ConeSummary] = None

    def phi1(self, geom: LatticeGeometry) -> BlochVector:
        return BlochVector.from_sector(geom, self.basis, self.coeffs)

    def phi2(self, geom: LatticeGeometry) -> BlochVector:
        return self.phi1(geom).conj_reflection()

    @property
    def anisotropy(self) -> Optional[float]:
        return None if self.cone is None else self.cone.anisotropy

    @property
    def verdict(self) -> bool:
        if self.cone is None:
            return False
        return (abs(self.lambda_sharp) > 0.0
                and self.cone.anisotropy <= self.tolerances.isotropy
                and self.cone.slope_defect <= self.tolerances.slope)

    def to_dict(self):
        out = {
            "K_star": self.K_star.tolist(),
            "eps": self.eps,
            "M": self.M,
            "mu_star": self.mu_star,
            "lambda_sharp": complex_pair(self.lambda_sharp),
            "abs_lambda_sharp": abs(self.lambda_sharp),
            "band_lo": self.band_indices[0],
            "band_hi": self.band_indices[1],
            "isolation_gap": self.isolation_gap,
            "conj_residual": self.conj_residual,
        }
        if self.cone is not None:
            out["mu_reference"] = self.cone.mu_reference
            out["anisotropy"] = self.cone.anisotropy
            out["slope_defect"] = self.cone.slope_defect
            out["cone"] = [fit.to_dict() for fit in self.cone.fits]
        out["verdict"] = self.verdict
        out["tolerances"] = asdict(self.tolerances)
        return out


def _complex_dot(v) -> np.ndarray:
    """(1, i) . v for an array of 2-vectors."""
    v = np.asarray(v)
    return v[..., 0] + 1j * v[..., 1]


def lambda_sharp(geom: LatticeGeometry, K_star, coeffs, reps) -> complex:
    """Cone coefficient of the tau-sector eigenvector with coefficients ``coeffs`` on ``reps``.

    The coefficients are rescaled to a unit eigenfunction first, so any
    l2 normalisation of the input is accepted.
    """
    c = np.asarray(coeffs, dtype=complex)
    norm2 = 3.0 * geom.cell_area * np.sum(np.abs(c) ** 2)
    Km = kvec_of_index(geom, K_star, np.asarray(reps))
    return complex(3.0 * geom.cell_area * np.sum(c * c * _complex_dot(Km)) / norm2)


def matrix_elements_M0(geom: LatticeGeometry, basis: SectorBasis, coeffs, kappa) -> Tuple[complex, complex]:
    """(<Phi1, kappa . grad Phi1>, 2i <Phi1, kappa . grad Phi2>) with Phi2 the conj-reflection of Phi1."""
    phi1 = BlochVector.from_sector(geom, basis, coeffs)
    phi2 = phi1.conj_reflection()
    kdot = phi1.kvecs() @ np.asarray(kappa, dtype=float)
    area = geom.cell_area
    diag = 1j * area * np.sum(np.conj(phi1.coeffs) * kdot * phi1.coeffs)
    offdiag = 2j * area * np.sum(np.conj(phi1.coeffs) * 1j * kdot * phi1.aligned(phi2))
    return complex(diag), complex(offdiag)


def _bands_below(H, level: float, start: int = 12) -> int:
    """Number of eigenvalues of H below ``level``, widening the solve until one exceeds it."""
    dim = H.matrix.shape[0]
    n = min(start, dim)
    while True:
        values = solve(H, n).eigenvalues
        if values[-1] >= level or n == dim:
            return int(np.sum(values < level))
        n = min(2 * n, dim)


def detect_dirac(geom: LatticeGeometry, V: PotentialSpectrum, eps: float, M: int, K_star=None,
                 tolerances: Optional[DiracTolerances] = None) -> DiracReport:
    """Check the lowest tau-sector eigenvalue at a vertex for a Dirac point.

    The eigenvalue must be simple in the tau sector, repeat in the taubar sector and
    stay clear of the sector-1 spectrum; the cone coefficient must not vanish.
    """
    tol = tolerances or DiracTolerances()
    K_star = geom.K if K_star is None else np.asarray(K_star, dtype=float)
    V.require_honeycomb()

    spectra = sector_spectra(geom, V, eps, M, K_star)
    tau = spectra[SymmetrySector.TAU]
    taubar = spectra[SymmetrySector.TAUBAR]
    one = spectra[SymmetrySector.ONE]

    mu = float(tau.eigenvalues[0])
    thr = degeneracy_threshold(mu, tol.degeneracy)
    diagnostics = {"mu": mu, "eps": eps, "threshold": thr}

    if not tau.is_simple(0, tol.degeneracy):
        raise DiracDetectionError("lowest tau eigenvalue is not simple", "not-simple", diagnostics)

    pair_gap = float(np.min(np.abs(taubar.eigenvalues - mu)))
    if pair_gap > tol.pair_match * (1.0 + abs(mu)):
        raise DiracDetectionError("no matching taubar eigenvalue", "unpaired",
                                  {**diagnostics, "pair_gap": pair_gap})

    window = one.eigenvalues[one.eigenvalues < mu + SECTOR1_WINDOW * geom.q ** 2]
    sector1_gap = float(np.min(np.abs(window - mu), initial=np.inf))
    if sector1_gap <= thr:
        raise DiracDetectionError("eigenvalue also lies in the sector-1 spectrum (exceptional eps)",
                                  "exceptional", {**diagnostics, "sector1_gap": sector1_gap})

    basis = tau.basis
    c = tau.vector(0)
    lam = lambda_sharp(geom, K_star, c, basis.reps)
    if abs(lam) < tol.lambda_threshold * geom.q:
        raise DiracDetectionError("cone coefficient vanishes", "degenerate",
                                  {**diagnostics, "abs_lambda_sharp": abs(lam)})

    H_bar = assemble_sector(geom, V, SymmetrySector.TAUBAR, eps, M, K_star).matrix
    c_bar = conj_reflection(c)
    conj_residual = float(np.linalg.norm(H_bar @ c_bar - mu * c_bar))

    others = np.concatenate([np.delete(tau.eigenvalues, 0),
                             np.delete(taubar.eigenvalues, int(np.argmin(np.abs(taubar.eigenvalues - mu)))),
                             one.eigenvalues])
    isolation_gap = float(np.min(np.abs(others - mu)))

    b = _bands_below(assemble_full(geom, V, K_star, eps, M), mu - thr) + 1

    logger.info("Dirac point at eps=%g: mu*=%.10f, |lambda#|=%.8f, bands (%d, %d)",
                eps, mu, abs(lam), b, b + 1)
    return DiracReport(
        K_star=np.array(K_star), eps=float(eps), M=int(M), mu_star=mu, lambda_sharp=lam,
        band_indices=(b, b + 1), basis=basis, coeffs=c, isolation_gap=isolation_gap,
        conj_residual=conj_residual, tolerances=tol,
    )


def unit_directions(n: int = 8) -> np.ndarray:
    theta = 2.0 * np.pi * np.arange(n) / n
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def radius_ladder(geom: LatticeGeometry, report: DiracReport, steps: int = 3) -> np.ndarray:
    """Ascending radii r0/2^j, r0 = min(1e-2 q, f delta / |lambda_sharp|)."""
    r0 = min(1e-2 * geom.q,
             report.tolerances.radius_fraction * report.isolation_gap / abs(report.lambda_sharp))
    return np.sort(r0 / 2.0 ** np.arange(steps))


def fit_cone(geom: LatticeGeometry, V: PotentialSpectrum, eps: float, M: int, report: DiracReport,
             directions: Optional[Sequence] = None, radii: Optional[Sequence] = None,
             workers: int = 1) -> DiracReport:
    """Measure the crossing bands along rays from the vertex and compare with |lambda_sharp|.

    Returns ``report`` with the cone summary attached.
    """
    directions = unit_directions(8) if directions is None else np.atleast_2d(np.asarray(directions, dtype=float))
    directions = directions / np.linalg.norm(directions, axis=1, keepdims=True)
    radii = radius_ladder(geom, report) if radii is None else np.sort(np.asarray(radii, dtype=float))

    lo, hi = report.band_indices
    K_star = report.K_star
    centre = solve(assemble_full(geom, V, K_star, eps, M), hi).eigenvalues
    mu_ref = 0.5 * (centre[lo - 1] + centre[hi - 1])

    jobs = [(d, r) for d in directions for r in radii]

    def pair_at(job):
        d, r = job
        values = solve(assemble_full(geom, V, K_star + r * d, eps, M), hi).eigenvalues
        return values[lo - 1], values[hi - 1]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pairs = list(pool.map(pair_at, jobs))
    else:
        pairs = [pair_at(job) for job in jobs]
    pairs = np.array(pairs).reshape(len(directions), len(radii), 2)

    mu_minus, mu_plus = pairs[..., 0], pairs[..., 1]
    if np.any(mu_minus >= mu_ref) or np.any(mu_plus <= mu_ref):
        raise DiracDetectionError("crossing bands do not bracket the vertex eigenvalue", "unbracketed",
                                  {"mu_reference": mu_ref, "band_indices": [lo, hi]})

    fits = []
    for j, d in enumerate(directions):
        mean_slope = (mu_plus[j] - mu_minus[j]) / (2.0 * radii)
        if len(radii) > 1:
            intercept = float(np.polyfit(radii, mean_slope, 1)[1])
        else:
            intercept = float(mean_slope[0])
        fits.append(ConeFit(
            direction=d,
            radii=radii,
            slopes_plus=(mu_plus[j] - mu_ref) / radii,
            slopes_minus=(mu_ref - mu_minus[j]) / radii,
            even_part=mu_plus[j] + mu_minus[j] - 2.0 * mu_ref,
            extrapolated_slope=intercept,
        ))

    slopes = np.array([fit.extrapolated_slope for fit in fits])
    lam = abs(report.lambda_sharp)
    anisotropy = float((slopes.max() - slopes.min()) / slopes.mean())
    slope_defect = float(np.max(np.abs(slopes - lam)) / lam)
    logger.info("cone: %d directions, slope %.8f vs |lambda#| %.8f (anisotropy %.2e)",
                len(fits), slopes.mean(), lam, anisotropy)

    summary = ConeSummary(fits=fits, mu_reference=float(mu_ref), anisotropy=anisotropy,
                          slope_defect=slope_defect)
    return replace(report, cone=summary)


def characterize(geom: LatticeGeometry, V: PotentialSpectrum, eps: float, M: int, K_star=None,
                 tolerances: Optional[DiracTolerances] = None, directions=None, radii=None,
                 workers: int = 1) -> DiracReport:
    report = detect_dirac(geom, V, eps, M, K_star, tolerances)
    report = fit_cone(geom, V, eps, M, report, directions, radii, workers)
    if not report.verdict:
        logger.warning("cone check failed: anisotropy %.2e, slope defect %.2e",
                       report.cone.anisotropy, report.cone.slope_defect)
    return report


# -- continuation in eps ------------------------------------------------------

EXCEPTIONAL_REASONS = ("exceptional", "not-simple", "degenerate")


@dataclass(frozen=True)
class EpsScanRow:
    eps: float
    mu_star: float
    sector1_gap: float
    simplicity_margin: float
    abs_lambda_sharp: Optional[float] = None
    band_indices: Optional[Tuple[int, int]] = None
    reason: Optional[str] = None
    candidate_exceptional: bool = False

    @property
    def detected(self) -> bool:
        return self.band_indices is not None


@dataclass(frozen=True)
class EpsScan:
    rows: List[EpsScanRow]
    # consecutive detected eps values whose crossing band pair differs
    brackets: List[Tuple[float, float]]

    header = ["eps", "mu_star", "abs_lambda_sharp", "band_lo", "band_hi", "sector1_gap",
              "simplicity_margin", "status", "candidate_exceptional"]

    @property
    def candidates(self) -> List[float]:
        return [row.eps for row in self.rows if row.candidate_exceptional]

    def as_rows(self):
        for row in self.rows:
            lo, hi = row.band_indices or ("", "")
            yield [row.eps, row.mu_star, "" if row.abs_lambda_sharp is None else row.abs_lambda_sharp,
                   lo, hi, row.sector1_gap, row.simplicity_margin, row.reason or "dirac",
                   int(row.candidate_exceptional)]


def _scan_one(geom, V, eps, M, K_star, tolerances, collapse_tol) -> EpsScanRow:
    spectra = sector_spectra(geom, V, eps, M, K_star)
    tau = spectra[SymmetrySector.TAU].eigenvalues
    one = spectra[SymmetrySector.ONE].eigenvalues
    mu = float(tau[0])
    sector1_gap = float(np.min(np.abs(one - mu)))
    margin = float(tau[1] - tau[0]) if len(tau) > 1 else np.inf
    collapsed = min(sector1_gap, margin) <= collapse_tol * (1.0 + abs(mu))

    try:
        report = detect_dirac(geom, V, eps, M, K_star, tolerances)
    except DiracDetectionError as e:
        logger.debug("eps=%g: no Dirac point (%s)", eps, e.reason)
        return EpsScanRow(eps=float(eps), mu_star=mu, sector1_gap=sector1_gap, simplicity_margin=margin,
                          reason=e.reason,
                          candidate_exceptional=collapsed or e.reason in EXCEPTIONAL_REASONS)
    return EpsScanRow(eps=float(eps), mu_star=mu, sector1_gap=sector1_gap, simplicity_margin=margin,
                      abs_lambda_sharp=abs(report.lambda_sharp), band_indices=report.band_indices,
                      candidate_exceptional=collapsed)


def eps_scan(geom: LatticeGeometry, V: PotentialSpectrum, eps_list: Sequence[float], M: int, K_star=None,
             tolerances: Optional[DiracTolerances] = None, collapse_tol: float = 1e-6,
             workers: int = 1) -> EpsScan:
    """Follow the vertex eigenvalue, |lambda_sharp| and the crossing bands along an eps ladder.

    A row is a candidate exceptional eps when detection fails for a spectral reason or
    when the sector-1 gap or the tau simplicity margin falls below collapse_tol (1 + |mu|).
    A change of crossing band pair between neighbouring detected rows brackets one.
    """
    V.require_honeycomb()
    K_star = geom.K if K_star is None else np.asarray(K_star, dtype=float)
    ladder = sorted(float(e) for e in eps_list)

    def one(eps):
        return _scan_one(geom, V, eps, M, K_star, tolerances, collapse_tol)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, ladder))
    else:
        rows = [one(eps) for eps in ladder]

    detected = [row for row in rows if row.detected]
    brackets = [(a.eps, b.eps) for a, b in zip(detected, detected[1:]) if a.band_indices != b.band_indices]
    scan = EpsScan(rows=rows, brackets=brackets)
    logger.info("eps scan over %d values: %d detected, candidates %s, band pair changes in %s",
                len(rows), len(detected), scan.candidates, brackets)
    return scan
