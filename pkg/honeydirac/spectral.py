"""Truncated Floquet-Bloch eigenproblems.

``assemble_full`` builds H(k)[m, n] = |k + mk|^2 delta_mn + eps V_{m-n} on the index box
|m1|, |m2| <= M. ``assemble_sector`` builds the reduced problem on rotation-orbit
representatives at a zone vertex, where basis function m is
e_m + conj(sigma) e_{Rm} + sigma e_{R^2 m} and the coupling is

    K_sigma(m, r) = V_{m-r} + conj(sigma) V_{m-Rr} + sigma V_{m-R^2 r}.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import DomainError, NumericalError, SymmetryError
from .lattice import (
    CycleTable,
    LatticeGeometry,
    SymmetrySector,
    box_indices,
    cycle_representatives,
    kvec_of_index,
    vertex_shift,
)
from .potential import PotentialSpectrum

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
RESIDUAL_TOL = 1e-9
DEGENERACY_TOL = 1e-8


def degeneracy_threshold(mu, rel: float = DEGENERACY_TOL) -> float:
    return rel * (1.0 + abs(mu))


@dataclass(frozen=True, eq=False)
class PlanewaveBasis:
    k: np.ndarray
    M: int
    indices: np.ndarray

    @property
    def size(self) -> int:
        return len(self.indices)


@dataclass(frozen=True, eq=False)
class SectorBasis:
    K_star: np.ndarray
    sigma: SymmetrySector
    M: int
    table: CycleTable

    @property
    def reps(self) -> np.ndarray:
        return self.table.rep_array()

    @property
    def size(self) -> int:
        return len(self.table)


@dataclass(frozen=True, eq=False)
class BlochHamiltonian:
    matrix: np.ndarray
    epsilon: float
    basis: object
    hermitian_defect: float = 0.0


@dataclass(frozen=True, eq=False)
class EigenSolution:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    basis: object = None

    def __len__(self):
        return len(self.eigenvalues)

    def vector(self, j: int) -> np.ndarray:
        return self.eigenvectors[:, j]

    def is_simple(self, j: int, rel: float = DEGENERACY_TOL) -> bool:
        mu = self.eigenvalues[j]
        gap = np.abs(np.delete(self.eigenvalues, j) - mu)
        return bool(np.all(gap > degeneracy_threshold(mu, rel)))


@dataclass(frozen=True, eq=False)
class BlochVector:
    """Plane-wave coefficients d_n of phi(x) = sum_n d_n exp(i (K_star + nk) . x)."""

    geom: LatticeGeometry
    K_star: np.ndarray
    indices: np.ndarray
    coeffs: np.ndarray

    @classmethod
    def from_sector(cls, geom, basis: SectorBasis, c, normalize: bool = True) -> "BlochVector":
        r0, r1, r2 = basis.table.branch_arrays()
        sigma = basis.sigma.sigma
        c = np.asarray(c, dtype=complex)
        indices = np.concatenate([r0, r1, r2])
        coeffs = np.concatenate([c, np.conj(sigma) * c, sigma * c])
        vec = cls(geom=geom, K_star=np.asarray(basis.K_star, dtype=float), indices=indices, coeffs=coeffs)
        return vec.normalized() if normalize else vec

    def norm(self) -> float:
        return float(np.sqrt(self.geom.cell_area * np.sum(np.abs(self.coeffs) ** 2)))

    def normalized(self) -> "BlochVector":
        n = self.norm()
        if n == 0.0:
            raise NumericalError("cannot normalise a zero Bloch vector")
        return BlochVector(self.geom, self.K_star, self.indices, self.coeffs / n)

    def conj_reflection(self) -> "BlochVector":
        """x -> conj(phi(-x)); same indices, conjugated coefficients."""
        return BlochVector(self.geom, self.K_star, self.indices, np.conj(self.coeffs))

    def kvecs(self) -> np.ndarray:
        return kvec_of_index(self.geom, self.K_star, self.indices)

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        total = np.exp(1j * (x @ self.kvecs().T)) @ self.coeffs
        return total if np.ndim(total) else complex(total)

    def aligned(self, other: "BlochVector") -> np.ndarray:
        """Coefficients of ``other`` on this vector's index list (0 where absent)."""
        if self.indices.shape == other.indices.shape and np.array_equal(self.indices, other.indices):
            return other.coeffs
        lookup = {tuple(m): v for m, v in zip(other.indices.tolist(), other.coeffs)}
        return np.array([lookup.get(tuple(m), 0.0) for m in self.indices.tolist()], dtype=complex)

    def inner(self, other: "BlochVector") -> complex:
        """<self, other> over one cell."""
        return complex(self.geom.cell_area * np.vdot(self.coeffs, self.aligned(other)))


def hermiticity_defect(matrix: np.ndarray) -> float:
    scale = max(np.linalg.norm(matrix), 1.0)
    return float(np.linalg.norm(matrix - matrix.conj().T) / scale)


def _check_lattice(geom: LatticeGeometry, V: PotentialSpectrum):
    if not np.isclose(geom.a, V.a, rtol=1e-14):
        raise DomainError("potential and geometry use different lattice constants",
                          {"geometry_a": geom.a, "potential_a": V.a})


def _finish(matrix, eps, basis) -> BlochHamiltonian:
    defect = hermiticity_defect(matrix)
    if defect > HERMITIAN_TOL:
        raise NumericalError("assembled matrix is not Hermitian", {"defect": defect})
    matrix = 0.5 * (matrix + matrix.conj().T)
    return BlochHamiltonian(matrix=matrix, epsilon=float(eps), basis=basis, hermitian_defect=defect)


def assemble_full(geom: LatticeGeometry, V: PotentialSpectrum, k, eps: float, M: int) -> BlochHamiltonian:
    _check_lattice(geom, V)
    if not V.check().is_real_valued:
        raise SymmetryError("full assembly needs a real-valued potential", V.check().to_dict())

    k = np.asarray(k, dtype=float)
    idx = box_indices(M)
    kin = np.sum(kvec_of_index(geom, k, idx) ** 2, axis=1)
    diff = idx[:, None, :] - idx[None, :, :]
    matrix = np.diag(kin).astype(complex) + eps * V.lookup(diff[..., 0], diff[..., 1])
    return _finish(matrix, eps, PlanewaveBasis(k=k, M=int(M), indices=idx))


def sector_basis(geom: LatticeGeometry, sigma, M: int, K_star=None) -> SectorBasis:
    K_star = geom.K if K_star is None else np.asarray(K_star, dtype=float)
    table = cycle_representatives(M, vertex_shift(geom, K_star))
    return SectorBasis(K_star=K_star, sigma=SymmetrySector.parse(sigma), M=int(M), table=table)


def coupling_kernel(V: PotentialSpectrum, basis: SectorBasis) -> np.ndarray:
    """K_sigma(m, r) over the orbit representatives of ``basis``."""
    r0, r1, r2 = basis.table.branch_arrays()
    sigma = basis.sigma.sigma

    def block(branch):
        diff = r0[:, None, :] - branch[None, :, :]
        return V.lookup(diff[..., 0], diff[..., 1])

    return block(r0) + np.conj(sigma) * block(r1) + sigma * block(r2)


def assemble_sector(geom: LatticeGeometry, V: PotentialSpectrum, sigma, eps: float, M: int,
                    K_star=None) -> BlochHamiltonian:
    _check_lattice(geom, V)
    V.require_honeycomb()
    basis = sector_basis(geom, sigma, M, K_star)
    kin = np.sum(kvec_of_index(geom, basis.K_star, basis.reps) ** 2, axis=1)
    matrix = np.diag(kin).astype(complex) + eps * coupling_kernel(V, basis)
    return _finish(matrix, eps, basis)


def fix_phase(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real and positive."""
    vectors = np.array(vectors, dtype=complex, copy=True)
    single = vectors.ndim == 1
    if single:
        vectors = vectors[:, None]
    mags = np.abs(vectors)
    for j in range(vectors.shape[1]):
        top = mags[:, j].max()
        if top == 0.0:
            continue
        # first entry within rounding of the maximum
        i = int(np.argmax(mags[:, j] >= top * (1.0 - 1e-9)))
        vectors[:, j] *= np.conj(vectors[i, j]) / abs(vectors[i, j])
    return vectors[:, 0] if single else vectors


def solve(H: BlochHamiltonian, n_lowest: Optional[int] = None) -> EigenSolution:
    dim = H.matrix.shape[0]
    n = dim if n_lowest is None else int(n_lowest)
    if not 1 <= n <= dim:
        raise DomainError(f"n_lowest must lie in [1, {dim}], got {n_lowest!r}")

    try:
        values, vectors = scipy.linalg.eigh(H.matrix, subset_by_index=[0, n - 1])
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"eigensolver failed: {e}", {"dimension": dim}) from e

    vectors = fix_phase(vectors)
    residuals = np.linalg.norm(H.matrix @ vectors - vectors * values, axis=0)
    bound = RESIDUAL_TOL * (1.0 + np.abs(values))
    if np.any(residuals > bound):
        worst = int(np.argmax(residuals / bound))
        raise NumericalError("eigenpair residual above tolerance",
                             {"index": worst, "residual": float(residuals[worst]),
                              "eigenvalue": float(values[worst])})
    return EigenSolution(eigenvalues=values, eigenvectors=vectors, residuals=residuals, basis=H.basis)


def conj_reflection(c) -> np.ndarray:
    """Sector coefficients of x -> conj(phi(-x)), taking the tau sector to the taubar sector."""
    return np.conj(np.asarray(c, dtype=complex))


def sector_spectra(geom: LatticeGeometry, V: PotentialSpectrum, eps: float, M: int,
                   K_star=None, n_lowest: Optional[int] = None) -> Dict[SymmetrySector, EigenSolution]:
    spectra = {}
    for sigma in SymmetrySector:
        H = assemble_sector(geom, V, sigma, eps, M, K_star)
        n = None if n_lowest is None else min(n_lowest, H.matrix.shape[0])
        spectra[sigma] = solve(H, n)
    logger.debug("sector spectra at M=%d: dims %s", M,
                 {s.value: sol.basis.size for s, sol in spectra.items()})
    return spectra


def free_dispersion(geom: LatticeGeometry, k, M: int, n: int) -> np.ndarray:
    """Lowest n values of |k + mk|^2 over the index box."""
    kin = np.sum(kvec_of_index(geom, np.asarray(k, dtype=float), box_indices(M)) ** 2, axis=1)
    return np.sort(kin)[:n]


# -- band tables ------------------------------------------------------------

@dataclass(frozen=True)
class BandTable:
    kpoints: np.ndarray
    arclength: np.ndarray
    bands: np.ndarray

    @property
    def header(self) -> List[str]:
        return ["idx", "s", "kx", "ky"] + [f"band_{j + 1}" for j in range(self.bands.shape[1])]

    def rows(self):
        for i, (k, s, mus) in enumerate(zip(self.kpoints, self.arclength, self.bands)):
            yield [i, float(s), float(k[0]), float(k[1])] + [float(mu) for mu in mus]


def named_points(geom: LatticeGeometry) -> Dict[str, np.ndarray]:
    return {"G": np.zeros(2), "K": np.array(geom.K), "K'": np.array(geom.Kprime), "M": 0.5 * geom.k1}


def named_path(geom: LatticeGeometry, path: str = "G-K-M-G", points_per_segment: int = 40) -> np.ndarray:
    """Piecewise-linear k-path through named points, e.g. ``G-K-M-G``."""
    points = named_points(geom)
    try:
        corners = [points[name.strip()] for name in path.split("-")]
    except KeyError as e:
        raise DomainError(f"unknown point {e.args[0]!r} in path {path!r}") from None
    if len(corners) < 2:
        raise DomainError(f"path {path!r} needs at least two points")
    if points_per_segment < 1:
        raise DomainError("points_per_segment must be positive")

    t = np.arange(points_per_segment)[:, None] / points_per_segment
    segments = [start + t * (end - start) for start, end in zip(corners[:-1], corners[1:])]
    return np.vstack(segments + [corners[-1][None, :]])


def band_path(geom: LatticeGeometry, V: PotentialSpectrum, eps: float, M: int, kpoints: Sequence,
              n_bands: int = 8, workers: int = 1) -> BandTable:
    kpoints = np.atleast_2d(np.asarray(kpoints, dtype=float))
    if kpoints.size == 0:
        raise DomainError("band path is empty")

    def bands_at(k):
        return solve(assemble_full(geom, V, k, eps, M), n_bands).eigenvalues

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            bands = list(pool.map(bands_at, kpoints))
    else:
        bands = [bands_at(k) for k in kpoints]

    steps = np.linalg.norm(np.diff(kpoints, axis=0), axis=1)
    arclength = np.concatenate([[0.0], np.cumsum(steps)])
    logger.info("band path: %d k-points, %d bands, M=%d", len(kpoints), n_bands, M)
    return BandTable(kpoints=kpoints, arclength=arclength, bands=np.array(bands))


# -- truncation ---------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceReport:
    M_list: List[int]
    eigenvalues: np.ndarray
    deltas: np.ndarray
    tol: float
    converged: Optional[bool] = field(default=None)

    def to_dict(self):
        return {
            "M": list(self.M_list),
            "eigenvalues": self.eigenvalues.tolist(),
            "deltas": self.deltas.tolist(),
            "tol": self.tol,
            "converged": self.converged,
        }


def convergence_study(geom: LatticeGeometry, V: PotentialSpectrum, eps: float, k, M_list: Sequence[int],
                      n: int = 3, tol: float = 1e-8) -> ConvergenceReport:
    M_list = [int(M) for M in M_list]
    if not M_list or any(b <= a for a, b in zip(M_list, M_list[1:])):
        raise DomainError(f"truncations must be strictly ascending, got {M_list}")

    values = np.array([solve(assemble_full(geom, V, k, eps, M), n).eigenvalues for M in M_list])
    deltas = np.max(np.abs(np.diff(values, axis=0)), axis=1) if len(M_list) > 1 else np.zeros(0)
    converged = None if len(M_list) == 1 else bool(deltas[-1] < tol)
    if converged is False:
        logger.warning("truncation not converged: last delta %.2e >= %.0e", deltas[-1], tol)
    return ConvergenceReport(M_list=M_list, eigenvalues=values, deltas=deltas, tol=tol, converged=converged)
