"""Polynomial null vectors of rank N-1 matrices.

For a square A, delete row j and column k to get A^(j,k). The vector Gamma_jk(A) has
k-th entry det(A^(j,k))^2; the remaining entries v^ solve

    A^(j,k) v^ = -col(A, k) without row j, times det(A^(j,k))^2.

Each entry is a polynomial of degree 2N-2 in the entries of A. When A has rank N-1 every
Gamma_jk(A) lies in the null space and at least one of them is non-zero. No choice among
them is continuous on the whole rank N-1 set, so ``best_nullvector`` is not either.

Indices ``j`` and ``k`` are 0-based.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import scipy.linalg

from .errors import DomainError, NumericalError, RankError

logger = logging.getLogger(__name__)

J_SYMPLECTIC = np.array([[0.0, 1.0], [-1.0, 0.0]])


@dataclass(frozen=True, eq=False)
class GammaResult:
    j: int
    k: int
    vector: np.ndarray
    subdet: complex

    @property
    def is_zero(self) -> bool:
        return not np.any(self.vector)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))


def _square(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise DomainError(f"expected a non-empty square matrix, got shape {A.shape}")
    return A


def gamma_jk(A, j: int, k: int, tol: float = 1e-14) -> GammaResult:
    A = _square(A)
    N = A.shape[0]
    if not (0 <= j < N and 0 <= k < N):
        raise DomainError(f"indices ({j}, {k}) out of range for N={N}")

    sub = np.delete(np.delete(A, j, axis=0), k, axis=1)
    subdet = complex(scipy.linalg.det(sub)) if N > 1 else 1.0 + 0j
    vector = np.zeros(N, dtype=complex)

    scale = max(np.linalg.norm(A), 1.0)
    if abs(subdet) <= tol * scale ** (N - 1):
        return GammaResult(j=j, k=k, vector=vector, subdet=subdet)

    s2 = subdet * subdet
    vector[k] = s2
    if N > 1:
        rhs = -np.delete(A[:, k], j) * s2
        vector[np.arange(N) != k] = scipy.linalg.solve(sub, rhs)
    return GammaResult(j=j, k=k, vector=vector, subdet=subdet)


def gamma_all(A) -> List[GammaResult]:
    A = _square(A)
    N = A.shape[0]
    return [gamma_jk(A, j, k) for j in range(N) for k in range(N)]


def best_nullvector(A, rank_tol: float = 1e-10, residual_tol: float = 1e-8) -> np.ndarray:
    """The Gamma_jk(A) of largest norm, after checking A has rank N-1."""
    A = _square(A)
    N = A.shape[0]
    norm_A = np.linalg.norm(A)
    if norm_A == 0.0:
        raise RankError("matrix is identically zero", {"N": N})

    s = scipy.linalg.svdvals(A)
    if s[-1] > rank_tol * s[0] or (N > 1 and s[-2] <= rank_tol * s[0]):
        raise RankError("matrix does not have rank N-1", {"singular_values": s.tolist()})

    best = max(gamma_all(A), key=lambda g: g.norm)
    if best.is_zero:
        raise RankError("every Gamma_jk vanishes", {"singular_values": s.tolist()})

    residual = float(np.linalg.norm(A @ best.vector))
    if residual > residual_tol * norm_A * best.norm:
        raise NumericalError("null vector residual above tolerance",
                             {"residual": residual, "j": best.j, "k": best.k})
    logger.debug("best null vector from Gamma_%d%d, norm %.3e", best.j, best.k, best.norm)
    return best.vector


def appendix_family(v, J: Optional[np.ndarray] = None) -> np.ndarray:
    """A(v) = conj(v) (J v)^T; rank one with A(v) v = 0 for antisymmetric J."""
    v = np.asarray(v, dtype=complex)
    J = J_SYMPLECTIC if J is None else np.asarray(J)
    return np.outer(np.conj(v), J @ v)


def parallel_sine(u, v) -> float:
    """Sine of the complex angle between u and v (0 when u is a complex multiple of v)."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise DomainError("angle with a zero vector is undefined")
    proj = np.vdot(v, u) / (nv * nv) * v
    return float(np.linalg.norm(u - proj) / nu)


def is_parallel(u, v, tol: float = 1e-8) -> bool:
    return parallel_sine(u, v) <= tol
