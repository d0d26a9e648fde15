"""Symmetric eigenanalysis and the period-resonance counting functions.

For a symmetric matrix A and a period T the thresholds 4 k^2 pi^2 / T^2
(k = 0, 1, ...) are the squared angular frequencies of the Fourier modes
of a T-periodic loop.  ``j_k`` counts eigenvalues above the k-th threshold,
``resonance_report`` lists thresholds that hit the spectrum and
``lambda_block`` is the action of the linearised period map on mode k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConvergenceError, NotSymmetricError, ResonanceError

SYMMETRY_RTOL = 1e-12
JACOBI_RTOL = 1e-13
MAX_SWEEPS = 100


def as_sym_matrix(A) -> np.ndarray:
    """Validate ``A`` as a finite real symmetric square matrix."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotSymmetricError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NotSymmetricError("matrix has non-finite entries")
    scale = 1.0 + (np.max(np.abs(A)) if A.size else 0.0)
    asym = np.max(np.abs(A - A.T)) if A.size else 0.0
    if asym > SYMMETRY_RTOL * scale:
        raise NotSymmetricError(f"matrix is not symmetric (max |a_ij - a_ji| = {asym:.3g})")
    return A


def default_cluster_tol(A: np.ndarray) -> float:
    return 1e-9 * (1.0 + np.linalg.norm(A))


def default_tol_res(A: np.ndarray) -> float:
    return 1e-8 * (1.0 + np.linalg.norm(A))


def threshold(k: int, T: float) -> float:
    """Squared frequency 4 k^2 pi^2 / T^2 of Fourier mode k."""
    return 4.0 * k * k * math.pi**2 / (T * T)


@dataclass(frozen=True)
class SpectralData:
    """Clustered spectrum of a symmetric matrix.

    ``eigenvalues`` holds one representative per cluster (ascending) and
    ``multiplicities`` the cluster sizes.  ``values`` is the full spectrum
    with repetition, matching the columns of ``eigenbasis``.
    """

    eigenvalues: tuple[float, ...]
    multiplicities: tuple[int, ...]
    eigenbasis: np.ndarray = field(repr=False)
    values: tuple[float, ...]
    cluster_tol: float
    matrix: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix))

    def clusters(self):
        """Yield ``(eigenvalue, multiplicity, columns)`` per cluster."""
        start = 0
        for lam, mult in zip(self.eigenvalues, self.multiplicities):
            yield lam, mult, self.eigenbasis[:, start:start + mult]
            start += mult


def _jacobi(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = A.copy()
    n = a.shape[0]
    q = np.eye(n)
    stop = JACOBI_RTOL * (1.0 + np.linalg.norm(A))
    for _ in range(MAX_SWEEPS):
        off = math.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2))
        if off <= stop:
            return np.diag(a).copy(), q
        for p in range(n - 1):
            for r in range(p + 1, n):
                apr = a[p, r]
                if apr == 0.0:
                    continue
                theta = (a[r, r] - a[p, p]) / (2.0 * apr)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # a <- J^T a J with J the (p, r) plane rotation
                ap = a[:, p].copy()
                ar = a[:, r].copy()
                a[:, p] = c * ap - s * ar
                a[:, r] = s * ap + c * ar
                ap = a[p, :].copy()
                ar = a[r, :].copy()
                a[p, :] = c * ap - s * ar
                a[r, :] = s * ap + c * ar
                a[p, r] = a[r, p] = 0.0
                qp = q[:, p].copy()
                qr = q[:, r].copy()
                q[:, p] = c * qp - s * qr
                q[:, r] = s * qp + c * qr
    raise ConvergenceError(f"Jacobi iteration did not converge in {MAX_SWEEPS} sweeps")


def eigen_sym(A, cluster_tol: float | None = None) -> SpectralData:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations."""
    A = as_sym_matrix(A)
    if cluster_tol is None:
        cluster_tol = default_cluster_tol(A)
    vals, vecs = _jacobi(A)
    order = np.argsort(vals, kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]

    reps, mults = [], []
    group = [vals[0]] if len(vals) else []
    for v in vals[1:]:
        if v - group[-1] <= cluster_tol:
            group.append(v)
        else:
            reps.append(float(np.mean(group)))
            mults.append(len(group))
            group = [v]
    if group:
        reps.append(float(np.mean(group)))
        mults.append(len(group))

    return SpectralData(
        eigenvalues=tuple(reps),
        multiplicities=tuple(mults),
        eigenbasis=vecs,
        values=tuple(float(v) for v in vals),
        cluster_tol=float(cluster_tol),
        matrix=A,
    )


def spectrum(A) -> SpectralData:
    """Accept either a matrix or an already computed :class:`SpectralData`."""
    return A if isinstance(A, SpectralData) else eigen_sym(A)


def k_cutoff(A, T: float) -> int:
    """Smallest K >= 0 whose threshold lies above every eigenvalue."""
    spec = spectrum(A)
    lam_max = max(spec.values)
    if lam_max < 0:
        return 0
    K = int(math.floor(T * math.sqrt(lam_max) / (2.0 * math.pi))) + 1
    while threshold(K, T) <= lam_max:
        K += 1
    return K


def j_k(A, T: float, k: int, tol_res: float | None = None, on_resonance: str = "raise") -> int:
    """Number of eigenvalues (with multiplicity) strictly above 4 k^2 pi^2 / T^2.

    An eigenvalue within ``tol_res`` of the threshold raises
    :class:`ResonanceError`; with ``on_resonance="exclude"`` it is counted as
    not exceeding the threshold instead.
    """
    if T <= 0:
        raise ValueError("period T must be positive")
    if k < 0:
        raise ValueError("mode index k must be nonnegative")
    spec = spectrum(A)
    if tol_res is None:
        tol_res = default_tol_res(spec.matrix)
    theta = threshold(k, T)
    count = 0
    for lam, mult in zip(spec.eigenvalues, spec.multiplicities):
        if abs(lam - theta) <= tol_res:
            if on_resonance == "raise":
                raise ResonanceError(
                    f"eigenvalue {lam:.12g} is resonant with mode k={k} (threshold {theta:.12g})",
                    k=k,
                )
            continue
        if lam > theta:
            count += mult
    return count


def jk_table(A, T: float, tol_res: float | None = None) -> dict[int, int]:
    """``{k: j_k}`` for 0 <= k <= k_cutoff, resonant eigenvalues excluded."""
    spec = spectrum(A)
    return {
        k: j_k(spec, T, k, tol_res, on_resonance="exclude")
        for k in range(k_cutoff(spec, T) + 1)
    }


@dataclass(frozen=True)
class ResonanceReport:
    resonant_ks: frozenset[int]
    matched_eigenvalues: dict[int, float]
    k_cutoff: int
    tol_res: float

    @property
    def resonant_modes(self) -> frozenset[int]:
        """Resonant k >= 1 (k = 0 only signals a singular matrix)."""
        return frozenset(k for k in self.resonant_ks if k >= 1)

    @property
    def singular(self) -> bool:
        return 0 in self.resonant_ks

    def to_dict(self) -> dict:
        return {
            "resonant_ks": sorted(self.resonant_ks),
            "matched_eigenvalues": {str(k): v for k, v in sorted(self.matched_eigenvalues.items())},
            "k_cutoff": self.k_cutoff,
            "tol_res": self.tol_res,
        }


def resonance_report(A, T: float, tol_res: float | None = None) -> ResonanceReport:
    if T <= 0:
        raise ValueError("period T must be positive")
    spec = spectrum(A)
    if tol_res is None:
        tol_res = default_tol_res(spec.matrix)
    K = k_cutoff(spec, T)
    matched = {}
    for k in range(K + 1):
        theta = threshold(k, T)
        for lam in spec.eigenvalues:
            if abs(lam - theta) <= tol_res:
                matched[k] = lam
                break
    return ResonanceReport(frozenset(matched), matched, K, float(tol_res))


def lambda_block(A, T: float, k: int) -> np.ndarray:
    """(4k^2 pi^2 Id - T^2 A) / (4k^2 pi^2 + T^2), the mode-k block of Id - L_A."""
    A = as_sym_matrix(A)
    w = 4.0 * k * k * math.pi**2
    d = w + T * T
    return (w / d) * np.eye(A.shape[0]) - (T * T / d) * A


class MorseIndex(NamedTuple):
    count: int
    degenerate: bool


def morse_index(A) -> MorseIndex:
    """Number of negative eigenvalues, flagging any eigenvalue near zero."""
    spec = spectrum(A)
    tol = spec.cluster_tol
    count = sum(1 for v in spec.values if v < -tol)
    degenerate = any(abs(v) <= tol for v in spec.values)
    return MorseIndex(count, degenerate)
