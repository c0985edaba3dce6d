"""Eigendecomposition of the coupling matrix and super/subradiant statistics.

Eigenvalues are ordered by descending real part (decay rate), ties broken
by descending imaginary part (collective shift).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import DomainError, NumericalError
from .kernel import CouplingMatrix
from .medium import PhysicalParams

RESIDUAL_TOL = 1e-8
DEFAULT_THRESHOLD = 1.0


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None
    residuals: np.ndarray | None = None
    matrix_norm: float = float("nan")

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    @property
    def rates(self) -> np.ndarray:
        return self.eigenvalues.real

    @property
    def shifts(self) -> np.ndarray:
        return self.eigenvalues.imag

    def top_mode_mean(self, count: float) -> float:
        """Mean decay rate of the ``ceil(count)`` fastest modes."""
        m = max(1, min(self.n, math.ceil(count)))
        return float(self.rates[:m].mean())


@dataclass(frozen=True)
class SpectrumStats:
    n_superradiant: int
    mean_superradiant_rate: float | None
    max_rate: float
    threshold: float = DEFAULT_THRESHOLD

    def as_dict(self) -> dict:
        return {
            "n_superradiant": self.n_superradiant,
            "mean_superradiant_rate": self.mean_superradiant_rate,
            "max_rate": self.max_rate,
            "threshold": self.threshold,
        }


def sort_order(values: np.ndarray) -> np.ndarray:
    return np.lexsort((-values.imag, -values.real))


def _lapack_iteration_cap(n: int) -> int:
    # ZLAHQR/ZLAQR0 allow 30 sweeps per eigenvalue, with a floor of 10
    return 30 * max(10, n)


def eigendecompose(matrix, want_vectors: bool = False, verify: bool | None = None) -> Spectrum:
    """Full spectrum of a coupling matrix via LAPACK ``zgeev``.

    Eigenvectors are scaled to unit bilinear norm ``v.T @ v == 1``, which
    makes them orthonormal under the unconjugated product when the matrix is
    complex symmetric. Residuals ``|Mv - lambda v| / |M|_F`` are computed
    whenever eigenvectors are (``verify`` defaults to ``want_vectors``), and
    a residual above ``RESIDUAL_TOL`` raises :class:`NumericalError`.
    """
    entries = matrix.entries if isinstance(matrix, CouplingMatrix) else np.asarray(matrix)
    entries = np.asarray(entries, dtype=complex)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] < 1:
        raise DomainError(f"need a non-empty square matrix, got shape {entries.shape}")
    if not np.all(np.isfinite(entries)):
        raise DomainError("matrix has non-finite entries")
    n = entries.shape[0]
    if verify is None:
        verify = want_vectors
    norm = float(np.linalg.norm(entries))

    try:
        if want_vectors or verify:
            w, v = scipy.linalg.eig(entries, check_finite=False)
        else:
            w, v = scipy.linalg.eigvals(entries, check_finite=False), None
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"eigensolver did not converge within {_lapack_iteration_cap(n)} QR iterations: {exc}",
            iterations=_lapack_iteration_cap(n),
            residual=float("nan"),
        ) from exc

    order = sort_order(w)
    w = w[order]
    residuals = None
    if v is not None:
        v = v[:, order]
        r = np.linalg.norm(entries @ v - v * w, axis=0) / np.linalg.norm(v, axis=0)
        residuals = r / norm if norm > 0 else r
        worst = float(residuals.max())
        if not worst <= RESIDUAL_TOL:
            raise NumericalError(
                f"eigen-residual {worst:.3e} exceeds {RESIDUAL_TOL:g}",
                iterations=_lapack_iteration_cap(n),
                residual=worst,
            )
        if want_vectors:
            v = _bilinear_normalize(v)
        else:
            v = None
    return Spectrum(w, v, residuals, norm)


def _bilinear_normalize(v: np.ndarray) -> np.ndarray:
    scale = np.sqrt(np.einsum("ij,ij->j", v, v))
    # quasi-null vectors (v.T v ~ 0) keep their unit Euclidean norm
    ok = np.abs(scale) > 1e-12
    out = v.copy()
    out[:, ok] /= scale[ok]
    return out


def classify(spectrum: Spectrum, threshold: float = DEFAULT_THRESHOLD) -> SpectrumStats:
    """Count modes decaying strictly faster than ``threshold``."""
    if spectrum.n == 0:
        raise DomainError("empty spectrum")
    rates = spectrum.rates
    fast = rates[rates > threshold]
    return SpectrumStats(
        n_superradiant=int(fast.size),
        mean_superradiant_rate=float(fast.mean()) if fast.size else None,
        max_rate=float(rates.max()),
        threshold=float(threshold),
    )


def _check_large_sample(params: PhysicalParams, radius: float):
    if not params.k0 * radius >= 1:
        raise DomainError(f"prediction needs k0*R >= 1, got {params.k0 * radius:g}")


def superradiant_count_prediction(params: PhysicalParams, radius: float) -> float:
    """Expected number of superradiant modes of a large ball, ``(k0 R)^2 / pi``."""
    _check_large_sample(params, radius)
    return (params.k0 * radius) ** 2 / math.pi


def superradiant_rate_prediction(params: PhysicalParams, radius: float) -> float:
    """Common decay rate ``4 pi^2 R rho / (3 k0^2)`` of those modes; equals
    ``N / ((k0 R)^2 / pi)`` with ``N = rho 4 pi R^3 / 3``."""
    _check_large_sample(params, radius)
    return 4.0 * math.pi**2 * radius * params.rho / (3.0 * params.k0**2)


def write_spectrum_csv(spectrum: Spectrum, path) -> Path:
    path = Path(path)
    res = spectrum.residuals
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "re_lambda", "im_lambda", "residual"])
        for j, lam in enumerate(spectrum.eigenvalues):
            r = "" if res is None else repr(float(res[j]))
            writer.writerow([j, repr(float(lam.real)), repr(float(lam.imag)), r])
    return path
