"""Scalar-photon exchange kernel and the dense coupling matrix."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import DomainError
from .medium import PhysicalParams, Sample

# Self-coupling K_aa. The real part is the r -> 0 limit of sin(k0 r)/(k0 r);
# the divergent single-atom shift is absorbed into the resonance frequency.
DIAGONAL_VALUE = 1.0 + 0.0j


def kernel_values(r, params: PhysicalParams):
    """Vectorised ``exp((i k0 - mu) r) / (i k0 r)`` for distances ``r > 0``."""
    r = np.asarray(r, dtype=float)
    k0, mu = params.k0, params.mu
    return np.exp((1j * k0 - mu) * r) / (1j * k0 * r)


def eval_kernel(separation, params: PhysicalParams) -> complex:
    """Kernel for a single separation vector.

    With ``mu == 0`` this is the bare ``exp(i k0 r) / (i k0 r)``.
    """
    r = float(np.linalg.norm(np.asarray(separation, dtype=float)))
    if r == 0.0:
        raise DomainError("kernel is singular at zero separation; use the diagonal convention")
    return complex(kernel_values(r, params))


@dataclass
class CouplingMatrix:
    entries: np.ndarray
    params: PhysicalParams
    diagonal_value: complex = DIAGONAL_VALUE

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.entries))

    def write_binary(self, path) -> Path:
        """Raw little-endian float64 pairs (re, im), row-major, no header."""
        path = Path(path)
        self.entries.astype("<c16").tofile(path)
        return path

    def write_csv(self, path) -> Path:
        """One CSV line per matrix row: re0,im0,re1,im1,..."""
        path = Path(path)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            for row in self.entries:
                pairs = np.column_stack([row.real, row.imag]).ravel()
                writer.writerow([repr(float(v)) for v in pairs])
        return path


def read_matrix_binary(path) -> np.ndarray:
    raw = np.fromfile(path, dtype="<c16")
    n = math.isqrt(raw.size)
    if n * n != raw.size:
        raise DomainError(f"{path}: {raw.size} complex entries is not a square matrix")
    return raw.reshape(n, n).astype(complex)


def assemble_matrix(sample: Sample, params: PhysicalParams) -> CouplingMatrix:
    """Dense ``n x n`` matrix of pairwise kernel values with unit diagonal.

    Only the upper triangle is evaluated; ``squareform`` mirrors it, so the
    result is exactly symmetric.
    """
    n = sample.n
    if n < 1:
        raise DomainError("sample is empty")
    if n == 1:
        return CouplingMatrix(np.full((1, 1), DIAGONAL_VALUE), params)
    d = pdist(sample.positions)
    if np.any(d == 0.0):
        k = int(np.flatnonzero(d == 0.0)[0])
        a, b = _condensed_to_pair(k, n)
        raise DomainError(f"atoms {a} and {b} coincide; the kernel is singular there")
    upper = kernel_values(d, params)
    entries = squareform(upper.real) + 1j * squareform(upper.imag)
    np.fill_diagonal(entries, DIAGONAL_VALUE)
    return CouplingMatrix(entries, params)


def _condensed_to_pair(k: int, n: int) -> tuple[int, int]:
    # inverse of pdist's condensed index
    a = 0
    while k >= n - a - 1:
        k -= n - a - 1
        a += 1
    return a, a + 1 + k
