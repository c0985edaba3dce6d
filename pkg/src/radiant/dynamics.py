"""Prepared states, their expected decay rates, and collective decay in time.

Amplitudes evolve as ``d beta / dt = -(1/2) M beta`` (time in units of the
isolated-atom lifetime), so an eigenmode's intensity decays as
``exp(-Re(lambda) t)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from .continuum import peak_summary
from .errors import DomainError, NumericalError
from .kernel import CouplingMatrix, assemble_matrix
from .medium import PhysicalParams, Sample, density_to_count, uniform_ball_sample
from .spectra import eigendecompose

# plane-wave experiment needs the sample to span this many correlation lengths
MIN_RADIUS_MU = 8.0
QUOTIENT_TOLERANCE = 0.15


def _entries(matrix) -> np.ndarray:
    return matrix.entries if isinstance(matrix, CouplingMatrix) else np.asarray(matrix, dtype=complex)


def _check_state(state, n):
    state = np.asarray(state, dtype=complex)
    if state.shape != (n,):
        raise DomainError(f"state has shape {state.shape}, matrix is {n}x{n}")
    if not np.any(state != 0):
        raise DomainError("state is identically zero")
    return state


def rayleigh_quotient(state, matrix) -> complex:
    """Expected (rate + i shift) of a prepared state: ``b^H M b / b^H b``."""
    m = _entries(matrix)
    b = _check_state(state, m.shape[0])
    return complex(np.vdot(b, m @ b) / np.vdot(b, b))


def bilinear_quotient(state, matrix) -> complex:
    """Unconjugated ``b^T M b / b^T b``; equals the eigenvalue on eigenvectors
    of a complex symmetric matrix."""
    m = _entries(matrix)
    b = _check_state(state, m.shape[0])
    denom = b @ b
    if denom == 0:
        raise DomainError("state is quasi-null (b^T b = 0)")
    return complex(b @ m @ b / denom)


@dataclass(frozen=True)
class WavePacket:
    carrier: np.ndarray
    center: np.ndarray
    envelope_mu: float
    amplitudes: np.ndarray

    def normalized(self, conjugate: bool = True) -> np.ndarray:
        b = self.amplitudes
        norm = np.vdot(b, b) if conjugate else b @ b
        return b / np.sqrt(norm)


def wave_packet(sample: Sample, carrier, center=(0.0, 0.0, 0.0), envelope_mu: float = 0.0) -> WavePacket:
    """``b_a = exp(i k.r_a) exp(-envelope_mu |r_a - center|)``."""
    carrier = np.asarray(carrier, dtype=float)
    center = np.asarray(center, dtype=float)
    if envelope_mu < 0:
        raise DomainError("envelope_mu must be non-negative")
    r = sample.positions
    amp = np.exp(1j * (r @ carrier)) * np.exp(-envelope_mu * np.linalg.norm(r - center, axis=1))
    if not np.any(amp != 0):
        raise DomainError("wave packet vanishes on every atom")
    return WavePacket(carrier, center, float(envelope_mu), amp)


def shell_wavenumber(params: PhysicalParams) -> float:
    return math.sqrt(params.k0**2 - params.mu**2)


def _check_experiment(params, radius):
    if not params.mu > 0:
        raise DomainError("plane-wave experiment needs mu > 0")
    if not params.mu < params.k0:
        raise DomainError("plane-wave experiment needs mu < k0 (superradiant shell regime)")
    if radius < MIN_RADIUS_MU / params.mu:
        raise DomainError(
            f"radius {radius:g} < 8/mu = {MIN_RADIUS_MU / params.mu:g}; the sample must span "
            "the kernel's range"
        )


def _plane_wave_rate(sample, matrix, k):
    packet = wave_packet(sample, (0.0, 0.0, k))
    return rayleigh_quotient(packet.amplitudes, matrix).real


def plane_wave_quotient_experiment(params: PhysicalParams, radius: float, seed: int,
                                   carrier: float | None = None) -> float:
    """Decay rate of a plane wave prepared on a random uniform ball.

    The sample holds ``density_to_count(params, radius)`` atoms; the carrier
    runs along z with magnitude ``sqrt(k0^2 - mu^2)`` unless ``carrier`` is
    given. No envelope is applied: the regulator already lives in the
    kernel. For large samples the result approaches ``1 + 2 pi rho /
    (mu k0^2)``, the self term plus the continuum peak rate.
    """
    _check_experiment(params, radius)
    sample = uniform_ball_sample(density_to_count(params, radius), radius, seed, k0=params.k0)
    matrix = assemble_matrix(sample, params)
    k = shell_wavenumber(params) if carrier is None else float(carrier)
    return _plane_wave_rate(sample, matrix, k)


def quotient_report(params: PhysicalParams, radius: float, seed: int,
                    tolerance: float = QUOTIENT_TOLERANCE) -> dict:
    """On-shell and k = 0 plane-wave rates with the continuum prediction."""
    _check_experiment(params, radius)
    n = density_to_count(params, radius)
    sample = uniform_ball_sample(n, radius, seed, k0=params.k0)
    matrix = assemble_matrix(sample, params)
    measured = _plane_wave_rate(sample, matrix, shell_wavenumber(params))
    off_peak = _plane_wave_rate(sample, matrix, 0.0)
    # +1 is the diagonal self-coupling of each atom
    predicted = 1.0 + peak_summary(params, measure_width=False).lambda_peak
    rel = abs(measured - predicted) / predicted
    return {
        "predicted": predicted,
        "measured": measured,
        "off_peak_measured": off_peak,
        "relative_error": rel,
        "n": n,
        "seed": seed,
        "tolerance": tolerance,
        "pass": bool(rel <= tolerance and measured > off_peak),
    }


@dataclass(frozen=True)
class DecayTrace:
    times: np.ndarray
    intensities: np.ndarray
    initial_state: str = "custom"
    method: str = "spectral"

    def write_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "intensity"])
            for t, i in zip(self.times, self.intensities):
                writer.writerow([repr(float(t)), repr(float(i))])
        return path


def _check_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise DomainError("times must be a non-empty 1-d sequence")
    if times[0] != 0:
        raise DomainError("times must start at 0")
    if np.any(np.diff(times) < 0):
        raise DomainError("times must be sorted ascending")
    return times


def _spectral_coefficients(m, b0):
    try:
        spec = eigendecompose(m, want_vectors=True)
    except NumericalError:
        return None
    v, lam = spec.eigenvectors, spec.eigenvalues
    scale = np.linalg.norm(b0)
    c = v.T @ b0
    if np.linalg.norm(v @ c - b0) <= 1e-10 * scale:
        return v, lam, c
    # degenerate eigenvalues: zgeev's vectors need not be bilinear-orthogonal
    if np.linalg.cond(v) > 1e10:
        return None
    c = np.linalg.solve(v, b0)
    if np.linalg.norm(v @ c - b0) <= 1e-10 * scale:
        return v, lam, c
    return None


def propagate_stepper(m, b0, times) -> np.ndarray:
    """Amplitudes at ``times`` from an adaptive 8th-order Runge-Kutta
    integration (DOP853, rtol 1e-12); rows are time slices."""
    times = _check_times(times)
    if times[-1] == 0:
        return np.tile(b0, (len(times), 1))
    sol = solve_ivp(lambda t, y: -0.5 * (m @ y), (0.0, times[-1]), b0.astype(complex),
                    method="DOP853", t_eval=times, rtol=1e-12,
                    atol=1e-14 * float(np.linalg.norm(b0)))
    if not sol.success:
        raise NumericalError(f"time stepper failed: {sol.message}")
    return sol.y.T


def propagate(matrix, initial, times) -> tuple[np.ndarray, str]:
    """Amplitude vectors at each time (rows) and the method used.

    Uses the eigen-expansion ``b(t) = V exp(-Lambda t / 2) V^-1 b(0)``; a
    matrix that is not diagonalizable to tolerance falls back to
    :func:`propagate_stepper`.
    """
    m = _entries(matrix)
    b0 = _check_state(initial, m.shape[0])
    times = _check_times(times)
    expansion = _spectral_coefficients(m, b0)
    if expansion is None:
        return propagate_stepper(m, b0, times), "stepper"
    v, lam, c = expansion
    phases = np.exp(-0.5 * np.outer(times, lam))
    amps = (phases * c) @ v.T
    amps[times == 0] = b0
    return amps, "spectral"


def evolve(matrix, initial, times, label: str = "custom") -> DecayTrace:
    """Normalized excitation ``|b(t)|^2 / |b(0)|^2`` at each time."""
    amps, method = propagate(matrix, initial, times)
    b0 = np.asarray(initial, dtype=complex)
    intensity = np.sum(np.abs(amps) ** 2, axis=1) / np.vdot(b0, b0).real
    return DecayTrace(np.asarray(times, dtype=float), intensity, label, method)


def numerical_range_real_bounds(matrix) -> tuple[float, float]:
    """Extremes of ``Re(b^H M b)`` over unit vectors: the eigenvalue range of
    the Hermitian part ``(M + M^H) / 2``."""
    m = _entries(matrix)
    h = 0.5 * (m + m.conj().T)
    w = scipy.linalg.eigvalsh(h)
    return float(w[0]), float(w[-1])
