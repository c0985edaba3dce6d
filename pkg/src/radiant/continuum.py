"""Unbounded-medium dispersion of the regularized kernel.

For a plane-wave amplitude pattern with wavenumber ``k`` the kernel acts
as multiplication by

    lambda(k) = (4 pi rho / (i k0)) / (k^2 + (mu - i k0)^2)

whose real part is

    Re lambda(k) = 8 pi rho mu / ((k^2 + mu^2 - k0^2)^2 + 4 mu^2 k0^2).

For ``mu < k0`` it peaks on the shell ``k^2 = k0^2 - mu^2``; for
``mu >= k0`` it peaks at ``k = 0``.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import brentq

from .errors import DomainError, NumericalError, PoleError, RegimeError
from .medium import PhysicalParams

DEFAULT_GRID_POINTS = 400
DEFAULT_GRID_KMAX = 3.0  # in units of k0
QUADRATURE_RMAX_MU = 40.0  # integrate radially out to this many correlation lengths


class Regime(str, enum.Enum):
    SUBCRITICAL_MU = "subcritical_mu"
    DICKE = "dicke"


def regime(params: PhysicalParams) -> Regime:
    """The boundary ``mu == k0`` belongs to the Dicke branch."""
    return Regime.SUBCRITICAL_MU if params.mu < params.k0 else Regime.DICKE


def dispersion(k, params: PhysicalParams):
    """Complex eigenvalue of the unbounded-medium kernel at wavenumber ``k``.

    Accepts a scalar or an array. With ``mu == 0`` the real part vanishes
    except at the pole ``k == k0``, which raises :class:`PoleError`.
    """
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr < 0):
        raise DomainError("wavenumber must be non-negative")
    k0, mu, rho = params.k0, params.mu, params.rho
    if mu == 0 and np.any(k_arr == k0):
        raise PoleError(f"unregularized dispersion has a pole at k = k0 = {k0}")
    value = (4.0 * math.pi * rho / (1j * k0)) / (k_arr**2 + (mu - 1j * k0) ** 2)
    return complex(value) if value.ndim == 0 else value


def decay_rate(k, params: PhysicalParams):
    """Real part of :func:`dispersion`, written without cancellation."""
    k0, mu, rho = params.k0, params.mu, params.rho
    k = np.asarray(k, dtype=float)
    a = k**2 + mu**2 - k0**2
    return 8.0 * math.pi * rho * mu / (a**2 + 4.0 * mu**2 * k0**2)


@dataclass(frozen=True)
class DispersionCurve:
    k_values: np.ndarray
    lambdas: np.ndarray
    params: PhysicalParams

    def write_csv(self, path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["k", "re_lambda", "im_lambda"])
            for k, lam in zip(self.k_values, self.lambdas):
                writer.writerow([repr(float(k)), repr(float(lam.real)), repr(float(lam.imag))])
        return path


def dispersion_curve(params: PhysicalParams, k_values=None, *, points: int = DEFAULT_GRID_POINTS,
                     k_max: float | None = None) -> DispersionCurve:
    if k_values is None:
        if k_max is None:
            k_max = DEFAULT_GRID_KMAX * params.k0
        k_values = np.linspace(0.0, k_max, points)
    k_values = np.asarray(k_values, dtype=float)
    if params.mu == 0:
        k_values = k_values[k_values != params.k0]
    return DispersionCurve(k_values, np.atleast_1d(dispersion(k_values, params)), params)


@dataclass(frozen=True)
class PeakSummary:
    k_peak: float
    lambda_peak: float
    width: float
    regime: Regime
    width_half_max: float | None = None

    def as_dict(self) -> dict:
        return {
            "regime": self.regime.value,
            "k_peak": self.k_peak,
            "lambda_peak": self.lambda_peak,
            "width_nominal": self.width,
            "width_half_max": self.width_half_max,
        }


def peak_summary(params: PhysicalParams, measure_width: bool = True) -> PeakSummary:
    """Location, height and nominal width of the decay-rate peak.

    The nominal width is ``2 mu`` for the shell and ``mu`` in the Dicke
    regime; the measured full width at half maximum is attached separately
    when ``measure_width`` is set.
    """
    k0, mu, rho = params.k0, params.mu, params.rho
    if mu == 0:
        raise DomainError("peak is a pole when mu = 0; a positive regulator is required")
    which = regime(params)
    if which is Regime.SUBCRITICAL_MU:
        k_peak = math.sqrt(k0**2 - mu**2)
        lam = 2.0 * math.pi * rho / (mu * k0**2)
        width = 2.0 * mu
    else:
        k_peak = 0.0
        lam = 8.0 * math.pi * rho * mu / (mu**2 + k0**2) ** 2
        width = mu
    fwhm = half_max_width(params, k_peak, lam) if measure_width else None
    return PeakSummary(k_peak, lam, width, which, fwhm)


def half_max_width(params: PhysicalParams, k_peak: float | None = None,
                   lambda_peak: float | None = None) -> float:
    """Length of the set ``{k >= 0 : Re lambda(k) >= peak / 2}``, found by
    root bracketing on the decay rate."""
    if k_peak is None or lambda_peak is None:
        s = peak_summary(params, measure_width=False)
        k_peak, lambda_peak = s.k_peak, s.lambda_peak
    half = 0.5 * lambda_peak

    def f(k):
        return float(decay_rate(k, params)) - half

    hi = max(k_peak, params.k0) + params.mu
    while f(hi) > 0:
        hi *= 2.0
    k_hi = brentq(f, k_peak, hi, xtol=1e-14, rtol=1e-14)
    if k_peak > 0 and f(0.0) < 0:
        k_lo = brentq(f, 0.0, k_peak, xtol=1e-14, rtol=1e-14)
    else:
        k_lo = 0.0
    return k_hi - k_lo


def locate_peak(params: PhysicalParams, k_max: float | None = None, points: int = 2001,
                rounds: int = 40) -> tuple[float, float]:
    """Grid search for the maximum of ``Re dispersion`` on ``[0, k_max]``,
    zooming in on the best cell each round. Returns ``(k, Re lambda)``."""
    if k_max is None:
        k_max = DEFAULT_GRID_KMAX * max(params.k0, params.mu)
    lo, hi = 0.0, float(k_max)
    best_k = 0.0
    for _ in range(rounds):
        grid = np.linspace(lo, hi, points)
        if params.mu == 0:
            grid = grid[grid != params.k0]
        vals = np.atleast_1d(dispersion(grid, params)).real
        i = int(np.argmax(vals))
        best_k = float(grid[i])
        step = (hi - lo) / (points - 1)
        lo, hi = max(0.0, best_k - step), best_k + step
        if step <= 1e-15 * max(1.0, best_k):
            break
    return best_k, float(dispersion(best_k, params).real)


def kernel_transform_quadrature(k: float, params: PhysicalParams, tol: float = 1e-10) -> complex:
    """Fourier transform of the regularized kernel by radial quadrature.

    After the angular integration the transform reduces to

        (4 pi rho / (i k0 k)) * int_0^inf sin(k r) exp((i k0 - mu) r) dr,

    integrated with QUADPACK's trigonometric-weight rule on ``[0, 40/mu]``
    (split into sum and difference frequencies unless ``k << k0``); the
    neglected tail is bounded by ``exp(-mu r_max) / mu`` and added to the
    error budget. Raises :class:`NumericalError` if the combined error
    exceeds ``tol`` relative to the result.
    """
    k0, mu, rho = params.k0, params.mu, params.rho
    if mu <= 0:
        raise DomainError("radial integral diverges without a regulator (mu > 0 required)")
    if not k > 0:
        raise DomainError(f"quadrature needs k > 0, got {k}")
    if not tol > 0:
        raise DomainError(f"tolerance must be positive, got {tol}")
    r_max = QUADRATURE_RMAX_MU / mu

    def damped(omega, kind, epsabs, epsrel):
        # int_0^r_max exp(-mu r) trig(omega r) dr with a smooth weight function
        if kind == "sin" and omega < 0:
            val, err = damped(-omega, kind, epsabs, epsrel)
            return -val, err
        omega = abs(omega)
        if omega == 0:
            if kind == "sin":
                return 0.0, 0.0
            return quad(lambda r: math.exp(-mu * r), 0.0, r_max, epsabs=epsabs, epsrel=epsrel)
        return quad(lambda r: math.exp(-mu * r), 0.0, r_max, weight=kind, wvar=omega,
                    epsabs=epsabs, epsrel=epsrel, limit=5000)

    def integrate_product(epsabs, epsrel):
        # k << k0: weight carries the fast k0 oscillation, sin(kr) stays smooth
        def f(r):
            return math.exp(-mu * r) * math.sin(k * r)

        opts = dict(wvar=k0, epsabs=epsabs, epsrel=epsrel, limit=5000)
        re, e1 = quad(f, 0.0, r_max, weight="cos", **opts)
        im, e2 = quad(f, 0.0, r_max, weight="sin", **opts)
        return complex(re, im), math.hypot(e1, e2)

    def integrate_split(epsabs, epsrel):
        # sin(kr) exp(i k0 r) = [sin((k+k0) r) + sin((k-k0) r)] / 2
        #                     + i [cos((k-k0) r) - cos((k+k0) r)] / 2
        parts = [
            damped(k + k0, "sin", epsabs, epsrel),
            damped(k - k0, "sin", epsabs, epsrel),
            damped(k - k0, "cos", epsabs, epsrel),
            damped(k + k0, "cos", epsabs, epsrel),
        ]
        (s1, e1), (s2, e2), (c1, e3), (c2, e4) = parts
        value = complex(0.5 * (s1 + s2), 0.5 * (c1 - c2))
        return value, 0.5 * math.sqrt(e1**2 + e2**2 + e3**2 + e4**2)

    # the split form cancels badly for k << k0; try the product form first there
    schemes = [integrate_split, integrate_product]
    if k < 0.1 * k0:
        schemes.reverse()
    prefactor = 4.0 * math.pi * rho / (1j * k0 * k)
    tail = math.exp(-mu * r_max) / mu
    best = None
    with warnings.catch_warnings():
        # QUADPACK roundoff warnings are folded into the error budget below
        warnings.simplefilter("ignore", IntegrationWarning)
        for integrate in schemes:
            rough, _ = integrate(0.0, 1e-6)
            value, err = integrate(0.25 * tol * abs(rough), 0.25 * tol)
            result = prefactor * value
            budget = abs(prefactor) * (err + tail)
            if budget <= tol * abs(result):
                return result
            if best is None or budget < best[1]:
                best = (result, budget)
    raise NumericalError(
        f"quadrature error {best[1]:.3e} exceeds tolerance {tol:g} * |result|",
        estimate=best[0],
        residual=best[1],
    )


def _check_box(box_side):
    if not box_side > 0:
        raise DomainError(f"box side must be positive, got {box_side}")


def mode_count_shell(params: PhysicalParams, box_side: float) -> float:
    """Plane-wave modes of a cubic box of side ``L`` inside the shell of
    radius ``k0`` and thickness ``2 mu``: ``mu k0^2 L^3 / pi^2``."""
    if params.mu >= params.k0:
        raise RegimeError(
            f"mu = {params.mu} >= k0 = {params.k0}: no superradiant shell, use mode_count_dicke"
        )
    _check_box(box_side)
    return (2.0 * params.mu) * (4.0 * math.pi * params.k0**2) / (2.0 * math.pi / box_side) ** 3


def mode_count_dicke(params: PhysicalParams, box_side: float) -> float:
    """Plane-wave modes of a cubic box of side ``L`` inside the k-space ball
    of radius ``mu``: ``mu^3 L^3 / (6 pi^2)``."""
    if params.mu < params.k0:
        raise RegimeError(
            f"mu = {params.mu} < k0 = {params.k0}: peak is a shell, use mode_count_shell"
        )
    _check_box(box_side)
    return (4.0 * math.pi * params.mu**3 / 3.0) / (2.0 * math.pi / box_side) ** 3


def superradiant_volume_mode_count(params: PhysicalParams) -> float:
    """Mode count of a box one correlation length on a side."""
    if params.mu <= 0:
        raise DomainError("correlation length is infinite for mu = 0")
    side = 1.0 / params.mu
    if regime(params) is Regime.SUBCRITICAL_MU:
        return mode_count_shell(params, side)
    return mode_count_dicke(params, side)


def mode_count_identity_check(params: PhysicalParams) -> tuple[float, float]:
    """Atoms per superradiant mode in one correlation volume (``lhs``)
    against the geometric factor times the peak rate (``rhs``).

    Shell: ``rhs = (pi/2) * 2 pi rho / (mu k0^2)``. Dicke: ``rhs = (3 pi/4) *
    8 pi rho / mu^3``, the large-``mu`` form of the peak.
    """
    k0, mu, rho = params.k0, params.mu, params.rho
    if mu <= 0 or mu == k0:
        raise DomainError(f"identity needs mu > 0 and mu != k0, got mu={mu}, k0={k0}")
    atoms = rho * mu**-3
    lhs = atoms / superradiant_volume_mode_count(params)
    if mu < k0:
        rhs = (math.pi / 2.0) * (2.0 * math.pi * rho / (mu * k0**2))
    else:
        rhs = (3.0 * math.pi / 4.0) * (8.0 * math.pi * rho / mu**3)
    return lhs, rhs


def write_peaks_json(summary: PeakSummary | None, path, extra: dict | None = None) -> Path:
    path = Path(path)
    if summary is None:
        data = dict.fromkeys(["regime", "k_peak", "lambda_peak", "width_nominal", "width_half_max"])
    else:
        data = summary.as_dict()
    if extra:
        data.update(extra)
    path.write_text(json.dumps(data, indent=2) + "\n")
    return path
