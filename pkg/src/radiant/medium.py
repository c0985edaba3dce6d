"""Physical parameters and atomic position samples.

Random samples are drawn with numpy's PCG64 bit generator
(``numpy.random.Generator(numpy.random.PCG64(seed))``), which is a
documented, versioned algorithm; a given seed yields the same positions on
every platform numpy supports.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .errors import DomainError

# Minimum allowed separation between two atoms, in units of 1/k0.
MIN_SEPARATION_K0 = 1e-6

# Dicke clusters must satisfy epsilon * k0 below this.
DICKE_LIMIT = 0.05


@dataclass(frozen=True)
class PhysicalParams:
    """Resonant wavenumber ``k0``, inverse correlation length ``mu`` and
    number density ``rho``. Rates derived from these are in units of the
    isolated-atom decay rate."""

    k0: float = 1.0
    mu: float = 0.0
    rho: float = 1.0

    def __post_init__(self):
        for name in ("k0", "mu", "rho"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value}")
        if self.k0 <= 0:
            raise DomainError(f"k0 must be positive, got {self.k0}")
        if self.mu < 0:
            raise DomainError(f"mu must be non-negative, got {self.mu}")
        if self.rho <= 0:
            raise DomainError(f"rho must be positive, got {self.rho}")

    def rescaled(self, length_scale: float) -> "PhysicalParams":
        """Parameters for the same physics with all lengths multiplied by
        ``length_scale``."""
        s = float(length_scale)
        return PhysicalParams(k0=self.k0 / s, mu=self.mu / s, rho=self.rho / s**3)


class Geometry(str, enum.Enum):
    UNIFORM_BALL = "uniform_ball"
    DICKE_CLUSTER = "dicke_cluster"
    EXPLICIT = "explicit"


@dataclass
class Sample:
    positions: np.ndarray
    geometry: Geometry = Geometry.EXPLICIT
    seed: int | None = None
    radius: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise DomainError(f"positions must have shape (n, 3), got {pos.shape}")
        if not np.all(np.isfinite(pos)):
            raise DomainError("positions must be finite")
        self.positions = pos
        self.geometry = Geometry(self.geometry)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    def __len__(self):
        return self.n

    @classmethod
    def from_positions(cls, positions) -> "Sample":
        return cls(np.asarray(positions, dtype=float), Geometry.EXPLICIT)

    def min_separation(self) -> float:
        if self.n < 2:
            return math.inf
        dist, _ = cKDTree(self.positions).query(self.positions, k=2)
        return float(dist[:, 1].min())


def _unit_ball_points(rng: np.random.Generator, n: int) -> np.ndarray:
    # isotropic direction times radius u**(1/3) (inverse CDF of 3 r^2 dr)
    direction = rng.standard_normal((n, 3))
    norms = np.linalg.norm(direction, axis=1)
    # a zero normal triple has probability zero but would divide by zero
    while np.any(norms == 0):
        bad = norms == 0
        direction[bad] = rng.standard_normal((int(bad.sum()), 3))
        norms = np.linalg.norm(direction, axis=1)
    # margin keeps |p| * radius <= radius after rounding
    r = np.minimum(np.cbrt(rng.random(n)), 1.0 - 4e-15)
    return direction / norms[:, None] * r[:, None]


def _separate(rng: np.random.Generator, pts: np.ndarray, min_sep: float) -> np.ndarray:
    """Resample the later point of every pair closer than ``min_sep``."""
    if len(pts) < 2 or min_sep <= 0:
        return pts
    while True:
        pairs = cKDTree(pts).query_pairs(min_sep, output_type="ndarray")
        if len(pairs) == 0:
            return pts
        later = np.unique(pairs.max(axis=1))
        pts[later] = _unit_ball_points(rng, len(later))


def _ball(n, radius, seed, min_separation) -> np.ndarray:
    if int(seed) != seed or seed < 0:
        raise DomainError(f"seed must be a non-negative integer, got {seed}")
    rng = np.random.Generator(np.random.PCG64(seed))
    unit = _unit_ball_points(rng, n)
    unit = _separate(rng, unit, min_separation / radius)
    return unit * radius


def uniform_ball_sample(n: int, radius: float, seed: int, *, k0: float = 1.0) -> Sample:
    """Draw ``n`` points i.i.d. uniform in a ball of the given radius.

    Pairs closer than ``1e-6 / k0`` are broken up by redrawing the later
    point from the same stream, so the result stays a pure function of
    ``(n, radius, seed, k0)``.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    if not radius > 0 or not math.isfinite(radius):
        raise DomainError(f"radius must be positive, got {radius}")
    if not k0 > 0:
        raise DomainError(f"k0 must be positive, got {k0}")
    pts = _ball(int(n), float(radius), seed, MIN_SEPARATION_K0 / k0)
    return Sample(pts, Geometry.UNIFORM_BALL, seed=seed, radius=float(radius))


def dicke_cluster(n: int, epsilon: float, k0: float, seed: int) -> Sample:
    """Uniform ball of radius ``epsilon`` much smaller than a wavelength."""
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    if not k0 > 0:
        raise DomainError(f"k0 must be positive, got {k0}")
    if epsilon * k0 >= DICKE_LIMIT:
        raise DomainError(
            f"Dicke condition violated: epsilon*k0 = {epsilon * k0:g} "
            f"must be below {DICKE_LIMIT}"
        )
    pts = _ball(int(n), float(epsilon), seed, MIN_SEPARATION_K0 / k0)
    return Sample(pts, Geometry.DICKE_CLUSTER, seed=seed, radius=float(epsilon))


def density_to_count(params: PhysicalParams, radius: float) -> int:
    """Number of atoms ``rho * 4 pi R^3 / 3`` in a ball, rounded, at least 1."""
    if not radius > 0:
        raise DomainError(f"radius must be positive, got {radius}")
    expected = params.rho * 4.0 * math.pi / 3.0 * radius**3
    return max(1, int(math.floor(expected + 0.5)))


def count_to_density(n: int, radius: float) -> float:
    return n / (4.0 * math.pi / 3.0 * radius**3)


def write_sample(sample: Sample, path) -> tuple[Path, Path]:
    """Write ``x,y,z`` CSV plus a JSON sidecar next to it.

    Returns the two paths written (CSV, sidecar).
    """
    path = Path(path)
    sidecar = path.with_suffix(".json")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "y", "z"])
        for x, y, z in sample.positions:
            writer.writerow([repr(float(x)), repr(float(y)), repr(float(z))])
    meta = {
        "geometry": sample.geometry.value,
        "seed": sample.seed,
        "n": sample.n,
        "radius": sample.radius,
    }
    sidecar.write_text(json.dumps(meta, indent=2) + "\n")
    return path, sidecar


def read_sample(path) -> Sample:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header] != ["x", "y", "z"]:
            raise DomainError(f"{path}: expected header x,y,z, got {header}")
        rows = [[float(v) for v in row] for row in reader if row]
    positions = np.array(rows, dtype=float).reshape(-1, 3)
    sidecar = path.with_suffix(".json")
    if not sidecar.exists():
        return Sample(positions)
    meta = json.loads(sidecar.read_text())
    if meta.get("n") is not None and meta["n"] != len(positions):
        raise DomainError(f"{sidecar}: n={meta['n']} but CSV has {len(positions)} rows")
    return Sample(
        positions,
        Geometry(meta.get("geometry", "explicit")),
        seed=meta.get("seed"),
        radius=meta.get("radius"),
    )
