"""Command-line front end.

Every subcommand writes machine-readable files into ``--output`` (a
directory) and is deterministic given its flags. Exit codes: 0 success,
1 file or config I/O error, 2 usage or validation error, 3 numerical failure.

Amplitudes in ``evolve`` follow d(beta)/dt = -(1/2) M beta, so intensities
of eigenmodes decay as exp(-Re(lambda) t), with t in isolated-atom lifetimes.
"""

from __future__ import annotations

import argparse
import csv
import functools
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import continuum, dynamics, spectra
from .errors import DomainError, NumericalError
from .kernel import assemble_matrix
from .medium import (
    PhysicalParams,
    count_to_density,
    density_to_count,
    dicke_cluster,
    uniform_ball_sample,
    write_sample,
)
from .parallel import map_seeds

log = logging.getLogger("radiant")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

TRANSFORM_TOLERANCE = 1e-8
IDENTITY_TOLERANCE = 1e-12

DEFAULTS = {
    "k0": 1.0,
    "mu": 0.0,
    "rho": None,
    "radius": None,
    "n": None,
    "seed": 0,
    "output": ".",
    "format": "csv",
    "ensemble": 1,
}


@dataclass
class RunConfig:
    k0: float = 1.0
    mu: float = 0.0
    rho: float | None = None
    radius: float | None = None
    n: int | None = None
    seed: int = 0
    output_path: str = "."
    format: str = "csv"
    ensemble: int = 1

    def params(self, default_rho: float | None = None) -> PhysicalParams:
        rho = self.rho if self.rho is not None else default_rho
        if rho is None:
            raise DomainError("--rho is required")
        return PhysicalParams(k0=self.k0, mu=self.mu, rho=rho)

    def resolve_sample_size(self) -> tuple[int, float]:
        """Atom count and density, reconciled against the radius."""
        if self.radius is None:
            raise DomainError("--radius is required")
        if not self.radius > 0:
            raise DomainError(f"radius must be positive, got {self.radius}")
        if self.n is None and self.rho is None:
            raise DomainError("give --n or --rho (or both, consistently)")
        if self.n is not None and self.n < 1:
            raise DomainError(f"n must be at least 1, got {self.n}")
        if self.rho is None:
            return self.n, count_to_density(self.n, self.radius)
        expected = density_to_count(PhysicalParams(self.k0, self.mu, self.rho), self.radius)
        if self.n is not None and self.n != expected:
            raise DomainError(
                f"--n {self.n} is inconsistent with --rho {self.rho} and --radius "
                f"{self.radius} (which give {expected} atoms)"
            )
        return expected, self.rho

    @property
    def seeds(self) -> list[int]:
        if self.ensemble < 1:
            raise DomainError(f"--ensemble must be at least 1, got {self.ensemble}")
        return list(range(self.seed, self.seed + self.ensemble))


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def write_json(path: Path, data) -> Path:
    path.write_text(json.dumps(data, indent=2, default=_json_default) + "\n")
    return path


def write_table(outdir: Path, name: str, header, rows, fmt: str) -> Path:
    """``name.csv`` or ``name.json`` depending on ``fmt``; floats at full
    round-trip precision."""
    rows = [[repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row] for row in rows]
    if fmt == "json":
        records = [dict(zip(header, (_parse(v) for v in row))) for row in rows]
        return write_json(outdir / f"{name}.json", records)
    path = outdir / f"{name}.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _parse(v):
    if isinstance(v, str):
        try:
            return float(v)
        except ValueError:
            return v
    return v


def _status(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def _inputs(cfg: RunConfig, **extra) -> dict:
    data = {"k0": cfg.k0, "mu": cfg.mu, "rho": cfg.rho, "radius": cfg.radius, "n": cfg.n, "seed": cfg.seed}
    data.update(extra)
    return data


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _make_sample(geometry, n, radius, k0, seed):
    if geometry == "dicke":
        return dicke_cluster(n, radius, k0, seed)
    return uniform_ball_sample(n, radius, seed, k0=k0)


def cmd_sample(cfg: RunConfig, args) -> int:
    n, _ = cfg.resolve_sample_size()
    out = _outdir(cfg)
    for seed in cfg.seeds:
        sample = _make_sample(args.geometry, n, cfg.radius, cfg.k0, seed)
        name = "sample" if cfg.ensemble == 1 else f"sample_seed{seed}"
        if cfg.format == "json":
            write_json(out / f"{name}.json", {
                "geometry": sample.geometry.value, "seed": seed, "n": sample.n,
                "radius": sample.radius, "positions": sample.positions,
            })
        else:
            write_sample(sample, out / f"{name}.csv")
    return EXIT_OK


def _spectrum_run(seed, *, geometry, n, radius, params, threshold):
    sample = _make_sample(geometry, n, radius, params.k0, seed)
    spec = spectra.eigendecompose(assemble_matrix(sample, params), want_vectors=False, verify=True)
    return spec


def _predictions(params, radius, spec):
    try:
        count = spectra.superradiant_count_prediction(params, radius)
        rate = spectra.superradiant_rate_prediction(params, radius)
    except DomainError as exc:
        return {"note": str(exc)}
    top = spec.top_mode_mean(count)
    return {
        "superradiant_count": count,
        "superradiant_rate": rate,
        "top_mode_count": math.ceil(count),
        "top_mode_mean_rate": top,
        "top_mode_rate_ratio": top / rate,
    }


def cmd_spectrum(cfg: RunConfig, args) -> int:
    n, rho = cfg.resolve_sample_size()
    params = PhysicalParams(cfg.k0, cfg.mu, rho)
    out = _outdir(cfg)
    run = functools.partial(_spectrum_run, geometry=args.geometry, n=n, radius=cfg.radius,
                            params=params, threshold=args.threshold)
    runs = []
    for seed, spec in map_seeds(run, cfg.seeds):
        name = "spectrum" if cfg.ensemble == 1 else f"spectrum_seed{seed}"
        rows = [(j, lam.real, lam.imag, float(spec.residuals[j]))
                for j, lam in enumerate(spec.eigenvalues)]
        write_table(out, name, ["index", "re_lambda", "im_lambda", "residual"], rows, cfg.format)
        stats = spectra.classify(spec, args.threshold)
        runs.append({
            "seed": seed,
            "stats": stats.as_dict(),
            "predictions": _predictions(params, cfg.radius, spec),
            "trace": [spec.eigenvalues.sum().real, spec.eigenvalues.sum().imag],
            "max_residual": float(spec.residuals.max()),
        })
    report = {"inputs": _inputs(cfg, n=n, rho=rho, geometry=args.geometry, threshold=args.threshold)}
    if cfg.ensemble == 1:
        report.update(runs[0])
    else:
        report["runs"] = runs
        report["mean_n_superradiant"] = float(np.mean([r["stats"]["n_superradiant"] for r in runs]))
        report["mean_max_rate"] = float(np.mean([r["stats"]["max_rate"] for r in runs]))
    write_json(out / "stats.json", report)
    return EXIT_OK


def cmd_dispersion(cfg: RunConfig, args) -> int:
    params = cfg.params(default_rho=1.0)
    out = _outdir(cfg)
    if args.k:
        curve = continuum.dispersion_curve(params, args.k)
    else:
        curve = continuum.dispersion_curve(params, points=args.points,
                                           k_max=args.k_max if args.k_max is not None else 3.0 * params.k0)
    rows = [(float(k), lam.real, lam.imag) for k, lam in zip(curve.k_values, curve.lambdas)]
    write_table(out, "dispersion", ["k", "re_lambda", "im_lambda"], rows, cfg.format)
    if params.mu > 0:
        summary = continuum.peak_summary(params)
        k_grid, lam_grid = continuum.locate_peak(params)
        extra = {"grid_search_k_peak": k_grid, "grid_search_lambda_peak": lam_grid}
        continuum.write_peaks_json(summary, out / "peaks.json", extra)
    else:
        continuum.write_peaks_json(None, out / "peaks.json",
                                   {"note": "mu = 0: decay rate is a pole at k = k0"})
    return EXIT_OK


def cmd_transform_check(cfg: RunConfig, args) -> int:
    params = cfg.params(default_rho=1.0)
    quad = continuum.kernel_transform_quadrature(args.k, params, args.tol)
    closed = continuum.dispersion(args.k, params)
    rel = abs(quad - closed) / abs(closed)
    write_json(_outdir(cfg) / "transform_check.json", {
        "inputs": {"k": args.k, "k0": params.k0, "mu": params.mu, "rho": params.rho, "tol": args.tol},
        "quadrature": [quad.real, quad.imag],
        "closed_form": [closed.real, closed.imag],
        "relative_difference": rel,
        "tolerance": TRANSFORM_TOLERANCE,
        "status": _status(rel <= TRANSFORM_TOLERANCE),
    })
    return EXIT_OK


def cmd_mode_count(cfg: RunConfig, args) -> int:
    params = cfg.params(default_rho=1.0)
    which = continuum.regime(params).value if args.regime == "auto" else args.regime
    if which in ("shell", "subcritical_mu"):
        which, count_fn = "subcritical_mu", continuum.mode_count_shell
    else:
        which, count_fn = "dicke", continuum.mode_count_dicke
    if params.mu <= 0:
        raise DomainError("mode counting needs mu > 0")
    report = {"inputs": {"k0": params.k0, "mu": params.mu, "rho": params.rho, "box_side": args.box_side},
              "regime": which}
    side = args.box_side if args.box_side is not None else 1.0 / params.mu
    report["modes_in_box"] = count_fn(params, side)
    report["modes_per_correlation_volume"] = count_fn(params, 1.0 / params.mu)
    lhs, rhs = continuum.mode_count_identity_check(params)
    rel = abs(lhs - rhs) / abs(rhs)
    report.update({"lhs": lhs, "rhs": rhs, "relative_difference": rel,
                   "tolerance": IDENTITY_TOLERANCE, "status": _status(rel <= IDENTITY_TOLERANCE)})
    write_json(_outdir(cfg) / "mode_count.json", report)
    return EXIT_OK


def _quotient_run(seed, *, params, radius):
    return dynamics.quotient_report(params, radius, seed)


def cmd_quotient(cfg: RunConfig, args) -> int:
    if cfg.radius is None:
        raise DomainError("--radius is required")
    params = cfg.params()
    run = functools.partial(_quotient_run, params=params, radius=cfg.radius)
    runs = [r for _, r in map_seeds(run, cfg.seeds)]
    report = {"inputs": _inputs(cfg)}
    if cfg.ensemble == 1:
        report.update(runs[0])
    else:
        mean = float(np.mean([r["measured"] for r in runs]))
        predicted = runs[0]["predicted"]
        rel = abs(mean - predicted) / predicted
        report.update({
            "runs": runs,
            "predicted": predicted,
            "measured": mean,
            "relative_error": rel,
            "tolerance": dynamics.QUOTIENT_TOLERANCE,
            "pass": bool(rel <= dynamics.QUOTIENT_TOLERANCE
                         and all(r["measured"] > r["off_peak_measured"] for r in runs)),
        })
    report["note"] = "predicted = 1 (self term, K_aa = 1) + continuum peak rate"
    report["status"] = _status(report["pass"])
    write_json(_outdir(cfg) / "quotient.json", report)
    return EXIT_OK


def _initial_state(kind, sample, matrix, params):
    n = sample.n
    if kind == "uniform":
        return np.ones(n, dtype=complex)
    if kind == "single":
        b = np.zeros(n, dtype=complex)
        b[0] = 1.0
        return b
    if kind == "plane-wave":
        k = math.sqrt(max(params.k0**2 - params.mu**2, 0.0))
        return dynamics.wave_packet(sample, (0.0, 0.0, k)).amplitudes
    if kind == "top-mode":
        spec = spectra.eigendecompose(matrix, want_vectors=True)
        return spec.eigenvectors[:, 0]
    raise DomainError(f"unknown initial state {kind!r}")


def cmd_evolve(cfg: RunConfig, args) -> int:
    n, rho = cfg.resolve_sample_size()
    params = PhysicalParams(cfg.k0, cfg.mu, rho)
    sample = _make_sample(args.geometry, n, cfg.radius, cfg.k0, cfg.seed)
    matrix = assemble_matrix(sample, params)
    if args.t_max < 0 or args.steps < 1:
        raise DomainError("--t-max must be >= 0 and --steps >= 1")
    times = np.linspace(0.0, args.t_max, args.steps)
    initial = _initial_state(args.initial, sample, matrix, params)
    trace = dynamics.evolve(matrix, initial, times, label=args.initial)
    out = _outdir(cfg)
    write_table(out, "decay", ["t", "intensity"], zip(trace.times, trace.intensities), cfg.format)
    write_json(out / "evolve.json", {
        "inputs": _inputs(cfg, n=n, rho=rho, initial=args.initial),
        "method": trace.method,
        "convention": "d(beta)/dt = -(1/2) M beta; eigenmode intensity ~ exp(-Re(lambda) t)",
    })
    return EXIT_OK


def _common(p):
    p.add_argument("--k0", type=float, help="resonant wavenumber (default 1)")
    p.add_argument("--mu", type=float, help="inverse correlation length (default 0)")
    p.add_argument("--rho", type=float, help="number density")
    p.add_argument("--radius", type=float, help="sample radius")
    p.add_argument("--n", type=int, help="atom count (overrides the density-derived count)")
    p.add_argument("--seed", type=int, help="random seed (default 0)")
    p.add_argument("-o", "--output", help="output directory (default .)")
    p.add_argument("--format", choices=["csv", "json"], help="table format (default csv)")
    p.add_argument("--config", type=Path, help="JSON file of flag values; explicit flags win")
    p.add_argument("--ensemble", type=int, help="run M consecutive seeds starting at --seed")


def get_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radiant",
        description="Superradiant and subradiant decay spectra of single-excitation atomic media",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="generate a random atomic sample")
    _common(p)
    p.add_argument("--geometry", choices=["ball", "dicke"], default="ball")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("spectrum", help="diagonalize the coupling matrix of a random sample")
    _common(p)
    p.add_argument("--geometry", choices=["ball", "dicke"], default="ball")
    p.add_argument("--threshold", type=float, default=spectra.DEFAULT_THRESHOLD,
                   help="superradiance threshold on Re(lambda)")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("dispersion", help="closed-form unbounded-medium dispersion and its peak")
    _common(p)
    p.add_argument("--k", type=float, action="append", help="evaluate at this k (repeatable)")
    p.add_argument("--points", type=int, default=continuum.DEFAULT_GRID_POINTS)
    p.add_argument("--k-max", type=float, help="grid upper end (default 3 k0)")
    p.set_defaults(func=cmd_dispersion)

    p = sub.add_parser("transform-check", help="quadrature Fourier transform vs closed form")
    _common(p)
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-10, help="quadrature tolerance")
    p.set_defaults(func=cmd_transform_check)

    p = sub.add_parser("mode-count", help="k-space mode counting identities")
    _common(p)
    p.add_argument("--box-side", type=float, help="quantization box side (default 1/mu)")
    p.add_argument("--regime", choices=["auto", "shell", "dicke"], default="auto")
    p.set_defaults(func=cmd_mode_count)

    p = sub.add_parser("quotient", help="plane-wave decay rate on a large random sample")
    _common(p)
    p.set_defaults(func=cmd_quotient)

    p = sub.add_parser("evolve", help="time-domain collective decay")
    _common(p)
    p.add_argument("--geometry", choices=["ball", "dicke"], default="ball")
    p.add_argument("--initial", choices=["uniform", "single", "plane-wave", "top-mode"],
                   default="uniform")
    p.add_argument("--t-max", type=float, default=5.0)
    p.add_argument("--steps", type=int, default=101)
    p.set_defaults(func=cmd_evolve)
    return parser


def build_config(args) -> RunConfig:
    values = dict(DEFAULTS)
    if args.config is not None:
        loaded = json.loads(args.config.read_text())
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise DomainError(f"{args.config}: unknown keys {sorted(unknown)}")
        values.update(loaded)
    for key in DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    values["output_path"] = values.pop("output")
    cfg = RunConfig(**values)
    # validates k0/mu (and rho when present)
    PhysicalParams(cfg.k0, cfg.mu, cfg.rho if cfg.rho is not None else 1.0)
    return cfg


def main(argv=None) -> int:
    parser = get_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args)
        log.debug("%s with %s", args.command, cfg)
        return args.func(cfg, args)
    except NumericalError as exc:
        print(f"radiant {args.command}: numerical failure: {exc}", file=sys.stderr)
        if exc.residual is not None:
            print(f"  worst residual: {exc.residual}", file=sys.stderr)
        if exc.iterations is not None:
            print(f"  iteration cap: {exc.iterations}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DomainError as exc:
        parser.print_usage(sys.stderr)
        print(f"radiant {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"radiant {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
