"""Batch command-line front end.

Reads a flat key = value experiment file, runs the analytic sweep and,
where the experiment kind calls for it, the Monte Carlo, then writes one
CSV + one PNG + one manifest per experiment.  CSV bodies are
deterministic for a fixed spec and seed.

Spec file schema (one `key = value` per line, `#` starts a comment):

    name        = fig1_cdf      experiment label, used for file names
    kind        = cdf           cdf | rate_vs_lambda | asymptotic |
                                bench_vs_N | bench_vs_lambda |
                                bench_vs_W | bench_vs_eta
    lambda_b    = 1e-4          BS density per m^2
    lambda_ratio = 10           mean UEs per cell
    eta         = 2.4           path-loss exponent
    n_ports     = 100           total ports (most-square grid)
    aperture    = 8.0           square aperture side, wavelengths
    radius_m    =               optional truncation radius override
    n_location_draws = 10
    n_fading_draws   = 1000
    schemes     = cuma,zf,mmse,japbo
    seed        = 1
    noise_power = 0
    rf_chain_multiplier = 1.5
    japbo_every = 10
    sweep_param = eta           eta | lambda_ratio | n_ports | aperture
    sweep_values = 2.4, 2.7     sorted sweep points
    lambda_grid = 1, 10, 100    asymptotic kind only: load axis
    out_dir     = results
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__, plotting
from .analysis import (
    asymptotic_cell_rate,
    average_rate,
    build_model,
    cell_sum_rate,
    coverage_probability,
)
from .channel import PortGrid
from .montecarlo import ALL_SCHEMES, SimConfig, run_experiment

TAU_GRID_DB = np.arange(-20.0, 41.0, 1.0)

KINDS = (
    "cdf",
    "rate_vs_lambda",
    "asymptotic",
    "bench_vs_N",
    "bench_vs_lambda",
    "bench_vs_W",
    "bench_vs_eta",
)

SWEEP_PARAMS = ("eta", "lambda_ratio", "n_ports", "aperture")

_DEFAULT_SWEEPS = {
    "cdf": ("eta", [2.4, 2.7]),
    "rate_vs_lambda": ("lambda_ratio", [2, 4, 6, 8, 10, 12, 14, 16, 18, 20]),
    "asymptotic": ("eta", [2.4, 3.4, 4.0]),
    "bench_vs_N": ("n_ports", [36, 64, 100, 144, 196]),
    "bench_vs_lambda": ("lambda_ratio", [2, 4, 6, 8, 10, 12]),
    "bench_vs_W": ("aperture", [2, 4, 6, 8, 10, 12]),
    "bench_vs_eta": ("eta", [2.4, 2.6, 2.8, 3.0, 3.2, 3.4]),
}


class SpecError(ValueError):
    """Malformed experiment spec (usage error, exit code 2)."""


@dataclass
class ExperimentSpec:
    name: str
    kind: str
    lambda_b: float = 1e-4
    lambda_ratio: float = 10.0
    eta: float = 2.4
    n_ports: int = 100
    aperture: float = 8.0
    radius_m: float | None = None
    n_location_draws: int = 10
    n_fading_draws: int = 1000
    schemes: tuple[str, ...] | None = None
    seed: int = 1
    noise_power: float = 0.0
    rf_chain_multiplier: float = 1.5
    japbo_every: int = 10
    sweep_param: str = ""
    sweep_values: list = field(default_factory=list)
    lambda_grid: list = field(default_factory=lambda: list(np.logspace(0, 5, 21)))
    out_dir: str = "results"
    workers: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if not self.sweep_param:
            self.sweep_param, default_vals = _DEFAULT_SWEEPS[self.kind]
            if not self.sweep_values:
                self.sweep_values = list(default_vals)
        if self.sweep_param not in SWEEP_PARAMS:
            raise SpecError(f"unknown sweep_param {self.sweep_param!r}")
        if not self.sweep_values:
            raise SpecError("sweep_values must be a nonempty list")
        if sorted(self.sweep_values) != list(self.sweep_values):
            raise SpecError("sweep_values must be sorted ascending")
        if self.schemes is None:
            self.schemes = ("cuma",) if self.kind in ("cdf", "rate_vs_lambda") else ALL_SCHEMES
        bad = set(self.schemes) - set(ALL_SCHEMES)
        if bad:
            raise SpecError(f"unknown schemes {sorted(bad)}")
        if self.kind in ("cdf", "rate_vs_lambda") and "cuma" not in self.schemes:
            raise SpecError(f"kind {self.kind} evaluates the combining receiver; add 'cuma'")

    def config_at(self, value) -> SimConfig:
        """Simulator config with the sweep parameter set to one value."""
        eta = self.eta
        lam_ratio = self.lambda_ratio
        n_ports = self.n_ports
        aperture = self.aperture
        if self.sweep_param == "eta":
            eta = float(value)
        elif self.sweep_param == "lambda_ratio":
            lam_ratio = float(value)
        elif self.sweep_param == "n_ports":
            n_ports = int(value)
        elif self.sweep_param == "aperture":
            aperture = float(value)
        return SimConfig(
            bs_density=self.lambda_b,
            ue_density=self.lambda_b * lam_ratio,
            eta=eta,
            grid=PortGrid.from_total(n_ports, aperture),
            radius_m=self.radius_m,
            n_realizations=self.n_location_draws,
            n_fading=self.n_fading_draws,
            rf_chain_multiplier=self.rf_chain_multiplier,
            noise_power=self.noise_power,
            master_seed=self.seed,
            schemes=tuple(self.schemes),
            japbo_every=self.japbo_every,
            workers=self.workers,
        )


_SPEC_PARSERS = {
    "name": str,
    "kind": str,
    "lambda_b": float,
    "lambda_ratio": float,
    "eta": float,
    "n_ports": int,
    "aperture": float,
    "radius_m": lambda v: float(v) if v else None,
    "n_location_draws": int,
    "n_fading_draws": int,
    "schemes": lambda v: tuple(s.strip() for s in v.split(",") if s.strip()),
    "seed": int,
    "noise_power": float,
    "rf_chain_multiplier": float,
    "japbo_every": int,
    "sweep_param": str,
    "sweep_values": lambda v: [float(x) for x in v.split(",") if x.strip()],
    "lambda_grid": lambda v: [float(x) for x in v.split(",") if x.strip()],
    "out_dir": str,
}


def parse_spec_file(path) -> ExperimentSpec:
    raw = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SpecError(f"cannot read spec file: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _SPEC_PARSERS:
            raise SpecError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            raw[key] = _SPEC_PARSERS[key](value)
        except ValueError as exc:
            raise SpecError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    if "name" not in raw or "kind" not in raw:
        raise SpecError("spec file must set at least 'name' and 'kind'")
    try:
        return ExperimentSpec(**raw)
    except TypeError as exc:
        raise SpecError(str(exc)) from exc


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _check_schema(path, expected_header, nan_ok=()) -> None:
    """Re-read an emitted CSV: header must match, numbers must be finite.

    Columns in ``nan_ok`` may hold NaN (schemes that were not configured).
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != list(expected_header):
            raise ArithmeticError(f"{path}: header mismatch: {header}")
        nan_cols = {header.index(c) for c in nan_ok if c in header}
        for row in reader:
            for i, cell in enumerate(row):
                try:
                    val = float(cell)
                except ValueError:
                    continue  # labels are fine
                if math.isnan(val) and i in nan_cols:
                    continue
                if not math.isfinite(val):
                    raise ArithmeticError(f"{path}: non-finite value {cell!r} in {header[i]}")


def _model_for(config: SimConfig):
    return build_model(
        config.grid, config.eta, config.bs_density, config.ue_density
    )


def _run_cdf(spec: ExperimentSpec, unit_scale: float):
    header = ["tau_db", spec.sweep_param, "coverage_analytic", "coverage_empirical"]
    rows = []
    notes = {}
    taus = 10.0 ** (TAU_GRID_DB / 10.0)
    for value in spec.sweep_values:
        cfg = spec.config_at(value)
        model = _model_for(cfg)
        result = run_experiment(cfg)
        emp = result["cuma"].sir.coverage(taus)
        for tau_db, tau, cov_e in zip(TAU_GRID_DB, taus, emp):
            rows.append([tau_db, value, coverage_probability(model, tau), cov_e])
        notes[f"capped_{value:g}"] = result["cuma"].capped_samples
    return header, rows, notes


def _run_rate_vs_lambda(spec: ExperimentSpec, unit_scale: float):
    if spec.sweep_param != "lambda_ratio":
        raise SpecError("rate_vs_lambda sweeps lambda_ratio")
    header = ["lambda_ratio", "avg_rate_analytic", "avg_rate_empirical"]
    rows = []
    notes = {}
    for value in spec.sweep_values:
        cfg = spec.config_at(value)
        model = _model_for(cfg)
        result = run_experiment(cfg)
        rows.append(
            [
                value,
                average_rate(model) * unit_scale,
                result["cuma"].mean_rate * unit_scale,
            ]
        )
    return header, rows, notes


def _run_asymptotic(spec: ExperimentSpec, unit_scale: float):
    header = ["lambda_ratio", spec.sweep_param, "cell_rate_analytic", "asymptote"]
    rows = []
    for value in spec.sweep_values:
        cfg = spec.config_at(value)
        model = _model_for(cfg)
        asym = asymptotic_cell_rate(model) * unit_scale
        for lam in spec.lambda_grid:
            rows.append([lam, value, cell_sum_rate(model, lam) * unit_scale, asym])
    return header, rows, {}


def _run_benchmarks(spec: ExperimentSpec, unit_scale: float):
    header = [spec.sweep_param]
    header += [f"cell_rate_{s}" for s in ALL_SCHEMES]
    header += ["cell_rate_cuma_analytic"]
    rows = []
    notes = {}
    for value in spec.sweep_values:
        cfg = spec.config_at(value)
        model = _model_for(cfg)
        result = run_experiment(cfg)
        row = [value]
        for s in ALL_SCHEMES:
            if s in result.schemes and len(result[s].sir_samples):
                row.append(result[s].cell_sum_rate * unit_scale)
            else:
                row.append(float("nan"))
        row.append(cell_sum_rate(model) * unit_scale)
        rows.append(row)
        skipped = {s: result[s].skipped_draws for s in result.schemes}
        if any(skipped.values()):
            notes[f"skipped_{value:g}"] = skipped
    return header, rows, notes


def run_spec(spec: ExperimentSpec, log_base: str = "e") -> dict:
    """Execute one experiment: CSV + figure + manifest in out_dir."""
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    unit_scale = 1.0 if log_base == "e" else 1.0 / math.log(2.0)
    unit = "nats" if log_base == "e" else "bits"
    t0 = time.perf_counter()
    if spec.kind == "cdf":
        header, rows, notes = _run_cdf(spec, unit_scale)
    elif spec.kind == "rate_vs_lambda":
        header, rows, notes = _run_rate_vs_lambda(spec, unit_scale)
    elif spec.kind == "asymptotic":
        header, rows, notes = _run_asymptotic(spec, unit_scale)
    else:
        header, rows, notes = _run_benchmarks(spec, unit_scale)
    wall = time.perf_counter() - t0

    csv_path = out_dir / f"{spec.name}.csv"
    _write_csv(csv_path, header, rows)
    inactive = [f"cell_rate_{s}" for s in ALL_SCHEMES if s not in spec.schemes]
    _check_schema(csv_path, header, nan_ok=inactive)

    columns = {h: np.array([row[i] for row in rows], dtype=float) for i, h in enumerate(header)}
    png_path = out_dir / f"{spec.name}.png"
    if spec.kind == "cdf":
        plotting.render_cdf(columns, png_path)
    elif spec.kind == "rate_vs_lambda":
        plotting.render_rate_vs_lambda(columns, png_path, unit=unit)
    elif spec.kind == "asymptotic":
        plotting.render_asymptotic(columns, png_path, unit=unit)
    else:
        plotting.render_benchmarks(
            columns, spec.sweep_param, png_path, unit=unit, logx=spec.sweep_param == "lambda_ratio"
        )

    manifest_path = out_dir / f"{spec.name}.manifest.txt"
    with open(manifest_path, "w") as fh:
        fh.write(f"name = {spec.name}\nkind = {spec.kind}\n")
        fh.write(f"seed = {spec.seed}\nlog_base = {log_base}\n")
        fh.write(f"sweep_param = {spec.sweep_param}\n")
        fh.write(f"sweep_values = {', '.join(_fmt(v) for v in spec.sweep_values)}\n")
        fh.write(f"lambda_b = {_fmt(spec.lambda_b)}\nlambda_ratio = {_fmt(spec.lambda_ratio)}\n")
        fh.write(f"eta = {_fmt(spec.eta)}\nn_ports = {spec.n_ports}\n")
        fh.write(f"aperture = {_fmt(spec.aperture)}\n")
        fh.write(f"draws = {spec.n_location_draws} x {spec.n_fading_draws}\n")
        fh.write(f"schemes = {', '.join(spec.schemes)}\n")
        fh.write(f"version = cumanet {__version__}, numpy {np.__version__}\n")
        fh.write(f"wall_time_s = {wall:.3f}\n")
        for key, val in notes.items():
            fh.write(f"note_{key} = {val}\n")
    return {"csv": csv_path, "png": png_path, "manifest": manifest_path, "wall_s": wall}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cumanet",
        description="Run uplink fluid-antenna network experiments from a spec file.",
    )
    parser.add_argument("--spec", required=True, help="experiment spec file (key = value lines)")
    parser.add_argument("--seed", type=int, default=None, help="override the spec seed")
    parser.add_argument("--out", default=None, help="override the output directory")
    parser.add_argument(
        "--smoke", action="store_true", help="shrink to 3 x 100 draws for a quick check"
    )
    parser.add_argument("--threads", type=int, default=1, help="worker processes")
    parser.add_argument("--log-base", choices=("e", "2"), default="e", help="rate units")
    args = parser.parse_args(argv)
    try:
        spec = parse_spec_file(args.spec)
        if args.seed is not None:
            spec = replace(spec, seed=args.seed)
        if args.out is not None:
            spec = replace(spec, out_dir=args.out)
        if args.smoke:
            spec = replace(spec, n_location_draws=3, n_fading_draws=100)
        if args.threads and args.threads > 1:
            spec = replace(spec, workers=args.threads)
    except SpecError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return 2
    try:
        arts = run_spec(spec, log_base=args.log_base)
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {arts['csv']}, {arts['png']}, {arts['manifest']} ({arts['wall_s']:.1f}s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
