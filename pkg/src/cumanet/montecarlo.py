"""Two-layer Monte Carlo: random network layouts times random fading.

The outer loop draws network realizations; the inner loop draws fading
and evaluates every configured receiver on the same channels.  Only the
origin cell is measured.  Random streams derive from the master seed per
(realization, draw), so results are bit-identical regardless of how the
realizations are spread over workers.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import benchmarks
from .channel import PortGrid, build_correlation
from .cuma import SinrBreakdown
from .geometry import NetworkRealization, build_realization

SIR_CAP = 1e12
ALL_SCHEMES = ("cuma", "zf", "mmse", "japbo")


@dataclass(frozen=True)
class SimConfig:
    bs_density: float = 1e-4
    ue_density: float = 1e-3
    eta: float = 2.4
    grid: PortGrid = field(default_factory=lambda: PortGrid.from_total(100, 8.0))
    wavelength_m: float = 0.075
    radius_m: float | None = None
    n_realizations: int = 10
    n_fading: int = 1000
    rf_chain_multiplier: float = 1.5
    noise_power: float = 0.0
    master_seed: int = 0
    schemes: tuple[str, ...] = ("cuma",)
    japbo_every: int = 10
    japbo_max_sweeps: int = 50
    iid_benchmark_fading: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.bs_density <= 0 or self.ue_density <= 0:
            raise ValueError("densities must be positive")
        if self.eta <= 2:
            raise ValueError("path-loss exponent must exceed 2")
        if self.n_realizations < 1 or self.n_fading < 1:
            raise ValueError("draw counts must be positive")
        if self.noise_power < 0:
            raise ValueError("noise power must be nonnegative")
        unknown = set(self.schemes) - set(ALL_SCHEMES)
        if unknown:
            raise ValueError(f"unknown schemes: {sorted(unknown)}")
        if self.chains < 1:
            raise ValueError("RF chain count must be at least 1")

    @property
    def lam_ratio(self) -> float:
        return self.ue_density / self.bs_density

    @property
    def chains(self) -> int:
        return math.ceil(self.rf_chain_multiplier * self.lam_ratio)

    @property
    def truncation_radius(self) -> float:
        if self.radius_m is not None:
            return self.radius_m
        return 20.0 / (2.0 * math.sqrt(self.bs_density))


class EmpiricalDistribution:
    """SIR (or rate) samples with CDF / quantile / mean queries."""

    def __init__(self, samples):
        self._sorted = np.sort(np.asarray(samples, dtype=float))

    @property
    def samples(self) -> np.ndarray:
        return self._sorted

    def __len__(self):
        return len(self._sorted)

    def cdf(self, x):
        """Fraction of samples <= x (vectorized)."""
        if len(self._sorted) == 0:
            raise ValueError("empty distribution")
        idx = np.searchsorted(self._sorted, np.asarray(x, dtype=float), side="right")
        return idx / len(self._sorted)

    def coverage(self, x):
        return 1.0 - self.cdf(x)

    def quantile(self, q):
        return np.quantile(self._sorted, q)

    def mean(self) -> float:
        return float(self._sorted.mean())


@dataclass
class SchemeResult:
    scheme: str
    sir: EmpiricalDistribution
    realization_idx: np.ndarray
    draw_idx: np.ndarray
    ue_local_idx: np.ndarray
    sir_samples: np.ndarray  # unsorted, aligned with the index columns
    mean_rate: float
    cell_sum_rate: float
    draws_used: int
    skipped_draws: int
    capped_samples: int
    diag_loaded_draws: int = 0
    mean_activated_ports: float = float("nan")

    def rates(self) -> np.ndarray:
        return np.log1p(self.sir_samples)


@dataclass
class ExperimentResult:
    config: SimConfig
    schemes: dict[str, SchemeResult]

    def __getitem__(self, scheme: str) -> SchemeResult:
        return self.schemes[scheme]


def schedule_cell(ue_indices, chains: int, rng: np.random.Generator):
    """Uniformly pick which in-cell UEs get an RF chain this slot.

    Returns (served, deferred); deferred UEs keep transmitting and count
    as interference.
    """
    if chains < 1:
        raise ValueError("chain count must be at least 1")
    ue_indices = np.asarray(ue_indices, dtype=int)
    perm = rng.permutation(len(ue_indices))
    take = min(chains, len(ue_indices))
    return ue_indices[perm[:take]], ue_indices[perm[take:]]


def _stream(master_seed: int, jump_index: int) -> np.random.Generator:
    """Non-overlapping stream: jump-ahead by construction (2^127 per index)."""
    return np.random.Generator(np.random.PCG64(master_seed).jumped(jump_index))


def _draw_rng(config: SimConfig, realization: int, draw: int) -> np.random.Generator:
    return _stream(config.master_seed, realization * (config.n_fading + 1) + 1 + draw)


def _geometry_rng(config: SimConfig, realization: int) -> np.random.Generator:
    return _stream(config.master_seed, realization * (config.n_fading + 1))


class _DrawAccumulator:
    def __init__(self, scheme):
        self.scheme = scheme
        self.real = []
        self.draw = []
        self.ue = []
        self.sir = []
        self.cell_rate_sums = []
        self.skipped = 0
        self.capped = 0
        self.loaded = 0
        self.active_counts = []

    def add_draw(self, r_idx, d_idx, served_local, sirs):
        rate_sum = 0.0
        for lu, s in zip(served_local, sirs):
            if not np.isfinite(s) or s > SIR_CAP:
                s = SIR_CAP
                self.capped += 1
            self.real.append(r_idx)
            self.draw.append(d_idx)
            self.ue.append(lu)
            self.sir.append(s)
            rate_sum += math.log1p(s)
        self.cell_rate_sums.append(rate_sum)


class _RealizationEngine:
    """Vectorized per-draw evaluation for one network layout."""

    def __init__(self, real: NetworkRealization, config: SimConfig, sqrt_factor: np.ndarray):
        self.config = config
        self.sqrt_factor_t = sqrt_factor.T
        self.n_ports = config.grid.n_ports
        self.cell = real.typical_cell
        self.n_ue = len(real.ue)
        r = real.ue_distances_to_typical()
        self.amp = r ** (-config.eta / 2.0)
        self.is_cell = np.zeros(self.n_ue, dtype=bool)
        self.is_cell[self.cell] = True
        self.active = benchmarks.strided_antenna_subset(config.grid, min(config.chains, self.n_ports))

    def sample_channels(self, rng):
        z_re = rng.standard_normal((self.n_ue, self.n_ports))
        z_im = rng.standard_normal((self.n_ue, self.n_ports))
        small = (z_re @ self.sqrt_factor_t + 1j * (z_im @ self.sqrt_factor_t)) / math.sqrt(2.0)
        return small, self.amp[:, None] * small

    def _power_split(self, signals, served):
        """Desired / intra / inter powers from per-UE combiner outputs."""
        power = np.abs(signals) ** 2
        total = power.sum(axis=0)
        cell_sum = power[self.is_cell].sum(axis=0)
        desired = power[served, np.arange(len(served))]
        intra = np.maximum(cell_sum - desired, 0.0)
        inter = np.maximum(total - cell_sum, 0.0)
        return desired, intra, inter

    def cuma_sirs(self, small, channels, served, noise_power):
        re = small[served].real
        masks = re >= 0
        sums = re.sum(axis=1, where=masks)
        alt = -re.sum(axis=1, where=~masks)
        flip = alt > sums
        masks[flip] = ~masks[flip]
        weights = masks.T.astype(float)  # (n_ports, n_served)
        signals = channels @ weights
        desired, intra, inter = self._power_split(signals, served)
        counts = weights.sum(axis=0)
        activated = int(np.logical_or.reduce(masks, axis=0).sum())
        return self._breakdowns(desired, intra, inter, counts * noise_power), activated

    def zf_sirs(self, channels_active, served, noise_power):
        bf = benchmarks.zf_receiver(channels_active[served].T)
        signals = channels_active @ bf.vectors.conj()
        desired, intra, inter = self._power_split(signals, served)
        norms = (np.abs(bf.vectors) ** 2).sum(axis=0)
        return self._breakdowns(desired, intra, inter, norms * noise_power)

    def mmse_sirs(self, channels_active, served, noise_power):
        gram = channels_active.T @ channels_active.conj()
        n = gram.shape[0]
        loaded = False
        svals = np.linalg.svd(gram, compute_uv=False, hermitian=True)
        if svals[-1] < 1e-12 * svals[0]:
            loaded = True
            gram = gram + (1e-10 * np.trace(gram).real / n) * np.eye(n)
        combiners = np.linalg.solve(gram, channels_active[served].T)
        signals = channels_active @ combiners.conj()
        desired, intra, inter = self._power_split(signals, served)
        norms = (np.abs(combiners) ** 2).sum(axis=0)
        return self._breakdowns(desired, intra, inter, norms * noise_power), loaded

    def japbo_sirs(self, channels, served, noise_power, rng):
        bf = benchmarks.japbo_optimize(
            self.config.grid,
            channels,
            served,
            len(self.active),
            rng,
            self.config.japbo_max_sweeps,
        )
        signals = channels[:, bf.antenna_positions] @ bf.vectors.conj()
        desired, intra, inter = self._power_split(signals, served)
        norms = (np.abs(bf.vectors) ** 2).sum(axis=0)
        return self._breakdowns(desired, intra, inter, norms * noise_power)

    @staticmethod
    def _breakdowns(desired, intra, inter, noise):
        out = []
        for d, ia, ie, nz in zip(desired, intra, inter, noise):
            denom = ia + ie + nz
            interference = ia + ie
            out.append(
                SinrBreakdown(
                    desired_power=float(d),
                    intra_cell_power=float(ia),
                    inter_cell_power=float(ie),
                    noise_power=float(nz),
                    sinr=float(d / denom) if denom > 0 else float("inf"),
                    sir=float(d / interference) if interference > 0 else float("inf"),
                )
            )
        return out


def run_fading_draw(
    real: NetworkRealization,
    config: SimConfig,
    rng: np.random.Generator,
    include_japbo: bool = True,
    sqrt_factor: np.ndarray | None = None,
) -> dict[str, list[SinrBreakdown]]:
    """Evaluate every configured receiver on one fading draw.

    Stream consumption order: scheduling permutation, channel normals,
    optional i.i.d. benchmark normals, then the optimizer's placement.
    """
    if sqrt_factor is None:
        sqrt_factor = build_correlation(config.grid).sqrt_factor
    engine = _RealizationEngine(real, config, sqrt_factor)
    out: dict[str, list[SinrBreakdown]] = {s: [] for s in config.schemes}
    if len(engine.cell) == 0 or engine.n_ue == 0:
        return out
    served, _ = schedule_cell(engine.cell, config.chains, rng)
    small, channels = engine.sample_channels(rng)
    if "cuma" in config.schemes:
        out["cuma"], _ = engine.cuma_sirs(small, channels, served, config.noise_power)
    needs_bench = {"zf", "mmse"} & set(config.schemes)
    if needs_bench or ("japbo" in config.schemes and include_japbo):
        bench = channels[:, engine.active]
        if config.iid_benchmark_fading:
            z = rng.standard_normal((engine.n_ue, len(engine.active)))
            zi = rng.standard_normal((engine.n_ue, len(engine.active)))
            bench = engine.amp[:, None] * (z + 1j * zi) / math.sqrt(2.0)
        if "zf" in config.schemes:
            try:
                out["zf"] = engine.zf_sirs(bench, served, config.noise_power)
            except benchmarks.SingularChannelError:
                out["zf"] = []
        if "mmse" in config.schemes:
            out["mmse"], _ = engine.mmse_sirs(bench, served, config.noise_power)
        if "japbo" in config.schemes and include_japbo:
            out["japbo"] = engine.japbo_sirs(channels, served, config.noise_power, rng)
    return out


def _run_realization(args) -> dict:
    config, r_idx, sqrt_factor = args
    geo_rng = _geometry_rng(config, r_idx)
    real = build_realization(
        config.bs_density, config.ue_density, config.truncation_radius, geo_rng
    )
    acc = {s: _DrawAccumulator(s) for s in config.schemes}
    if len(real.typical_cell) == 0 or len(real.ue) == 0:
        return {"r_idx": r_idx, "acc": acc, "empty": True}
    engine = _RealizationEngine(real, config, sqrt_factor)
    cell_local = {int(g): i for i, g in enumerate(engine.cell)}
    for d_idx in range(config.n_fading):
        rng = _draw_rng(config, r_idx, d_idx)
        served, _ = schedule_cell(engine.cell, config.chains, rng)
        served_local = [cell_local[int(g)] for g in served]
        small, channels = engine.sample_channels(rng)
        if "cuma" in config.schemes:
            breakdowns, activated = engine.cuma_sirs(
                small, channels, served, config.noise_power
            )
            acc["cuma"].add_draw(r_idx, d_idx, served_local, [b.sir for b in breakdowns])
            acc["cuma"].active_counts.append(activated)
        needs_bench = {"zf", "mmse"} & set(config.schemes)
        japbo_due = "japbo" in config.schemes and d_idx % config.japbo_every == 0
        if needs_bench or japbo_due:
            bench = channels[:, engine.active]
            if config.iid_benchmark_fading:
                z = rng.standard_normal((engine.n_ue, len(engine.active)))
                zi = rng.standard_normal((engine.n_ue, len(engine.active)))
                bench = engine.amp[:, None] * (z + 1j * zi) / math.sqrt(2.0)
            if "zf" in config.schemes:
                try:
                    breakdowns = engine.zf_sirs(bench, served, config.noise_power)
                    acc["zf"].add_draw(r_idx, d_idx, served_local, [b.sir for b in breakdowns])
                except benchmarks.SingularChannelError:
                    acc["zf"].skipped += 1
            if "mmse" in config.schemes:
                breakdowns, loaded = engine.mmse_sirs(bench, served, config.noise_power)
                acc["mmse"].add_draw(r_idx, d_idx, served_local, [b.sir for b in breakdowns])
                acc["mmse"].loaded += int(loaded)
            if japbo_due:
                breakdowns = engine.japbo_sirs(channels, served, config.noise_power, rng)
                acc["japbo"].add_draw(r_idx, d_idx, served_local, [b.sir for b in breakdowns])
    return {"r_idx": r_idx, "acc": acc, "empty": False}


def run_experiment(config: SimConfig) -> ExperimentResult:
    """Full two-layer experiment; deterministic for a given config and seed."""
    sqrt_factor = build_correlation(config.grid).sqrt_factor
    tasks = [(config, r, sqrt_factor) for r in range(config.n_realizations)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            raw = list(pool.map(_run_realization, tasks))
    else:
        raw = [_run_realization(t) for t in tasks]
    raw.sort(key=lambda d: d["r_idx"])
    schemes = {}
    for s in config.schemes:
        real_idx, draw_idx, ue_idx, sirs = [], [], [], []
        rate_sums = []
        skipped = capped = loaded = 0
        active = []
        for chunk in raw:
            a = chunk["acc"][s]
            real_idx += a.real
            draw_idx += a.draw
            ue_idx += a.ue
            sirs += a.sir
            rate_sums += a.cell_rate_sums
            skipped += a.skipped
            capped += a.capped
            loaded += a.loaded
            active += a.active_counts
        sir_arr = np.array(sirs, dtype=float)
        schemes[s] = SchemeResult(
            scheme=s,
            sir=EmpiricalDistribution(sir_arr),
            realization_idx=np.array(real_idx, dtype=int),
            draw_idx=np.array(draw_idx, dtype=int),
            ue_local_idx=np.array(ue_idx, dtype=int),
            sir_samples=sir_arr,
            mean_rate=float(np.log1p(sir_arr).mean()) if len(sir_arr) else float("nan"),
            cell_sum_rate=float(np.mean(rate_sums)) if rate_sums else float("nan"),
            draws_used=len(rate_sums),
            skipped_draws=skipped,
            capped_samples=capped,
            diag_loaded_draws=loaded,
            mean_activated_ports=float(np.mean(active)) if active else float("nan"),
        )
    return ExperimentResult(config=config, schemes=schemes)


def experiment_to_csv(result: ExperimentResult, path) -> None:
    """Per-sample dump with a commented metadata header block."""
    cfg = result.config
    with open(path, "w", newline="") as fh:
        fh.write("# cumanet sample dump\n")
        fh.write(f"# master_seed = {cfg.master_seed}\n")
        fh.write(
            f"# bs_density = {cfg.bs_density:.9g}, ue_density = {cfg.ue_density:.9g}, "
            f"eta = {cfg.eta:.9g}\n"
        )
        fh.write(
            f"# grid = {cfg.grid.n1}x{cfg.grid.n2}, aperture = {cfg.grid.w1:.9g}x{cfg.grid.w2:.9g}, "
            f"radius_m = {cfg.truncation_radius:.9g}\n"
        )
        fh.write(
            f"# draws = {cfg.n_realizations}x{cfg.n_fading}, chains = {cfg.chains}, "
            f"noise_power = {cfg.noise_power:.9g}\n"
        )
        for s, res in result.schemes.items():
            fh.write(
                f"# scheme {s}: skipped = {res.skipped_draws}, capped = {res.capped_samples}\n"
            )
        writer = csv.writer(fh)
        writer.writerow(["scheme", "realization", "draw", "ue_local_index", "sir", "rate_nats"])
        for s, res in result.schemes.items():
            rates = res.rates()
            for i in range(len(res.sir_samples)):
                writer.writerow(
                    [
                        s,
                        res.realization_idx[i],
                        res.draw_idx[i],
                        res.ue_local_idx[i],
                        f"{res.sir_samples[i]:.9g}",
                        f"{rates[i]:.9g}",
                    ]
                )
