"""Monte Carlo harness: coloring schemes, seeded ensembles, sweeps, presets,
and bound-vs-measurement reports.

Reproducibility contract: trial i draws its graph from stream ``2i`` and its
scheme + dynamics randomness from stream ``2i+1`` (scheme first), both
derived from the config's master seed.  Trials are therefore independent of
execution order and worker count, and aggregation is a deterministic fold
in trial order; rerunning an identical config yields byte-identical output.

Small deterministic cells (n <= 12, scheme without defectors) run on the
vectorized batch engine; everything else runs per trial, optionally across
worker threads.  Both paths share kernels and draw protocols, so they
produce identical per-trial records.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _batch, _kernels, analytics
from .dynamics import Coloring, LazyParams, run
from .graphs import sample_gnp
from .rng import derive_stream

CSV_COLUMNS = (
    "n", "p", "delta", "p_r", "p_ac", "p_up", "variant",
    "trials", "metric", "value", "ci_lo", "ci_hi", "seed",
)


# -- coloring schemes ---------------------------------------------------------


@dataclass(frozen=True)
class FixedGap:
    """Deterministic prefix coloring with the given number of Red vertices."""

    red_count: int


@dataclass(frozen=True)
class RandomHalf:
    """Each vertex Red independently with probability 1/2."""


@dataclass(frozen=True)
class RandomBiased:
    """Each vertex Red independently with probability p_red."""

    p_red: float


@dataclass(frozen=True)
class DefectorModel:
    """Even split, then ``defectors`` uniformly chosen Red vertices flip Blue."""

    defectors: int


Scheme = FixedGap | RandomHalf | RandomBiased | DefectorModel


def scheme_uses_rng(scheme: Scheme) -> bool:
    return not isinstance(scheme, FixedGap)


def scheme_delta(scheme: Scheme, n: int) -> float | None:
    """Reported gap parameter: red_count - n/2, or the defector count."""
    if isinstance(scheme, FixedGap):
        return scheme.red_count - n / 2.0
    if isinstance(scheme, DefectorModel):
        return float(scheme.defectors)
    return None


def apply_scheme(scheme: Scheme, n: int, rng) -> Coloring:
    """Draw the initial coloring; consumes rng only for the random variants."""
    if isinstance(scheme, FixedGap):
        if not 0 <= scheme.red_count <= n:
            raise ValueError("red_count out of range")
        return Coloring.from_red_prefix(n, scheme.red_count)
    if isinstance(scheme, RandomHalf):
        return Coloring(rng.double_block(n) < 0.5)
    if isinstance(scheme, RandomBiased):
        if not 0.0 <= scheme.p_red <= 1.0:
            raise ValueError("p_red must be in [0, 1]")
        return Coloring(rng.double_block(n) < scheme.p_red)
    if isinstance(scheme, DefectorModel):
        if n % 2:
            raise ValueError("DefectorModel needs even n")
        half = n // 2
        if not 0 <= scheme.defectors <= half:
            raise ValueError("defectors must be in [0, n/2]")
        mask = np.zeros(n, dtype=bool)
        mask[:half] = True
        idx = np.arange(half)
        for j in range(scheme.defectors):  # partial Fisher-Yates, one draw each
            r = j + int(rng.next_double() * (half - j))
            idx[j], idx[r] = idx[r], idx[j]
        mask[idx[: scheme.defectors]] = False
        return Coloring(mask)
    raise TypeError(f"unknown scheme {scheme!r}")


# -- configs ------------------------------------------------------------------


def default_max_days(n: int, p: float, variant) -> int:
    """Generous multiples of the expected convergence scale."""
    if isinstance(variant, LazyParams):
        rate = variant.p_ac * variant.p_up
        if rate <= 0.0:
            raise ValueError("lazy run with p_ac*p_up = 0 needs an explicit max_days")
        return math.ceil(40.0 * math.log(n) / rate)
    return 4 * math.ceil(math.log(n) / math.log(max(p * n, 2.0))) + 8


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    p: float
    scheme: Scheme
    variant: str | LazyParams = "deterministic"
    trials: int = 1
    max_days: int | None = None
    master_seed: int = 0
    sweep: dict | None = None
    snapshots: bool = False
    diagnostics: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must be in [0, 1]")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.variant != "deterministic" and not isinstance(self.variant, LazyParams):
            raise ValueError("variant must be 'deterministic' or LazyParams")
        if self.sweep is not None:
            bad = set(self.sweep) - {"n", "p", "delta", "p_r"}
            if bad:
                raise ValueError(f"unknown sweep axes {sorted(bad)}")
            for k, v in self.sweep.items():
                if not v:
                    raise ValueError(f"sweep axis {k!r} is empty")

    def resolved_max_days(self) -> int:
        if self.max_days is not None:
            return self.max_days
        return default_max_days(self.n, self.p, self.variant)


def _apply_axis(cfg: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    if axis == "n":
        # a FixedGap red_count is re-derived only if a delta axis follows
        return replace(cfg, n=int(value))
    if axis == "p":
        return replace(cfg, p=float(value))
    if axis == "delta":
        if isinstance(cfg.scheme, DefectorModel):
            return replace(cfg, scheme=DefectorModel(int(value)))
        red = round(cfg.n / 2.0 + float(value))
        return replace(cfg, scheme=FixedGap(int(red)))
    if axis == "p_r":
        return replace(cfg, scheme=RandomBiased(float(value)))
    raise ValueError(axis)


def expand_cells(cfg: ExperimentConfig) -> list[ExperimentConfig]:
    """Cross product of the sweep axes (fixed axis order n, p, delta, p_r)."""
    cells = [replace(cfg, sweep=None)]
    if not cfg.sweep:
        return cells
    for axis in ("n", "p", "delta", "p_r"):
        if axis not in cfg.sweep:
            continue
        cells = [
            _apply_axis(cell, axis, value)
            for cell in cells
            for value in cfg.sweep[axis]
        ]
    # delta axes must be re-resolved after n changes
    return cells


# -- per-trial records --------------------------------------------------------


def _empty_records(k: int, diagnostics: bool) -> dict:
    rec = {
        "winner": np.zeros(k, dtype=np.int8),
        "t_win": np.full(k, -1, dtype=np.int32),
        "period": np.zeros(k, dtype=np.int8),
        "t_star": np.full(k, -1, dtype=np.int32),
        "truncated": np.zeros(k, dtype=bool),
        "blue": np.zeros((k, 3), dtype=np.int64),
        "conv_day": np.zeros(k, dtype=np.int32),
    }
    if diagnostics:
        rec["iso_blue0"] = np.zeros(k, dtype=bool)
        rec["remnant_size"] = np.full(k, -1, dtype=np.int64)
        rec["remnant_avg_deg"] = np.full(k, np.nan, dtype=np.float64)
    return rec


def _run_trial_into(rec: dict, i: int, cfg: ExperimentConfig, max_days: int) -> None:
    gstream = derive_stream(cfg.master_seed, 2 * i)
    sstream = derive_stream(cfg.master_seed, 2 * i + 1)
    g = sample_gnp(cfg.n, cfg.p, gstream)
    c0 = apply_scheme(cfg.scheme, cfg.n, sstream)
    traj = run(g, c0, cfg.variant, max_days, rng=sstream, snapshots=cfg.snapshots)

    bc = traj.blue_counts
    rec["blue"][i, 0] = bc[0]
    rec["blue"][i, 1] = bc[1] if len(bc) > 1 else bc[-1]
    rec["blue"][i, 2] = bc[2] if len(bc) > 2 else bc[-1]
    if traj.winner is not None:
        rec["winner"][i] = 1 if traj.winner == "Red" else -1
        rec["t_win"][i] = traj.t_win
    if traj.period is not None:
        rec["period"][i] = traj.period
        rec["t_star"][i] = traj.t_star
    rec["truncated"][i] = traj.truncated
    if traj.winner is not None:
        rec["conv_day"][i] = traj.t_win
    elif traj.period is not None:
        rec["conv_day"][i] = traj.t_star
    else:
        rec["conv_day"][i] = max_days

    if "iso_blue0" in rec:
        rec["iso_blue0"][i] = bool(((g.degrees == 0) & ~c0.red).any())
        if traj.fixation_pair is not None:
            red_a, red_b = traj.fixation_pair
            blue_a = cfg.n - int(red_a.sum())
            blue_b = cfg.n - int(red_b.sum())
            mask = ~red_a if blue_a >= blue_b else ~red_b
            size = int(mask.sum())
            rec["remnant_size"][i] = size
            rec["remnant_avg_deg"][i] = (
                float(g.degrees[mask].mean()) if size else 0.0
            )


def _run_cell_scalar(cfg: ExperimentConfig, threads: int) -> dict:
    max_days = cfg.resolved_max_days()
    rec = _empty_records(cfg.trials, cfg.diagnostics)
    if threads <= 1:
        for i in range(cfg.trials):
            _run_trial_into(rec, i, cfg, max_days)
        return rec
    chunk = max(1, math.ceil(cfg.trials / (4 * threads)))
    spans = [
        range(lo, min(lo + chunk, cfg.trials))
        for lo in range(0, cfg.trials, chunk)
    ]

    def work(span):
        for i in span:
            _run_trial_into(rec, i, cfg, max_days)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(work, spans))
    return rec


def _run_cell_batch(cfg: ExperimentConfig) -> dict:
    max_days = cfg.resolved_max_days()
    rec = _empty_records(cfg.trials, False)
    chunk = 50_000
    for lo in range(0, cfg.trials, chunk):
        hi = min(lo + chunk, cfg.trials)
        ids = np.arange(lo, hi, dtype=np.uint64)
        adj = _batch.sample_adjacency_batch(
            cfg.master_seed, 2 * ids, cfg.n, cfg.p
        )
        if isinstance(cfg.scheme, FixedGap):
            red0 = np.zeros(cfg.n, dtype=bool)
            red0[: cfg.scheme.red_count] = True
        else:
            p_red = 0.5 if isinstance(cfg.scheme, RandomHalf) else cfg.scheme.p_red
            out = np.zeros((hi - lo, cfg.n), dtype=np.bool_)
            _kernels.batch_bernoulli_draws(
                cfg.master_seed, 2 * ids + 1, cfg.n, p_red, out
            )
            red0 = out
        sub = _batch.run_batch(adj, red0, max_days)
        for key in ("winner", "t_win", "period", "t_star", "truncated",
                    "blue", "conv_day"):
            rec[key][lo:hi] = sub[key]
    return rec


def _batch_eligible(cfg: ExperimentConfig) -> bool:
    return (
        cfg.variant == "deterministic"
        and cfg.n <= _batch.BATCH_N_MAX
        and isinstance(cfg.scheme, (FixedGap, RandomHalf, RandomBiased))
        and not cfg.snapshots
        and not cfg.diagnostics
    )


# -- aggregation --------------------------------------------------------------


def wilson_interval(successes: int, trials: int, z: float) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1 or not 0 <= successes <= trials:
        raise ValueError("need 0 <= successes <= trials, trials >= 1")
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = phat + z2 / (2.0 * trials)
    adj = z * math.sqrt(phat * (1.0 - phat) / trials + z2 / (4.0 * trials * trials))
    return max(0.0, (center - adj) / denom), min(1.0, (center + adj) / denom)


@dataclass
class EnsembleResult:
    """Aggregates of one sweep cell; ``records`` keeps the per-trial arrays."""

    n: int
    p: float
    delta: float | None
    p_r: float | None
    p_ac: float | None
    p_up: float | None
    variant: str
    scheme: str
    trials: int
    max_days: int
    master_seed: int
    red_wins: int
    blue_wins: int
    none_count: int
    truncated_count: int
    win_day_hist: dict[int, int]
    mean_conv_day: float
    max_conv_day: int
    b1_mean: float
    b1_var: float
    wilson_lo: float
    wilson_hi: float
    bound_report: analytics.BoundReport | None = None
    records: dict = field(default_factory=dict, repr=False)

    def to_rows(self) -> list[dict]:
        """CSV rows, one per metric, in a fixed deterministic order."""
        base = {
            "n": self.n, "p": self.p, "delta": self.delta, "p_r": self.p_r,
            "p_ac": self.p_ac, "p_up": self.p_up, "variant": self.variant,
            "trials": self.trials, "ci_lo": None, "ci_hi": None,
            "seed": self.master_seed,
        }
        rows = []

        def add(metric, value, lo=None, hi=None):
            rows.append({**base, "metric": metric, "value": value,
                         "ci_lo": lo, "ci_hi": hi})

        add("red_wins", self.red_wins)
        add("blue_wins", self.blue_wins)
        add("none", self.none_count)
        add("truncated", self.truncated_count)
        add("red_win_rate", self.red_wins / self.trials,
            self.wilson_lo, self.wilson_hi)
        add("mean_conv_day", self.mean_conv_day)
        add("max_conv_day", self.max_conv_day)
        add("b1_mean", self.b1_mean)
        add("b1_var", self.b1_var)
        for day in sorted(self.win_day_hist):
            add(f"wins_day_{day}", self.win_day_hist[day])
        return rows

    def to_record(self) -> dict:
        rec = {
            "cell": {
                "n": self.n, "p": self.p, "delta": self.delta,
                "p_r": self.p_r, "p_ac": self.p_ac, "p_up": self.p_up,
                "variant": self.variant, "scheme": self.scheme,
                "trials": self.trials, "max_days": self.max_days,
                "seed": self.master_seed,
            },
            "metrics": {
                "red_wins": self.red_wins,
                "blue_wins": self.blue_wins,
                "none": self.none_count,
                "truncated": self.truncated_count,
                "red_win_rate": self.red_wins / self.trials,
                "red_win_rate_ci95": [self.wilson_lo, self.wilson_hi],
                "mean_conv_day": self.mean_conv_day,
                "max_conv_day": self.max_conv_day,
                "b1_mean": self.b1_mean,
                "b1_var": self.b1_var,
                "win_day_hist": {str(k): v for k, v in
                                 sorted(self.win_day_hist.items())},
            },
        }
        if self.bound_report is not None:
            rec["bound_report"] = self.bound_report.to_record()
        return rec


def _aggregate(cfg: ExperimentConfig, rec: dict) -> EnsembleResult:
    winner = rec["winner"]
    red_wins = int((winner == 1).sum())
    blue_wins = int((winner == -1).sum())
    hist = Counter(int(t) for t in rec["t_win"][winner != 0])
    b1 = rec["blue"][:, 1].astype(np.float64)
    lo, hi = wilson_interval(red_wins, cfg.trials, 1.96)
    lazy = isinstance(cfg.variant, LazyParams)
    result = EnsembleResult(
        n=cfg.n, p=cfg.p,
        delta=scheme_delta(cfg.scheme, cfg.n),
        p_r=cfg.scheme.p_red if isinstance(cfg.scheme, RandomBiased) else None,
        p_ac=cfg.variant.p_ac if lazy else None,
        p_up=cfg.variant.p_up if lazy else None,
        variant="lazy" if lazy else "deterministic",
        scheme=type(cfg.scheme).__name__,
        trials=cfg.trials,
        max_days=cfg.resolved_max_days(),
        master_seed=cfg.master_seed,
        red_wins=red_wins,
        blue_wins=blue_wins,
        none_count=cfg.trials - red_wins - blue_wins,
        truncated_count=int(rec["truncated"].sum()),
        win_day_hist=dict(hist),
        mean_conv_day=float(rec["conv_day"].mean()),
        max_conv_day=int(rec["conv_day"].max()),
        b1_mean=float(b1.mean()),
        b1_var=float(b1.var(ddof=1)) if cfg.trials > 1 else 0.0,
        wilson_lo=lo,
        wilson_hi=hi,
        records=rec,
    )
    return result


def run_ensemble(cfg: ExperimentConfig, threads: int = 1) -> list[EnsembleResult]:
    """Run every sweep cell; returns one EnsembleResult per cell."""
    results = []
    for cell in expand_cells(cfg):
        if _batch_eligible(cell):
            rec = _run_cell_batch(cell)
        else:
            rec = _run_cell_scalar(cell, threads)
        results.append(_aggregate(cell, rec))
    return results


# -- presets ------------------------------------------------------------------


def _subconnectivity_params(n: int = 5000, lam: float = 0.5) -> tuple[float, int]:
    p = (1.0 - lam) * math.log(n) / n
    # the largest prefix gap that keeps enough Blue mass for the
    # isolated-vertex diagnostics (>= 250 initial Blues)
    delta = n // 2 - 250
    return p, delta


def _presets() -> dict:
    n_sub = 5000
    p_sub, d_sub = _subconnectivity_params(n_sub)
    return {
        "power_of_few": ExperimentConfig(
            n=2000, p=0.5, scheme=FixedGap(1005), trials=2000,
            max_days=16, master_seed=20201005,
        ),
        "random_half": ExperimentConfig(
            n=4096, p=0.03125, scheme=RandomHalf(), trials=400,
            master_seed=20201006, sweep={"p": [0.03125, 0.125]},
        ),
        "biased": ExperimentConfig(
            n=4000, p=2.0 * math.log(4000) / 4000.0,
            scheme=RandomBiased(0.52), trials=400, master_seed=20201007,
            sweep={"p_r": [0.52, 0.56, 0.62]},
        ),
        "subconnectivity": ExperimentConfig(
            n=n_sub, p=p_sub, scheme=FixedGap(n_sub // 2 + d_sub),
            trials=500, max_days=96, master_seed=20201008, diagnostics=True,
        ),
        "lazy": ExperimentConfig(
            n=2000, p=0.5, scheme=FixedGap(1160),
            variant=LazyParams(p_ac=0.5, p_up=0.5), trials=500,
            master_seed=20201009,
        ),
        "conjecture_sweep": ExperimentConfig(
            n=3000, p=0.05, scheme=FixedGap(1503), trials=300,
            master_seed=20201010,
            sweep={"p": [0.05, 0.1, 0.2, 0.4], "delta": [3, 6, 12, 24]},
        ),
    }


def preset(name: str) -> ExperimentConfig:
    """A fully populated desk-scale config for a named experiment."""
    table = _presets()
    if name not in table:
        raise KeyError(f"unknown preset {name!r}; known: {sorted(table)}")
    return table[name]


def preset_names() -> list[str]:
    return sorted(_presets())


def preset_anchor(name: str) -> ExperimentConfig:
    """Shrunk (n <= 6) version of a preset, cross-checkable against the
    exact oracle (deterministic presets) or the exact lazy day-1
    distribution (lazy preset)."""
    table = {
        "power_of_few": ExperimentConfig(
            n=5, p=0.5, scheme=FixedGap(4), trials=100_000,
            max_days=28, master_seed=30201005,
        ),
        "random_half": ExperimentConfig(
            n=6, p=0.3, scheme=RandomHalf(), trials=100_000,
            max_days=32, master_seed=30201006,
        ),
        "biased": ExperimentConfig(
            n=6, p=0.4, scheme=RandomBiased(0.6), trials=100_000,
            max_days=32, master_seed=30201007,
        ),
        "subconnectivity": ExperimentConfig(
            n=6, p=0.5 * math.log(6) / 6, scheme=FixedGap(5),
            trials=100_000, max_days=32, master_seed=30201008,
        ),
        "lazy": ExperimentConfig(
            n=5, p=0.6, scheme=FixedGap(4),
            variant=LazyParams(p_ac=0.5, p_up=0.5), trials=100_000,
            max_days=1, master_seed=30201009,
        ),
        "conjecture_sweep": ExperimentConfig(
            n=6, p=0.5, scheme=FixedGap(5), trials=100_000,
            max_days=32, master_seed=30201010,
        ),
    }
    if name not in table:
        raise KeyError(f"unknown preset {name!r}")
    return table[name]


# -- bound-vs-measured reports -------------------------------------------------


def bound_vs_measured(cfg: ExperimentConfig, threads: int = 1) -> list[dict]:
    """Measured day-1/2 statistics and remnant diagnostics next to the
    closed-form bounds, one (measured, bound) row pair per quantity."""
    cfg = replace(cfg, diagnostics=True)
    rows: list[dict] = []
    for res in run_ensemble(cfg, threads=threads):
        rec = res.records
        base = {
            "n": res.n, "p": res.p, "delta": res.delta, "p_r": res.p_r,
            "p_ac": res.p_ac, "p_up": res.p_up, "variant": res.variant,
            "trials": res.trials, "seed": res.master_seed,
            "ci_lo": None, "ci_hi": None,
        }

        def add(metric, value):
            rows.append({**base, "metric": metric, "value": value})

        b1 = rec["blue"][:, 1].astype(np.float64)
        b2 = rec["blue"][:, 2].astype(np.float64)
        n, p = res.n, res.p
        add("e_b1_measured", float(b1.mean()))
        add("e_b1_se", float(b1.std(ddof=1) / math.sqrt(res.trials)))
        add("var_b1_measured", float(b1.var(ddof=1)))
        add("var_b1_bound", 7.0 * n / 12.0)

        delta = res.delta
        if delta is not None and delta > 0 and 0.0 < p < 1.0:
            c = min(p * delta, math.sqrt(p * (1.0 - p) * n))
            if c > 0:
                dc = analytics.day1_critical_coeff(c)
                add("e_b1_bound",
                    n / 2.0 - dc * min(float(n), delta * math.sqrt(p * n)))
            c10 = min(10.0, c)
            if c10 > 0 and 0.21 < analytics.day1_critical_coeff(c10):
                thr, fail = analytics.day1_bound(n, p, delta, c10, 0.21)
                add("pr_b1_above_threshold_measured", float((b1 > thr).mean()))
                add("pr_b1_above_threshold_bound", fail)
            a = 0.21 * min(math.sqrt(p * n), p * delta)
            if a > 0:
                add("pr_b2_above_quarter_measured", float((b2 > 0.25 * n).mean()))
                add("pr_b2_above_quarter_bound",
                    analytics.step2_fail_bound(n, p, a, 0.25))

        if "remnant_size" in rec:
            sizes = rec["remnant_size"]
            ok = sizes >= 0
            if ok.any():
                add("remnant_size_median", float(np.median(sizes[ok])))
                avg = rec["remnant_avg_deg"][ok]
                ref = 3.0 * math.sqrt(p * n)
                add("remnant_avg_deg_max", float(avg.max()))
                add("remnant_avg_deg_frac_le_3sqrtpn", float((avg <= ref).mean()))
                add("remnant_avg_deg_reference", ref)
            add("iso_blue0_frac", float(rec["iso_blue0"].mean()))
    return rows


# -- output writers -----------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows: list[dict], fp) -> None:
    """Fixed-schema CSV: header + one line per row, LF endings, UTF-8."""
    if isinstance(fp, (str, bytes)):
        with open(fp, "w", newline="\n", encoding="utf-8") as f:
            rows_to_csv(rows, f)
        return
    fp.write(",".join(CSV_COLUMNS) + "\n")
    for row in rows:
        fp.write(",".join(_fmt(row.get(col)) for col in CSV_COLUMNS) + "\n")


def results_to_csv(results: list[EnsembleResult], fp) -> None:
    rows = [row for res in results for row in res.to_rows()]
    rows_to_csv(rows, fp)


def results_to_json(results: list[EnsembleResult]) -> str:
    return json.dumps({"results": [r.to_record() for r in results]},
                      indent=2, sort_keys=True)
