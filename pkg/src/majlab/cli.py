"""Command-line front end.

Subcommands: simulate, ensemble, preset, bounds, spectral, oracle, selftest.
Exit codes: 0 success, 1 usage error, 2 runtime failure, 3 selftest
assertion failure.  Output files are written atomically (temp file in the
target directory, then rename), so no subcommand leaves partial output.
The MAJLAB_SEED environment variable supplies the default master seed when
--seed is absent.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import analytics, experiments, exact_oracle, spectral
from .dynamics import Coloring, LazyParams, run
from .graphs import sample_gnp
from .rng import derive_stream


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route argparse failures to exit code 1
        raise _UsageError(message)


def _default_seed() -> int:
    env = os.environ.get("MAJLAB_SEED")
    return int(env) if env else 0


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".majlab-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, out: str | None) -> None:
    if out:
        _write_atomic(out, text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _read_config_file(path: str) -> dict:
    """Flat key=value format, one pair per line, '#' comments."""
    values = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise _UsageError(f"{path}:{lineno}: expected key=value")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
    return values


_ENSEMBLE_KEYS = {
    "n": int, "p": float, "red": int, "delta": float, "p-r": float,
    "p-ac": float, "p-up": float, "trials": int, "max-days": int,
    "seed": int, "scheme": str, "threads": int, "format": str,
    "sweep-n": str, "sweep-p": str, "sweep-delta": str, "sweep-p-r": str,
}


def _merge_config(args: argparse.Namespace) -> dict:
    """File values first, then flags override; keys mirror flag names."""
    merged: dict = {}
    if getattr(args, "config", None):
        raw = _read_config_file(args.config)
        for key, val in raw.items():
            if key not in _ENSEMBLE_KEYS:
                raise _UsageError(f"unknown config key {key!r}")
            merged[key] = _ENSEMBLE_KEYS[key](val)
    for key in _ENSEMBLE_KEYS:
        attr = key.replace("-", "_")
        val = getattr(args, attr, None)
        if val is not None:
            merged[key] = val
    return merged


def _parse_sweep(merged: dict) -> dict | None:
    sweep = {}
    for key, axis in (("sweep-n", "n"), ("sweep-p", "p"),
                      ("sweep-delta", "delta"), ("sweep-p-r", "p_r")):
        if merged.get(key):
            conv = int if axis == "n" else float
            sweep[axis] = [conv(tok) for tok in str(merged[key]).split(",") if tok]
    return sweep or None


def _build_scheme(merged: dict, n: int):
    name = merged.get("scheme", "fixed")
    if name == "fixed":
        if "red" in merged:
            red = merged["red"]
        elif "delta" in merged:
            red = round(n / 2.0 + merged["delta"])
        else:
            raise _UsageError("fixed scheme needs --red or --delta")
        return experiments.FixedGap(int(red))
    if name == "half":
        return experiments.RandomHalf()
    if name == "biased":
        if "p-r" not in merged:
            raise _UsageError("biased scheme needs --p-r")
        return experiments.RandomBiased(merged["p-r"])
    if name == "defector":
        if "delta" not in merged:
            raise _UsageError("defector scheme needs --delta")
        return experiments.DefectorModel(int(merged["delta"]))
    raise _UsageError(f"unknown scheme {name!r}")


def _build_ensemble_config(args) -> tuple[experiments.ExperimentConfig, str, int]:
    merged = _merge_config(args)
    for key in ("n", "p"):
        if key not in merged:
            raise _UsageError(f"--{key} is required")
    n = merged["n"]
    variant: str | LazyParams = "deterministic"
    if "p-ac" in merged or "p-up" in merged:
        variant = LazyParams(merged.get("p-ac", 1.0), merged.get("p-up", 1.0))
    cfg = experiments.ExperimentConfig(
        n=n,
        p=merged["p"],
        scheme=_build_scheme(merged, n),
        variant=variant,
        trials=merged.get("trials", 100),
        max_days=merged.get("max-days"),
        master_seed=merged.get("seed", _default_seed()),
        sweep=_parse_sweep(merged),
    )
    return cfg, merged.get("format", "csv"), merged.get("threads", 1)


def _emit_results(results, fmt: str, out: str | None) -> None:
    if fmt == "json":
        _emit(experiments.results_to_json(results), out)
    elif fmt == "csv":
        import io

        buf = io.StringIO()
        experiments.results_to_csv(results, buf)
        _emit(buf.getvalue(), out)
    else:
        raise _UsageError(f"unknown format {fmt!r}")


# -- subcommands ----------------------------------------------------------------


def _cmd_simulate(args) -> int:
    if args.n is None or args.p is None or args.red is None:
        raise _UsageError("simulate needs --n, --p and --red")
    seed = args.seed if args.seed is not None else _default_seed()
    gstream = derive_stream(seed, 0)
    dstream = derive_stream(seed, 1)
    g = sample_gnp(args.n, args.p, gstream)
    c0 = Coloring.from_red_prefix(args.n, args.red)
    variant: str | LazyParams = "deterministic"
    if args.p_ac is not None or args.p_up is not None:
        variant = LazyParams(args.p_ac if args.p_ac is not None else 1.0,
                             args.p_up if args.p_up is not None else 1.0)
    max_days = args.max_days or experiments.default_max_days(args.n, args.p, variant)
    traj = run(g, c0, variant, max_days, rng=dstream)
    _emit(json.dumps(traj.to_record(), indent=2), args.out)
    return 0


def _cmd_ensemble(args) -> int:
    cfg, fmt, threads = _build_ensemble_config(args)
    results = experiments.run_ensemble(cfg, threads=threads)
    _emit_results(results, args.format or fmt, args.out)
    return 0


def _cmd_preset(args) -> int:
    try:
        cfg = experiments.preset(args.name)
    except KeyError as exc:
        raise _UsageError(str(exc)) from None
    if args.trials is not None:
        cfg = dataclasses.replace(cfg, trials=args.trials)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, master_seed=args.seed)
    results = experiments.run_ensemble(cfg, threads=args.threads or 1)
    _emit_results(results, args.format or "csv", args.out)
    return 0


def _cmd_bounds(args) -> int:
    if args.n is None or args.p is None or args.delta is None:
        raise _UsageError("bounds needs --n, --p and --delta")
    lam = args.lam if args.lam is not None else 1.0
    if args.p_ac is not None or args.p_up is not None:
        report = analytics.lazy_failure_bound(
            args.n, args.p, args.delta, lam,
            args.p_ac if args.p_ac is not None else 1.0,
            args.p_up if args.p_up is not None else 1.0,
        )
    else:
        report = analytics.theorem1_failure_bound(args.n, args.p, args.delta, lam)
    _emit(json.dumps(report.to_record(), indent=2, sort_keys=True), args.out)
    return 0


def _cmd_spectral(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    rng = derive_stream(seed, 0)
    if args.mode == "norms":
        ratios = spectral.norm_concentration(args.n, args.p, args.samples, rng)
        rows = [
            {"n": args.n, "p": args.p, "variant": "deterministic",
             "trials": args.samples, "metric": f"norm_ratio_{i}",
             "value": float(r), "seed": seed}
            for i, r in enumerate(ratios)
        ]
        payload = {"rows": rows, "max_ratio": float(ratios.max())}
    else:  # shrink
        trials = args.trials or 10
        checked = passed = 0
        for i in range(trials):
            g = sample_gnp(args.n, args.p, derive_stream(seed, 2 * i))
            sstream = derive_stream(seed, 2 * i + 1)
            c0 = experiments.apply_scheme(experiments.RandomHalf(), args.n, sstream)
            traj = run(g, c0, "deterministic",
                       experiments.default_max_days(args.n, args.p, "deterministic"),
                       snapshots=True)
            norm = spectral.centered_opnorm(g, args.p, rng=sstream).value
            steps = spectral.shrink_check(g, traj, args.b, norm)
            checked += len(steps)
            passed += sum(s.passed for s in steps)
        payload = {"trials": trials, "checked_steps": checked,
                   "passed_steps": passed}
    _emit(json.dumps(payload, indent=2, sort_keys=True), args.out)
    return 0


def _cmd_oracle(args) -> int:
    if args.n is None or args.p is None or args.red is None:
        raise _UsageError("oracle needs --n, --p and --red")
    c0 = Coloring.from_red_prefix(args.n, args.red)
    if args.mode == "win":
        pr = exact_oracle.exact_win_prob(args.n, args.p, c0, args.max_days)
        payload = {"pr_red": pr[0], "pr_blue": pr[1], "pr_none": pr[2]}
    elif args.mode == "day1":
        mean, var = exact_oracle.exact_day1_moments(args.n, args.p, c0)
        payload = {"e_b1": mean, "var_b1": var}
    else:  # lazy-day1
        dist = exact_oracle.exact_lazy_day1_distribution(
            args.n, args.p,
            args.p_ac if args.p_ac is not None else 1.0,
            args.p_up if args.p_up is not None else 1.0,
            c0,
        )
        payload = {"b1_pmf": [float(x) for x in dist]}
    _emit(json.dumps(payload, indent=2, sort_keys=True), args.out)
    return 0


def _cmd_selftest(args) -> int:
    del args
    failures = []

    def check(name, ok):
        line = f"{'ok' if ok else 'FAIL'}  {name}"
        print(line)
        if not ok:
            failures.append(name)

    s1 = derive_stream(7, 3)
    s2 = derive_stream(7, 3)
    check("rng determinism",
          [s1.next_u64() for _ in range(64)] == [s2.next_u64() for _ in range(64)])
    check("rng distinct streams",
          derive_stream(7, 0).next_u64() != derive_stream(7, 1).next_u64())

    from .graphs import from_edges
    k3 = from_edges(3, [(0, 1), (0, 2), (1, 2)])
    from .dynamics import majority_step
    c = Coloring(np.array([True, True, False]))
    check("K3 majority step", majority_step(k3, c).red_count == 3)
    traj = run(from_edges(2, [(0, 1)]), Coloring(np.array([True, False])),
               "deterministic", 10)
    check("K2 period 2", traj.period == 2 and traj.t_star == 0
          and traj.winner is None)

    pr = exact_oracle.exact_win_prob(2, 0.37, Coloring(np.array([True, False])))
    check("oracle 2-vertex split", abs(pr[2] - 1.0) < 1e-12)

    check("critical coeff", abs(analytics.day1_critical_coeff(10)
                                - 0.4152834401839982) < 1e-12)
    check("chernoff example",
          abs(analytics.chernoff_upper(0.5, 10, 5) - math.exp(-2.5)) < 1e-15)
    lo, hi = experiments.wilson_interval(0, 10, 1.96)
    check("wilson boundary", lo == 0.0 and hi < 1.0)

    g = sample_gnp(64, 0.2, derive_stream(11, 0))
    try:
        g.validate()
        check("graph invariants", True)
    except AssertionError:
        check("graph invariants", False)

    if failures:
        print(f"selftest: {len(failures)} failure(s)")
        return 3
    print("selftest: all checks passed")
    return 0


# -- parser ----------------------------------------------------------------------


def _add_common(sp, *names):
    table = {
        "n": (("--n",), {"type": int}),
        "p": (("--p",), {"type": float}),
        "red": (("--red",), {"type": int}),
        "delta": (("--delta",), {"type": float}),
        "p_r": (("--p-r",), {"type": float, "dest": "p_r"}),
        "p_ac": (("--p-ac",), {"type": float, "dest": "p_ac"}),
        "p_up": (("--p-up",), {"type": float, "dest": "p_up"}),
        "trials": (("--trials",), {"type": int}),
        "seed": (("--seed",), {"type": int}),
        "max_days": (("--max-days",), {"type": int, "dest": "max_days"}),
        "out": (("--out",), {"type": str}),
        "format": (("--format",), {"choices": ("csv", "json")}),
        "threads": (("--threads",), {"type": int}),
        "lam": (("--lambda",), {"type": float, "dest": "lam"}),
        "samples": (("--samples",), {"type": int, "default": 20}),
        "b": (("--b",), {"type": float, "default": 0.25}),
        "config": (("--config",), {"type": str}),
        "scheme": (("--scheme",),
                   {"choices": ("fixed", "half", "biased", "defector")}),
        "sweep_n": (("--sweep-n",), {"type": str, "dest": "sweep_n"}),
        "sweep_p": (("--sweep-p",), {"type": str, "dest": "sweep_p"}),
        "sweep_delta": (("--sweep-delta",), {"type": str, "dest": "sweep_delta"}),
        "sweep_p_r": (("--sweep-p-r",), {"type": str, "dest": "sweep_p_r"}),
    }
    for name in names:
        flags, kw = table[name]
        sp.add_argument(*flags, **kw)


def _build_parser() -> _Parser:
    parser = _Parser(prog="majlab",
                     description="Majority dynamics on G(n,p): simulation and "
                                 "bound verification")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="run one trial and print the trajectory")
    _add_common(sp, "n", "p", "red", "p_ac", "p_up", "seed", "max_days", "out")
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("ensemble", help="run a seeded trial ensemble")
    _add_common(sp, "n", "p", "red", "delta", "p_r", "p_ac", "p_up", "trials",
                "seed", "max_days", "out", "format", "threads", "config",
                "scheme", "sweep_n", "sweep_p", "sweep_delta", "sweep_p_r")
    sp.set_defaults(func=_cmd_ensemble)

    sp = sub.add_parser("preset", help="run a named preset experiment")
    sp.add_argument("name")
    _add_common(sp, "trials", "seed", "out", "format", "threads")
    sp.set_defaults(func=_cmd_preset)

    sp = sub.add_parser("bounds", help="evaluate the failure-probability bounds")
    _add_common(sp, "n", "p", "delta", "lam", "p_ac", "p_up", "out")
    sp.set_defaults(func=_cmd_bounds)

    sp = sub.add_parser("spectral", help="norm concentration / shrink checks")
    sp.add_argument("--mode", choices=("norms", "shrink"), default="norms")
    _add_common(sp, "n", "p", "samples", "trials", "b", "seed", "out")
    sp.set_defaults(func=_cmd_spectral)

    sp = sub.add_parser("oracle", help="exact small-scale computations")
    sp.add_argument("--mode", choices=("win", "day1", "lazy-day1"), default="win")
    _add_common(sp, "n", "p", "red", "p_ac", "p_up", "max_days", "out")
    sp.set_defaults(func=_cmd_oracle)

    sp = sub.add_parser("selftest", help="run the quick invariant suite")
    sp.set_defaults(func=_cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
