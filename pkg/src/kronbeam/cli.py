"""Command-line front end: single runs, figure sweeps, and self-verification.

Exit codes: 0 success, 1 verification failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import verify
from .harness import (
    ConfigError,
    SimConfig,
    SweepSpec,
    config_from_mapping,
    figure_presets,
    parse_config_file,
    parse_config_text,
    run_sweep,
    run_trial_detailed,
    write_results,
)


def _parse_overrides(pairs: list[str]) -> dict:
    mapping = {}
    for item in pairs:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        mapping.update(parse_config_text(f"{key.strip()} = {raw.strip()}"))
    return mapping


def _load_config(args) -> tuple[SimConfig, dict]:
    mapping = {}
    if getattr(args, "config", None):
        mapping.update(parse_config_file(args.config))
    mapping.update(_parse_overrides(getattr(args, "set", None) or []))
    config = config_from_mapping(mapping)
    if getattr(args, "seed", None) is not None:
        config = config_from_mapping({"master_seed": args.seed}, base=config)
    if getattr(args, "trials", None) is not None:
        config = config_from_mapping({"trials": args.trials}, base=config)
    return config, mapping


def cmd_run(args) -> int:
    config, _ = _load_config(args)
    n_trials = args.trials if args.trials is not None else 1
    totals: dict[str, list] = {s: [] for s in config.schemes}
    residuals: dict[str, float] = {s: 0.0 for s in config.schemes}
    errors: dict[str, str] = {}
    for t in range(n_trials):
        rates, res, errs = run_trial_detailed(config, t)
        for s in config.schemes:
            totals[s].append(rates[s])
            residuals[s] = max(residuals[s], res.get(s, 0.0))
        errors.update(errs)
    print(f"seed={config.master_seed} trials={n_trials} "
          f"M={config.M} N={config.N} K={config.K} Psi={config.Psi} "
          f"snr_dB={config.snr_dB} isr_dB={config.isr_dB}")
    print(f"{'scheme':<12}{'sum rate (b/s/Hz)':>20}{'max nulling residual':>24}")
    for s in config.schemes:
        vals = np.array(totals[s])
        ok = vals[np.isfinite(vals)]
        if ok.size:
            print(f"{s:<12}{np.mean(ok):>20.4f}{residuals[s]:>24.3e}")
        else:
            print(f"{s:<12}{'infeasible':>20}  ({errors.get(s, '')})")
    return 0


def cmd_sweep(args) -> int:
    config, mapping = _load_config(args)
    axis = mapping.get("axis")
    values = mapping.get("values")
    if not axis or not values:
        raise ConfigError("sweep needs 'axis' and 'values' keys (config file or --set)")
    if axis in ("N_columns", "Gamma"):
        values = tuple(int(v) for v in values)
    spec = SweepSpec(axis, tuple(values), config)
    result = run_sweep(spec, workers=args.workers)
    write_results(result, args.out, args.format)
    print(f"wrote {len(result.rows)} rows to {args.out} (fingerprint {result.fingerprint})")
    return 0


def cmd_figures(args) -> int:
    config, _ = _load_config(args)
    presets = figure_presets(config)
    which = [args.which] if args.which else sorted(presets)
    out_dir = args.out or "."
    if not os.path.isdir(out_dir):
        raise ConfigError(f"output directory does not exist: {out_dir}")
    for name in which:
        spec = presets[name]
        result = run_sweep(spec, workers=args.workers)
        path = os.path.join(out_dir, f"{name}.{args.format}")
        write_results(result, path, args.format)
        print(f"{name}: wrote {len(result.rows)} rows to {path}")
    return 0


def cmd_verify(args) -> int:
    rank_n = args.trials if args.trials is not None else 200
    seed = args.seed if args.seed is not None else 0
    results = verify.run_suites(seed=seed, corrupt=args.corrupt, rank_scenarios=rank_n)
    if args.rank_sweep:
        results = [verify.verify_rank_condition(seed, scenarios=rank_n)]
    failed = False
    for name, passed, detail in results:
        print(f"{'PASS' if passed else 'FAIL'}  {name:<16} {detail}")
        failed = failed or not passed
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kronbeam",
        description="Hybrid beamforming simulator for uplink multi-cell mmWave massive MIMO")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default=None):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--trials", type=int, help="Monte-Carlo trials")
        p.add_argument("--out", default=out_default, help="output path")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--workers", type=int, default=1, help="worker processes")

    p_run = sub.add_parser("run", help="run trials and print per-scheme sum rates")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a sweep described by the config")
    common(p_sweep, out_default="sweep.csv")
    p_sweep.set_defaults(func=cmd_sweep)

    p_fig = sub.add_parser("figures", help="emit the preset reference sweeps")
    common(p_fig, out_default=".")
    p_fig.add_argument("--which", choices=("fig3", "fig4", "fig5", "fig6"),
                       help="one preset (default: all four)")
    p_fig.set_defaults(func=cmd_figures)

    p_ver = sub.add_parser("verify", help="run the invariant self-check suites")
    common(p_ver)
    p_ver.add_argument("--corrupt", choices=("nulling",),
                       help="inject a fault as a negative control")
    p_ver.add_argument("--rank-sweep", action="store_true",
                       help="run only the antenna-configuration rank sweep")
    p_ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    from .harness import _limit_blas_threads
    _limit_blas_threads()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
