"""Command line interface: ``gcoerce <subcommand> --config run.toml [overrides]``.

Exit status 0 on success, 1 when a check fails, 2 on usage or config errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import experiments, frontier, stats, theory
from . import field as fieldmod
from .store import (ConfigError, dumps_report, load_config, read_waiting_time_csv, rows_to_csv,
                    write_snapshot)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.replace(",", " ").split()]


def _common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
    p.add_argument("--config", required=config_required, help="TOML config file")
    p.add_argument("--seed", type=int, help="override the seed (single-seed run)")
    p.add_argument("--out-dir", help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gcoerce", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-field", help="write the mode table of a field as JSON")
    _common(p)

    p = sub.add_parser("stats", help="E_N over a radius grid and r_star at one center")
    _common(p)
    p.add_argument("--center", type=_floats, help="t0 x0_1 ... x0_d")
    p.add_argument("--N", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--r-min", type=float)
    p.add_argument("--r-max", type=float)
    p.add_argument("--n-r", type=int)
    p.add_argument("--q", type=int)

    p = sub.add_parser("evolve", help="evolve from the first source and write snapshots")
    _common(p)
    p.add_argument("--t-final", type=float)
    p.add_argument("--snapshots", type=_floats, default=None, help="snapshot times")
    p.add_argument("--indicator", action="store_true", help="write 0/1 indicator sets")

    p = sub.add_parser("waiting-time", help="run the waiting-time ensemble")
    _common(p)
    p.add_argument("--horizon", type=float)
    p.add_argument("--c", type=_floats, help="one or more c values")
    p.add_argument("--n-seeds", type=int)
    p.add_argument("--workers", type=int)

    p = sub.add_parser("tails", help="survival curve and tail fit from a waiting-time CSV")
    _common(p, config_required=False)
    p.add_argument("--csv", required=True, help="waiting_times.csv from a previous run")
    p.add_argument("--c", type=float, help="use only rows with this c")
    p.add_argument("--t-grid", type=_floats, help="explicit survival grid")
    p.add_argument("--n-grid", type=int, default=50)

    p = sub.add_parser("params", help="print the theorem parameters as JSON")
    p.add_argument("--M", type=float, required=True)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--C", type=float, default=2.0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--lambda1", type=float)
    p.add_argument("--lenient", action="store_true", help="report parameters even when L >= N")

    p = sub.add_parser("verify", help="run the invariant checks and print a JSON report")
    _common(p)
    p.add_argument("--horizon", type=float, help="duration of the evolution checks")
    p.add_argument("--no-oracle", action="store_true")
    return ap


def _config(args) -> experiments.ExperimentConfig:
    cfg = load_config(args.config)
    run = cfg.setdefault("run", {})
    if args.seed is not None:
        run["seeds"] = [args.seed]
    if getattr(args, "n_seeds", None) is not None:
        run.pop("seeds", None)
        run["n_seeds"] = args.n_seeds
    if args.out_dir is not None:
        run["out_dir"] = args.out_dir
    if getattr(args, "workers", None) is not None:
        run["workers"] = args.workers
    wt = cfg.setdefault("waiting_time", {})
    if getattr(args, "horizon", None) is not None and args.command == "waiting-time":
        wt["horizon"] = args.horizon
    if getattr(args, "c", None) is not None and args.command == "waiting-time":
        wt["c"] = args.c
    st = cfg.setdefault("stats", {})
    for key in ("N", "epsilon", "r_min", "r_max", "n_r", "q"):
        val = getattr(args, key, None)
        if val is not None:
            st[key] = val
    return experiments.ExperimentConfig.from_dict(cfg)


def _emit(text: str, out_dir, name: str) -> None:
    if out_dir is None:
        sys.stdout.write(text)
        return
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    (path / name).write_text(text, encoding="utf-8")
    print(path / name)


def cmd_gen_field(args) -> int:
    conf = _config(args)
    out = []
    for s in conf.seeds:
        fld = fieldmod.from_config(conf.field, s)
        out.append(fieldmod.to_json(fld))
        if args.out_dir:
            _emit(out[-1] + "\n", args.out_dir, f"field_seed{s}.json")
    if not args.out_dir:
        sys.stdout.write("\n".join(out) + "\n")
    return EXIT_OK


def cmd_stats(args) -> int:
    conf = _config(args)
    fld = fieldmod.from_config(conf.field, conf.seeds[0])
    if args.center is not None:
        if len(args.center) != fld.spatial_dim + 1:
            raise UsageError("--center needs t0 followed by d coordinates")
        center = (args.center[0], tuple(args.center[1:]))
    else:
        center = conf.source_list()[0]
    es = stats.r_star(fld, center, conf.N, conf.epsilon, conf.r_min, conf.r_max, n_r=conf.n_r,
                      q=conf.q)
    if args.format == "json":
        _emit(dumps_report({"seed": conf.seeds[0], **es.to_dict()}), args.out_dir, "stats.json")
    else:
        rows = [[r, e, bool(e >= conf.epsilon and i == len(es.r_values) - 1)]
                for i, (r, e) in enumerate(zip(es.r_values, es.E_N_values))]
        _emit(rows_to_csv(["r", "E_N", "censored"], rows), args.out_dir, "stats.csv")
        summary = {"seed": conf.seeds[0], "r_star": es.r_star, "censored": es.censored,
                   "N": es.N, "epsilon": es.epsilon}
        _emit(dumps_report(summary), args.out_dir, "stats_summary.json")
    return EXIT_OK


def cmd_evolve(args) -> int:
    conf = _config(args)
    fld = fieldmod.from_config(conf.field, conf.seeds[0])
    t0, x0 = conf.source_list()[0]
    t_final = t0 + (args.t_final if args.t_final is not None else conf.horizon)
    snaps = args.snapshots if args.snapshots else [t_final]
    n = frontier.required_side(conf.A, fld.amplitude_bound, t_final - t0, conf.delta) / conf.h
    grid = frontier.GridSpec.centered(x0, conf.n or int(np.ceil(n)) + 2, conf.h)
    state = frontier.init_point_source(grid, x0, conf.delta, t0, conf.A)
    out_dir = Path(args.out_dir or conf.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for k, st in enumerate(frontier.evolve(state, fld, t_final, snapshot_times=snaps,
                                           cfl_safety=conf.cfl_safety)):
        if args.indicator:
            data = frontier.reachable_indicator(st).indicator
        else:
            data = st.values
        path = out_dir / f"snapshot_{k:04d}.bin"
        write_snapshot(path, data, conf.h, st.time)
        print(path)
    return EXIT_OK


def cmd_waiting_time(args) -> int:
    conf = _config(args)
    recs = experiments.run_waiting_time_ensemble(conf, write=True)
    csv_path = Path(conf.out_dir) / experiments.CSV_NAME
    summary = {"n_records": len(recs), "n_censored": sum(r.censored for r in recs),
               "csv": str(csv_path), **experiments.supremal_c(recs)}
    if args.format == "json":
        print(dumps_report(summary), end="")
    else:
        print(csv_path)
    return EXIT_OK


def cmd_tails(args) -> int:
    rows = read_waiting_time_csv(args.csv)
    if args.c is not None:
        rows = [r for r in rows if abs(r["c"] - args.c) < 1e-12]
    if not rows:
        raise UsageError("no rows selected")
    if args.t_grid:
        grid = np.array(args.t_grid)
    else:
        hz = max(r["horizon"] for r in rows)
        grid = np.linspace(0.0, hz, args.n_grid)
    tc = experiments.tail_curve(rows, grid)
    if args.format == "json":
        _emit(dumps_report(tc.to_dict()), args.out_dir, "tails.json")
    else:
        data = [[t, s, lo, hi, su] for t, s, lo, hi, su in
                zip(tc.t_grid, tc.survival, tc.ci_low, tc.ci_high, tc.survival_upper)]
        _emit(rows_to_csv(["t", "survival", "ci_low", "ci_high", "survival_upper"], data),
              args.out_dir, "tails.csv")
        fit = {"exponent": tc.exponent, "length_scale": tc.length_scale, "fit_flag": tc.fit_flag,
               "n_samples": tc.n_samples, "n_censored": tc.n_censored}
        _emit(dumps_report(fit), args.out_dir, "tails_fit.json")
    return EXIT_OK


def cmd_params(args) -> int:
    p = theory.theorem_parameters(args.M, d=args.d, C=args.C, c=args.c, lambda1=args.lambda1,
                                  strict=not args.lenient)
    print(dumps_report(p.to_dict()), end="")
    return EXIT_OK


def cmd_verify(args) -> int:
    conf = _config(args)
    report = experiments.verify_suite(conf, horizon=args.horizon, oracle=not args.no_oracle)
    _emit(dumps_report(report), args.out_dir, "verify.json")
    return EXIT_OK if report["passed"] else EXIT_FAIL


COMMANDS = {
    "gen-field": cmd_gen_field, "stats": cmd_stats, "evolve": cmd_evolve,
    "waiting-time": cmd_waiting_time, "tails": cmd_tails, "params": cmd_params,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, UsageError) as exc:
        print(f"gcoerce: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # invalid parameter combinations reported by the library
        print(f"gcoerce: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
