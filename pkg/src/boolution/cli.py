"""Command-line entry point.

Exit codes: 0 all checks pass, 1 a check failed, 2 bad configuration,
3 request beyond a computational cap.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .battery import CHECKS, run_checks
from .dynamics import run_finite, run_infinite, waddington_scenario
from .errors import CapabilityError, ConfigError, PreconditionError
from .experiments import (
    SWEEP_AXES,
    ExperimentConfig,
    ScenarioReport,
    function_to_dict,
    load_config,
    load_function,
    parse_function_arg,
    parse_mu0,
    parse_seeds,
    rows_to_csv,
    run_scenario,
    seeds_from_env,
    sweep,
    sweep_rows,
    trajectory_rows,
    validate_config,
    write_report,
)
from .fourier import coefficient_rows, fourier_table
from .functions import Threshold, parse_landscape

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CAPABILITY = 0, 1, 2, 3


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _function(args):
    f = parse_function_arg(args.function, args.n)
    if args.landscape:
        f = f.with_landscape(parse_landscape(args.landscape))
    return f


def read_h_schedule(path: str) -> list[int]:
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        raise ConfigError(f"h-schedule file not found: {path}") from None
    try:
        vals = [int(tok) for tok in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"{path}: h-schedule entries must be integers") from None
    if not vals or any(v not in (-1, 1) for v in vals):
        raise ConfigError(f"{path}: h-schedule must be a nonempty list of +-1")
    return vals


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    f = _function(args)
    mu0 = parse_mu0(args.mu0, f.n)
    if args.h_schedule:
        if not isinstance(f.predicate, Threshold) or f.predicate.h is None:
            raise ConfigError("--h-schedule needs a threshold function with an environment flag")
        rep = waddington_scenario(f.n, f.predicate.k, read_h_schedule(args.h_schedule),
                                  f.landscape, mode="finite" if args.N else "infinite",
                                  N=args.N, seed=parse_seeds(args.seeds)[0], mu0=mu0)
        rows = [{"t": r.t, "h": r.h if r.h is not None else "", "sat_heat": r.sat_heat,
                 "sat_normal": r.sat_normal,
                 **{f"mu_{i + 1}": float(r.mu[i]) for i in range(f.n)}} for r in rep.rows]
        _emit(rows_to_csv(rows), args.out)
        return EXIT_OK
    if args.N is None:
        traj = run_infinite(f, mu0, args.T, record_every=args.record_every)
        _emit(rows_to_csv(trajectory_rows(traj)), args.out)
        return EXIT_OK
    seeds = seeds_from_env(parse_seeds(args.seeds))
    failed = False
    for seed in seeds:
        traj = run_finite(f, mu0, args.N, args.T, seed, early_stop=not args.no_early_stop,
                          record_every=args.record_every)
        failed |= traj.density_violations > 0
        out = args.out
        if out and len(seeds) > 1:
            p = Path(out)
            out = str(p.with_name(f"{p.stem}_seed{seed}{p.suffix}"))
        _emit(rows_to_csv(trajectory_rows(traj)), out)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_verify(args) -> int:
    names = CHECKS if args.check == "all" else (args.check,)
    results = run_checks(names, args.instances, args.seed)
    width = max(len(n) for n in names)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        extra = f"  {r.note}" if r.note else ""
        print(f"{r.name:<{width}}  {status}  failures={r.failures}/{len(r.rows)}  "
              f"worst={r.worst:.3e}  tol={r.tolerance:g}{extra}")
    if args.out:
        rows = [{"check": r.name, **{k: v for k, v in row.items()}}
                for r in results for row in r.rows]
        Path(args.out).write_text(rows_to_csv(rows))
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def _scenario_config(args, scenario: str) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
        if cfg.scenario != scenario:
            raise ConfigError(f"config is for scenario {cfg.scenario!r}, not {scenario!r}")
    else:
        cfg = ExperimentConfig(scenario=scenario)
        if scenario == "waddington":
            cfg = replace(cfg, n=10, k=3)
        elif getattr(args, "function", None):
            cfg.function = function_to_dict(_function(args))
    changes = {}
    for key in ("N", "T", "n", "k", "mode", "mu0", "start", "landscape"):
        val = getattr(args, key, None)
        if val is not None:
            changes[key] = val
    if scenario != "waddington":
        changes.pop("n", None)
        changes.pop("landscape", None)
    if getattr(args, "seeds", None):
        s = parse_seeds(args.seeds)
        changes["seeds"] = (s[0], s[-1])
    if getattr(args, "h_schedule", None):
        changes["h_schedule"] = read_h_schedule(args.h_schedule)
    if getattr(args, "no_selection", False):
        changes["selection"] = False
    cfg = replace(cfg, **changes)
    validate_config(cfg)
    return cfg


def _print_report(rep: ScenarioReport) -> None:
    for k, v in rep.summary.items():
        print(f"{k}: {v}")
    for k, ok in rep.checks.items():
        print(f"check {k}: {'PASS' if ok else 'FAIL'}")
    print(f"config_hash: {rep.config_hash}  version: {rep.version}  "
          f"wall_time: {rep.wall_time:.3f}s")


def cmd_scenario(args) -> int:
    cfg = _scenario_config(args, args.scenario)
    rep = run_scenario(cfg)
    _print_report(rep)
    write_report(rep, args.out, args.json)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    cast = float if args.axis == "epsilon" else int
    values = [cast(v) for v in args.values.split(",") if v.strip()]
    results = sweep(cfg, args.axis, values)
    rows = sweep_rows(results)
    _emit(rows_to_csv(rows), args.out)
    if args.json:
        Path(args.json).write_text(json.dumps(
            [r.to_json() if isinstance(r, ScenarioReport) else r for r in results], indent=2))
    return EXIT_OK


def cmd_fourier(args) -> int:
    f = _function(args)
    mu = parse_mu0(args.mu0, f.n)
    table = fourier_table(f, mu, args.max_order)
    rows = [{"subset_mask": m, "order": o, "coefficient": c} for m, o, c in coefficient_rows(table)]
    _emit(rows_to_csv(rows), args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    for path in args.files:
        text = Path(path).read_text() if Path(path).exists() else ""
        if "scenario" in text:
            cfg = load_config(path)
            print(f"{path}: ok (scenario {cfg.scenario}, hash {cfg.digest()})")
        else:
            f = load_function(path)
            print(f"{path}: ok (function on n={f.n}, {f.predicate!r}, {f.landscape})")
    return EXIT_OK


GNUPLOT = """set datafile separator ','
set key autotitle columnhead
set xlabel '{x}'
set ylabel '{y}'
set terminal pngcairo size 800,500
set output '{png}'
plot '{data}' using '{x}':'{y}' with lines
"""


def cmd_plot(args) -> int:
    with open(args.csv, newline="") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        missing = [c for c in (args.x, args.y) if c not in cols]
        if missing:
            raise ConfigError(f"columns {missing} not in {args.csv}")
        rows = [(r[args.x], r[args.y]) for r in reader]
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.csv).stem
    data = out / f"{stem}.dat"
    data.write_text(f"{args.x},{args.y}\n" + "".join(f"{a},{b}\n" for a, b in rows))
    (out / f"{stem}.gp").write_text(GNUPLOT.format(x=args.x, y=args.y, data=data.name,
                                                   png=f"{stem}.png"))
    print(f"wrote {data} and {out / f'{stem}.gp'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_function_args(p, required: bool = True):
    p.add_argument("--function", required=required,
                   help="function file (TOML) or inline family[:arg], e.g. threshold:3")
    p.add_argument("--n", type=int, help="number of loci for inline functions")
    p.add_argument("--landscape", help="weak:EPS or lethal (overrides the file)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="boolution", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one trajectory per seed and write CSV")
    _add_function_args(p)
    p.add_argument("--N", type=int, help="population size; omit for infinite population")
    p.add_argument("--T", type=int, default=100)
    p.add_argument("--seeds", default="0")
    p.add_argument("--mu0", default="uniform")
    p.add_argument("--h-schedule", dest="h_schedule")
    p.add_argument("--out")
    p.add_argument("--record-every", dest="record_every", type=int, default=1)
    p.add_argument("--no-early-stop", dest="no_early_stop", action="store_true")
    p.set_defaults(run=cmd_simulate)

    p = sub.add_parser("verify", help="randomised checks of the per-generation inequalities")
    p.add_argument("--check", choices=(*CHECKS, "all"), default="all")
    p.add_argument("--instances", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV of per-instance residuals")
    p.set_defaults(run=cmd_verify)

    names = {"waddington": "waddington", "fixation": "fixation",
             "monotone": "monotone", "ld": "linkage"}
    for cmd, scenario in names.items():
        p = sub.add_parser(cmd, help=f"{scenario} scenario")
        p.add_argument("--config")
        _add_function_args(p, required=False)
        p.add_argument("--N", type=int)
        p.add_argument("--T", type=int)
        p.add_argument("--seeds")
        p.add_argument("--mu0")
        p.add_argument("--out", help="CSV of the main table")
        p.add_argument("--json", help="JSON mirror of every table")
        if scenario == "waddington":
            p.add_argument("--k", type=int)
            p.add_argument("--mode", choices=("infinite", "finite"))
            p.add_argument("--h-schedule", dest="h_schedule")
        if scenario == "linkage":
            p.add_argument("--start", choices=("product", "coupled", "random"))
            p.add_argument("--no-selection", dest="no_selection", action="store_true")
        p.set_defaults(run=cmd_scenario, scenario=scenario)

    p = sub.add_parser("sweep", help="run a scenario over values of one parameter")
    p.add_argument("--config", required=True)
    p.add_argument("--axis", choices=SWEEP_AXES, required=True)
    p.add_argument("--values", required=True, help="comma-separated")
    p.add_argument("--out")
    p.add_argument("--json")
    p.set_defaults(run=cmd_sweep)

    p = sub.add_parser("fourier", help="Fourier coefficient tools")
    fsub = p.add_subparsers(dest="action", required=True)
    d = fsub.add_parser("dump", help="CSV of (subset_mask, order, coefficient)")
    _add_function_args(d)
    d.add_argument("--mu0", default="uniform")
    d.add_argument("--max-order", dest="max_order", type=int)
    d.add_argument("--out")
    d.set_defaults(run=cmd_fourier)

    p = sub.add_parser("validate", help="check config or function files")
    p.add_argument("files", nargs="+")
    p.set_defaults(run=cmd_validate)

    p = sub.add_parser("plot", help="emit gnuplot data and script from a CSV")
    p.add_argument("csv")
    p.add_argument("--x", default="t")
    p.add_argument("--y", default="sat_prob")
    p.add_argument("--out-dir", dest="out_dir", default=".")
    p.set_defaults(run=cmd_plot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except (ConfigError, PreconditionError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except CapabilityError as e:
        print(f"capability error: {e}", file=sys.stderr)
        return EXIT_CAPABILITY
    except AssertionError as e:
        print(f"check failed: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
