"""Named scenarios, configuration files and report emission."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

import numpy as np
import tomli

from . import __version__
from .dynamics import (
    GenotypeDistribution,
    recombination_dynamics,
    run_finite,
    run_infinite,
    waddington_scenario,
)
from .errors import ConfigError, PreconditionError
from .functions import (
    BooleanFitnessFunction,
    CnfFormula,
    ExplicitTruthTable,
    FitnessLandscape,
    Lethal,
    Parity,
    ProductPoint,
    SumEqualsK,
    Threshold,
    Tribes,
    WeakSelection,
    extension,
    is_monotone,
    is_satisfiable,
    parse_landscape,
    satisfaction_probability,
)
from .verification import determined_report, lemma_constants

# ---------------------------------------------------------------------------
# function definitions

FUNCTION_KEYS = {"n", "family", "params", "landscape", "epsilon"}
FAMILY_PARAMS = {
    "truth_table": {"hex"},
    "threshold": {"k", "h"},
    "tribes": {"fan_in"},
    "parity": {"subset"},
    "sum_equals_k": {"k"},
    "cnf": {"clauses"},
    "and": set(),
    "or": set(),
    "majority": set(),
}


def _landscape_from(landscape: str | None, epsilon: float | None) -> FitnessLandscape:
    if landscape is None or landscape == "weak":
        return WeakSelection(0.1 if epsilon is None else float(epsilon))
    if landscape == "lethal":
        return Lethal()
    return parse_landscape(landscape)


def function_from_dict(spec: dict) -> BooleanFitnessFunction:
    """Build a function from the fields of a function definition file."""
    unknown = set(spec) - FUNCTION_KEYS
    if unknown:
        raise ConfigError(f"unknown function keys: {sorted(unknown)}")
    try:
        n = int(spec["n"])
        family = spec["family"]
    except KeyError as e:
        raise ConfigError(f"function definition missing {e}") from None
    params = dict(spec.get("params", {}))
    if family not in FAMILY_PARAMS:
        raise ConfigError(f"unknown family {family!r}; choose from {sorted(FAMILY_PARAMS)}")
    bad = set(params) - FAMILY_PARAMS[family]
    if bad:
        raise ConfigError(f"unknown params for {family}: {sorted(bad)}")
    landscape = _landscape_from(spec.get("landscape"), spec.get("epsilon"))
    try:
        if family == "truth_table":
            pred = ExplicitTruthTable.from_hex(str(params["hex"]), n)
        elif family == "threshold":
            pred = Threshold(int(params["k"]), params.get("h"))
        elif family == "tribes":
            pred = Tribes(int(params["fan_in"]))
        elif family == "parity":
            pred = Parity(tuple(int(i) for i in params.get("subset", range(n))))
        elif family == "sum_equals_k":
            pred = SumEqualsK(int(params["k"]))
        elif family == "cnf":
            pred = CnfFormula(tuple(tuple(int(l) for l in c) for c in params["clauses"]))
        elif family == "and":
            pred = Threshold(0)
        elif family == "or":
            pred = CnfFormula((tuple(range(1, n + 1)),))
        else:
            pred = Threshold(n - 1)
        return BooleanFitnessFunction(n, pred, landscape)
    except KeyError as e:
        raise ConfigError(f"{family} needs parameter {e}") from None
    except (ValueError, TypeError) as e:
        raise ConfigError(str(e)) from None


def function_to_dict(f: BooleanFitnessFunction) -> dict:
    p = f.predicate
    if isinstance(p, ExplicitTruthTable):
        family, params = "truth_table", {"hex": p.to_hex()}
    elif isinstance(p, Threshold):
        family, params = "threshold", {"k": p.k} if p.h is None else {"k": p.k, "h": p.h}
    elif isinstance(p, Tribes):
        family, params = "tribes", {"fan_in": p.fan_in}
    elif isinstance(p, Parity):
        family, params = "parity", {"subset": list(p.subset)}
    elif isinstance(p, SumEqualsK):
        family, params = "sum_equals_k", {"k": p.k}
    else:
        family, params = "cnf", {"clauses": [list(c) for c in p.clauses]}
    out = {"n": f.n, "family": family, "params": params}
    if isinstance(f.landscape, Lethal):
        out["landscape"] = "lethal"
    else:
        out["landscape"], out["epsilon"] = "weak", f.landscape.epsilon
    return out


def load_function(path: str | os.PathLike) -> BooleanFitnessFunction:
    try:
        with open(path, "rb") as fh:
            spec = tomli.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"function file not found: {path}") from None
    except tomli.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from None
    return function_from_dict(spec)


def parse_function_arg(text: str, n: int | None = None) -> BooleanFitnessFunction:
    """A function file path, or an inline ``family[:arg]`` with ``n`` given separately."""
    if os.path.exists(text):
        return load_function(text)
    family, _, arg = text.partition(":")
    if family not in FAMILY_PARAMS or family == "truth_table" and not arg:
        raise ConfigError(f"{text!r} is neither a file nor a known family")
    if n is None:
        raise ConfigError("inline function specs need --n")
    params: dict[str, Any] = {}
    if family == "threshold":
        params["k"] = int(arg)
    elif family == "sum_equals_k":
        params["k"] = int(arg)
    elif family == "tribes":
        params["fan_in"] = int(arg)
    elif family == "truth_table":
        params["hex"] = arg
    elif family == "parity" and arg:
        params["subset"] = [int(i) for i in arg.split(",")]
    return function_from_dict({"n": n, "family": family, "params": params})


def parse_mu0(text: str, n: int) -> np.ndarray:
    """``uniform``, ``vertex:<mask>`` or comma-separated coordinates."""
    text = str(text).strip()
    if text == "uniform":
        return np.zeros(n)
    if text.startswith("vertex:"):
        mask = int(text[7:], 0)
        if mask >> n:
            raise ConfigError(f"vertex mask {mask} has bits beyond n={n}")
        return ProductPoint.vertex(mask, n).mu.copy()
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"cannot parse mu0 {text!r}") from None
    if len(vals) != n or any(abs(v) > 1 for v in vals):
        raise ConfigError(f"mu0 needs {n} values in [-1, 1]")
    return np.array(vals)


def parse_seeds(text: str) -> list[int]:
    """``a..b`` (inclusive) or a single integer."""
    text = str(text).strip()
    if ".." in text:
        a, b = text.split("..", 1)
        seeds = list(range(int(a), int(b) + 1))
    else:
        seeds = [int(text)]
    if not seeds:
        raise ConfigError(f"empty seed range {text!r}")
    return seeds


def seeds_from_env(default: list[int]) -> list[int]:
    env = os.environ.get("BOOLUTION_SEED")
    return parse_seeds(env) if env else default


# ---------------------------------------------------------------------------
# experiment configuration

CONFIG_KEYS = {
    "scenario", "function", "landscape", "n", "N", "T", "epsilon", "mu0", "seeds",
    "h_schedule", "mode", "outputs", "record_every", "early_stop", "k",
    "start", "selection", "sweep",
}
SCENARIOS = ("waddington", "monotone", "fixation", "linkage")


@dataclass
class ExperimentConfig:
    scenario: str
    function: dict | None = None
    landscape: str | None = None
    n: int | None = None
    N: int = 50
    T: int = 1000
    epsilon: float | None = None
    mu0: str = "uniform"
    seeds: tuple[int, int] = (0, 0)
    h_schedule: list[int] = field(default_factory=list)
    mode: str = "infinite"
    k: int | None = None
    start: str = "random"
    selection: bool = True
    outputs: dict = field(default_factory=dict)
    record_every: int = 1
    early_stop: bool = True
    sweep: dict = field(default_factory=dict)

    def seed_list(self) -> list[int]:
        return list(range(self.seeds[0], self.seeds[1] + 1))

    def build_function(self) -> BooleanFitnessFunction:
        if self.function is None:
            raise ConfigError("scenario needs a function")
        spec = dict(self.function)
        if self.n is not None and "n" not in spec:
            spec["n"] = self.n
        f = function_from_dict(spec)
        if self.landscape is not None:
            f = f.with_landscape(_landscape_from(self.landscape, self.epsilon))
        elif self.epsilon is not None and isinstance(f.landscape, WeakSelection):
            f = f.with_landscape(WeakSelection(float(self.epsilon)))
        return f

    def canonical(self) -> dict:
        return json.loads(json.dumps(asdict(self), sort_keys=True))

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def config_from_dict(data: dict, base_dir: str | os.PathLike = ".") -> ExperimentConfig:
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "scenario" not in data:
        raise ConfigError("config needs a scenario")
    if data["scenario"] not in SCENARIOS:
        raise ConfigError(f"unknown scenario {data['scenario']!r}; choose from {SCENARIOS}")
    data = dict(data)
    fn = data.get("function")
    if isinstance(fn, str):
        path = Path(base_dir) / fn
        if not path.exists():
            raise ConfigError(f"function file not found: {path}")
        with open(path, "rb") as fh:
            data["function"] = tomli.load(fh)
    seeds = data.get("seeds", [0, 0])
    if isinstance(seeds, str):
        lst = parse_seeds(seeds)
        seeds = [lst[0], lst[-1]]
    if len(seeds) != 2 or seeds[1] < seeds[0]:
        raise ConfigError(f"seed range must be [first, last] with last >= first, got {seeds}")
    data["seeds"] = (int(seeds[0]), int(seeds[1]))
    for key in ("n", "N", "T", "k", "record_every"):
        if key in data and data[key] is not None:
            data[key] = int(data[key])
    cfg = ExperimentConfig(**data)
    validate_config(cfg)
    return cfg


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomli.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from None
    return config_from_dict(data, Path(path).parent)


def validate_config(cfg: ExperimentConfig) -> None:
    if cfg.N < 1 or cfg.T < 0 or cfg.record_every < 1:
        raise ConfigError("need N >= 1, T >= 0, record_every >= 1")
    if cfg.mode not in ("infinite", "finite"):
        raise ConfigError(f"mode must be infinite or finite, got {cfg.mode!r}")
    if any(h not in (-1, 1) for h in cfg.h_schedule):
        raise ConfigError("h_schedule entries must be +-1")
    if cfg.scenario != "waddington":
        f = cfg.build_function()
        parse_mu0(cfg.mu0, f.n)
        if cfg.scenario == "fixation":
            if not isinstance(f.landscape, WeakSelection):
                raise ConfigError("fixation scenario needs a weak-selection landscape")
            if f.n * f.epsilon >= 1:
                raise ConfigError(f"fixation needs n*epsilon < 1, got {f.n * f.epsilon:g}")
    elif cfg.n is None or cfg.k is None:
        raise ConfigError("waddington scenario needs n and k")


# ---------------------------------------------------------------------------
# reports


@dataclass
class ScenarioReport:
    scenario: str
    summary: dict
    tables: dict[str, list[dict]] = field(default_factory=dict)
    checks: dict[str, bool] = field(default_factory=dict)
    violations: int = 0
    config_hash: str = ""
    version: str = __version__
    wall_time: float = 0.0

    @property
    def passed(self) -> bool:
        return all(self.checks.values()) and self.violations == 0

    def to_json(self) -> str:
        body = {
            "scenario": self.scenario,
            "summary": self.summary,
            "checks": self.checks,
            "violations": self.violations,
            "provenance": {"config_hash": self.config_hash, "version": self.version},
            "tables": self.tables,
        }
        return json.dumps(_jsonable(body), indent=2, sort_keys=True)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if not rows:
        return ""
    cols = list(rows[0])
    for r in rows[1:]:
        cols.extend(c for c in r if c not in cols)
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _cell(v) for k, v in r.items()})
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def write_report(report: ScenarioReport, csv_path=None, json_path=None, table: str | None = None):
    if csv_path:
        name = table or next(iter(report.tables), None)
        rows = report.tables.get(name, []) if name else []
        Path(csv_path).write_text(rows_to_csv(rows) if rows else rows_to_csv([report.summary]))
    if json_path:
        Path(json_path).write_text(report.to_json())


def trajectory_rows(traj) -> list[dict]:
    n = traj.function.n
    rows = []
    for s in traj.steps:
        row = {"t": s.t}
        row.update({f"mu_{i + 1}": float(s.mu_before[i]) for i in range(n)})
        row.update({f"nu_{i + 1}": float(s.nu[i]) for i in range(n)})
        row.update(ext_mu=s.ext_mu, ext_nu=s.ext_nu, ext_mu_after=s.ext_mu_after,
                   linear_mass=s.linear_mass, sat_prob=s.sat_prob)
        rows.append(row)
    return rows


def map_seeds(fn: Callable, seeds: list[int], threads: int | None = None) -> list:
    """Apply fn to each seed, optionally in a process pool; results in seed order."""
    if threads is None:
        threads = int(os.environ.get("BOOLUTION_THREADS", "1"))
    if threads <= 1 or len(seeds) < 2:
        return [fn(s) for s in seeds]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, seeds, chunksize=max(1, len(seeds) // (4 * threads))))


def _finish(report: ScenarioReport, cfg: ExperimentConfig, start: float) -> ScenarioReport:
    report.config_hash = cfg.digest()
    report.wall_time = time.perf_counter() - start
    return report


# ---------------------------------------------------------------------------
# scenarios


def default_h_schedule(generations: int = 10, normal_after: int = 3) -> list[int]:
    return [1] * generations + [-1] * normal_after


def scenario_waddington(cfg: ExperimentConfig) -> ScenarioReport:
    """Threshold trait selected under heat shock, then the environment reverts."""
    start = time.perf_counter()
    landscape = _landscape_from(cfg.landscape or "lethal", cfg.epsilon)
    schedule = cfg.h_schedule or default_h_schedule()
    mu0 = None if cfg.mu0 == "uniform" else parse_mu0(cfg.mu0, cfg.n)
    rep = waddington_scenario(cfg.n, cfg.k, schedule, landscape, mode=cfg.mode,
                              N=cfg.N if cfg.mode == "finite" else None,
                              seed=cfg.seeds[0], mu0=mu0)
    rows = [{"t": r.t, "h": "" if r.h is None else r.h,
             "sat_under_h": "" if r.sat_under_h is None else r.sat_under_h,
             "sat_heat": r.sat_heat, "sat_normal": r.sat_normal,
             "mean_mu": float(np.mean(r.mu))} for r in rep.rows]
    first = rep.rows[0]
    checks = {"rare_without_heat": first.sat_normal < first.sat_heat}
    heat_run = []
    for r in rep.rows:
        if r.h != 1:
            break
        heat_run.append(r.sat_heat)
    if len(rep.rows) > len(heat_run):
        heat_run.append(rep.rows[len(heat_run)].sat_heat)
    if cfg.mode == "infinite" and not rep.extinct:
        checks["amplified_under_heat"] = all(b >= a - 1e-15 for a, b in zip(heat_run, heat_run[1:]))
    last = rep.rows[-1]
    checks["persists_after_reversion"] = (not rep.extinct) and last.sat_normal > first.sat_normal
    summary = {
        "n": cfg.n, "k": cfg.k, "mode": cfg.mode, "landscape": str(landscape),
        "initial_sat_heat": first.sat_heat, "initial_sat_normal": first.sat_normal,
        "sat_heat_after_first_selection": rep.rows[1].sat_heat if len(rep.rows) > 1 else None,
        "final_sat_normal": last.sat_normal, "extinct": rep.extinct,
        "generations": len(schedule),
    }
    return _finish(ScenarioReport("waddington", summary, {"generations": rows}, checks), cfg, start)


def monotone_bound(n: int, epsilon: float, t: int, sat0: float) -> float:
    """Right-hand side 1 - n(1+eps)/(eps t mu^0(f)); -inf at t = 0."""
    if t == 0:
        return -math.inf
    return 1.0 - n * (1 + epsilon) / (epsilon * t * sat0)


def scenario_monotone_bound(cfg: ExperimentConfig) -> ScenarioReport:
    """Infinite-population run of a monotone function against the time bound."""
    start = time.perf_counter()
    f = cfg.build_function()
    if f.n > 12 or not is_monotone(f):
        raise PreconditionError("monotone scenario needs a monotone function with n <= 12")
    eps = f.landscape.gap if isinstance(f.landscape, WeakSelection) else None
    if eps is None:
        raise PreconditionError("monotone bound is stated for weak selection")
    mu0 = parse_mu0(cfg.mu0, f.n)
    traj = run_infinite(f, mu0, cfg.T, record_every=max(cfg.record_every, 1))
    sat = np.asarray(traj.sat)
    sat0 = sat[0]
    if sat0 <= 0:
        raise PreconditionError("monotone bound needs mu^0(f) > 0")
    t = np.arange(len(sat))
    allowed = np.full(len(sat), np.inf)
    allowed[1:] = f.n * (1 + eps) / (eps * t[1:] * sat0)
    deficit = 1.0 - sat
    violations = int(np.sum(deficit[1:] > allowed[1:]))
    ratio = float(np.max(deficit[1:] / allowed[1:])) if len(sat) > 1 else 0.0
    every = max(1, cfg.record_every)
    rows = [{"t": int(i), "sat_prob": float(sat[i]),
             "bound": monotone_bound(f.n, eps, int(i), sat0)}
            for i in range(0, len(sat), every)]
    summary = {"n": f.n, "epsilon": eps, "T": cfg.T, "initial_sat": float(sat0),
               "final_sat": float(sat[-1]), "violations": violations,
               "tightest_ratio": ratio}
    rep = ScenarioReport("monotone", summary, {"bound": rows},
                         {"bound_holds": violations == 0}, violations=violations)
    return _finish(rep, cfg, start)


def _fixation_worker(args):
    f, mu0, N, T, record, seed = args
    traj = run_finite(f, mu0, N, T, seed, early_stop=True)
    det = determined_report(traj) if record else None
    return {
        "seed": seed,
        "fixed": traj.fixed,
        "fixation_time": traj.fixation_time if traj.fixed else -1,
        "satisfied": traj.satisfied_at_end,
        "terminal_ext": traj.ext[-1],
        "absorption_ok": True if det is None else det.absorption_ok,
        "density_violations": traj.density_violations,
    }


class _Bound:
    def __init__(self, f, mu0, N, T, check):
        self.args = (f, mu0, N, T, check)

    def __call__(self, seed):
        return _fixation_worker(self.args + (seed,))


def scenario_fixation(cfg: ExperimentConfig, threads: int | None = None,
                      check_absorption: bool = True) -> ScenarioReport:
    """Ensemble of finite-population runs until the sample hits a vertex."""
    start = time.perf_counter()
    f = cfg.build_function()
    if not isinstance(f.landscape, WeakSelection) or f.n * f.epsilon >= 1:
        raise PreconditionError("fixation scenario needs weak selection with n*epsilon < 1")
    if not is_satisfiable(f):
        raise PreconditionError("function is unsatisfiable")
    mu0 = parse_mu0(cfg.mu0, f.n)
    seeds = seeds_from_env(cfg.seed_list())
    rows = map_seeds(_Bound(f, mu0, cfg.N, cfg.T, check_absorption), seeds, threads)
    count = len(rows)
    fixed = sum(r["fixed"] for r in rows)
    sat = sum(r["satisfied"] for r in rows)
    absorption_bad = sum(not r["absorption_ok"] for r in rows)
    density_bad = sum(r["density_violations"] for r in rows)
    consts = lemma_constants(f.n, cfg.N, f.epsilon)
    ext0 = extension(f, mu0)
    summary = {
        "n": f.n, "N": cfg.N, "T": cfg.T, "epsilon": f.epsilon, "seeds": count,
        "fraction_fixed": fixed / count,
        "fraction_satisfying_among_fixed": sat / fixed if fixed else float("nan"),
        "pr_terminal_satisfied": sat / count,
        "mean_terminal_ext": float(np.mean([r["terminal_ext"] for r in rows])),
        "mean_fixation_time": float(np.mean([r["fixation_time"] for r in rows if r["fixed"]]))
        if fixed else float("nan"),
        "initial_ext": ext0,
        "initial_condition_met": bool(ext0 > 1 + consts["alpha_theorem"]),
        "epsilon_window": [cfg.N ** (-1 / 3), 1 / f.n],
        "epsilon_in_window": bool(cfg.N ** (-1 / 3) < f.epsilon < 1 / f.n),
        "theorem_probability_floor": 1 - 2 * consts["beta_theorem"] - 2 / f.n,
        "absorption_violations": absorption_bad,
        "density_violations": density_bad,
        **consts,
    }
    checks = {"absorbing_vertices": absorption_bad == 0, "density_bound": density_bad == 0}
    rep = ScenarioReport("fixation", summary, {"runs": rows}, checks,
                         violations=absorption_bad + density_bad)
    return _finish(rep, cfg, start)


def linkage_start(kind: str, n: int, seed: int = 0, mu=None) -> GenotypeDistribution:
    """``product`` (at mu, default uniform), ``coupled`` (all +1 / all -1) or ``random``."""
    if kind == "product":
        return GenotypeDistribution.product(np.zeros(n) if mu is None else mu)
    if kind == "coupled":
        p = np.zeros(1 << n)
        p[0] = p[-1] = 0.5
        return GenotypeDistribution(p)
    if kind == "random":
        rng = np.random.default_rng(seed)
        p = rng.dirichlet(np.ones(1 << n))
        return GenotypeDistribution(p / p.sum())
    raise ConfigError(f"unknown linkage start {kind!r}")


def scenario_linkage(cfg: ExperimentConfig) -> ScenarioReport:
    """Exact genotype dynamics with free recombination, tracking linkage disequilibrium."""
    start = time.perf_counter()
    f = cfg.build_function()
    mu = parse_mu0(cfg.mu0, f.n)
    p0 = linkage_start(cfg.start, f.n, cfg.seeds[0], mu)
    series = recombination_dynamics(f, p0, cfg.T, selection=cfg.selection)
    lds = [ld for _, ld in series]
    eps = f.landscape.gap
    threshold = 10 * eps
    below = next((t for t, ld in enumerate(lds) if ld < threshold), None)
    rows = [{"t": t, "ld": ld, "halving_prediction": lds[0] * 2.0 ** -t}
            for t, ld in enumerate(lds)]
    checks = {}
    if cfg.selection:
        checks["ld_below_10eps"] = below is not None
    elif f.n == 2:
        checks["halves_each_generation"] = all(
            abs(ld - lds[0] * 2.0 ** -t) <= 1e-12 for t, ld in enumerate(lds))
    if cfg.start == "product" and not cfg.selection:
        checks["product_fixed_point"] = max(lds) <= 1e-12
    summary = {"n": f.n, "T": cfg.T, "selection": cfg.selection, "start": cfg.start,
               "epsilon": eps, "initial_ld": lds[0], "final_ld": lds[-1],
               "first_generation_below_10eps": -1 if below is None else below}
    return _finish(ScenarioReport("linkage", summary, {"ld": rows}, checks), cfg, start)


SCENARIO_RUNNERS = {
    "waddington": scenario_waddington,
    "monotone": scenario_monotone_bound,
    "fixation": scenario_fixation,
    "linkage": scenario_linkage,
}

SWEEP_AXES = ("N", "epsilon", "n", "T")


def run_scenario(cfg: ExperimentConfig) -> ScenarioReport:
    return SCENARIO_RUNNERS[cfg.scenario](cfg)


def sweep(cfg: ExperimentConfig, axis: str, values) -> list[ScenarioReport | dict]:
    """Run the scenario once per axis value; a failing cell is recorded, not raised."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}")
    out = []
    for v in values:
        changes: dict[str, Any] = {axis: v}
        if axis == "n" and cfg.function is not None:
            changes["function"] = {**cfg.function, "n": int(v)}
        if axis == "epsilon" and cfg.landscape and cfg.landscape.startswith("weak:"):
            changes["landscape"] = f"weak:{v}"
        cell = replace(cfg, **changes)
        try:
            rep = run_scenario(cell)
            rep.summary = {"axis": axis, "value": v, **rep.summary}
            out.append(rep)
        except Exception as e:  # noqa: BLE001 - per-cell failures are data
            out.append({"axis": axis, "value": v, "error": f"{type(e).__name__}: {e}"})
    return out


def sweep_rows(results) -> list[dict]:
    rows = []
    for r in results:
        if isinstance(r, ScenarioReport):
            rows.append({k: v for k, v in r.summary.items() if not isinstance(v, (list, dict))}
                        | {"passed": r.passed, "error": ""})
        else:
            rows.append(r)
    return rows
