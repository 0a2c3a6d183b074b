"""Randomised batteries behind the ``verify`` subcommand.

Each check draws its own instances from a seeded generator and returns a
``CheckResult`` with one residual row per instance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dynamics import run_finite
from .functions import (
    BooleanFitnessFunction,
    ExplicitTruthTable,
    WeakSelection,
    is_satisfiable,
    parity,
)
from .verification import (
    density_gap,
    determined_report,
    hybrid_derivative_residual,
    martingale_accumulate,
    noise_fitness_check,
    phi_moments,
    variance_noise_exact,
)

CHECKS = ("density", "coord", "variance", "phi", "martingale", "determined")


@dataclass
class CheckResult:
    name: str
    tolerance: float
    rows: list[dict] = field(default_factory=list)
    passed: bool = True
    note: str = ""

    @property
    def failures(self) -> int:
        return sum(not r["ok"] for r in self.rows)

    @property
    def worst(self) -> float:
        vals = [r["residual"] for r in self.rows if math.isfinite(r["residual"])]
        return max(vals) if vals else 0.0


def random_function(rng: np.random.Generator, n: int, epsilon: float | None = None,
                    satisfiable: bool = True) -> BooleanFitnessFunction:
    """Uniform random truth table on n loci under weak selection with n*eps < 1."""
    if epsilon is None:
        epsilon = float(rng.uniform(0.01, 0.95 / n))
    while True:
        bits = rng.integers(0, 2, size=1 << n).astype(bool)
        f = BooleanFitnessFunction(n, ExplicitTruthTable.from_array(bits), WeakSelection(epsilon))
        if not satisfiable or is_satisfiable(f):
            return f


def random_interior(rng: np.random.Generator, n: int, bound: float = 0.95) -> np.ndarray:
    return rng.uniform(-bound, bound, size=n)


def random_grid_point(rng: np.random.Generator, n: int, N: int) -> np.ndarray:
    """An interior point on the sampling grid {-1 + 2k/N}."""
    return -1.0 + 2.0 * rng.integers(1, N, size=n) / N


def _row(instance: int, residual: float, ok: bool, **extra) -> dict:
    return {"instance": instance, "residual": float(residual), "ok": bool(ok), **extra}


def check_density(rng, instances: int) -> CheckResult:
    res = CheckResult("density", 1e-10)
    for k in range(instances):
        n = int(rng.integers(1, 5))
        N = int(rng.integers(2, 101))
        f = random_function(rng, n)
        nu = random_grid_point(rng, n, N)
        gap = density_gap(f, nu)
        res.rows.append(_row(k, -gap, gap >= -res.tolerance, n=n, N=N))
    return res


def check_coord(rng, instances: int) -> CheckResult:
    res = CheckResult("coord", 1e-9)
    for k in range(instances):
        n = int(rng.integers(2, 5))
        f = random_function(rng, n)
        nu = random_interior(rng, n)
        i = int(rng.integers(1, n))
        r = abs(hybrid_derivative_residual(f, nu, i))
        res.rows.append(_row(k, r, r < res.tolerance, n=n, locus=i))
    return res


def check_variance(rng, instances: int) -> CheckResult:
    res = CheckResult("variance", 1e-12)
    for k in range(instances):
        n = int(rng.integers(1, 4))
        N = int(rng.integers(2, 21))
        f = random_function(rng, n)
        mu = random_interior(rng, n)
        lhs1, rhs1 = variance_noise_exact(f, mu, N)
        lhs2, rhs2 = noise_fitness_check(f, mu, N)
        worst = max(lhs1 - rhs1, lhs2 - rhs2)
        res.rows.append(_row(k, worst, worst <= res.tolerance, n=n, N=N))
    return res


def check_phi(rng, instances: int) -> CheckResult:
    res = CheckResult("phi", 1e-12)
    for k in range(instances):
        mu_i = float(rng.uniform(-0.99, 0.99))
        N = int(rng.integers(2, 65))
        second, ratio = phi_moments(mu_i, N)
        r = max(abs(second - 1.0 / N), abs(ratio - (1.0 - 1.0 / N)))
        res.rows.append(_row(k, r, r <= res.tolerance, mu=mu_i, N=N))
    return res


def check_martingale(rng, instances: int, N: int = 50, T: int = 500,
                     epsilon: float = 0.2) -> CheckResult:
    """Mean of S_T within 4 standard errors of zero over ``instances`` seeds of parity."""
    res = CheckResult("martingale", 4.0)
    f = parity(2, WeakSelection(epsilon))
    base = int(rng.integers(0, 2**31))
    finals = []
    for k in range(instances):
        traj = run_finite(f, [0.0, 0.0], N, T, base + k, early_stop=False)
        led = martingale_accumulate(traj)
        finals.append(led.S_T)
        res.rows.append(_row(k, abs(led.S_T), True, S_T=led.S_T, H_T=led.H_T))
    x = np.asarray(finals)
    se = x.std(ddof=1) / math.sqrt(len(x)) if len(x) > 1 else math.inf
    z = abs(x.mean()) / se if se > 0 else 0.0
    res.passed = bool(z <= res.tolerance)
    res.note = f"mean S_T = {x.mean():.3g}, z = {z:.2f}"
    return res


def check_determined(rng, instances: int) -> CheckResult:
    res = CheckResult("determined", 0.0)
    for k in range(instances):
        n = int(rng.integers(1, 4))
        f = random_function(rng, n)
        N = int(rng.integers(5, 60))
        traj = run_finite(f, random_interior(rng, n), N, 2000, int(rng.integers(0, 2**31)),
                          early_stop=False)
        rep = determined_report(traj)
        res.rows.append(_row(k, 0.0 if rep.absorption_ok else 1.0, rep.absorption_ok,
                             n=n, N=N, at_vertex=rep.at_vertex))
    return res


RUNNERS: dict[str, Callable[[np.random.Generator, int], CheckResult]] = {
    "density": check_density,
    "coord": check_coord,
    "variance": check_variance,
    "phi": check_phi,
    "martingale": check_martingale,
    "determined": check_determined,
}


def run_checks(names, instances: int, seed: int) -> list[CheckResult]:
    out = []
    for name in names:
        rng = np.random.default_rng([seed, CHECKS.index(name)])
        r = RUNNERS[name](rng, instances)
        if name != "martingale":
            r.passed = r.failures == 0
        out.append(r)
    return out
