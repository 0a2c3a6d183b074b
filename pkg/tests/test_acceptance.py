"""Acceptance suite: thirteen numbered criteria at their stated tolerances.

Each ``criterion_k`` returns ``(passed, detail)``.  Under pytest every
criterion is a test and a one-line verdict per criterion is printed in the
terminal summary (see ``conftest.py``).  ``python3 tests/test_acceptance.py``
prints the same lines directly.
"""
from __future__ import annotations

import math
import sys
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import binom

from boolution.dynamics import (
    GenotypeDistribution,
    LocusStreams,
    generation,
    recombination_dynamics,
    run_finite,
    run_infinite,
    selection_step,
    waddington_scenario,
)
from boolution.fourier import (
    linear_coefficients,
    monotone_influence_identity,
    poincare_gap,
    russo_margulis_derivative,
)
from boolution.functions import (
    BooleanFitnessFunction,
    ExplicitTruthTable,
    Lethal,
    SumEqualsK,
    WeakSelection,
    and_function,
    dictator,
    extension,
    is_monotone,
    majority,
    or_function,
    parity,
    sigma,
    tribes,
)
from boolution.verification import (
    density_gap,
    determined_report,
    hybrid_derivative_residual,
    martingale_accumulate,
    noise_fitness_check,
    phi_moments,
    variance_noise_exact,
)

RESULTS: dict[int, tuple[bool, str]] = {}


def _random_table(rng, n, eps):
    while True:
        bits = rng.integers(0, 2, size=1 << n)
        if bits.any():
            return BooleanFitnessFunction(n, ExplicitTruthTable.from_array(bits), WeakSelection(eps))


def _random_monotone(rng, n, eps):
    """Upward closure of a random set of genotypes (bit set <-> allele +1)."""
    while True:
        t = rng.random(1 << n) < rng.uniform(0.05, 0.4)
        idx = np.arange(1 << n)
        for i in range(n):
            t = t | t[idx & ~(1 << i)]
        if t.any():
            return BooleanFitnessFunction(n, ExplicitTruthTable.from_array(t), WeakSelection(eps))


# ---------------------------------------------------------------------------


def criterion_1():
    rng = np.random.default_rng(101)
    start, worst = time.perf_counter(), 0.0
    for _ in range(200):
        n = int(rng.integers(1, 9))
        f = _random_table(rng, n, float(rng.uniform(0.01, 1.0)))
        mu = rng.uniform(-0.99, 0.99, n)
        after = selection_step(f, mu).mu
        pred = sigma(mu) * linear_coefficients(f, mu) / extension(f, mu)
        worst = max(worst, float(np.max(np.abs((after - mu) - pred))))
    elapsed = time.perf_counter() - start
    return worst < 1e-10 and elapsed < 10, f"max residual {worst:.2e}, {elapsed:.2f}s"


def criterion_2():
    rng = np.random.default_rng(202)
    start, worst, h = time.perf_counter(), 0.0, 1e-5
    for _ in range(200):
        n = int(rng.integers(1, 9))
        f = _random_table(rng, n, float(rng.uniform(0.01, 1.0)))
        mu = rng.uniform(-0.99, 0.99, n)
        i = int(rng.integers(0, n))
        up, down = mu.copy(), mu.copy()
        up[i] += h
        down[i] -= h
        fd = (extension(f, up) - extension(f, down)) / (2 * h)
        worst = max(worst, abs(russo_margulis_derivative(f, i, mu) - fd))
    elapsed = time.perf_counter() - start
    return worst < 1e-6 and elapsed < 10, f"max |derivative - FD| {worst:.2e}, {elapsed:.2f}s"


def criterion_3():
    p2 = selection_step(parity(2, WeakSelection(0.1)), [0.0, 0.0]).mu
    ok_parity = bool(np.all(p2 == 0.0))
    f = BooleanFitnessFunction(4, SumEqualsK(2), WeakSelection(0.1))
    traj = run_infinite(f, np.zeros(4), 100)
    ok_sum = bool(np.all(traj.terminal == 0.0)) and all(
        np.all(s.mu_after == 0.0) for s in traj.steps)
    return ok_parity and ok_sum, f"parity step {p2.tolist()}, SumEqualsK terminal {traj.terminal.tolist()}"


def criterion_4():
    start = time.perf_counter()
    eps, T = 0.1, 10**5
    total, parts = 0, []
    for name, f in (("AND2", and_function(2)), ("OR2", or_function(2)),
                    ("MAJ3", majority(3)), ("TRIBES(2,4)", tribes(2, 4))):
        f = f.with_landscape(WeakSelection(eps))
        sat = np.asarray(run_infinite(f, np.zeros(f.n), T, record_every=T).sat)
        t = np.arange(1, len(sat))
        bound = 1.0 - f.n * (1 + eps) / (eps * t * sat[0])
        v = int(np.sum(sat[1:] < bound))
        total += v
        parts.append(f"{name}:{v}")
    elapsed = time.perf_counter() - start
    return total == 0 and elapsed < 60, f"violations {' '.join(parts)}, {elapsed:.1f}s"


def criterion_5():
    rng = np.random.default_rng(505)
    start, infl, poinc = time.perf_counter(), 0.0, math.inf
    for _ in range(100):
        n = int(rng.integers(1, 7))
        f = _random_monotone(rng, n, float(rng.uniform(0.01, 1.0)))
        assert is_monotone(f)
        mu = rng.uniform(-0.95, 0.95, n)
        res = monotone_influence_identity(f, mu)
        infl = max(infl, float(np.max(np.abs(res.residuals))))
        poinc = min(poinc, poincare_gap(f, mu))
    elapsed = time.perf_counter() - start
    ok = infl <= 1e-9 and poinc >= -1e-9 and elapsed < 60
    return ok, f"max influence residual {infl:.2e}, min Poincare gap {poinc:.2e}, {elapsed:.1f}s"


def criterion_6():
    rng = np.random.default_rng(606)
    violations = steps = 0
    for k in range(100):
        n = int(rng.integers(1, 5))
        N = int(rng.integers(2, 101))
        f = _random_table(rng, n, float(rng.uniform(0.01, 0.99 / n)))
        traj = run_finite(f, rng.uniform(-0.9, 0.9, n), N, 200, seed=k)
        for s in traj.steps:
            steps += 1
            if density_gap(f, s.nu) < -1e-10:
                violations += 1
    return violations == 0, f"{violations} violations over {steps} steps"


def criterion_7():
    rng = np.random.default_rng(707)
    worst, bad = 0.0, 0
    for _ in range(100):
        n = int(rng.integers(2, 5))
        f = _random_table(rng, n, float(rng.uniform(0.01, 0.99 / n)))
        nu = rng.uniform(-0.95, 0.95, n)
        i = int(rng.integers(1, n))  # 0-based second..last locus
        r = abs(hybrid_derivative_residual(f, nu, i))
        worst = max(worst, r)
        bad += r >= 1e-9
    return bad == 0, f"{bad}/100 instances >= 1e-9, max residual {worst:.2e}"


def criterion_8():
    rng = np.random.default_rng(808)
    start, bad, count = time.perf_counter(), 0, 0
    for _ in range(50):
        n = int(rng.integers(1, 5))
        f = _random_table(rng, n, float(rng.uniform(0.01, 0.99 / n)))
        cap = int(round(10 ** (6 / n))) - 1
        for N in sorted({int(x) for x in rng.integers(2, min(cap, 60) + 1, size=2)}):
            if (N + 1) ** n > 10**6:
                continue
            mu = rng.uniform(-0.95, 0.95, n)
            l1, r1 = variance_noise_exact(f, mu, N)
            l2, r2 = noise_fitness_check(f, mu, N)
            count += 1
            bad += (l1 > r1 + 1e-12) + (l2 > r2 + 1e-12)
    eps = 0.1
    d = dictator(1, WeakSelection(eps))
    l1, r1 = variance_noise_exact(d, [0.0], 2)
    l2, r2 = noise_fitness_check(d, [0.0], 2)
    target = eps**2 / 8
    # equality is attained by the variance-noise pair; noise-fitness stays an inequality
    eq = abs(l1 - target) < 1e-12 and abs(r1 - target) < 1e-12 and l2 <= r2 + 1e-12
    elapsed = time.perf_counter() - start
    return bad == 0 and eq and elapsed < 300, (
        f"{bad} violations over {count} instances; dictator variance-noise sides "
        f"{l1:.6g} {r1:.6g} vs {target:.6g}, noise-fitness {l2:.6g} <= {r2:.6g}; {elapsed:.1f}s")


def criterion_9():
    worst = 0.0
    for mu_i in np.round(np.arange(-0.9, 0.91, 0.1), 10):
        for N in range(2, 65):
            a, b = phi_moments(float(mu_i), N)
            worst = max(worst, abs(a - 1 / N), abs(b - (1 - 1 / N)))
    return worst <= 1e-12, f"max deviation {worst:.2e}"


def criterion_10():
    start = time.perf_counter()
    eps, N, T, seeds = 0.2, 50, 500, 2000
    f = parity(2, WeakSelection(eps))
    S, H, hits = np.empty(seeds), np.empty(seeds), 0
    beta = alpha = None
    for s in range(seeds):
        led = martingale_accumulate(run_finite(f, [0.0, 0.0], N, T, s, early_stop=False))
        S[s], H[s] = led.S_T, led.H_T
        hits += led.hit_alpha
        beta, alpha = led.beta, led.alpha
    se_s = S.std(ddof=1) / math.sqrt(seeds)
    se_h = H.std(ddof=1) / math.sqrt(seeds)
    h_bound = 2 * eps / ((N - 1) * (1 - 2 * eps))
    p_hit = hits / seeds
    p_null = min(2 * beta, 1.0)
    se_p = math.sqrt(p_null * (1 - p_null) / seeds)
    ok_mean = abs(S.mean()) <= 4 * se_s
    ok_h = H.mean() <= h_bound + 3 * se_h
    ok_p = p_hit <= 2 * beta + 3 * se_p
    elapsed = time.perf_counter() - start
    return ok_mean and ok_h and ok_p and elapsed < 300, (
        f"mean S_T {S.mean():.2e} (4se {4 * se_s:.2e}); E[H_T] {H.mean():.3e} <= {h_bound:.3e}"
        f"+3se; Pr[|S_T|>=alpha={alpha:.3f}] {p_hit:.4f} <= 2beta {2 * beta:.4f}+3se; {elapsed:.0f}s")


def criterion_11():
    f = parity(2, WeakSelection(0.2))
    N, T, fixed, bad = 50, 10**5, 0, 0
    for s in range(1000):
        traj = run_finite(f, [0.0, 0.0], N, T, s)
        fixed += traj.fixed
        rep = determined_report(traj)
        ok = rep.absorption_ok
        # continue the same process past the stopping time: the vertex never moves
        streams, mu = LocusStreams(s), traj.terminal
        for t in range(traj.generations, traj.generations + 50):
            nu, after = generation(f, mu, N, streams, t)
            ok &= bool(np.all(nu.nu == mu) and np.all(after.mu == mu))
        bad += not ok
    return fixed == 1000 and bad == 0, f"{fixed}/1000 reached a vertex, {bad} absorption failures"


def criterion_12():
    n, k = 10, 3
    schedule = [1] * 8 + [-1] * 4
    rep = waddington_scenario(n, k, schedule, Lethal())
    r0, r1 = rep.rows[0], rep.rows[1]
    # binomial oracle: with j alleles at +1, heat needs 2j - n + k >= n, normal needs j = n
    need = math.ceil((2 * n - k) / 2)
    heat0 = Fraction(sum(math.comb(n, j) for j in range(need, n + 1)), 2**n)
    assert heat0 == Fraction(11, 1024)
    ok = abs(r0.sat_heat - 11 / 1024) <= 1e-12 and abs(r0.sat_normal - 1 / 1024) <= 1e-12
    ok &= bool(np.max(np.abs(r1.mu - 9 / 11)) <= 1e-12)
    jump = float(binom.sf(8, 10, 10 / 11))
    ok &= abs(r1.sat_heat - jump) <= 1e-12
    heat = [r.sat_heat for r in rep.rows[: 9]]
    ok &= all(b >= a for a, b in zip(heat, heat[1:]))
    ok &= not rep.extinct and all(r.sat_normal > 0 for r in rep.rows[9:])
    return ok, (f"gen0 {r0.sat_heat:.10f}/{r0.sat_normal:.10f}, mu1 {r1.mu[0]:.15f}, "
                f"after-selection {r1.sat_heat:.12f} (oracle {jump:.12f}), "
                f"final h=-1 satisfaction {rep.rows[-1].sat_normal:.6f}")


def criterion_13():
    f2 = parity(2, WeakSelection(0.1))
    p0 = GenotypeDistribution(np.array([0.5, 0.0, 0.0, 0.5]))
    lds = [ld for _, ld in recombination_dynamics(f2, p0, 20, selection=False)]
    halving = max(abs(ld - lds[0] * 2.0**-t) for t, ld in enumerate(lds))
    eps = 0.01
    f3 = majority(3, WeakSelection(eps))
    coupled = np.zeros(8)
    coupled[0] = coupled[7] = 0.5
    lds3 = [ld for _, ld in recombination_dynamics(f3, GenotypeDistribution(coupled), 20)]
    first = next((t for t, ld in enumerate(lds3) if ld < 10 * eps), None)
    ok = halving <= 1e-12 and first is not None and first <= 20
    return ok, f"two-locus halving error {halving:.1e}; n=3 LD<10eps at generation {first}"


CRITERIA = {k: globals()[f"criterion_{k}"] for k in range(1, 14)}


def _run(k: int) -> tuple[bool, str]:
    ok, detail = CRITERIA[k]()
    RESULTS[k] = (bool(ok), detail)
    return bool(ok), detail


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k):
    ok, detail = _run(k)
    print(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for k in CRITERIA:
        ok, detail = _run(k)
        failed += not ok
        print(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}", flush=True)
    sys.exit(1 if failed else 0)
