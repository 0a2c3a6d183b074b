"""Population dynamics on product distributions and on full genotype distributions.

One finite-population generation is ``sampling_step`` followed by
``selection_step`` applied to the empirical frequencies.  Sampling draws
``Binomial(N, (1 + mu_i) / 2)`` independently per locus.  That is the exact
law of the marginal frequencies of N genotypes drawn from the product
distribution, and only the marginals feed the next selection step, so no
individual genotypes are ever materialised.

Randomness: generation ``t`` of seed ``s`` reads a Philox stream keyed by
``s`` with counter word ``t``; locus ``i`` consumes the i-th uniform of that
stream and converts it by inverse CDF.  A draw is therefore a pure function
of (seed, generation, locus).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.special import bdtr

from .errors import CapabilityError, ExtinctionError, PreconditionError
from .fourier import gradient
from .functions import (
    BooleanFitnessFunction,
    ProductPoint,
    Threshold,
    as_mu,
    extension,
    product_weights,
    satisfaction_probability,
    sigma,
)

SAMPLING_STREAM = 0
RECOMBINATION_MAX_N = 8


# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True, eq=False)
class EmpiricalFrequencies:
    nu: np.ndarray
    sample_size: int

    def __post_init__(self):
        arr = np.array(self.nu, dtype=float).reshape(-1)
        if self.sample_size < 1:
            raise ValueError("sample size must be positive")
        k = (arr + 1.0) * self.sample_size / 2.0
        if np.any(np.abs(k - np.round(k)) > 1e-9) or np.any(np.abs(arr) > 1):
            raise ValueError(f"frequencies are not on the grid -1 + 2k/{self.sample_size}")
        arr.setflags(write=False)
        object.__setattr__(self, "nu", arr)

    def as_point(self) -> ProductPoint:
        return ProductPoint(self.nu)

    def is_vertex(self) -> bool:
        return bool(np.all(np.abs(self.nu) == 1))


@dataclass(frozen=True, eq=False)
class StepRecord:
    t: int
    mu_before: np.ndarray
    nu: np.ndarray
    mu_after: np.ndarray
    ext_mu: float
    ext_nu: float
    ext_mu_after: float
    linear_mass: float
    sat_prob: float

    @property
    def sampling_increment(self) -> float:
        return self.ext_nu - self.ext_mu

    @property
    def selection_increment(self) -> float:
        return self.ext_mu_after - self.ext_nu


@dataclass
class Trajectory:
    """Log of one run.

    ``ext`` and ``sat`` hold f~(mu^t) and mu^t(f) for every generation
    0..len(steps) regardless of ``record_every``; ``steps`` may be thinned.
    """

    function: BooleanFitnessFunction
    mu0: np.ndarray
    T: int
    N: int | None = None
    seed: int | None = None
    steps: list[StepRecord] = field(default_factory=list)
    ext: list[float] = field(default_factory=list)
    sat: list[float] = field(default_factory=list)
    terminal: np.ndarray | None = None
    fixed: bool = False
    fixation_time: int | None = None
    extinct: bool = False
    early_stopped: bool = False
    padded: bool = False
    record_every: int = 1
    density_violations: int = 0

    @property
    def generations(self) -> int:
        """Number of generations actually simulated or padded."""
        return len(self.ext) - 1

    @property
    def fixation_value(self) -> float | None:
        return self.ext[-1] if self.fixed else None

    @property
    def satisfied_at_end(self) -> bool:
        if not self.fixed or self.terminal is None:
            return False
        return self.function.satisfied(self.terminal.astype(int))

    def config(self) -> dict:
        return {
            "n": self.function.n,
            "predicate": repr(self.function.predicate),
            "landscape": str(self.function.landscape),
            "N": self.N,
            "T": self.T,
            "seed": self.seed,
            "mu0": [float(m) for m in self.mu0],
        }


@dataclass(frozen=True, eq=False)
class GenotypeDistribution:
    """Probability of each genotype in truth-table order."""

    probabilities: np.ndarray

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=float).reshape(-1)
        n = int(round(math.log2(len(p)))) if len(p) else -1
        if n < 1 or len(p) != 1 << n:
            raise ValueError("need 2^n probabilities")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must be nonnegative and sum to 1")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    @property
    def n(self) -> int:
        return int(round(math.log2(len(self.probabilities))))

    @classmethod
    def product(cls, mu) -> "GenotypeDistribution":
        return cls(product_weights(as_mu(mu)))

    def tensor(self) -> np.ndarray:
        # axis n-1-i <-> locus i
        return self.probabilities.reshape((2,) * self.n)

    def marginal_means(self) -> np.ndarray:
        t = self.tensor()
        n = self.n
        out = np.empty(n)
        for i in range(n):
            ax = n - 1 - i
            m = t.sum(axis=tuple(a for a in range(n) if a != ax))
            out[i] = m[1] - m[0]
        return out

    def product_of_marginals(self) -> np.ndarray:
        return product_weights(self.marginal_means())

    def linkage_disequilibrium(self) -> float:
        """L-infinity distance to the product of the marginals."""
        return float(np.max(np.abs(self.probabilities - self.product_of_marginals())))


# ---------------------------------------------------------------------------
# selection


def selection_step(f: BooleanFitnessFunction, p, method: str = "direct") -> ProductPoint:
    """mu'_i = E_p[f x_i] / E_p[f].

    ``method="direct"`` evaluates E_p[f x_i] through the restrictions
    x_i = +-1 of the extension; ``method="fourier"`` uses
    mu'_i = p_i + sigma_i f^(i; p) / E_p[f].
    """
    p = as_mu(p, f.n)
    if method == "fourier":
        return ProductPoint(_select_fourier(f, p)[0])
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    mean = extension(f, p)
    if mean <= 0:
        raise ExtinctionError("no satisfying genotypes survive selection")
    out = np.empty(f.n)
    for i in range(f.n):
        up = p.copy()
        up[i] = 1.0
        down = p.copy()
        down[i] = -1.0
        plus = (1.0 + p[i]) / 2.0
        out[i] = (plus * extension(f, up) - (1.0 - plus) * extension(f, down)) / mean
    return ProductPoint(np.clip(out, -1.0, 1.0))


def _select_fourier(f, p):
    """(mu', f~(p), gradient at p) via the linear-coefficient form."""
    value, grad = gradient(f, p)
    if value <= 0:
        raise ExtinctionError("no satisfying genotypes survive selection")
    s2 = (1.0 - p) * (1.0 + p)
    new = np.clip(p + s2 * grad / value, -1.0, 1.0)
    return new, value, grad


# ---------------------------------------------------------------------------
# sampling


class LocusStreams:
    """Counter-based uniforms addressed by (seed, generation, locus)."""

    def __init__(self, seed: int, stream: int = SAMPLING_STREAM):
        if seed < 0:
            raise ValueError("seed must be nonnegative")
        self.seed = int(seed)
        self.stream = int(stream)

    def uniforms(self, t: int, n: int) -> np.ndarray:
        bg = np.random.Philox(key=self.seed, counter=[0, 0, int(t), self.stream])
        raw = bg.random_raw(n)
        return (raw >> np.uint64(11)).astype(float) * (1.0 / 9007199254740992.0)


def binomial_from_uniform(u: np.ndarray, N: int, prob: np.ndarray) -> np.ndarray:
    """Inverse-CDF Binomial(N, prob) draws, one per uniform."""
    ks = np.arange(N + 1)
    cdf = bdtr(ks[None, :], N, np.asarray(prob, dtype=float)[:, None])
    cdf[:, -1] = 1.0
    return (cdf <= np.asarray(u)[:, None]).sum(axis=1)


def sampling_step(p, N: int, streams: LocusStreams, t: int = 0) -> EmpiricalFrequencies:
    """Empirical allele frequencies of N individuals drawn from p."""
    if N < 1:
        raise PreconditionError("N must be >= 1")
    p = as_mu(p)
    return EmpiricalFrequencies(_sample(p, N, streams, t), N)


def _sample(p, N, streams, t):
    prob = np.clip((1.0 + p) / 2.0, 0.0, 1.0)
    k = binomial_from_uniform(streams.uniforms(t, len(p)), N, prob)
    nu = 2.0 * k / N - 1.0
    # degenerate marginals are deterministic
    nu[p == 1.0] = 1.0
    nu[p == -1.0] = -1.0
    return nu


def generation(f: BooleanFitnessFunction, p, N: int, streams: LocusStreams, t: int = 0):
    """One sampling step followed by selection on the sample."""
    nu = sampling_step(p, N, streams, t)
    return nu, selection_step(f, nu.nu)


# ---------------------------------------------------------------------------
# trajectories


def _density_ok(f, lin_mass, increment) -> bool:
    ne = f.n * f.epsilon
    if ne >= 1 or f.landscape.low == 0:
        return True
    return increment >= (1.0 - ne) * lin_mass - 1e-9


def run_infinite(f: BooleanFitnessFunction, mu0, T: int, record_every: int = 1) -> Trajectory:
    """Deterministic recurrence mu^{t+1} = selection_step(mu^t)."""
    if T < 0:
        raise PreconditionError("T must be >= 0")
    mu = as_mu(mu0, f.n).copy()
    traj = Trajectory(f, mu.copy(), T, record_every=record_every)
    gap, low = f.landscape.gap, f.landscape.low
    value, grad = gradient(f, mu)
    traj.ext.append(value)
    traj.sat.append((value - low) / gap)
    for t in range(T):
        if value <= 0:
            traj.extinct = True
            break
        new = np.clip(mu + (1.0 - mu) * (1.0 + mu) * grad / value, -1.0, 1.0)
        after, next_grad = gradient(f, new)
        if t % record_every == 0:
            lin = float(np.sum((sigma(mu) * grad) ** 2))
            traj.steps.append(StepRecord(t, mu, mu, new, value, value, after, lin,
                                         (value - low) / gap))
        traj.ext.append(after)
        traj.sat.append((after - low) / gap)
        mu, value, grad = new, after, next_grad
    traj.terminal = mu
    traj.fixed = bool(np.all(np.abs(mu) == 1))
    return traj


def run_finite(
    f: BooleanFitnessFunction,
    mu0,
    N: int,
    T: int,
    seed: int,
    early_stop: bool = True,
    verify: bool = False,
    record_every: int = 1,
) -> Trajectory:
    """Sampling + selection for T generations or until the sample is a vertex.

    With ``early_stop=False`` the generations after absorption are padded with
    copies of the vertex state (zero increments), which is exactly what the
    process would produce.  Lethal extinction ends the run and is recorded.
    """
    if T < 0 or N < 1:
        raise PreconditionError("need T >= 0 and N >= 1")
    streams = LocusStreams(seed)
    mu = as_mu(mu0, f.n).copy()
    traj = Trajectory(f, mu.copy(), T, N=N, seed=seed, record_every=record_every)
    gap, low = f.landscape.gap, f.landscape.low
    ext_mu = extension(f, mu)
    traj.ext.append(ext_mu)
    traj.sat.append((ext_mu - low) / gap)
    if np.all(np.abs(mu) == 1):
        traj.fixed, traj.fixation_time = True, 0
    t = 0
    while t < T and not traj.fixed:
        nu = _sample(mu, N, streams, t)
        try:
            new, ext_nu, grad = _select_fourier(f, nu)
        except ExtinctionError:
            traj.extinct = True
            break
        if np.all(np.abs(nu) == 1):
            new = nu.copy()
        ext_after = extension(f, new)
        lin = float(np.sum((sigma(nu) * grad) ** 2))
        if not _density_ok(f, lin, ext_after - ext_nu):
            traj.density_violations += 1
            if verify:
                raise AssertionError(f"selection increment below density bound at t={t}")
        if t % record_every == 0:
            traj.steps.append(StepRecord(t, mu, nu, new, ext_mu, ext_nu, ext_after, lin,
                                         (ext_mu - low) / gap))
        traj.ext.append(ext_after)
        traj.sat.append((ext_after - low) / gap)
        mu, ext_mu = new, ext_after
        t += 1
        if np.all(np.abs(nu) == 1):
            traj.fixed, traj.fixation_time = True, t - 1
    if traj.fixed and t < T:
        if early_stop:
            traj.early_stopped = True
        else:
            _pad(traj, mu, ext_mu, t, T)
    traj.terminal = mu
    return traj


def _pad(traj: Trajectory, vertex: np.ndarray, value: float, start: int, T: int):
    sat = traj.sat[-1]
    for t in range(start, T):
        if t % traj.record_every == 0:
            traj.steps.append(StepRecord(t, vertex, vertex, vertex, value, value, value, 0.0, sat))
        traj.ext.append(value)
        traj.sat.append(sat)
    traj.padded = True


def pad_trajectory(traj: Trajectory) -> Trajectory:
    """Copy of an early-stopped trajectory extended to T generations."""
    if not traj.early_stopped:
        return traj
    out = replace(traj, steps=list(traj.steps), ext=list(traj.ext), sat=list(traj.sat),
                  early_stopped=False)
    _pad(out, traj.terminal, traj.ext[-1], traj.generations, traj.T)
    return out


# ---------------------------------------------------------------------------
# Waddington's genetic assimilation


@dataclass(frozen=True)
class WaddingtonRow:
    t: int
    h: int | None
    mu: np.ndarray
    sat_under_h: float | None
    sat_heat: float
    sat_normal: float


@dataclass
class WaddingtonReport:
    rows: list[WaddingtonRow]
    extinct: bool = False


def waddington_scenario(
    n: int,
    k: int,
    h_schedule: Sequence[int],
    landscape,
    mode: str = "infinite",
    N: int | None = None,
    seed: int = 0,
    mu0=None,
) -> WaddingtonReport:
    """Selection on a threshold trait whose expression depends on the environment.

    Row t reports mu^t and the satisfaction probability under the flag
    applied in generation t, under h = +1 and under the counterfactual
    h = -1.  The last row is the state after the final selection.
    """
    base = BooleanFitnessFunction(n, Threshold(k, -1), landscape)
    heat, normal = base.with_environment(1), base.with_environment(-1)
    mu = np.zeros(n) if mu0 is None else as_mu(mu0, n).copy()
    if mode not in ("infinite", "finite"):
        raise ValueError("mode must be 'infinite' or 'finite'")
    if mode == "finite" and not N:
        raise PreconditionError("finite mode needs a population size N")
    streams = LocusStreams(seed) if mode == "finite" else None
    rows = []
    for t, h in enumerate(h_schedule):
        f = base.with_environment(h)
        rows.append(WaddingtonRow(t, h, mu, satisfaction_probability(f, mu),
                                  satisfaction_probability(heat, mu),
                                  satisfaction_probability(normal, mu)))
        src = mu if streams is None else _sample(mu, N, streams, t)
        try:
            mu = selection_step(f, src).mu
        except ExtinctionError:
            return WaddingtonReport(rows, extinct=True)
    rows.append(WaddingtonRow(len(h_schedule), None, mu, None,
                              satisfaction_probability(heat, mu),
                              satisfaction_probability(normal, mu)))
    return WaddingtonReport(rows)


# ---------------------------------------------------------------------------
# full-genotype recombination


def recombine(p: GenotypeDistribution) -> GenotypeDistribution:
    """One generation of random mating with free recombination.

    p'(g) = 2^-n sum_S P_S(g_S) P_{not S}(g_{not S}) where P_S is the
    marginal of p on the loci in S.
    """
    n = p.n
    t = p.tensor()
    out = np.zeros_like(t)
    axes_of = [n - 1 - i for i in range(n)]
    marg = {}
    for mask in range(1 << n):
        keep = {axes_of[i] for i in range(n) if mask >> i & 1}
        drop = tuple(a for a in range(n) if a not in keep)
        marg[mask] = t.sum(axis=drop, keepdims=True) if drop else t
    full = (1 << n) - 1
    for mask in range(1 << n):
        out = out + marg[mask] * marg[full ^ mask]
    out = out.reshape(-1) / (1 << n)
    return GenotypeDistribution(out / out.sum())


def select_genotypes(f: BooleanFitnessFunction, p: GenotypeDistribution) -> GenotypeDistribution:
    w = p.probabilities * f.fitness_table
    z = w.sum()
    if z <= 0:
        raise ExtinctionError("no satisfying genotypes survive selection")
    return GenotypeDistribution(w / z)


def recombination_dynamics(
    f: BooleanFitnessFunction,
    p0: GenotypeDistribution,
    T: int,
    selection: bool = True,
) -> list[tuple[GenotypeDistribution, float]]:
    """Exact genotype-frequency dynamics; entry t is (p^t, LD(p^t))."""
    if p0.n != f.n:
        raise ValueError("distribution and function disagree on n")
    if f.n > RECOMBINATION_MAX_N:
        raise CapabilityError(f"recombination dynamics limited to n <= {RECOMBINATION_MAX_N}")
    p = p0
    out = [(p, p.linkage_disequilibrium())]
    for _ in range(T):
        if selection:
            p = select_genotypes(f, p)
        p = recombine(p)
        out.append((p, p.linkage_disequilibrium()))
    return out
