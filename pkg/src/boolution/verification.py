"""Checkers for the per-generation inequalities and the multi-generation statistics.

Expectations over the sampling law B(mu) are computed by exact enumeration
of the product grid {-1 + 2k/N}^n with binomial weights.  Locus indices are
0-based throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binom

from .errors import CapabilityError, DegenerateCoordinateError, PreconditionError
from .dynamics import Trajectory, selection_step
from .fourier import (
    apply_axes,
    fourier_table,
    gradient,
    linear_coefficients,
    mask_loci,
    multilinear_partials,
    pairwise_coefficients,
    subset_orders,
)
from .functions import (
    BooleanFitnessFunction,
    WeakSelection,
    as_mu,
    extension_batch,
    satisfaction_probability,
    sigma,
)

GRID_LIMIT = 10**6


def _require_weak(f: BooleanFitnessFunction):
    if not isinstance(f.landscape, WeakSelection):
        raise PreconditionError("needs a weak-selection landscape")
    if f.n * f.epsilon >= 1:
        raise PreconditionError(f"n*epsilon = {f.n * f.epsilon:g} must be < 1")


# ---------------------------------------------------------------------------
# single-generation quantities


def density_gap(f: BooleanFitnessFunction, nu) -> float:
    """[f~(mu') - f~(nu)] - (1 - n eps) * sum_i f^(i; nu)^2, with mu' selected from nu."""
    _require_weak(f)
    nu = as_mu(nu, f.n)
    after = selection_step(f, nu).mu
    gain = f.landscape.gap * (satisfaction_probability(f, after) - satisfaction_probability(f, nu))
    lin = linear_coefficients(f, nu)
    return float(gain - (1.0 - f.n * f.epsilon) * np.dot(lin, lin))


def hybrid_point(f: BooleanFitnessFunction, nu, i: int) -> np.ndarray:
    """(mu'_0, ..., mu'_{i-1}, nu_i, ..., nu_{n-1})."""
    nu = as_mu(nu, f.n)
    after = selection_step(f, nu).mu
    return np.concatenate((after[:i], nu[i:]))


def hybrid_derivative_residual(f: BooleanFitnessFunction, nu, i: int,
                               telescoped: bool = False) -> float:
    """Change of d f~/d mu_i between nu and the hybrid point, minus its predicted value.

    The prediction is sum_{j<i} f^(j; nu) f^({i,j}; nu) / (E_nu[f] sigma_i).
    It is exact for i = 1; for larger i it drops the higher-order cross terms
    picked up as earlier coordinates move.  ``telescoped=True`` instead sums
    the single-coordinate changes with pairwise derivatives taken at each
    intermediate hybrid, which is exact for every i.
    """
    nu = as_mu(nu, f.n)
    if not 1 <= i < f.n:
        raise ValueError(f"locus index must be in [1, {f.n - 1}], got {i}")
    s = sigma(nu)
    if s[i] == 0:
        raise DegenerateCoordinateError(f"sigma_{i} = 0")
    value, g = gradient(f, nu)
    w = hybrid_point(f, nu, i)
    _, gw = gradient(f, w)
    change = gw[i] - g[i]
    if telescoped:
        after = selection_step(f, nu).mu
        pred = 0.0
        point = nu.copy()
        for j in range(i):
            d = multilinear_partials(f, point)[(1 << i) | (1 << j)]
            pred += (after[j] - nu[j]) * d
            point[j] = after[j]
        return float(change - pred)
    lin = linear_coefficients(f, nu)
    pair = pairwise_coefficients(f, nu)
    pred = float(np.dot(lin[:i], pair[i, :i])) / (value * s[i])
    return float(change - pred)


# ---------------------------------------------------------------------------
# sampling-grid enumeration


def binomial_grid(mu_i: float, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Values -1 + 2k/N and their probabilities for one coordinate."""
    k = np.arange(N + 1)
    return 2.0 * k / N - 1.0, binom.pmf(k, N, (1.0 + mu_i) / 2.0)


@dataclass(frozen=True, eq=False)
class SamplingGrid:
    """Exact law of nu ~ B(mu) together with f~ and linear coefficients on it.

    Arrays are tensors with axis n-1-i belonging to locus i.
    """

    weights: np.ndarray
    sat: np.ndarray
    linear: list
    values: list

    def points(self) -> np.ndarray:
        n = len(self.values)
        mesh = np.meshgrid(*[self.values[i] for i in reversed(range(n))], indexing="ij")
        return np.stack([mesh[n - 1 - i].reshape(-1) for i in range(n)], axis=1)


def sampling_grid(f: BooleanFitnessFunction, mu, N: int) -> SamplingGrid:
    mu = as_mu(mu, f.n)
    n = f.n
    if (N + 1) ** n > GRID_LIMIT:
        raise CapabilityError(f"sampling grid (N+1)^n = {(N + 1) ** n} exceeds {GRID_LIMIT}")
    if n > 20:
        raise CapabilityError("sampling grid needs a truth table")
    vals, pmfs, mats = [], [], []
    for m in mu:
        v, w = binomial_grid(m, N)
        vals.append(v)
        pmfs.append(w)
        mats.append(np.stack(((1.0 - v) / 2.0, (1.0 + v) / 2.0), axis=1))
    table = f.truth_table.astype(float)
    sat = apply_axes(table, mats)
    weights = np.ones(())
    for i in reversed(range(n)):
        weights = np.multiply.outer(weights, pmfs[i])
    linear = []
    for i in range(n):
        sel = list(mats)
        sel[i] = np.array([[-0.5, 0.5]])
        deriv = apply_axes(table, sel) * f.landscape.gap
        shape = [1] * n
        shape[n - 1 - i] = N + 1
        linear.append(deriv * sigma(vals[i]).reshape(shape))
    return SamplingGrid(weights, sat, linear, vals)


def variance_noise_exact(f: BooleanFitnessFunction, mu, N: int) -> tuple[float, float]:
    """(E_B[(f~(mu) - f~(nu))^2], E_B[sum_i f^(i; nu)^2] / (N - 1))."""
    if N < 2:
        raise PreconditionError("N must be >= 2")
    mu = as_mu(mu, f.n)
    grid = sampling_grid(f, mu, N)
    dev = f.landscape.gap * (grid.sat - satisfaction_probability(f, mu))
    lhs = float(np.sum(grid.weights * dev ** 2))
    mass = sum(l ** 2 for l in grid.linear)
    rhs = float(np.sum(grid.weights * mass)) / (N - 1)
    return lhs, rhs


def noise_fitness_check(f: BooleanFitnessFunction, mu, N: int) -> tuple[float, float]:
    """(E_B[(f~(nu) - f~(mu))^2], E_B[f~(mu') - f~(nu)] / ((N-1)(1 - n eps)))."""
    _require_weak(f)
    if N < 2:
        raise PreconditionError("N must be >= 2")
    mu = as_mu(mu, f.n)
    grid = sampling_grid(f, mu, N)
    gap, low = f.landscape.gap, f.landscape.low
    dev = gap * (grid.sat - satisfaction_probability(f, mu))
    lhs = float(np.sum(grid.weights * dev ** 2))
    pts = grid.points()
    ext_nu = low + gap * grid.sat.reshape(-1)
    n = f.n
    grads = np.stack([
        np.broadcast_to(l, grid.sat.shape).reshape(-1) for l in grid.linear
    ], axis=1)
    s = sigma(pts)
    with np.errstate(invalid="ignore", divide="ignore"):
        grad_vals = np.where(s > 0, grads / np.where(s > 0, s, 1.0), 0.0)
    after = np.clip(pts + s ** 2 * grad_vals / ext_nu[:, None], -1.0, 1.0)
    gain = extension_batch(f, after) - ext_nu
    w = grid.weights.reshape(-1)
    rhs = float(np.dot(w, gain)) / ((N - 1) * (1.0 - n * f.epsilon))
    return lhs, rhs


def phi_moments(mu_i: float, N: int) -> tuple[float, float]:
    """(E_B[phi_i(nu)^2], E_B[sigma_i(nu)^2] / sigma_i(mu)^2) by enumeration."""
    if abs(mu_i) >= 1:
        raise DegenerateCoordinateError(f"mu_i = {mu_i} has sigma_i = 0")
    vals, w = binomial_grid(mu_i, N)
    var = (1.0 - mu_i) * (1.0 + mu_i)
    second = math.fsum(w * (vals - mu_i) ** 2) / var
    ratio = math.fsum(w * (1.0 - vals) * (1.0 + vals)) / var
    return second, ratio


def conditional_sampling_variance(f: BooleanFitnessFunction, mu, N: int) -> float:
    """E_B[(f~(nu) - f~(mu))^2] = sum_{S != 0} f^(S; mu)^2 N^-|S|."""
    mu = as_mu(mu, f.n)
    arr = fourier_table(f, mu).as_array()
    orders = subset_orders(f.n)
    return float(np.sum(arr[1:] ** 2 * float(N) ** (-orders[1:].astype(float))))


def lin_mu_residual(f: BooleanFitnessFunction, mu, nu) -> float:
    """Max over i of |f^(i; nu) - sigma_i(nu)/sigma_i(mu) sum_{S ni i} f^(S; mu) phi_{S-i}(nu)|."""
    mu, nu = as_mu(mu, f.n), as_mu(nu, f.n)
    sm, sn = sigma(mu), sigma(nu)
    table = fourier_table(f, mu).as_array()
    lin = linear_coefficients(f, nu)
    worst = 0.0
    for i in range(f.n):
        if sm[i] == 0:
            continue
        total = 0.0
        for mask in range(1 << f.n):
            if not mask >> i & 1:
                continue
            phi = 1.0
            for j in mask_loci(mask & ~(1 << i)):
                phi *= (nu[j] - mu[j]) / sm[j] if sm[j] > 0 else 0.0
            total += table[mask] * phi
        worst = max(worst, abs(lin[i] - sn[i] / sm[i] * total))
    return worst


# ---------------------------------------------------------------------------
# martingale accumulators


def lemma_constants(n: int, N: int, epsilon: float) -> dict:
    """beta/alpha in both normalisations used for the sampling martingale."""
    out = {}
    denom = 1.0 - n * epsilon
    for name, num, den in (("main", 2 * epsilon, (N - 1) * denom), ("theorem", epsilon, N * denom)):
        if den <= 0 or num / den >= 4:
            beta = alpha = float("nan")
        else:
            beta = math.sqrt(num / den)
            alpha = math.sqrt(2 * beta * math.log(2 / beta))
        out[f"beta_{name}"], out[f"alpha_{name}"] = beta, alpha
    return out


@dataclass
class MartingaleLedger:
    zeta: np.ndarray
    cond_var: np.ndarray
    beta: float
    alpha: float
    beta_theorem: float
    alpha_theorem: float
    v_exact: bool = True

    @property
    def S(self) -> np.ndarray:
        """Running sums S_1..S_T."""
        return np.cumsum(self.zeta)

    @property
    def S_T(self) -> float:
        return float(np.sum(self.zeta))

    @property
    def M_T(self) -> float:
        return float(np.sum(self.zeta ** 2))

    @property
    def V_T(self) -> float:
        return float(np.sum(self.cond_var))

    @property
    def H_T(self) -> float:
        return self.M_T + self.V_T

    @property
    def hit_alpha(self) -> bool:
        return abs(self.S_T) >= self.alpha


def martingale_accumulate(traj: Trajectory, check: bool = False) -> MartingaleLedger:
    """Sampling increments and their conditional variances along a finite run.

    The conditional variance given mu^t is sum_{S != 0} f^(S; mu^t)^2 N^-|S|
    when a full Fourier table is available, otherwise zeta_t^2 is used as an
    unbiased plug-in and ``v_exact`` is False.  ``check=True`` also compares
    the closed form against grid enumeration where the grid is small.
    """
    if traj.N is None:
        raise ValueError("martingale statistics need a finite-population trajectory")
    if traj.early_stopped:
        raise ValueError("trajectory stopped early; run with early_stop=False or pad it")
    if traj.record_every != 1:
        raise ValueError("martingale statistics need every generation recorded")
    f, N = traj.function, traj.N
    exact = f.n <= 12
    zeta = np.array([s.ext_nu - s.ext_mu for s in traj.steps])
    cond = np.zeros(len(traj.steps))
    for t, s in enumerate(traj.steps):
        mu = s.mu_before
        if np.all(np.abs(mu) == 1):
            continue
        if exact:
            cond[t] = conditional_sampling_variance(f, mu, N)
            if check and (N + 1) ** f.n <= 10**4:
                lhs, _ = variance_noise_exact(f, mu, N)
                if abs(lhs - cond[t]) > 1e-12 + 1e-9 * lhs:
                    raise AssertionError(f"sampling variance mismatch at t={t}")
        else:
            cond[t] = zeta[t] ** 2
    c = lemma_constants(f.n, N, f.epsilon)
    return MartingaleLedger(zeta, cond, c["beta_main"], c["alpha_main"],
                            c["beta_theorem"], c["alpha_theorem"], v_exact=exact)


# ---------------------------------------------------------------------------
# absorption and alpha-determination


@dataclass
class DeterminedTracker:
    alpha: float
    determined_at: list = field(default_factory=list)
    absorbed_at: list = field(default_factory=list)
    absorption_ok: bool = True
    at_vertex: bool = False

    @property
    def all_absorbed(self) -> bool:
        return all(t is not None for t in self.absorbed_at)


def determined_report(traj: Trajectory, alpha: float | None = None) -> DeterminedTracker:
    """First alpha-determination and absorption time of every locus.

    Default alpha = 1/(n^2 N).  A locus is absorbed once its sampled
    frequency is +-1 (or at t = 0 when it starts fixed); the tracker checks
    that it never moves again.
    """
    if traj.record_every != 1:
        raise ValueError("needs every generation recorded")
    n = traj.function.n
    N = traj.N or 1
    if alpha is None:
        alpha = 1.0 / (n * n * N)
    rep = DeterminedTracker(alpha, [None] * n, [None] * n)
    fixed_val = [None] * n
    for j in range(n):
        if abs(traj.mu0[j]) == 1:
            rep.absorbed_at[j], fixed_val[j] = 0, traj.mu0[j]
        if abs(traj.mu0[j]) > 1 - alpha:
            rep.determined_at[j] = 0
    for s in traj.steps:
        for j in range(n):
            if fixed_val[j] is not None:
                if s.mu_before[j] != fixed_val[j] or s.nu[j] != fixed_val[j] \
                        or s.mu_after[j] != fixed_val[j]:
                    rep.absorption_ok = False
                continue
            if rep.determined_at[j] is None and abs(s.mu_before[j]) > 1 - alpha:
                rep.determined_at[j] = s.t
            if abs(s.nu[j]) == 1:
                rep.absorbed_at[j], fixed_val[j] = s.t, s.nu[j]
                if s.mu_after[j] != s.nu[j]:
                    rep.absorption_ok = False
    term = traj.terminal if traj.terminal is not None else traj.mu0
    rep.at_vertex = bool(np.all(np.abs(term) == 1))
    return rep


def undetermined_probability(mu_j: float, N: int) -> float:
    """Pr[|nu_j| < 1] = 1 - p^N - q^N for one coordinate."""
    p = (1.0 + mu_j) / 2.0
    return float(max(0.0, 1.0 - p ** N - (1.0 - p) ** N))


def fast_vertex_horizons(n: int, N: int, epsilon: float) -> dict:
    """Interval lengths T1 = 16 N^2 n^4 and T2 = 8 eps N^2 n^4 / (1 - n eps)."""
    t1 = 16 * N ** 2 * n ** 4
    t2 = 8 * epsilon * N ** 2 * n ** 4 / (1 - n * epsilon)
    return {"T1": t1, "T2": t2, "T1_times_T2": t1 * t2,
            "scale_without_C": epsilon * n ** 8 * N ** 4 / (1 - n * epsilon)}


# ---------------------------------------------------------------------------
# ensemble aggregation


@dataclass
class RunningMoments:
    """Count, sum and sum of squares; ``merge`` is associative and commutative."""

    count: int = 0
    total: float = 0.0
    total_sq: float = 0.0

    def add(self, x: float) -> "RunningMoments":
        self.count += 1
        self.total += x
        self.total_sq += x * x
        return self

    def merge(self, other: "RunningMoments") -> "RunningMoments":
        return RunningMoments(self.count + other.count, self.total + other.total,
                              self.total_sq + other.total_sq)

    @property
    def mean(self) -> float:
        return self.total / self.count if self.count else float("nan")

    @property
    def variance(self) -> float:
        if self.count < 2:
            return float("nan")
        return max(0.0, (self.total_sq - self.total ** 2 / self.count) / (self.count - 1))

    @property
    def stderr(self) -> float:
        return math.sqrt(self.variance / self.count) if self.count > 1 else float("nan")
