"""mu-biased harmonic analysis on the Boolean cube.

Two independent routes compute coefficients:

* ``fourier_table`` applies a 2x2 change of basis along every locus axis of
  the truth table (n * 2^n work, no long sums);
* ``coefficient`` uses restrictions of the multilinear extension,
  ``f^(S; mu) = prod_{i in S} sigma_i/2 * sum_a prod(a) * f~(mu | x_S = a)``,
  which works on every extension backend.

Subsets are bitmasks over loci (bit i <-> locus i) or iterables of loci.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import CapabilityError, DegenerateCoordinateError
from .functions import (
    N_EXACT,
    BooleanFitnessFunction,
    as_mu,
    count_distribution,
    is_monotone,
    satisfaction_probability,
    sigma,
)

FULL_TABLE_MAX_N = 12


def as_mask(S) -> int:
    if isinstance(S, (int, np.integer)):
        return int(S)
    mask = 0
    for i in S:
        mask |= 1 << int(i)
    return mask


def mask_loci(mask: int) -> list[int]:
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def subset_orders(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    return ((idx[:, None] >> np.arange(n)) & 1).sum(axis=1)


def apply_axes(values: np.ndarray, mats) -> np.ndarray:
    """Contract every locus axis of a truth-table-ordered array with a matrix.

    ``mats[i]`` has shape (k_i, 2) with columns indexed by allele (-1, +1).
    Returns a tensor whose axis ``n-1-i`` has length k_i (locus 0 is the
    fastest-varying axis, matching truth-table order when flattened).
    """
    n = len(mats)
    t = np.asarray(values, dtype=float).reshape((2,) * n)
    for i, m in enumerate(mats):
        ax = n - 1 - i
        t = np.moveaxis(np.tensordot(m, t, axes=([1], [ax])), 0, ax)
    return t


def _derivative_mats(mu):
    return [np.array([[(1 - m) / 2, (1 + m) / 2], [-0.5, 0.5]]) for m in mu]


def _biased_mats(mu):
    mats = []
    for m, s in zip(mu, sigma(mu)):
        mats.append(np.array([[(1 - m) / 2, (1 + m) / 2], [-s / 2, s / 2]]))
    return mats


def _require_enumerable(f: BooleanFitnessFunction, cap: int = N_EXACT):
    if f.n > cap:
        raise CapabilityError(f"full-cube computation needs n <= {cap}, got n={f.n}")


def multilinear_partials(f: BooleanFitnessFunction, mu) -> np.ndarray:
    """All mixed partial derivatives of the extension at mu, indexed by mask.

    Entry S is d^|S| f~ / prod_{i in S} d mu_i; entry 0 is f~(mu) itself.
    Because f~ is multilinear these give the exact Taylor expansion about mu.
    """
    mu = as_mu(mu, f.n)
    _require_enumerable(f)
    d = apply_axes(f.truth_table, _derivative_mats(mu)).reshape(-1) * f.landscape.gap
    d[0] += f.landscape.low
    return d


@dataclass(frozen=True, eq=False)
class FourierTable:
    """mu-biased coefficients up to ``max_order`` (dense over all masks when full)."""

    n: int
    base_point: np.ndarray
    coefficients: dict[int, float]
    max_order: int

    def __getitem__(self, S) -> float:
        mask = as_mask(S)
        if popcount(mask) > self.max_order:
            raise KeyError(f"order {popcount(mask)} above table order {self.max_order}")
        return self.coefficients.get(mask, 0.0)

    def as_array(self) -> np.ndarray:
        out = np.zeros(1 << self.n)
        for m, v in self.coefficients.items():
            out[m] = v
        return out

    def parseval_mass(self) -> float:
        return float(sum(v * v for v in self.coefficients.values()))

    def influences(self) -> np.ndarray:
        """Per-locus sum of squared coefficients over sets containing the locus."""
        arr = self.as_array() ** 2
        masks = np.arange(1 << self.n)
        return np.array([arr[(masks >> i) & 1 == 1].sum() for i in range(self.n)])


def fourier_table(f: BooleanFitnessFunction, mu, max_order: int | None = None) -> FourierTable:
    mu = as_mu(mu, f.n)
    if max_order is None or max_order >= f.n:
        _require_enumerable(f, FULL_TABLE_MAX_N)
        c = apply_axes(f.truth_table, _biased_mats(mu)).reshape(-1) * f.landscape.gap
        c[0] += f.landscape.low
        return FourierTable(f.n, mu.copy(), {m: float(v) for m, v in enumerate(c)}, f.n)
    coeffs = {0: _extension(f, mu)}
    if max_order >= 1:
        for i, v in enumerate(linear_coefficients(f, mu)):
            coeffs[1 << i] = float(v)
    if max_order >= 2:
        pair = pairwise_coefficients(f, mu)
        for i in range(f.n):
            for j in range(i + 1, f.n):
                coeffs[(1 << i) | (1 << j)] = float(pair[i, j])
    if max_order >= 3:
        for mask in range(1 << f.n):
            if 3 <= popcount(mask) <= max_order:
                coeffs[mask] = coefficient(f, mask, mu)
    return FourierTable(f.n, mu.copy(), coeffs, max_order)


def _extension(f, mu) -> float:
    return f.landscape.low + f.landscape.gap * satisfaction_probability(f, mu)


def basis_value(S, mu, x) -> float:
    """phi^mu_S(x) = prod_{i in S} (x_i - mu_i) / sigma_i."""
    mu = as_mu(mu)
    x = np.asarray(x, dtype=float)
    loci = mask_loci(as_mask(S))
    s = sigma(mu)
    out = 1.0
    for i in loci:
        if s[i] == 0:
            raise DegenerateCoordinateError(f"sigma_{i} = 0 at mu_{i} = {mu[i]}")
        out *= (x[i] - mu[i]) / s[i]
    return out


def _check_nondegenerate(mu, loci):
    s = sigma(mu)
    for i in loci:
        if s[i] == 0:
            raise DegenerateCoordinateError(f"sigma_{i} = 0 at mu_{i} = {mu[i]}")
    return s


def coefficient(f: BooleanFitnessFunction, S, mu) -> float:
    """f^(S; mu) = E_mu[f * phi^mu_S], exact."""
    mu = as_mu(mu, f.n)
    loci = mask_loci(as_mask(S))
    if not loci:
        return _extension(f, mu)
    s = _check_nondegenerate(mu, loci)
    k = len(loci)
    terms = []
    for a in range(1 << k):
        point = mu.copy()
        sign = 1.0
        for b, i in enumerate(loci):
            if a >> b & 1:
                point[i] = 1.0
            else:
                point[i] = -1.0
                sign = -sign
        terms.append(sign * satisfaction_probability(f, point))
    scale = np.prod(s[loci] / 2.0)
    # signed sums of probabilities; fsum keeps small gaps exact
    return float(f.landscape.gap * scale * math.fsum(terms))


def gradient(f: BooleanFitnessFunction, mu) -> tuple[float, np.ndarray]:
    """(f~(mu), grad f~(mu)); defined at every point including vertices."""
    mu = as_mu(mu, f.n)
    gap, low = f.landscape.gap, f.landscape.low
    if f.is_symmetric:
        rule = f.predicate.count_rule(f.n).astype(float)
        value = low + gap * float(np.dot(count_distribution(mu), rule))
        grad = np.empty(f.n)
        for i in range(f.n):
            pmf = count_distribution(np.delete(mu, i))
            grad[i] = gap * 0.5 * float(np.dot(pmf, rule[1:] - rule[:-1]))
        return value, grad
    _require_enumerable(f)
    if f.n <= FULL_TABLE_MAX_N:
        d = multilinear_partials(f, mu)
        return float(d[0]), d[1 << np.arange(f.n)].copy()
    t = f.truth_table.astype(float)
    mats = _derivative_mats(mu)
    value = low + gap * float(apply_axes(t, [m[:1] for m in mats]).reshape(-1)[0])
    grad = np.empty(f.n)
    for i in range(f.n):
        sel = [m[:1] for m in mats]
        sel[i] = mats[i][1:]
        grad[i] = gap * float(apply_axes(t, sel).reshape(-1)[0])
    return value, grad


def linear_coefficients(f: BooleanFitnessFunction, mu) -> np.ndarray:
    """f^({i}; mu) for every locus; zero on coordinates with sigma_i = 0."""
    mu = as_mu(mu, f.n)
    _, grad = gradient(f, mu)
    return sigma(mu) * grad


def pairwise_coefficients(f: BooleanFitnessFunction, mu) -> np.ndarray:
    """Symmetric (n, n) matrix of f^({i, j}; mu), zero diagonal."""
    mu = as_mu(mu, f.n)
    s = sigma(mu)
    gap = f.landscape.gap
    out = np.zeros((f.n, f.n))
    if not f.is_symmetric and f.n <= FULL_TABLE_MAX_N:
        d = multilinear_partials(f, mu)
        for i in range(f.n):
            for j in range(i + 1, f.n):
                out[i, j] = out[j, i] = d[(1 << i) | (1 << j)] * s[i] * s[j]
        return out
    if f.is_symmetric:
        rule = f.predicate.count_rule(f.n).astype(float)
        second = rule[2:] - 2 * rule[1:-1] + rule[:-2]
        for i in range(f.n):
            for j in range(i + 1, f.n):
                pmf = count_distribution(np.delete(mu, [i, j]))
                d = 0.25 * float(np.dot(pmf, second))
                out[i, j] = out[j, i] = gap * d * s[i] * s[j]
        return out
    for i in range(f.n):
        for j in range(i + 1, f.n):
            if s[i] > 0 and s[j] > 0:
                out[i, j] = out[j, i] = coefficient(f, (1 << i) | (1 << j), mu)
    return out


def difference_operator(f: BooleanFitnessFunction, i: int, mu) -> np.ndarray:
    """D_i^(mu) f = sigma_i/2 (f_{i=1} - f_{i=-1}) as a truth-table-ordered array."""
    mu = as_mu(mu, f.n)
    s = _check_nondegenerate(mu, [i])
    t = f.fitness_table
    idx = np.arange(1 << f.n)
    up = t[idx | (1 << i)]
    down = t[idx & ~(1 << i)]
    return s[i] / 2.0 * (up - down)


def russo_margulis_derivative(f: BooleanFitnessFunction, i: int, mu) -> float:
    """d f~ / d mu_i computed as f^({i}; mu) / sigma_i."""
    mu = as_mu(mu, f.n)
    s = _check_nondegenerate(mu, [i])
    return float(linear_coefficients(f, mu)[i] / s[i])


@dataclass(frozen=True)
class InfluenceResult:
    residuals: np.ndarray
    monotone: bool


def monotone_influence_identity(f: BooleanFitnessFunction, mu) -> InfluenceResult:
    """Per-locus influence minus (gap * sigma_i / 2) * f^(i; mu).

    Zero for monotone f; for other f the residuals are returned with
    ``monotone=False``.
    """
    mu = as_mu(mu, f.n)
    table = fourier_table(f, mu)
    lin = np.array([table[1 << i] for i in range(f.n)])
    rhs = f.landscape.gap * sigma(mu) / 2.0 * lin
    return InfluenceResult(table.influences() - rhs, is_monotone(f))


def poincare_gap(f: BooleanFitnessFunction, mu) -> float:
    """sum_S |S| f^(S; mu)^2 - Var_mu[f]; nonnegative for every f."""
    mu = as_mu(mu, f.n)
    arr = fourier_table(f, mu).as_array()
    total = float(np.dot(subset_orders(f.n), arr ** 2))
    p = satisfaction_probability(f, mu)
    return total - f.landscape.gap ** 2 * p * (1.0 - p)


def coefficient_rows(table: FourierTable) -> Iterable[tuple[int, int, float]]:
    for mask in sorted(table.coefficients):
        yield mask, popcount(mask), table.coefficients[mask]
