"""Boolean predicates with fitness landscapes, and their exact expectations.

Genotypes are vectors in {-1, +1}^n.  Whenever a genotype is encoded as an
integer (truth-table index, subset mask) locus ``i`` is bit ``i`` and the
allele +1 maps to binary digit 1, so locus 0 is the least significant bit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

import numpy as np

from .errors import CapabilityError, PreconditionError

N_EXACT = 24


# ---------------------------------------------------------------------------
# landscapes


@dataclass(frozen=True)
class WeakSelection:
    """Satisfied genotypes have fitness 1 + epsilon, the rest fitness 1."""

    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise PreconditionError(f"epsilon must be > 0, got {self.epsilon}")

    @property
    def low(self) -> float:
        return 1.0

    @property
    def high(self) -> float:
        return 1.0 + self.epsilon

    @property
    def gap(self) -> float:
        return self.epsilon

    def __str__(self):
        return f"weak:{self.epsilon:g}"


@dataclass(frozen=True)
class Lethal:
    """Unsatisfied genotypes leave no offspring."""

    @property
    def low(self) -> float:
        return 0.0

    @property
    def high(self) -> float:
        return 1.0

    @property
    def gap(self) -> float:
        return 1.0

    @property
    def epsilon(self) -> float:
        return 1.0

    def __str__(self):
        return "lethal"


FitnessLandscape = Union[WeakSelection, Lethal]


def parse_landscape(text: str) -> FitnessLandscape:
    """Parse ``weak:EPS`` or ``lethal``."""
    text = text.strip().lower()
    if text == "lethal":
        return Lethal()
    if text.startswith("weak:"):
        return WeakSelection(float(text[5:]))
    raise ValueError(f"unknown landscape {text!r}; expected weak:EPS or lethal")


# ---------------------------------------------------------------------------
# genotype encoding helpers


def index_bits(n: int) -> np.ndarray:
    """(2^n, n) array of 0/1 digits; row j holds the binary digits of j."""
    idx = np.arange(1 << n, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(np.int8)


def all_genotypes(n: int) -> np.ndarray:
    """All 2^n genotypes as a (2^n, n) array of +-1, in truth-table order."""
    return 2 * index_bits(n) - 1


def genotype_index(x: Sequence[int]) -> int:
    j = 0
    for i, b in enumerate(x):
        if b == 1:
            j |= 1 << i
    return j


def popcounts(n: int) -> np.ndarray:
    """Number of +1 alleles for every truth-table index."""
    return index_bits(n).sum(axis=1)


# ---------------------------------------------------------------------------
# predicate families


@dataclass(frozen=True)
class ExplicitTruthTable:
    """A satisfaction bit for every genotype, stored as bytes of 0/1."""

    bits: bytes

    @classmethod
    def from_array(cls, table) -> "ExplicitTruthTable":
        arr = np.asarray(table).astype(bool).astype(np.uint8)
        return cls(arr.tobytes())

    @classmethod
    def from_hex(cls, text: str, n: int) -> "ExplicitTruthTable":
        """Decode a hex string whose integer value has bit j = table[j]."""
        value = int(text.strip().lower().removeprefix("0x") or "0", 16)
        if value >> (1 << n):
            raise ValueError(f"hex truth table has bits beyond 2^{n}")
        return cls(bytes((value >> j) & 1 for j in range(1 << n)))

    def to_hex(self) -> str:
        value = 0
        for j, b in enumerate(self.bits):
            if b:
                value |= 1 << j
        return format(value, "x")

    def table(self, n: int) -> np.ndarray:
        if len(self.bits) != 1 << n:
            raise ValueError(f"truth table has {len(self.bits)} entries, need {1 << n}")
        return np.frombuffer(self.bits, dtype=np.uint8).astype(bool)


@dataclass(frozen=True)
class Threshold:
    """x_1 + ... + x_n + bonus >= n, with bonus = (1+h)/2 * k.

    ``h`` is an environment flag in {-1, +1}.  Without a flag the bonus k
    always applies, i.e. the predicate is ``sum(x) >= n - k``.
    """

    k: int
    h: int | None = None

    @property
    def bonus(self) -> float:
        return self.k if self.h is None else (1 + self.h) / 2 * self.k

    def with_environment(self, h: int) -> "Threshold":
        if h not in (-1, 1):
            raise ValueError(f"environment flag must be +-1, got {h}")
        return Threshold(self.k, h)

    def count_rule(self, n: int) -> np.ndarray:
        c = np.arange(n + 1)
        return (2 * c - n) + self.bonus >= n


@dataclass(frozen=True)
class SumEqualsK:
    """Exactly k loci carry the +1 allele."""

    k: int

    def count_rule(self, n: int) -> np.ndarray:
        return np.arange(n + 1) == self.k


@dataclass(frozen=True)
class Tribes:
    """OR over consecutive blocks of ``fan_in`` loci of the AND of each block."""

    fan_in: int


@dataclass(frozen=True)
class Parity:
    """Satisfied when the product of the designated alleles is -1."""

    subset: tuple[int, ...]


@dataclass(frozen=True)
class CnfFormula:
    """Clauses of signed 1-based literals; +i is true when x_i = +1."""

    clauses: tuple[tuple[int, ...], ...]


Predicate = Union[ExplicitTruthTable, Threshold, SumEqualsK, Tribes, Parity, CnfFormula]

SYMMETRIC = (Threshold, SumEqualsK)


def _predicate_table(pred, n: int) -> np.ndarray:
    if isinstance(pred, ExplicitTruthTable):
        return pred.table(n)
    if isinstance(pred, SYMMETRIC):
        return pred.count_rule(n)[popcounts(n)]
    bits = index_bits(n).astype(bool)
    if isinstance(pred, Tribes):
        w = pred.fan_in
        blocks = bits.reshape(-1, n // w, w)
        return blocks.all(axis=2).any(axis=1)
    if isinstance(pred, Parity):
        minus = ~bits[:, list(pred.subset)]
        return minus.sum(axis=1) % 2 == 1
    if isinstance(pred, CnfFormula):
        sat = np.ones(1 << n, dtype=bool)
        for clause in pred.clauses:
            c = np.zeros(1 << n, dtype=bool)
            for lit in clause:
                col = bits[:, abs(lit) - 1]
                c |= col if lit > 0 else ~col
            sat &= c
        return sat
    raise TypeError(f"unknown predicate {pred!r}")


def _satisfied_point(pred, x: np.ndarray) -> bool:
    n = len(x)
    if isinstance(pred, ExplicitTruthTable):
        return bool(pred.bits[genotype_index(x)])
    if isinstance(pred, SYMMETRIC):
        return bool(pred.count_rule(n)[int(np.sum(x == 1))])
    if isinstance(pred, Tribes):
        return bool((x.reshape(-1, pred.fan_in) == 1).all(axis=1).any())
    if isinstance(pred, Parity):
        return int(np.prod(x[list(pred.subset)])) == -1
    if isinstance(pred, CnfFormula):
        return all(
            any((x[abs(l) - 1] == 1) == (l > 0) for l in clause) for clause in pred.clauses
        )
    raise TypeError(f"unknown predicate {pred!r}")


# ---------------------------------------------------------------------------
# the fitness function


@dataclass(frozen=True)
class BooleanFitnessFunction:
    n: int
    predicate: Predicate
    landscape: FitnessLandscape = field(default_factory=lambda: WeakSelection(0.1))

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        p = self.predicate
        if isinstance(p, ExplicitTruthTable) and len(p.bits) != 1 << self.n:
            raise ValueError(f"truth table length {len(p.bits)} != 2^{self.n}")
        if isinstance(p, Threshold):
            if not 0 <= p.k <= self.n:
                raise ValueError(f"threshold k={p.k} outside [0, {self.n}]")
            if p.h not in (None, -1, 1):
                raise ValueError(f"environment flag must be +-1, got {p.h}")
        if isinstance(p, SumEqualsK) and not 0 <= p.k <= self.n:
            raise ValueError(f"k={p.k} outside [0, {self.n}]")
        if isinstance(p, Tribes) and (p.fan_in < 1 or self.n % p.fan_in):
            raise ValueError(f"fan-in {p.fan_in} does not divide n={self.n}")
        if isinstance(p, Parity):
            if not p.subset or any(not 0 <= i < self.n for i in p.subset):
                raise ValueError(f"bad parity subset {p.subset}")
            if len(set(p.subset)) != len(p.subset):
                raise ValueError("parity subset has repeated loci")
        if isinstance(p, CnfFormula):
            for clause in p.clauses:
                if not clause or any(l == 0 or abs(l) > self.n for l in clause):
                    raise ValueError(f"bad clause {clause}")

    @property
    def epsilon(self) -> float:
        return self.landscape.epsilon

    @property
    def is_symmetric(self) -> bool:
        return isinstance(self.predicate, SYMMETRIC)

    def with_landscape(self, landscape: FitnessLandscape) -> "BooleanFitnessFunction":
        return BooleanFitnessFunction(self.n, self.predicate, landscape)

    def with_environment(self, h: int) -> "BooleanFitnessFunction":
        if not isinstance(self.predicate, Threshold):
            raise TypeError("only threshold predicates carry an environment flag")
        return BooleanFitnessFunction(self.n, self.predicate.with_environment(h), self.landscape)

    @cached_property
    def truth_table(self) -> np.ndarray:
        """Satisfaction bit per genotype index (read-only bool array)."""
        if self.n > N_EXACT:
            raise CapabilityError(f"truth table for n={self.n} exceeds n_exact={N_EXACT}")
        t = _predicate_table(self.predicate, self.n)
        t.setflags(write=False)
        return t

    @cached_property
    def fitness_table(self) -> np.ndarray:
        ls = self.landscape
        t = np.where(self.truth_table, ls.high, ls.low)
        t.setflags(write=False)
        return t

    def satisfied(self, x) -> bool:
        return _satisfied_point(self.predicate, check_genotype(x, self.n))

    def __call__(self, x) -> float:
        return evaluate(self, x)


def check_genotype(x, n: int) -> np.ndarray:
    arr = np.asarray(x)
    if arr.shape != (n,):
        raise ValueError(f"genotype has shape {arr.shape}, expected ({n},)")
    if not np.all((arr == 1) | (arr == -1)):
        raise ValueError("genotype entries must be -1 or +1")
    return arr.astype(np.int8)


# ---------------------------------------------------------------------------
# product points


@dataclass(frozen=True, eq=False)
class ProductPoint:
    """Per-locus expectations of a product distribution on the cube."""

    mu: np.ndarray

    def __post_init__(self):
        arr = np.array(self.mu, dtype=float).reshape(-1)
        if np.any(~np.isfinite(arr)) or np.any(np.abs(arr) > 1):
            raise ValueError("product point coordinates must lie in [-1, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "mu", arr)

    @property
    def n(self) -> int:
        return len(self.mu)

    @property
    def sigma(self) -> np.ndarray:
        return sigma(self.mu)

    def is_vertex(self) -> bool:
        return bool(np.all(np.abs(self.mu) == 1))

    def __eq__(self, other):
        return isinstance(other, ProductPoint) and np.array_equal(self.mu, other.mu)

    def __len__(self):
        return len(self.mu)

    def __array__(self, dtype=None, copy=None):
        return self.mu if dtype is None else self.mu.astype(dtype)

    @classmethod
    def uniform(cls, n: int) -> "ProductPoint":
        return cls(np.zeros(n))

    @classmethod
    def vertex(cls, mask: int, n: int) -> "ProductPoint":
        return cls(2.0 * ((mask >> np.arange(n)) & 1) - 1)


def sigma(mu) -> np.ndarray:
    """Per-locus standard deviation sqrt(1 - mu_i^2)."""
    mu = np.asarray(mu, dtype=float)
    return np.sqrt(np.maximum(0.0, (1.0 - mu) * (1.0 + mu)))


def as_mu(mu, n: int | None = None) -> np.ndarray:
    """Coerce a ProductPoint or array-like into a validated float vector."""
    arr = mu.mu if isinstance(mu, ProductPoint) else np.asarray(mu, dtype=float).reshape(-1)
    if n is not None and arr.shape != (n,):
        raise ValueError(f"product point has dimension {arr.shape[0]}, expected {n}")
    if np.any(np.abs(arr) > 1) or np.any(~np.isfinite(arr)):
        raise ValueError("product point coordinates must lie in [-1, 1]")
    return arr


# ---------------------------------------------------------------------------
# exact expectation backends


def product_weights(mu) -> np.ndarray:
    """Probability of every genotype (truth-table order) under mu."""
    mu = np.asarray(mu, dtype=float)
    w = np.ones(1)
    for m in mu:
        p = (1.0 + m) / 2.0
        w = np.concatenate((w * (1.0 - p), w * p))
    return w


def count_distribution(mu) -> np.ndarray:
    """Poisson-binomial pmf of the number of +1 alleles under mu."""
    pmf = np.ones(1)
    for m in np.asarray(mu, dtype=float):
        p = (1.0 + m) / 2.0
        nxt = np.zeros(len(pmf) + 1)
        nxt[:-1] = pmf * (1.0 - p)
        nxt[1:] += pmf * p
        pmf = nxt
    return pmf


def _choose_backend(f: BooleanFitnessFunction, backend: str) -> str:
    if backend == "auto":
        if f.is_symmetric:
            return "count"
        if f.n <= N_EXACT:
            return "enumerate"
        raise CapabilityError(
            f"no exact backend for {type(f.predicate).__name__} at n={f.n} > {N_EXACT}"
        )
    if backend == "count" and not f.is_symmetric:
        raise CapabilityError("count backend needs a threshold or sum-equals-k predicate")
    if backend == "enumerate" and f.n > N_EXACT:
        raise CapabilityError(f"enumeration beyond n_exact={N_EXACT}")
    if backend not in ("count", "enumerate"):
        raise ValueError(f"unknown backend {backend!r}")
    return backend


def satisfaction_probability(f: BooleanFitnessFunction, mu, backend: str = "auto") -> float:
    """Pr_{x ~ mu}[f satisfied], computed exactly."""
    mu = as_mu(mu, f.n)
    if _choose_backend(f, backend) == "count":
        rule = f.predicate.count_rule(f.n)
        return float(np.sum(count_distribution(mu)[rule]))
    return float(np.dot(product_weights(mu), f.truth_table))


def extension(f: BooleanFitnessFunction, mu, backend: str = "auto") -> float:
    """Multilinear extension E_{x ~ mu}[f(x)]."""
    ls = f.landscape
    return ls.low + ls.gap * satisfaction_probability(f, mu, backend)


def extension_batch(f: BooleanFitnessFunction, points, chunk: int = 1 << 22) -> np.ndarray:
    """Extension at each row of a (m, n) array of product points."""
    pts = np.asarray(points, dtype=float)
    m = pts.shape[0]
    if f.is_symmetric and f.n > 12:
        return np.array([extension(f, p) for p in pts])
    table = f.truth_table.astype(float)
    rows = max(1, chunk >> f.n)
    out = np.empty(m)
    for start in range(0, m, rows):
        block = pts[start:start + rows]
        w = np.ones((len(block), 1))
        for i in range(f.n):
            p = ((1.0 + block[:, i]) / 2.0)[:, None]
            w = np.concatenate((w * (1.0 - p), w * p), axis=1)
        out[start:start + rows] = w @ table
    ls = f.landscape
    return ls.low + ls.gap * out


def evaluate(f: BooleanFitnessFunction, x) -> float:
    """Fitness of a single genotype."""
    ls = f.landscape
    return ls.high if f.satisfied(x) else ls.low


def is_monotone(f: BooleanFitnessFunction) -> bool:
    """True when flipping any -1 allele to +1 never unsatisfies f."""
    t = f.truth_table
    idx = np.arange(1 << f.n)
    for i in range(f.n):
        lo = idx[(idx >> i) & 1 == 0]
        if np.any(t[lo] & ~t[lo | (1 << i)]):
            return False
    return True


def is_satisfiable(f: BooleanFitnessFunction) -> bool:
    if f.is_symmetric:
        return bool(f.predicate.count_rule(f.n).any())
    return bool(f.truth_table.any())


# ---------------------------------------------------------------------------
# named constructors used throughout tests and scenarios


def and_function(n: int = 2, landscape: FitnessLandscape | None = None) -> BooleanFitnessFunction:
    return BooleanFitnessFunction(n, Threshold(0), landscape or WeakSelection(0.1))


def or_function(n: int = 2, landscape: FitnessLandscape | None = None) -> BooleanFitnessFunction:
    clause = tuple(range(1, n + 1))
    return BooleanFitnessFunction(n, CnfFormula((clause,)), landscape or WeakSelection(0.1))


def majority(n: int = 3, landscape: FitnessLandscape | None = None) -> BooleanFitnessFunction:
    if n % 2 == 0:
        raise ValueError("majority needs odd n")
    return BooleanFitnessFunction(n, Threshold(n - 1), landscape or WeakSelection(0.1))


def parity(n: int = 2, landscape: FitnessLandscape | None = None) -> BooleanFitnessFunction:
    return BooleanFitnessFunction(n, Parity(tuple(range(n))), landscape or WeakSelection(0.1))


def tribes(fan_in: int, count: int, landscape: FitnessLandscape | None = None) -> BooleanFitnessFunction:
    return BooleanFitnessFunction(fan_in * count, Tribes(fan_in), landscape or WeakSelection(0.1))


def dictator(n: int = 1, landscape: FitnessLandscape | None = None) -> BooleanFitnessFunction:
    return BooleanFitnessFunction(n, CnfFormula(((1,),)), landscape or WeakSelection(0.1))


def waddington(n: int = 10, k: int = 3, h: int = -1,
               landscape: FitnessLandscape | None = None) -> BooleanFitnessFunction:
    return BooleanFitnessFunction(n, Threshold(k, h), landscape or Lethal())
