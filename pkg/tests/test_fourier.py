import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from boolution.errors import CapabilityError, DegenerateCoordinateError
from boolution.fourier import (
    FourierTable,
    as_mask,
    basis_value,
    coefficient,
    coefficient_rows,
    difference_operator,
    fourier_table,
    gradient,
    linear_coefficients,
    mask_loci,
    monotone_influence_identity,
    multilinear_partials,
    pairwise_coefficients,
    poincare_gap,
    russo_margulis_derivative,
)
from boolution.functions import (
    BooleanFitnessFunction,
    ExplicitTruthTable,
    Threshold,
    WeakSelection,
    all_genotypes,
    and_function,
    extension,
    majority,
    parity,
    product_weights,
    tribes,
)


@st.composite
def interior_case(draw, max_n=5):
    n = draw(st.integers(1, max_n))
    bits = draw(st.lists(st.booleans(), min_size=1 << n, max_size=1 << n))
    eps = draw(st.floats(0.01, 1.0))
    mu = draw(st.lists(st.floats(-0.95, 0.95), min_size=n, max_size=n))
    f = BooleanFitnessFunction(n, ExplicitTruthTable.from_array(bits), WeakSelection(eps))
    return f, np.array(mu)


def test_mask_helpers():
    assert as_mask([0, 2]) == 0b101
    assert as_mask(6) == 6
    assert mask_loci(0b1010) == [1, 3]


class TestKnownValues:
    def test_and2_uniform(self):
        t = fourier_table(and_function(2, WeakSelection(0.1)), [0, 0])
        assert t[0] == pytest.approx(1.025, abs=1e-15)
        for S in ([0], [1], [0, 1]):
            assert t[S] == pytest.approx(0.025, abs=1e-15)

    def test_parity2_top_coefficient(self):
        t = fourier_table(parity(2, WeakSelection(0.2)), [0, 0])
        assert t[[0, 1]] == pytest.approx(-0.1, abs=1e-15)
        assert t[[0]] == t[[1]] == 0.0

    def test_parseval(self):
        f = majority(3, WeakSelection(0.3))
        mu = np.array([0.2, -0.5, 0.1])
        t = fourier_table(f, mu)
        second = float(np.dot(product_weights(mu), f.fitness_table ** 2))
        assert t.parseval_mass() == pytest.approx(second, abs=1e-13)

    def test_table_requires_small_n(self):
        with pytest.raises(CapabilityError):
            fourier_table(parity(13), np.zeros(13))

    def test_partial_table_orders(self):
        f = tribes(2, 3)
        mu = np.linspace(-0.5, 0.5, 6)
        full = fourier_table(f, mu)
        part = fourier_table(f, mu, max_order=2)
        for mask, v in part.coefficients.items():
            assert v == pytest.approx(full[mask], abs=1e-13)
        with pytest.raises(KeyError):
            part[[0, 1, 2]]

    def test_coefficient_rows(self):
        rows = list(coefficient_rows(fourier_table(and_function(2), [0, 0])))
        assert [(m, o) for m, o, _ in rows] == [(0, 0), (1, 1), (2, 1), (3, 2)]


class TestAgainstBruteForce:
    @settings(max_examples=40, deadline=None)
    @given(interior_case(max_n=4))
    def test_full_table(self, case):
        f, mu = case
        t = fourier_table(f, mu)
        for S in oracles.subsets(f.n):
            assert t[S] == pytest.approx(oracles.coefficient(f, S, mu), abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(interior_case(max_n=4))
    def test_restriction_route_agrees(self, case):
        f, mu = case
        t = fourier_table(f, mu)
        for S in oracles.subsets(f.n):
            assert coefficient(f, S, mu) == pytest.approx(t[S], abs=1e-13)

    @settings(max_examples=40, deadline=None)
    @given(interior_case())
    def test_fourier_expansion_reconstructs_f(self, case):
        f, mu = case
        t = fourier_table(f, mu)
        for x in all_genotypes(f.n)[:: max(1, (1 << f.n) // 4)]:
            total = sum(t[S] * basis_value(S, mu, x) for S in oracles.subsets(f.n))
            assert total == pytest.approx(f(x), abs=1e-10)


class TestDerivatives:
    @settings(max_examples=40, deadline=None)
    @given(interior_case())
    def test_gradient_matches_finite_differences(self, case):
        f, mu = case
        value, grad = gradient(f, mu)
        assert value == pytest.approx(extension(f, mu), abs=1e-13)
        h = 1e-6
        for i in range(f.n):
            up, dn = mu.copy(), mu.copy()
            up[i] += h
            dn[i] -= h
            fd = (extension(f, up) - extension(f, dn)) / (2 * h)
            assert grad[i] == pytest.approx(fd, abs=1e-7)

    def test_symmetric_gradient_path(self):
        f = BooleanFitnessFunction(6, Threshold(3), WeakSelection(0.1))
        g = f.with_landscape(WeakSelection(0.1))
        mu = np.linspace(-0.6, 0.7, 6)
        d = multilinear_partials(g, mu)
        _, grad = gradient(f, mu)
        assert np.allclose(grad, d[1 << np.arange(6)], atol=1e-14)

    def test_gradient_defined_at_vertex(self):
        _, grad = gradient(and_function(2), [1.0, -1.0])
        assert grad[1] == pytest.approx(0.05)
        assert linear_coefficients(and_function(2), [1.0, -1.0]).tolist() == [0.0, 0.0]

    def test_pairwise_matches_table(self):
        for f in (majority(5, WeakSelection(0.2)), tribes(2, 2)):
            mu = np.linspace(-0.4, 0.3, f.n)
            t = fourier_table(f, mu)
            pair = pairwise_coefficients(f, mu)
            for i in range(f.n):
                for j in range(i + 1, f.n):
                    assert pair[i, j] == pytest.approx(t[[i, j]], abs=1e-14)

    def test_russo_margulis(self):
        f = tribes(2, 2)
        mu = np.array([0.1, -0.3, 0.5, 0.0])
        _, grad = gradient(f, mu)
        for i in range(4):
            assert russo_margulis_derivative(f, i, mu) == pytest.approx(grad[i], abs=1e-14)

    def test_difference_operator_expectation(self):
        f = majority(3, WeakSelection(0.4))
        mu = np.array([0.3, -0.2, 0.6])
        lin = linear_coefficients(f, mu)
        w = product_weights(mu)
        for i in range(3):
            assert float(np.dot(w, difference_operator(f, i, mu))) == pytest.approx(lin[i], abs=1e-14)

    def test_degenerate_coordinate(self):
        with pytest.raises(DegenerateCoordinateError):
            coefficient(and_function(2), [0], [1.0, 0.0])
        with pytest.raises(DegenerateCoordinateError):
            russo_margulis_derivative(and_function(2), 0, [-1.0, 0.0])


class TestInfluenceAndPoincare:
    def test_monotone_identity(self):
        for f in (and_function(3), majority(3), tribes(2, 2)):
            mu = np.linspace(-0.3, 0.4, f.n)
            res = monotone_influence_identity(f, mu)
            assert res.monotone and np.max(np.abs(res.residuals)) < 1e-12

    def test_non_monotone_flagged(self):
        res = monotone_influence_identity(parity(2), [0.1, 0.2])
        assert not res.monotone
        assert np.max(np.abs(res.residuals)) > 1e-6

    @settings(max_examples=40, deadline=None)
    @given(interior_case())
    def test_poincare_nonnegative(self, case):
        f, mu = case
        assert poincare_gap(f, mu) >= -1e-12


def test_table_dataclass_roundtrip():
    t = FourierTable(2, np.zeros(2), {0: 1.0, 3: 0.5}, 2)
    assert t.as_array().tolist() == [1.0, 0.0, 0.0, 0.5]
    assert t.influences().tolist() == [0.25, 0.25]
