import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boolution.dynamics import run_finite
from boolution.errors import CapabilityError, DegenerateCoordinateError, PreconditionError
from boolution.fourier import gradient, multilinear_partials
from boolution.functions import (
    BooleanFitnessFunction,
    ExplicitTruthTable,
    WeakSelection,
    and_function,
    dictator,
    majority,
    parity,
)
from boolution.verification import (
    RunningMoments,
    binomial_grid,
    conditional_sampling_variance,
    density_gap,
    determined_report,
    fast_vertex_horizons,
    hybrid_derivative_residual,
    hybrid_point,
    lemma_constants,
    lin_mu_residual,
    martingale_accumulate,
    noise_fitness_check,
    phi_moments,
    sampling_grid,
    undetermined_probability,
    variance_noise_exact,
)


@st.composite
def weak_case(draw, max_n=4, lo=-0.95, hi=0.95):
    n = draw(st.integers(1, max_n))
    bits = draw(st.lists(st.booleans(), min_size=1 << n, max_size=1 << n).filter(any))
    eps = draw(st.floats(0.01, 0.99 / n))
    mu = draw(st.lists(st.floats(lo, hi), min_size=n, max_size=n))
    f = BooleanFitnessFunction(n, ExplicitTruthTable.from_array(bits), WeakSelection(eps))
    return f, np.array(mu)


class TestDensity:
    def test_and2_origin(self):
        f = and_function(2, WeakSelection(0.1))
        gain = 1.0 + 0.1 * (1 + 1 / 41) ** 2 / 4 - 1.025
        assert density_gap(f, [0, 0]) == pytest.approx(gain - 0.8 * 2 * 0.025 ** 2, abs=1e-15)
        assert density_gap(f, [0, 0]) >= 0

    def test_zero_cases(self):
        assert density_gap(parity(2, WeakSelection(0.2)), [0, 0]) == pytest.approx(0, abs=1e-16)
        assert density_gap(majority(3, WeakSelection(0.1)), [1.0, -1.0, 1.0]) == 0.0

    def test_requires_weak_window(self):
        with pytest.raises(PreconditionError):
            density_gap(and_function(2, WeakSelection(0.6)), [0, 0])

    @settings(max_examples=80, deadline=None)
    @given(weak_case(lo=-1, hi=1))
    def test_nonnegative(self, case):
        f, nu = case
        assert density_gap(f, nu) >= -1e-12


class TestCoordinate:
    @settings(max_examples=60, deadline=None)
    @given(weak_case(), st.data())
    def test_single_coordinate_change_is_exact(self, case, data):
        # moving one coordinate j shifts d f~/d mu_i by (delta) * mixed partial at the old point
        f, nu = case
        if f.n < 2:
            return
        i = data.draw(st.integers(1, f.n - 1))
        j = data.draw(st.integers(0, i - 1))
        moved = nu.copy()
        moved[j] = data.draw(st.floats(-1, 1))
        d = multilinear_partials(f, nu)[(1 << i) | (1 << j)]
        change = gradient(f, moved)[1][i] - gradient(f, nu)[1][i]
        assert change == pytest.approx((moved[j] - nu[j]) * d, abs=1e-13)

    @settings(max_examples=60, deadline=None)
    @given(weak_case())
    def test_stated_form_exact_for_second_locus(self, case):
        f, nu = case
        if f.n < 2:
            return
        assert abs(hybrid_derivative_residual(f, nu, 1)) < 1e-12

    @settings(max_examples=60, deadline=None)
    @given(weak_case(), st.data())
    def test_telescoped_form_exact(self, case, data):
        f, nu = case
        if f.n < 2:
            return
        i = data.draw(st.integers(1, f.n - 1))
        assert abs(hybrid_derivative_residual(f, nu, i, telescoped=True)) < 1e-12

    def test_stated_form_misses_third_order_terms(self):
        # three-way interaction among loci 0, 1, 2 makes the fixed-point telescoping inexact
        f = BooleanFitnessFunction(3, ExplicitTruthTable.from_array([0, 0, 0, 0, 0, 0, 0, 1]),
                                   WeakSelection(0.3))
        nu = np.array([0.1, -0.2, 0.3])
        assert abs(hybrid_derivative_residual(f, nu, 2)) > 1e-6
        assert abs(hybrid_derivative_residual(f, nu, 2, telescoped=True)) < 1e-14

    def test_no_interactions(self):
        f = dictator(3, WeakSelection(0.2))
        assert hybrid_derivative_residual(f, [0.1, 0.2, 0.3], 2) == 0.0

    def test_hybrid_point_layout(self):
        f = majority(3, WeakSelection(0.1))
        nu = np.array([0.1, 0.2, 0.3])
        w = hybrid_point(f, nu, 2)
        assert w[2] == 0.3 and w[0] != 0.1

    def test_bad_locus(self):
        with pytest.raises(ValueError):
            hybrid_derivative_residual(majority(3), [0, 0, 0], 0)
        with pytest.raises(DegenerateCoordinateError):
            hybrid_derivative_residual(majority(3), [0, 1.0, 0.0], 1)


class TestGrid:
    def test_binomial_grid(self):
        vals, w = binomial_grid(0.0, 2)
        assert vals.tolist() == [-1.0, 0.0, 1.0] and w == pytest.approx([0.25, 0.5, 0.25])

    def test_cap(self):
        with pytest.raises(CapabilityError):
            sampling_grid(parity(4), np.zeros(4), 40)

    def test_dictator_equality(self):
        eps = 0.1
        lhs, rhs = variance_noise_exact(dictator(1, WeakSelection(eps)), [0.0], 2)
        assert lhs == pytest.approx(eps ** 2 / 8, abs=1e-16)
        assert rhs == pytest.approx(eps ** 2 / 8, abs=1e-16)

    @settings(max_examples=40, deadline=None)
    @given(weak_case(max_n=3), st.integers(2, 12))
    def test_variance_noise_holds(self, case, N):
        f, mu = case
        lhs, rhs = variance_noise_exact(f, mu, N)
        assert lhs <= rhs + 1e-12

    @settings(max_examples=40, deadline=None)
    @given(weak_case(max_n=3), st.integers(2, 12))
    def test_noise_fitness_holds(self, case, N):
        f, mu = case
        lhs, rhs = noise_fitness_check(f, mu, N)
        assert lhs <= rhs + 1e-12

    @settings(max_examples=40, deadline=None)
    @given(weak_case(max_n=3), st.integers(1, 10))
    def test_conditional_variance_closed_form(self, case, N):
        f, mu = case
        lhs = variance_noise_exact(f, mu, max(N, 2))[0]
        assert conditional_sampling_variance(f, mu, max(N, 2)) == pytest.approx(lhs, abs=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(weak_case(max_n=4), st.data())
    def test_linear_coefficients_reexpanded(self, case, data):
        f, mu = case
        nu = np.array(data.draw(st.lists(st.floats(-1, 1), min_size=f.n, max_size=f.n)))
        assert lin_mu_residual(f, mu, nu) < 1e-12


class TestPhi:
    @pytest.mark.parametrize("mu_i", [-0.9, -0.3, 0.0, 0.55, 0.9])
    @pytest.mark.parametrize("N", [2, 3, 17, 64])
    def test_moments(self, mu_i, N):
        a, b = phi_moments(mu_i, N)
        assert a == pytest.approx(1 / N, abs=1e-12)
        assert b == pytest.approx(1 - 1 / N, abs=1e-12)

    def test_vertex_rejected(self):
        with pytest.raises(DegenerateCoordinateError):
            phi_moments(1.0, 5)


class TestMartingale:
    def test_constants(self):
        c = lemma_constants(2, 50, 0.2)
        beta = math.sqrt(0.4 / (49 * 0.6))
        assert c["beta_main"] == pytest.approx(beta)
        assert c["alpha_main"] == pytest.approx(math.sqrt(2 * beta * math.log(2 / beta)))
        assert c["beta_theorem"] == pytest.approx(math.sqrt(0.2 / (50 * 0.6)))

    def test_ledger_sums(self):
        f = parity(2, WeakSelection(0.2))
        traj = run_finite(f, [0, 0], 50, 100, seed=3, early_stop=False)
        led = martingale_accumulate(traj, check=True)
        assert led.S[-1] == pytest.approx(led.S_T)
        assert led.S_T == pytest.approx(sum(s.ext_nu - s.ext_mu for s in traj.steps))
        assert led.H_T == pytest.approx(led.M_T + led.V_T)
        assert led.v_exact

    def test_rejects_unsuitable_trajectories(self):
        f = parity(2, WeakSelection(0.2))
        with pytest.raises(ValueError):
            martingale_accumulate(run_finite(f, [0, 0], 50, 10**4, seed=1))
        with pytest.raises(ValueError):
            martingale_accumulate(run_finite(f, [0, 0], 50, 20, seed=1, early_stop=False,
                                             record_every=2))

    def test_sampling_increment_is_centered(self):
        f = majority(3, WeakSelection(0.2))
        finals = [martingale_accumulate(run_finite(f, np.zeros(3), 40, 30, s, early_stop=False)).S_T
                  for s in range(400)]
        x = np.asarray(finals)
        assert abs(x.mean()) < 4 * x.std(ddof=1) / math.sqrt(len(x))


class TestDetermined:
    def test_absorption_tracking(self):
        f = parity(2, WeakSelection(0.2))
        traj = run_finite(f, [0, 0], 50, 10**4, seed=4, early_stop=False)
        rep = determined_report(traj)
        assert rep.absorption_ok and rep.at_vertex and rep.all_absorbed
        assert rep.alpha == pytest.approx(1 / (4 * 50))
        for d, a in zip(rep.determined_at, rep.absorbed_at):
            assert d is None or d <= a

    def test_undetermined_probability(self):
        assert undetermined_probability(0.0, 2) == pytest.approx(0.5)
        assert undetermined_probability(1.0, 10) == 0.0

    def test_horizons(self):
        h = fast_vertex_horizons(2, 10, 0.1)
        assert h["T1"] == 16 * 100 * 16
        assert h["T2"] == pytest.approx(8 * 0.1 * 100 * 16 / 0.8)


class TestRunningMoments:
    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-100, 100), min_size=2, max_size=40), st.integers(0, 40))
    def test_merge_equals_sequential(self, xs, cut):
        cut = min(cut, len(xs))
        a, b, whole = RunningMoments(), RunningMoments(), RunningMoments()
        for x in xs[:cut]:
            a.add(x)
        for x in xs[cut:]:
            b.add(x)
        for x in xs:
            whole.add(x)
        m = a.merge(b)
        assert m.count == whole.count
        assert m.mean == pytest.approx(whole.mean, abs=1e-9)
        assert b.merge(a).mean == pytest.approx(m.mean, abs=1e-12)
        assert m.variance == pytest.approx(np.var(xs, ddof=1), rel=1e-6, abs=1e-6)
