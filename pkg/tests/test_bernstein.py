import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bindcert.bernstein import (
    BernsteinFunction,
    UnsupportedOrderError,
    cubic_upper_bound_check,
    exponential_inequality_check,
    lemma1_check,
    lemma1_gap,
    preset,
)

from conftest import bernstein_functions, momentum_vectors

ATOM = BernsteinFunction(0.0, 0.0, ((1.0, 1.0),))
LINEAR = BernsteinFunction(0.0, 1.0, ())


class TestEvaluate:
    def test_pure_linear_drift(self):
        assert LINEAR.evaluate(2.0) == 2.0

    def test_vanishes_at_zero(self):
        assert ATOM.evaluate(0.0) == 0.0

    def test_single_atom_closed_form(self):
        assert ATOM.evaluate(1.0) == pytest.approx(1.0 - math.exp(-1.0), abs=1e-15)

    def test_negative_argument_rejected(self):
        with pytest.raises(ValueError):
            ATOM.evaluate(-0.5)

    def test_vectorized_matches_scalar(self):
        u = np.array([0.0, 0.3, 2.0, 11.0])
        vals = ATOM.evaluate(u)
        assert vals.shape == u.shape
        for ui, vi in zip(u, vals):
            assert vi == pytest.approx(ATOM.evaluate(float(ui)), abs=1e-15)

    @given(bernstein_functions(), st.floats(0.0, 50.0), st.floats(0.0, 50.0))
    @settings(max_examples=200, deadline=None)
    def test_nondecreasing(self, B, u1, u2):
        lo, hi = sorted((u1, u2))
        assert B.evaluate(lo) <= B.evaluate(hi) + 1e-12

    @given(bernstein_functions())
    @settings(max_examples=100, deadline=None)
    def test_concave_after_removing_drift(self, B):
        # second difference of the measure part at step h=1e-3 stays <= 1e-8
        bare = BernsteinFunction(0.0, 0.0, B.atoms)
        h = 1e-3
        u = np.linspace(h, 10.0, 200)
        second = bare.evaluate(u + h) - 2.0 * bare.evaluate(u) + bare.evaluate(u - h)
        assert second.max() <= 1e-8


class TestDerivative:
    def test_linear_first(self):
        assert LINEAR.derivative(1.0, 1) == 1.0

    def test_linear_second(self):
        assert LINEAR.derivative(1.0, 2) == 0.0

    def test_atom_second_closed_form(self):
        assert ATOM.derivative(1.0, 2) == pytest.approx(-math.exp(-1.0), abs=1e-15)

    @pytest.mark.parametrize("n", [0, 5, -1])
    def test_unsupported_order(self, n):
        with pytest.raises(UnsupportedOrderError):
            ATOM.derivative(1.0, n)

    @given(bernstein_functions(max_atoms=6))
    @settings(max_examples=100, deadline=None)
    def test_first_derivative_matches_finite_difference(self, B):
        for u in (0.1, 1.0, 10.0):
            h = 1e-5 * (1.0 + u)
            fd = (B.evaluate(u + h) - B.evaluate(u - h)) / (2.0 * h)
            exact = B.derivative(u, 1)
            assert fd == pytest.approx(exact, rel=1e-6, abs=1e-9)

    @given(bernstein_functions(max_atoms=6), st.floats(1e-3, 20.0))
    @settings(max_examples=100, deadline=None)
    def test_alternating_signs(self, B, u):
        # standard convention: B' >= 0 and (-1)^(n-1) B^(n) >= 0
        for n in (1, 2, 3, 4):
            assert (-1.0) ** (n - 1) * B.derivative(u, n) >= -1e-12


class TestConstruction:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(drift_a=-0.1),
            dict(drift_b=-1.0),
            dict(atoms=((0.0, 1.0),)),
            dict(atoms=((1.0, -1.0),)),
            dict(atoms=((math.inf, 1.0),)),
        ],
    )
    def test_invalid_parameters_rejected(self, kwargs):
        with pytest.raises(ValueError):
            BernsteinFunction(**kwargs)

    def test_presets(self):
        lin = preset("linear", slope=3.0)
        assert lin.evaluate(2.0) == 6.0
        ome = preset("one_minus_exp", rate=2.0, weight=0.5)
        assert ome.evaluate(1.0) == pytest.approx(0.5 * (1 - math.exp(-2.0)), abs=1e-15)
        with pytest.raises(ValueError):
            preset("no_such_thing")

    def test_sqrt_shifted_tracks_target(self):
        B = preset("sqrt_shifted", mass=1.0)
        u = np.linspace(0.0, 100.0, 501)
        target = np.sqrt(u + 1.0) - 1.0
        err = np.abs(B.evaluate(u) - target)
        scale = np.maximum(target, 1e-2)
        assert (err / scale).max() < 2e-3


class TestCubicBound:
    def test_linear_profile_never_violates(self):
        rep = cubic_upper_bound_check(LINEAR, [0.0, 1.0, 2.0])
        # violation is u - (u^3/6 + u) = -u^3/6 <= 0, maximal (0) at u=0
        assert rep.max_violation == 0.0
        assert rep.argmax == (0.0,)

    def test_single_atom_grid_report(self):
        u = np.linspace(0.0, 10.0, 101)
        rep = cubic_upper_bound_check(ATOM, u)
        # independent recomputation: B'(0)=1, B''(0)=-1 for the unit atom
        direct = (1.0 - np.exp(-u)) - (u**3 / 6.0 - u**2 / 2.0 + u)
        assert rep.max_violation == pytest.approx(direct.max(), abs=1e-15)
        assert rep.n_checked == 101

    def test_zero_function_all_zero(self):
        rep = cubic_upper_bound_check(BernsteinFunction(), [0.0, 1.0, 5.0])
        assert rep.max_violation == 0.0

    def test_bound_as_printed_can_fail(self):
        # heavy steep atom: B(0.2) = 1-e^-2 but the printed right side is ~0.0013
        steep = BernsteinFunction(0.0, 0.0, ((10.0, 1.0),))
        rep = cubic_upper_bound_check(steep, [0.2])
        assert rep.max_violation > 0.5

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            cubic_upper_bound_check(ATOM, [])


class TestLemma1:
    def test_linear_profile_exact_equality(self):
        p = np.array([[1.3, -0.4, 2.0], [0.0, 0.0, 0.0], [5.0, 5.0, 5.0]])
        rep = lemma1_check(LINEAR, p, p)
        assert rep.max_violation == 0.0

    def test_single_atom_reference_point(self):
        p = (1.0, 0.0, 0.0)
        lhs = 0.5 * (2.0 * math.exp(-1.0) - 1.0 - math.exp(-4.0))
        rhs = 1.0 - math.exp(-1.0)
        assert lemma1_gap(ATOM, p, p) == pytest.approx(lhs - rhs, abs=1e-14)
        assert lhs - rhs < 0

    def test_zero_momenta(self):
        assert lemma1_gap(ATOM, (0.0,), (0.0,)) == 0.0

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            lemma1_check(ATOM, [], [(1.0,)])

    def test_flipped_comparator_is_caught(self):
        p = np.array([[1.0, 0.0, 0.0], [0.5, 0.5, 0.0]])
        rep = lemma1_check(ATOM, p, p, gap_fn=lambda b, pp, kk: -lemma1_gap(b, pp, kk))
        assert not rep.passed

    @given(bernstein_functions(allow_drift_a=True), momentum_vectors(), momentum_vectors())
    @settings(max_examples=300, deadline=None)
    def test_gap_nonpositive(self, B, p, k):
        d = min(p.size, k.size)
        assert lemma1_gap(B, p[:d], k[:d]) <= 0.0

    @given(bernstein_functions(max_atoms=4), momentum_vectors(bound=5.0))
    @settings(max_examples=100, deadline=None)
    def test_matches_direct_formula(self, B, p):
        # the factored implementation equals the textbook expression
        k = np.roll(p, 1) * 0.5
        direct = 0.5 * (
            B.evaluate(float(((p + k) ** 2).sum()))
            + B.evaluate(float(((p - k) ** 2).sum()))
            - 2.0 * B.evaluate(float((p**2).sum()))
        ) - B.evaluate(float((k**2).sum()))
        assert lemma1_gap(B, p, k) == pytest.approx(direct, abs=2e-11)


class TestExponentialInequality:
    def test_zero_time_is_exact_zero(self):
        assert exponential_inequality_check(0.0, (3.0, 1.0), (0.5, -2.0)) == 0.0

    def test_reference_value(self):
        got = exponential_inequality_check(1.0, (1.0, 0.0, 0.0), (1.0, 0.0, 0.0))
        direct = (-math.exp(-4.0) - 1.0 + 2.0 * math.exp(-1.0)) - 2.0 * (1.0 - math.exp(-1.0))
        assert got == pytest.approx(direct, abs=1e-14)

    def test_zero_momenta(self):
        assert exponential_inequality_check(1.0, (0.0, 0.0, 0.0), (0.0, 0.0, 0.0)) == 0.0

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            exponential_inequality_check(-1.0, (1.0,), (1.0,))

    @given(st.floats(0.0, 10.0), momentum_vectors(), momentum_vectors())
    @settings(max_examples=300, deadline=None)
    def test_nonpositive(self, t, p, k):
        d = min(p.size, k.size)
        assert exponential_inequality_check(t, p[:d], k[:d]) <= 0.0

    @given(st.floats(1e-3, 10.0), momentum_vectors(bound=3.0), momentum_vectors(bound=3.0))
    @settings(max_examples=200, deadline=None)
    def test_scaling_reduction_to_unit_time(self, t, p, k):
        d = min(p.size, k.size)
        p, k = p[:d], k[:d]
        a = exponential_inequality_check(t, p, k)
        b = exponential_inequality_check(1.0, math.sqrt(t) * p, math.sqrt(t) * k)
        assert a == pytest.approx(b, abs=1e-12)

    def test_equality_exactly_on_degenerate_set(self, rng):
        n = 3000
        t = rng.uniform(0.0, 10.0, n)
        p = rng.uniform(-10.0, 10.0, (n, 3))
        k = rng.uniform(-10.0, 10.0, (n, 3))
        t[:500] = 0.0
        p[500:1000] = 0.0
        k[1000:1500] = 0.0
        vals = exponential_inequality_check(t, p, k)
        degenerate = (t * (k**2).sum(1) * (p**2).sum(1)) == 0.0
        assert np.all(vals[degenerate] == 0.0)
        assert np.all(vals[~degenerate] < 0.0)
