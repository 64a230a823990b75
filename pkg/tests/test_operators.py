import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.special import erf

from bindcert.bernstein import BernsteinFunction
from bindcert.operators import (
    BernsteinKinetic,
    Coulomb,
    GaussianWell,
    GridSpec,
    Harmonic,
    NonRelativistic,
    SemiRelativistic,
    SingularPotentialError,
    SquareWell,
    Tabulated,
    Yukawa,
    ZeroPotential,
    _inv_r_cell_average,
    h3_margin,
    kinetic_on_grid,
    load_tabulated,
    potential_on_grid,
    save_tabulated,
)

from conftest import bernstein_functions

small_grids = st.builds(
    GridSpec,
    st.sampled_from([1, 2, 3]),
    st.floats(2 * math.pi, 32 * math.pi),
    st.sampled_from([8, 16, 32]),
)


class TestGridSpec:
    def test_momentum_lattice_values(self):
        g = GridSpec(1, 2 * math.pi, 4)
        assert np.array_equal(g.axis_momenta(), [0.0, 1.0, -2.0, -1.0])
        assert np.array_equal(g.axis_positions(), [-math.pi, -math.pi / 2, 0.0, math.pi / 2])

    @pytest.mark.parametrize("bad", [dict(dim=4, length=1.0, points=8),
                                     dict(dim=1, length=0.0, points=8),
                                     dict(dim=1, length=1.0, points=12),
                                     dict(dim=1, length=1.0, points=1)])
    def test_validation(self, bad):
        with pytest.raises(ValueError):
            GridSpec(**bad)

    def test_momentum_vectors_nyquist_exclusion(self):
        g = GridSpec(2, 2 * math.pi, 8)
        nyq = g.axis_momenta()[4]
        vecs = g.momentum_vectors(exclude_nyquist=True)
        assert not np.any(vecs == nyq)
        assert vecs.shape == (49, 2)


class TestKinetic:
    def test_nonrelativistic_values(self):
        g = GridSpec(1, 2 * math.pi, 4)
        vals = kinetic_on_grid(NonRelativistic(1.0), g)
        assert np.array_equal(vals, [0.0, 0.5, 2.0, 0.5])

    def test_semirelativistic_zero_exact(self):
        g = GridSpec(2, 10.0, 8)
        vals = kinetic_on_grid(SemiRelativistic(0.7), g)
        assert vals[0, 0] == 0.0
        assert np.all(vals >= 0.0)

    def test_semirelativistic_matches_sqrt_form(self):
        ksq = np.linspace(0.1, 400.0, 100)
        m = 1.3
        stable = SemiRelativistic(m).dispersion(ksq)
        naive = np.sqrt(ksq + m * m) - m
        assert np.allclose(stable, naive, rtol=1e-13)

    def test_linear_bernstein_equals_nonrelativistic_half_mass(self):
        g = GridSpec(2, 7.0, 16)
        lin = BernsteinKinetic(BernsteinFunction(0.0, 1.0, ()))
        assert np.allclose(kinetic_on_grid(lin, g),
                           kinetic_on_grid(NonRelativistic(0.5), g), atol=1e-14)

    def test_bernstein_kinetic_requires_zero_offset(self):
        with pytest.raises(ValueError):
            BernsteinKinetic(BernsteinFunction(0.5, 1.0, ()))

    @given(small_grids)
    @settings(max_examples=40, deadline=None)
    def test_evenness_under_reflection(self, g):
        vals = kinetic_on_grid(SemiRelativistic(1.0), g)
        reflected = vals
        for axis in range(g.dim):
            reflected = np.roll(np.flip(reflected, axis=axis), 1, axis=axis)
        nyq_val = g.axis_momenta()[g.points // 2]
        mask = np.zeros(g.shape, dtype=bool)
        for axis_vals in np.meshgrid(*([g.axis_momenta()] * g.dim), indexing="ij"):
            mask |= axis_vals == nyq_val
        assert np.array_equal(vals[~mask], reflected[~mask])


class TestPotentials:
    def test_harmonic_center(self):
        g = GridSpec(1, 8.0, 8)
        v = potential_on_grid(Harmonic(1.0), g)
        assert v[g.points // 2] == 0.0
        assert np.allclose(v, 0.5 * g.axis_positions() ** 2)

    def test_softened_coulomb_origin(self):
        g = GridSpec(3, 8.0, 8)
        v = potential_on_grid(Coulomb(charge=1.0, softening=0.1), g)
        origin = (g.points // 2,) * 3
        assert v[origin] == pytest.approx(-10.0, abs=1e-12)

    def test_square_well_inside(self):
        g = GridSpec(1, 8.0, 16)
        v = potential_on_grid(SquareWell(1.0, 1.0), g)
        idx = np.argmin(np.abs(g.axis_positions() - 0.5))
        assert v[idx] == -1.0

    def test_unsoftened_singularity_raises(self):
        g = GridSpec(3, 8.0, 8)
        with pytest.raises(SingularPotentialError):
            potential_on_grid(Coulomb(charge=1.0, softening=0.0), g)
        with pytest.raises(SingularPotentialError):
            potential_on_grid(Yukawa(softening=0.0), g)

    def test_default_softening_is_one_spacing(self):
        g = GridSpec(3, 8.0, 8)
        v = potential_on_grid(Coulomb(charge=2.0), g)
        origin = (g.points // 2,) * 3
        assert v[origin] == pytest.approx(-2.0 / g.spacing, abs=1e-12)

    def test_softening_monotonicity(self):
        g = GridSpec(1, 8.0, 16)
        x = 1.7
        vals = [Coulomb(1.0, softening=e).sample(g).min() for e in (0.8, 0.4, 0.2, 0.1)]
        prev = [np.interp(x, g.axis_positions(), Coulomb(1.0, softening=e).sample(g))
                for e in (0.8, 0.4, 0.2, 0.1)]
        assert all(b <= a for a, b in zip(prev, prev[1:]))
        assert all(b <= a for a, b in zip(vals, vals[1:]))

    def test_gaussian_and_yukawa_shapes(self):
        g = GridSpec(2, 10.0, 16)
        gw = potential_on_grid(GaussianWell(2.0, 1.5), g)
        assert gw.min() == pytest.approx(-2.0, abs=1e-12)
        yk = potential_on_grid(Yukawa(1.0, 0.5, softening=0.3), g)
        assert np.all(yk <= 0.0)

    def test_zero_potential(self):
        g = GridSpec(1, 5.0, 8)
        assert np.array_equal(potential_on_grid(ZeroPotential(), g), np.zeros(8))


class TestCellAverage:
    def test_against_gaussian_transform_quadrature(self):
        # 1/r = (2/sqrt(pi)) int exp(-r^2 t^2) dt turns the cell mean into a
        # 1d integral of erf products: an independent oracle for the corner sum
        g = GridSpec(3, 4.0, 4)
        avg = _inv_r_cell_average(g)
        x = g.axis_positions()
        h = g.spacing

        def oracle(cx, cy, cz):
            bounds = [(c - h / 2, c + h / 2) for c in (cx, cy, cz)]

            def integrand(t):
                if t == 0.0:
                    return 2.0 / math.sqrt(math.pi)
                prod = 1.0
                for a, b in bounds:
                    prod *= (erf(b * t) - erf(a * t)) * math.sqrt(math.pi) / (2 * t * h)
                return 2.0 / math.sqrt(math.pi) * prod

            val, _ = integrate.quad(integrand, 0.0, np.inf, limit=200,
                                    epsabs=1e-13, epsrel=1e-13)
            return val

        for idx in [(2, 2, 2), (3, 2, 2), (1, 3, 2), (0, 0, 0)]:
            assert avg[idx] == pytest.approx(oracle(x[idx[0]], x[idx[1]], x[idx[2]]),
                                             abs=1e-12)

    def test_cell_average_requires_d3(self):
        with pytest.raises(ValueError):
            potential_on_grid(Coulomb(cell_average=True), GridSpec(1, 4.0, 8))

    def test_far_cells_approach_pointwise(self):
        g = GridSpec(3, 16.0, 8)
        avg = potential_on_grid(Coulomb(1.0, cell_average=True), g)
        corner = (0, 0, 0)
        r_corner = math.sqrt(3.0) * 8.0
        assert avg[corner] == pytest.approx(-1.0 / r_corner, rel=1e-3)


class TestTabulated:
    def test_roundtrip(self, tmp_path, rng):
        g = GridSpec(2, 6.0, 8)
        vals = rng.standard_normal(g.shape)
        path = tmp_path / "table.txt"
        save_tabulated(path, vals, g)
        loaded = load_tabulated(path)
        assert loaded.dim == 2 and loaded.points == 8 and loaded.length == 6.0
        assert np.array_equal(loaded.values, vals)

    def test_nearest_neighbor_resample(self):
        g_coarse = GridSpec(1, 8.0, 8)
        tab = Tabulated(np.arange(8.0), dim=1, length=8.0, points=8)
        fine = tab.sample(GridSpec(1, 8.0, 16))
        assert fine.shape == (16,)
        assert set(fine) <= set(range(8))
        assert np.array_equal(tab.sample(g_coarse), np.arange(8.0))

    def test_box_mismatch_rejected(self):
        tab = Tabulated(np.arange(8.0), dim=1, length=8.0, points=8)
        with pytest.raises(ValueError):
            tab.sample(GridSpec(1, 9.0, 8))

    def test_header_validation(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("1 8.0\n0.0\n")
        with pytest.raises(ValueError):
            load_tabulated(bad)


class TestH3Margin:
    def test_nonrelativistic_parallelogram(self):
        rep = h3_margin(NonRelativistic(0.8), GridSpec(2, 9.0, 16))
        assert abs(rep.max_violation) <= 1e-12

    def test_semirelativistic_large_lattice(self):
        # axis momenta reach beyond |p|,|k| ~ 20 on this grid
        rep = h3_margin(SemiRelativistic(1.0), GridSpec(1, 2 * math.pi, 64))
        assert rep.passed
        assert rep.max_violation <= 1e-12

    def test_bernstein_profile(self):
        B = BernsteinFunction(0.0, 0.2, ((0.5, 2.0), (3.0, 1.0)))
        rep = h3_margin(BernsteinKinetic(B), GridSpec(3, 10.0, 16))
        assert rep.passed

    def test_maximum_attained_on_degenerate_pair(self):
        rep = h3_margin(SemiRelativistic(1.0), GridSpec(1, 7.0, 16))
        assert rep.max_violation == 0.0
        p, k = (np.array(v) for v in rep.argmax)
        assert np.all(p == 0.0) or np.all(k == 0.0)

    def test_subsample_budget_respected(self):
        rep = h3_margin(NonRelativistic(1.0), GridSpec(3, 6.0, 32), max_pairs=10_000)
        assert rep.n_checked <= 10_000 * 1.2
        assert rep.passed

    @given(bernstein_functions(max_atoms=4), small_grids)
    @settings(max_examples=25, deadline=None)
    def test_randomized_profiles_and_grids(self, B, g):
        rep = h3_margin(BernsteinKinetic(B), g, max_pairs=40_000)
        assert rep.max_violation <= 1e-12
