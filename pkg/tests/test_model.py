"""Flux splitting, model, and catalog tests."""

import numpy as np
import pytest
from scipy.integrate import quad

from degencd.grid import Boundary
from degencd.model import (
    BURGERS_FN,
    IDENTITY_FN,
    ZERO_FN,
    Model,
    ScalarFn,
    SplitFlux,
    build_model,
    catalog,
    cubic_diffusion,
    effective_diffusion,
    eo_split,
    lax_friedrichs_split,
    monotonicity_check,
    problem_by_name,
    threshold_diffusion,
)

SIN_FN = ScalarFn(fn=np.sin, deriv=np.cos, name="sin")


class TestScalarFn:
    def test_derivative_consistency(self):
        for fn in (IDENTITY_FN, BURGERS_FN, SIN_FN, cubic_diffusion(0.5)):
            assert fn.derivative_mismatch(-2.0, 2.0) < 1e-6

    def test_lipschitz_bound(self):
        assert abs(BURGERS_FN.lipschitz_on(-2.0, 3.0) - 3.0) < 1e-12


class TestEoSplit:
    def test_monotone_flux_passes_through(self):
        split = eo_split(IDENTITY_FN, (-2.0, 2.0))
        xs = np.linspace(-2, 2, 41)
        np.testing.assert_allclose(split.f1(xs), xs, atol=1e-12)
        np.testing.assert_allclose(split.f2(xs), 0.0, atol=1e-12)

    def test_burgers_closed_form(self):
        # int_0^1 max(s,0) ds = 1/2 and int_0^{-1} min(s,0) ds = 1/2
        split = eo_split(BURGERS_FN, (-2.0, 2.0))
        assert abs(split(1.0, -1.0) - 1.0) < 1e-12
        xs = np.linspace(-2, 2, 101)
        np.testing.assert_allclose(split.f1(xs), 0.5 * np.maximum(xs, 0.0) ** 2, atol=1e-12)
        np.testing.assert_allclose(split.f2(xs), 0.5 * np.minimum(xs, 0.0) ** 2, atol=1e-12)

    def test_consistency_at_spec_points(self):
        split = eo_split(BURGERS_FN, (-2.0, 2.5))
        for u in (-1.0, 0.3, 2.0):
            assert abs(split(u, u) - 0.5 * u * u) < 1e-12

    def test_consistency_dense(self):
        split = eo_split(SIN_FN, (-4.0, 4.0))
        xs = np.linspace(-4, 4, 1000)
        gap = np.abs(split(xs, xs) - np.sin(xs))
        assert gap.max() < 1e-10

    def test_against_quadrature_oracle(self):
        # independent route: adaptive quadrature of max(f'(s), 0)
        split = eo_split(SIN_FN, (-4.0, 4.0))
        for u in (-3.5, -1.2, 0.7, 2.0, 3.9):
            expected = np.sin(0.0) + quad(lambda s: max(np.cos(s), 0.0), 0.0, u, limit=200)[0]
            assert abs(float(split.f1(u)) - expected) < 1e-9
            expected2 = quad(lambda s: min(np.cos(s), 0.0), 0.0, u, limit=200)[0]
            assert abs(float(split.f2(u)) - expected2) < 1e-9

    def test_pair_monotonicity_property(self):
        # F nondecreasing in u, nonincreasing in v (finite differences)
        rng = np.random.default_rng(2)
        split = eo_split(BURGERS_FN, (-2.0, 2.0))
        u = rng.uniform(-2, 2, 500)
        v = rng.uniform(-2, 2, 500)
        h = 1e-5
        du = (split(u + h, v) - split(u - h, v)) / (2 * h)
        dv = (split(u, v + h) - split(u, v - h)) / (2 * h)
        assert du.min() > -1e-8
        assert dv.max() < 1e-8


class TestLaxFriedrichs:
    def test_split_is_monotone_and_consistent(self):
        split = lax_friedrichs_split(BURGERS_FN, (-2.0, 2.0))
        report = monotonicity_check(split, (-2.0, 2.0))
        assert report.passed
        xs = np.linspace(-2, 2, 100)
        np.testing.assert_allclose(split(xs, xs), 0.5 * xs**2, atol=1e-12)


class TestMonotonicityCheck:
    def test_eo_burgers_passes(self):
        split = eo_split(BURGERS_FN, (-2.0, 2.0))
        report = monotonicity_check(split, (-2.0, 2.0))
        assert report.passed
        assert report.min_f1_deriv >= -1e-12
        assert report.max_f2_deriv <= 1e-12

    def test_decreasing_f1_fails(self):
        bad = SplitFlux(
            f1=ScalarFn(fn=lambda u: -np.asarray(u, float), deriv=lambda u: -np.ones_like(np.asarray(u, float))),
            f2=ZERO_FN,
        )
        assert not monotonicity_check(bad, (-1.0, 1.0)).passed

    def test_identity_passes(self):
        split = SplitFlux(f1=IDENTITY_FN, f2=ZERO_FN)
        assert monotonicity_check(split, (-1.0, 1.0)).passed

    def test_requires_two_samples(self):
        with pytest.raises(ValueError):
            monotonicity_check(SplitFlux(IDENTITY_FN, ZERO_FN), (0.0, 1.0), n_samples=1)


class TestEffectiveDiffusion:
    def test_zero_eta_identical(self):
        a = cubic_diffusion(1.0)
        m = Model(dim=1, fluxes=(SplitFlux(IDENTITY_FN, ZERO_FN),), diffusion=a, eta=0.0)
        aeff = effective_diffusion(m)
        xs = np.linspace(-2, 2, 50)
        np.testing.assert_array_equal(aeff(xs), a(xs))

    def test_pure_viscosity_is_identity(self):
        m = Model(dim=1, fluxes=(SplitFlux(ZERO_FN, ZERO_FN),), diffusion=ZERO_FN, eta=1.0)
        aeff = effective_diffusion(m)
        xs = np.linspace(-3, 3, 20)
        np.testing.assert_allclose(aeff(xs), xs, atol=1e-15)

    def test_cubic_plus_eta(self):
        m = Model(dim=1, fluxes=(SplitFlux(ZERO_FN, ZERO_FN),), diffusion=cubic_diffusion(1.0), eta=0.1)
        aeff = effective_diffusion(m)
        assert abs(float(aeff(2.0)) - (8.0 / 3.0 + 0.2)) < 1e-14

    def test_derivative_floor(self):
        m = Model(dim=1, fluxes=(SplitFlux(ZERO_FN, ZERO_FN),), diffusion=threshold_diffusion(), eta=0.05)
        xs = np.linspace(-1, 2, 300)
        assert np.min(effective_diffusion(m).deriv(xs)) >= 0.05 - 1e-12


class TestModel:
    def test_rejects_nonzero_a_at_origin(self):
        bad = ScalarFn(fn=lambda u: np.asarray(u, float) + 1.0, deriv=lambda u: np.ones_like(np.asarray(u, float)))
        with pytest.raises(ValueError):
            Model(dim=1, fluxes=(SplitFlux(ZERO_FN, ZERO_FN),), diffusion=bad)

    def test_rejects_negative_eta(self):
        with pytest.raises(ValueError):
            Model(dim=1, fluxes=(SplitFlux(ZERO_FN, ZERO_FN),), diffusion=ZERO_FN, eta=-1.0)

    def test_flux_count(self):
        with pytest.raises(ValueError):
            Model(dim=2, fluxes=(SplitFlux(ZERO_FN, ZERO_FN),), diffusion=ZERO_FN)


class TestCatalog:
    def test_names_unique_and_lookup(self):
        problems = catalog()
        names = [p.name for p in problems]
        assert len(set(names)) == len(names)
        assert problem_by_name("burgers-riemann").dim == 1
        with pytest.raises(KeyError):
            problem_by_name("nope")

    def test_exact_matches_initial_data(self):
        rng = np.random.default_rng(0)
        for problem in catalog():
            if problem.exact is None:
                continue
            coords = [
                rng.uniform(lo, hi, 64) if problem.dim == 1 else rng.uniform(lo, hi, 64)
                for lo, hi in problem.box
            ]
            u_init = np.asarray(problem.u0(*coords), dtype=float)
            u_exact = np.asarray(problem.exact(0.0, *coords), dtype=float)
            np.testing.assert_allclose(u_exact, u_init, atol=1e-12)

    def test_advection_translates(self):
        p = problem_by_name("advection")
        xs = np.linspace(-1.4, 1.9, 97)
        np.testing.assert_allclose(p.exact(0.7, xs), p.u0(xs - 0.7), atol=1e-14)

    def test_burgers_shock_location(self):
        p = problem_by_name("burgers-riemann")
        # at t = 1 the shock sits at x = 0.5 (Rankine-Hugoniot speed 1/2)
        assert float(p.exact(1.0, np.array(0.4))) == 1.0
        assert float(p.exact(1.0, np.array(0.6))) == 0.0

    def test_heat_semigroup(self):
        p = problem_by_name("heat-1d")
        xs = np.linspace(-3, 3, 11)
        got = p.exact(0.05, xs)
        expected = (4 * np.pi * 0.15) ** -0.5 * np.exp(-(xs**2) / (4 * 0.15))
        np.testing.assert_allclose(got, expected, rtol=1e-13)

    def test_u0_compactly_supported(self):
        # samples on the outer 5% ring of the box must be numerically zero
        for problem in catalog():
            for axis, (lo, hi) in enumerate(problem.box):
                edge = np.array([lo + 0.01 * (hi - lo), hi - 0.01 * (hi - lo)])
                coords = [
                    edge if ax == axis else np.zeros_like(edge) for ax in range(problem.dim)
                ]
                vals = np.abs(np.asarray(problem.u0(*coords), dtype=float))
                assert vals.max() < 1e-12, problem.name

    def test_degenerate_diffusion_flat_region(self):
        p = problem_by_name("degenerate-burgers-1d")
        xs = np.linspace(-1.0, 0.5, 100)
        assert np.all(p.model.diffusion.deriv(xs) == 0.0)
        assert np.all(p.model.diffusion.deriv(np.linspace(0.51, 1.0, 50)) > 0.0)

    def test_split_fluxes_monotone_on_data_range(self):
        for problem in catalog():
            lo, hi = problem.data_range
            for flux in problem.model.fluxes:
                assert monotonicity_check(flux, (lo - 0.05, hi + 0.05)).passed, problem.name

    def test_grid_construction(self):
        p = problem_by_name("degenerate-burgers-2d")
        spec = p.grid(32, Boundary.ZERO_EXTENSION)
        assert spec.cells == (32, 32)
        assert abs(spec.dx - 4.0 / 32) < 1e-15

    def test_initial_field_range(self):
        p = problem_by_name("degenerate-burgers-1d")
        f = p.initial_field(128)
        assert f.values.min() >= 0.0
        assert f.values.max() <= 1.0 + 1e-12


class TestBuildModel:
    def test_named_choices(self):
        m = build_model("burgers", "degenerate-threshold", dim=2, eta=0.01, data_range=(0, 1))
        assert m.dim == 2 and m.eta == 0.01
        assert monotonicity_check(m.fluxes[0], (0.0, 1.0)).passed

    def test_unknown_names(self):
        from degencd.errors import ConstructionError

        with pytest.raises(ConstructionError):
            build_model("cubic", "none", dim=1)
        with pytest.raises(ConstructionError):
            build_model("linear", "quartic", dim=1)
