"""Grid, field, and stencil operator tests."""

import numpy as np
import pytest

from degencd.errors import DomainError, InputDataError
from degencd.grid import (
    Boundary,
    Field,
    GridSpec,
    backward_diff,
    bv_seminorm,
    cell_average_init,
    discrete_laplacian,
    forward_diff,
    l1_error_on_ball,
    l1_norm,
    linf_norm,
    load_field,
    save_field,
    shift_field,
)


def spec1d(n=3, dx=1.0, origin=0.0, boundary=Boundary.ZERO_EXTENSION):
    return GridSpec(1, (n,), dx, (origin,), boundary)


class TestGridSpec:
    def test_rejects_tiny_extents(self):
        with pytest.raises(ValueError):
            GridSpec(1, (2,), 1.0, (0.0,))

    def test_rejects_bad_dx(self):
        with pytest.raises(ValueError):
            GridSpec(1, (4,), 0.0, (0.0,))
        with pytest.raises(ValueError):
            GridSpec(1, (4,), -1.0, (0.0,))

    def test_cell_centers(self):
        spec = spec1d(n=4, dx=0.25, origin=-0.5)
        np.testing.assert_allclose(spec.axis_centers(0), [-0.375, -0.125, 0.125, 0.375])
        assert spec.upper() == (0.5,)


class TestField:
    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            Field(spec1d(3), np.zeros(4))

    def test_rejects_non_finite(self):
        with pytest.raises(InputDataError):
            Field(spec1d(3), np.array([0.0, np.nan, 0.0]))

    def test_immutable(self):
        f = Field(spec1d(3), np.zeros(3))
        with pytest.raises(ValueError):
            f.values[0] = 1.0


class TestCellAverage:
    def test_constant(self):
        spec = spec1d(n=8, dx=0.125)
        f = cell_average_init(lambda x: np.full_like(x, 3.5), spec)
        np.testing.assert_allclose(f.values, 3.5)

    def test_linear_midpoint(self):
        # mean of x over [0, 1) is 1/2
        spec = spec1d(n=3, dx=1.0)
        f = cell_average_init(lambda x: x, spec)
        assert abs(f.values[0] - 0.5) < 1e-14

    def test_quadratic_exact(self):
        # mean of x^2 over [0, 1) is 1/3; 3-point Gauss integrates it exactly
        spec = spec1d(n=3, dx=1.0)
        f = cell_average_init(lambda x: x**2, spec)
        assert abs(f.values[0] - 1.0 / 3.0) < 1e-12

    def test_2d_separable(self):
        spec = GridSpec(2, (4, 4), 0.5, (0.0, 0.0))
        f = cell_average_init(lambda x, y: x + y, spec)
        centers = spec.axis_centers(0)
        expected = centers[:, None] + centers[None, :]
        np.testing.assert_allclose(f.values, expected, atol=1e-14)

    def test_non_finite_raises(self):
        spec = spec1d(n=3, dx=1.0)
        with pytest.raises(InputDataError):
            cell_average_init(lambda x: 1.0 / (x - x), spec)


class TestDifferences:
    def test_constant_is_flat(self):
        f = Field(spec1d(5), np.full(5, 2.0))
        assert np.all(forward_diff(f, 0).values[:-1] == 0.0)
        assert np.all(backward_diff(f, 0).values[1:] == 0.0)

    def test_forward_zero_extension(self):
        f = Field(spec1d(3), [0.0, 1.0, 0.0])
        np.testing.assert_array_equal(forward_diff(f, 0).values, [1.0, -1.0, 0.0])

    def test_forward_periodic(self):
        f = Field(spec1d(3, boundary=Boundary.PERIODIC), [0.0, 1.0, 0.0])
        np.testing.assert_array_equal(forward_diff(f, 0).values, [1.0, -1.0, 0.0])

    def test_shift_diff_compatibility(self):
        # D-(S+ f) == D+ f identically; for zero extension the data must be
        # supported away from the boundary, the documented usage regime.
        rng = np.random.default_rng(7)
        for boundary in Boundary:
            spec = GridSpec(2, (6, 5), 0.25, (0.0, 0.0), boundary)
            vals = rng.uniform(-1, 1, spec.shape)
            if boundary is Boundary.ZERO_EXTENSION:
                vals[0, :] = vals[-1, :] = 0.0
                vals[:, 0] = vals[:, -1] = 0.0
            f = Field(spec, vals)
            for axis in range(2):
                lhs = backward_diff(shift_field(f, axis, +1), axis).values
                rhs = forward_diff(f, axis).values
                np.testing.assert_array_equal(lhs, rhs)

    def test_periodic_telescoping(self):
        rng = np.random.default_rng(3)
        spec = GridSpec(1, (16,), 0.5, (0.0,), Boundary.PERIODIC)
        f = Field(spec, rng.uniform(-1, 1, 16))
        assert abs(forward_diff(f, 0).values.sum()) < 1e-14

    def test_axis_bounds(self):
        f = Field(spec1d(3), np.zeros(3))
        with pytest.raises(ValueError):
            forward_diff(f, 1)


class TestLaplacian:
    def test_1d_spike(self):
        f = Field(spec1d(3), [0.0, 1.0, 0.0])
        np.testing.assert_array_equal(discrete_laplacian(f).values, [1.0, -2.0, 1.0])

    def test_constant(self):
        f = Field(spec1d(5), np.full(5, 4.0), 0.0)
        spike = discrete_laplacian(f).values
        np.testing.assert_allclose(spike[1:-1], 0.0)

    def test_2d_spike(self):
        spec = GridSpec(2, (3, 3), 1.0, (0.0, 0.0))
        vals = np.zeros((3, 3))
        vals[1, 1] = 1.0
        lap = discrete_laplacian(Field(spec, vals)).values
        assert lap[1, 1] == -4.0
        assert lap[0, 1] == lap[2, 1] == lap[1, 0] == lap[1, 2] == 1.0
        assert lap[0, 0] == lap[2, 2] == 0.0

    def test_matches_composition(self):
        rng = np.random.default_rng(11)
        for boundary in Boundary:
            spec = GridSpec(2, (5, 4), 0.2, (0.0, 0.0), boundary)
            f = Field(spec, rng.uniform(-1, 1, spec.shape))
            composed = sum(
                backward_diff(forward_diff(f, ax), ax).values for ax in range(2)
            )
            np.testing.assert_array_equal(discrete_laplacian(f).values, composed)


class TestNorms:
    def test_l1_weighted(self):
        spec = GridSpec(1, (4,), 0.5, (0.0,))
        f = Field(spec, [2.0, -2.0, 0.0, 0.0])
        assert l1_norm(f) == 2.0

    def test_linf(self):
        f = Field(spec1d(3), [1.0, -3.0, 2.0])
        assert linf_norm(f) == 3.0

    def test_bv_spike(self):
        f = Field(spec1d(3), [0.0, 1.0, 0.0])
        assert bv_seminorm(f) == 2.0

    def test_bv_constant_is_zero(self):
        for boundary in Boundary:
            f = Field(spec1d(5, boundary=boundary), np.full(5, 3.0))
            assert bv_seminorm(f) == 0.0

    def test_zero_field(self):
        f = Field(spec1d(4), np.zeros(4))
        assert l1_norm(f) == linf_norm(f) == bv_seminorm(f) == 0.0

    def test_l1_triangle_inequality(self):
        rng = np.random.default_rng(5)
        spec = GridSpec(2, (4, 4), 0.3, (0.0, 0.0))
        a = rng.uniform(-1, 1, spec.shape)
        b = rng.uniform(-1, 1, spec.shape)
        assert l1_norm(Field(spec, a + b)) <= l1_norm(Field(spec, a)) + l1_norm(Field(spec, b)) + 1e-15


class TestL1ErrorOnBall:
    def test_identical_fields(self):
        spec = spec1d(4, dx=0.5, origin=-1.0)
        f = Field(spec, [1.0, 2.0, 3.0, 4.0])
        assert l1_error_on_ball(f, f, radius=10.0) == 0.0

    def test_against_zero_function(self):
        spec = GridSpec(1, (3,), 1.0, (-1.5,))
        f = Field(spec, [1.0, 1.0, 0.0])
        # large ball covers everything: dx * (1 + 1 + 0) = 2
        assert abs(l1_error_on_ball(f, lambda x: np.zeros_like(x), radius=100.0) - 2.0) < 1e-14

    def test_brute_force_oracle(self):
        rng = np.random.default_rng(13)
        spec = GridSpec(2, (8, 8), 0.25, (-1.0, -1.0))
        a = rng.uniform(-1, 1, spec.shape)
        b = rng.uniform(-1, 1, spec.shape)
        radius, center = 0.7, (0.1, -0.2)
        expected = 0.0
        for i in range(8):
            for j in range(8):
                x = spec.origin[0] + (i + 0.5) * spec.dx
                y = spec.origin[1] + (j + 0.5) * spec.dx
                if (x - center[0]) ** 2 + (y - center[1]) ** 2 <= radius**2:
                    expected += spec.dx**2 * abs(a[i, j] - b[i, j])
        got = l1_error_on_ball(Field(spec, a), Field(spec, b), radius, center)
        assert abs(got - expected) < 1e-14

    def test_empty_intersection(self):
        spec = spec1d(3, dx=1.0, origin=0.0)
        f = Field(spec, np.zeros(3))
        with pytest.raises(DomainError):
            l1_error_on_ball(f, f, radius=0.1, center=(100.0,))


class TestSnapshots:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(17)
        spec = GridSpec(2, (4, 3), 0.125, (-0.5, 0.25), Boundary.PERIODIC)
        f = Field(spec, rng.uniform(-1, 1, spec.shape), time=0.375)
        path = tmp_path / "field.txt"
        save_field(f, path)
        g = load_field(path)
        assert g.spec == spec
        assert g.time == f.time
        np.testing.assert_array_equal(g.values, f.values)

    def test_header_format(self, tmp_path):
        f = Field(spec1d(3, dx=0.5), np.zeros(3), time=1.0)
        path = tmp_path / "field.txt"
        save_field(f, path)
        header = path.read_text().splitlines()[0]
        assert header.startswith("degencd-field v1; 1; 3; 0.5; 0; 1; zero-extension")

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "junk.txt"
        path.write_text("not a snapshot\n")
        with pytest.raises(InputDataError):
            load_field(path)
