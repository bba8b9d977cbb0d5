"""Annulus state solver: geometry, assembly, accuracy, and invariants."""

import math

import numpy as np
import pytest

from thermoshield.annulus import (
    ConvergenceError,
    FourierShape,
    GeometryError,
    Mesh,
    MeshMismatchError,
    StarPair,
    dump_field,
    energy_of,
    load_field,
    scale_field,
    solve_state,
)
from thermoshield.dissipation import Convection, Radiation, Tabulated
from thermoshield.radial import convection_energy, general_radial_energy

ZERO_LAW = Tabulated([(0, 0), (1, 0)])


def perturbed_pair(amp_inner=0.05, amp_outer=0.1, mode=2, r_out=2.0):
    inner = [1.0] + [0.0] * (2 * mode)
    outer = [r_out] + [0.0] * (2 * mode)
    inner[2 * mode - 1] = amp_inner
    outer[2 * mode - 1] = amp_outer
    return StarPair(FourierShape(inner), FourierShape(outer))


class TestFourierShape:
    def test_circle_radius(self):
        c = FourierShape.circle(2.0, order=3)
        theta = np.linspace(0, 2 * math.pi, 17)
        assert np.allclose(c.radius(theta), 2.0)

    def test_area_identity(self):
        # (1/2) int r^2 = pi (a0^2 + (a1^2 + b1^2 + ...)/2), exact here.
        s = FourierShape([1.0, 0.1, 0.0])
        assert s.area() == pytest.approx(math.pi * (1.0 + 0.1**2 / 2.0), rel=1e-12)
        assert FourierShape.circle(2.0).area() == pytest.approx(4 * math.pi, rel=1e-12)

    def test_rotation_preserves_radius_samples(self):
        s = FourierShape([1.0, 0.2, -0.1, 0.05, 0.15])
        phi = 0.83
        theta = np.linspace(0, 2 * math.pi, 64, endpoint=False)
        assert np.allclose(s.rotated(phi).radius(theta), s.radius(theta + phi))

    def test_even_length_rejected(self):
        with pytest.raises(ValueError):
            FourierShape([1.0, 0.1])


class TestStarPair:
    def test_gap_property(self):
        assert StarPair.circles(1.0, 2.0).gap == pytest.approx(1.0)

    def test_gap_violation(self):
        with pytest.raises(GeometryError):
            StarPair.circles(1.0, 1.0005)

    def test_nonpositive_inner(self):
        with pytest.raises(GeometryError):
            StarPair(FourierShape([0.2, 0.5, 0.0]), FourierShape.circle(2.0))

    def test_minimum_gap_allowed(self):
        StarPair.circles(1.0, 1.0 + 1e-3)


class TestSolveAccuracy:
    def test_circles_match_radial_oracle(self):
        res = solve_state(StarPair.circles(1.0, 2.0), Convection(1.0), Mesh(64, 256))
        exact = convection_energy(2, 1.0, 2.0).total
        assert res.energy.total == pytest.approx(exact, rel=1e-2)
        # The scheme is second order; the margin over 1% is three decades.
        assert abs(res.energy.total - exact) / exact < 1e-4

    def test_thin_shell_limit(self):
        res = solve_state(StarPair.circles(1.0, 1.0 + 1e-3), Convection(1.0), Mesh(64, 256))
        oracle = general_radial_energy(2, Convection(1.0), 1.0 + 1e-3).total
        assert res.energy.total == pytest.approx(oracle, rel=1e-6)
        assert res.energy.total == pytest.approx(2 * math.pi, rel=1e-2)

    def test_free_boundary_constant_one(self):
        res = solve_state(StarPair.circles(1.0, 2.0), ZERO_LAW, Mesh(33, 128))
        assert res.energy.total == 0.0
        assert np.all(res.field.values == 1.0)

    def test_mesh_convergence_monotone_first_order(self):
        exact = convection_energy(2, 1.0, 2.0).total
        errs = []
        for n_s, n_t in ((17, 64), (33, 128), (65, 256)):
            res = solve_state(StarPair.circles(1.0, 2.0), Convection(1.0), Mesh(n_s, n_t))
            errs.append(abs(res.energy.total - exact))
        assert errs[0] > errs[1] > errs[2]
        order = math.log2(errs[0] / errs[2]) / 2.0
        assert order >= 1.0

    def test_radiation_matches_trace_oracle(self):
        res = solve_state(StarPair.circles(1.0, 1.5), Radiation(1.0), Mesh(48, 192))
        oracle = general_radial_energy(2, Radiation(1.0), 1.5).total
        assert res.energy.total == pytest.approx(oracle, rel=1e-3)


class TestSolverInvariants:
    def test_energy_of_reproduces_exactly(self):
        pair = perturbed_pair()
        res = solve_state(pair, Convection(1.0), Mesh(33, 128))
        again = energy_of(res.field, pair, Convection(1.0))
        assert again.total == res.energy.total
        assert again.dirichlet == res.energy.dirichlet

    def test_energy_of_rejects_other_pair(self):
        pair = perturbed_pair()
        res = solve_state(pair, Convection(1.0), Mesh(33, 128))
        with pytest.raises(MeshMismatchError):
            energy_of(res.field, StarPair.circles(1.0, 2.0), Convection(1.0))

    def test_maximum_principle_and_residual(self):
        pair = perturbed_pair()
        res = solve_state(pair, Convection(1.0), Mesh(33, 128), tol=1e-13)
        u = res.field.values
        interior = u[1:-1]
        left = np.roll(u, 1, axis=1)
        right = np.roll(u, -1, axis=1)
        stacks = np.stack(
            [u[:-2], u[2:], left[1:-1], right[1:-1], left[:-2], right[:-2], left[2:], right[2:]]
        )
        assert np.all(interior <= stacks.max(axis=0) + 1e-6)
        assert np.all(interior >= stacks.min(axis=0) - 1e-6)
        from thermoshield.annulus import Assembly

        g = Assembly(pair, res.field.mesh).gradient(u, Convection(1.0))
        assert np.abs(g[1:-1]).max() < 1e-6

    def test_rotational_equivariance(self):
        pair = perturbed_pair()
        e1 = solve_state(pair, Convection(1.0), Mesh(33, 128)).energy.total
        e2 = solve_state(pair.rotated(0.7), Convection(1.0), Mesh(33, 128)).energy.total
        assert abs(e1 - e2) / e1 < 1e-10

    def test_beta_monotonicity(self):
        pair = StarPair.circles(1.0, 2.0)
        e1 = solve_state(pair, Convection(1.0), Mesh(33, 128)).energy.total
        e2 = solve_state(pair, Convection(2.0), Mesh(33, 128)).energy.total
        assert e1 <= e2

    def test_field_bounds_and_dirichlet_row(self):
        res = solve_state(perturbed_pair(), Radiation(1.0), Mesh(33, 128))
        u = res.field.values
        assert np.all(u >= 0.0) and np.all(u <= 1.0)
        assert np.all(u[0] == 1.0)

    def test_nonconvergence_raises(self):
        with pytest.raises(ConvergenceError):
            solve_state(perturbed_pair(), Convection(1.0), Mesh(33, 128), max_iters=3)

    def test_warm_start_shape_checked(self):
        with pytest.raises(MeshMismatchError):
            solve_state(
                perturbed_pair(), Convection(1.0), Mesh(33, 128), u0=np.ones((5, 5))
            )


class TestScaleField:
    def test_identity(self):
        pair = StarPair.circles(1.0, 2.0)
        res = solve_state(pair, Convection(1.0), Mesh(17, 64))
        f2, p2 = scale_field(res.field, pair, 1.0)
        e2 = energy_of(f2, p2, Convection(1.0))
        assert e2.total == pytest.approx(res.energy.total, rel=1e-12)

    def test_dilation_exponents(self):
        # Fixed nodal values in 2D: Dirichlet invariant, boundary scales by t.
        pair = StarPair.circles(1.0, 2.0)
        res = solve_state(pair, Convection(1.0), Mesh(17, 64))
        base = energy_of(res.field, pair, Convection(1.0))
        f2, p2 = scale_field(res.field, pair, 2.0)
        scaled = energy_of(f2, p2, Convection(1.0))
        assert scaled.dirichlet == pytest.approx(base.dirichlet, rel=1e-12)
        assert scaled.boundary == pytest.approx(2.0 * base.boundary, rel=1e-12)

    def test_gap_violation(self):
        pair = StarPair.circles(1.0, 1.005)
        res = solve_state(pair, Convection(1.0), Mesh(17, 64))
        with pytest.raises(GeometryError):
            scale_field(res.field, pair, 0.1)


class TestFieldDump:
    def test_round_trip(self, tmp_path):
        pair = perturbed_pair()
        res = solve_state(pair, Convection(1.0), Mesh(17, 64))
        path = str(tmp_path / "field.csv")
        dump_field(res.field, path)
        loaded = load_field(path)
        assert loaded.mesh == res.field.mesh
        assert np.array_equal(loaded.values, res.field.values)
        assert loaded.pair.inner.coeffs == pair.inner.coeffs
        head = open(path).readline().split(",")
        assert int(head[0]) == 17 and int(head[1]) == 64
