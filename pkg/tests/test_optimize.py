"""Shape optimizer: projections, descent properties, and degeneracies.

The heavier regime-reproduction runs live in the acceptance suite; here the
runs use coarse meshes and low mode counts to pin the structural contracts.
"""

import math

import pytest

from thermoshield.annulus import FourierShape, Mesh, StarPair
from thermoshield.dissipation import Convection
from thermoshield.optimize import (
    OptimizeOptions,
    area,
    isoperimetric_deficit,
    optimize_constrained,
    optimize_penalized,
    project_inner_volume,
    trace_to_csv,
)

QUICK = OptimizeOptions(fourier_order=2, mesh=Mesh(17, 64), max_outer_iters=12)


def quick_init(r_out=2.0, amp=0.08):
    return StarPair(
        FourierShape([1.0, 0.0, 0.0, amp / 2, 0.0]),
        FourierShape([r_out, 0.0, 0.0, amp, 0.0]),
    )


class TestAreaAndProjection:
    def test_constant_shapes(self):
        assert area(FourierShape.circle(1.0)) == pytest.approx(math.pi, rel=1e-12)
        assert area(FourierShape.circle(2.0)) == pytest.approx(4 * math.pi, rel=1e-12)

    def test_perturbed_circle_identity(self):
        got = area(FourierShape([1.0, 0.1, 0.0]))
        assert got == pytest.approx(math.pi * 1.005, rel=1e-12)

    def test_projection_scales_to_unit_area(self):
        assert project_inner_volume(FourierShape.circle(2.0)).coeffs[0] == pytest.approx(1.0)
        proj = project_inner_volume(FourierShape([1.0, 0.1, 0.0]))
        assert area(proj) == pytest.approx(math.pi, abs=1e-12)
        assert proj.coeffs[0] == pytest.approx(1.005**-0.5, rel=1e-9)

    def test_projection_idempotent_on_unit_circle(self):
        c = FourierShape.circle(1.0)
        assert project_inner_volume(c).coeffs == c.coeffs

    def test_deficit(self):
        assert isoperimetric_deficit(StarPair.circles(1.0, 3.0)) == 0.0
        assert isoperimetric_deficit(quick_init()) == pytest.approx(0.08 / 2.0)


class TestDescentContracts:
    def test_strict_decrease_and_feasibility(self):
        res = optimize_constrained(Convection(1.0), 9 * math.pi, quick_init(2.4), QUICK)
        energies = [row.energy for row in res.trace]
        assert all(b < a for a, b in zip(energies, energies[1:]))
        for row in res.trace:
            assert abs(row.inner_area - math.pi) < 1e-8
            assert row.outer_area <= 9 * math.pi + 1e-8
        assert res.energy.total <= energies[0]

    def test_infeasible_init_rejected(self):
        with pytest.raises(ValueError):
            optimize_constrained(Convection(1.0), 4 * math.pi, quick_init(2.4), QUICK)

    def test_budget_below_inner_area_rejected(self):
        with pytest.raises(ValueError):
            optimize_constrained(Convection(1.0), 2.0, quick_init(), QUICK)

    def test_penalized_requires_positive_weight(self):
        with pytest.raises(ValueError):
            optimize_penalized(Convection(1.0), 0.0, quick_init(), QUICK)

    def test_rotational_degeneracy(self):
        init = quick_init(2.2)
        r1 = optimize_constrained(Convection(1.0), 9 * math.pi, init, QUICK)
        r2 = optimize_constrained(Convection(1.0), 9 * math.pi, init.rotated(1.1), QUICK)
        assert r1.energy.total == pytest.approx(r2.energy.total, rel=1e-6)

    def test_stationary_init_stays_put(self):
        res = optimize_constrained(
            Convection(1.0), 9 * math.pi, StarPair.circles(1.0, 3.0, order=2), QUICK
        )
        assert res.deficit == 0.0
        assert len(res.trace) == 1  # no accepted step beyond the initial row

    def test_penalized_penalty_reported(self):
        res = optimize_penalized(Convection(1.0), 0.1, quick_init(1.8), QUICK)
        pen = 0.1 * (res.trace[-1].outer_area - res.trace[-1].inner_area)
        assert res.energy.penalty == pytest.approx(pen, rel=1e-9)
        assert res.energy.total == res.energy.dirichlet + res.energy.boundary + res.energy.penalty

    def test_collapse_detection_and_flat_comparison(self):
        opts = OptimizeOptions(fourier_order=1, mesh=Mesh(17, 64), max_outer_iters=60)
        res = optimize_constrained(
            Convection(0.5),
            4 * math.pi,
            StarPair.circles(1.0, 1.6, order=1),
            opts,
        )
        assert res.collapsed
        assert res.flat_compared
        assert res.energy.total == pytest.approx(math.pi, rel=1e-9)

    def test_trace_csv(self, tmp_path):
        res = optimize_constrained(Convection(1.0), 9 * math.pi, quick_init(2.4), QUICK)
        path = str(tmp_path / "trace.csv")
        trace_to_csv(res, path)
        lines = open(path).read().splitlines()
        assert lines[0] == "iter,energy,dirichlet,boundary,penalty,inner_area,outer_area,deficit,step"
        assert len(lines) == len(res.trace) + 1
        first = lines[1].split(",")
        assert float(first[1]) == pytest.approx(res.trace[0].energy)


class TestOptions:
    def test_order_cap(self):
        with pytest.raises(ValueError):
            OptimizeOptions(fourier_order=17)

    def test_positive_steps(self):
        with pytest.raises(ValueError):
            OptimizeOptions(step_init=0.0)
