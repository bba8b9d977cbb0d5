"""Discrete state solver for nested star-shaped insulation pairs in 2D.

The inner body K and the insulated region Omega are both star-shaped about
the origin, described by truncated Fourier radius functions.  The annulus
between them maps onto the (s, theta) unit rectangle; the temperature is
discretized on a structured grid there, the Dirichlet energy is assembled
with bilinear elements and corner (trapezoid) quadrature of the mapped
gradient, and the boundary dissipation uses the trapezoid rule with the
arclength weight.  The state is the minimizer of this discrete energy over
nodal values clamped to [0, 1] with the inner row pinned to 1, found by a
projected nonlinear conjugate-gradient iteration; for a quadratic law the
iteration reduces to linear CG with exact steps.

Contact between the two boundaries is excluded by a minimum gap: the
touching configuration is handled analytically by the radial formulas, and
admitting it here would require crack energies this discretization does not
represent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .dissipation import DissipationLaw
from .radial import EnergyBreakdown

__all__ = [
    "GAP_MIN",
    "FourierShape",
    "StarPair",
    "Mesh",
    "ScalarField",
    "SolveResult",
    "GeometryError",
    "MeshMismatchError",
    "ConvergenceError",
    "solve_state",
    "energy_of",
    "scale_field",
    "dump_field",
    "load_field",
]

GAP_MIN = 1e-3
_CHECK_GRID = 1024


class GeometryError(ValueError):
    """The shape pair is not a valid nested star-shaped configuration."""


class MeshMismatchError(ValueError):
    """A field was evaluated against a pair or mesh it does not belong to."""


class ConvergenceError(RuntimeError):
    """The state solver exhausted its iteration budget."""


@dataclass(frozen=True)
class FourierShape:
    """Star-shaped boundary r(theta) = a0 + sum_k (a_k cos k theta + b_k sin k theta).

    Coefficients are stored flat as (a0, a1, b1, a2, b2, ...).
    """

    coeffs: Tuple[float, ...]
    _arr: np.ndarray = field(init=False, repr=False, compare=False)

    def __init__(self, coeffs: Sequence[float]):
        flat = tuple(float(c) for c in coeffs)
        if len(flat) % 2 == 0:
            raise ValueError("coefficient vector must have odd length (a0, a1, b1, ...)")
        object.__setattr__(self, "coeffs", flat)
        object.__setattr__(self, "_arr", np.array(flat))

    @classmethod
    def circle(cls, radius: float, order: int = 0) -> "FourierShape":
        return cls([radius] + [0.0] * (2 * order))

    @property
    def order(self) -> int:
        return (len(self.coeffs) - 1) // 2

    def with_order(self, order: int) -> "FourierShape":
        """Pad or truncate the coefficient vector to the given order."""
        out = np.zeros(2 * order + 1)
        take = min(len(self.coeffs), out.size)
        out[:take] = self._arr[:take]
        return FourierShape(out)

    def radius(self, theta: np.ndarray) -> np.ndarray:
        t = np.asarray(theta, dtype=float)
        r = np.full_like(t, self._arr[0])
        for k in range(1, self.order + 1):
            r += self._arr[2 * k - 1] * np.cos(k * t) + self._arr[2 * k] * np.sin(k * t)
        return r

    def radius_deriv(self, theta: np.ndarray) -> np.ndarray:
        t = np.asarray(theta, dtype=float)
        r = np.zeros_like(t)
        for k in range(1, self.order + 1):
            r += k * (-self._arr[2 * k - 1] * np.sin(k * t) + self._arr[2 * k] * np.cos(k * t))
        return r

    def area(self, n_points: int = 4096) -> float:
        """Enclosed area (1/2) int r^2 dtheta by the periodic trapezoid rule,
        exact for trigonometric polynomials at this resolution."""
        theta = np.arange(n_points) * (2.0 * math.pi / n_points)
        r = self.radius(theta)
        return float(np.mean(r * r) * math.pi)

    def scaled(self, t: float) -> "FourierShape":
        return FourierShape(self._arr * t)

    def rotated(self, angle: float) -> "FourierShape":
        out = self._arr.copy()
        for k in range(1, self.order + 1):
            a, b = self._arr[2 * k - 1], self._arr[2 * k]
            out[2 * k - 1] = a * math.cos(k * angle) + b * math.sin(k * angle)
            out[2 * k] = -a * math.sin(k * angle) + b * math.cos(k * angle)
        return FourierShape(out)


@dataclass(frozen=True)
class StarPair:
    """Nested star-shaped pair: inner boundary of K, outer boundary of Omega."""

    inner: FourierShape
    outer: FourierShape

    def __post_init__(self) -> None:
        theta = np.arange(_CHECK_GRID) * (2.0 * math.pi / _CHECK_GRID)
        rk = self.inner.radius(theta)
        ro = self.outer.radius(theta)
        if np.min(rk) <= 0.0:
            raise GeometryError("inner radius must be positive")
        if np.min(ro - rk) < GAP_MIN * (1.0 - 1e-9):
            raise GeometryError(
                f"pair violates the minimum gap {GAP_MIN}: min separation {np.min(ro - rk):.3e}"
            )

    @classmethod
    def circles(cls, r_inner: float, r_outer: float, order: int = 0) -> "StarPair":
        return cls(FourierShape.circle(r_inner, order), FourierShape.circle(r_outer, order))

    @property
    def gap(self) -> float:
        theta = np.arange(_CHECK_GRID) * (2.0 * math.pi / _CHECK_GRID)
        return float(np.min(self.outer.radius(theta) - self.inner.radius(theta)))

    def scaled(self, t: float) -> "StarPair":
        return StarPair(self.inner.scaled(t), self.outer.scaled(t))

    def rotated(self, angle: float) -> "StarPair":
        return StarPair(self.inner.rotated(angle), self.outer.rotated(angle))


@dataclass(frozen=True)
class Mesh:
    """Structured polar mesh resolution: n_s radial node rows (inner row on
    the boundary of K, last row on the boundary of Omega) by n_theta
    periodic angular nodes."""

    n_s: int = 64
    n_theta: int = 256

    def __post_init__(self) -> None:
        if self.n_s < 3 or self.n_theta < 8:
            raise ValueError("mesh too coarse")


@dataclass(frozen=True)
class ScalarField:
    """Nodal temperature values on the annulus mesh of a pair."""

    values: np.ndarray
    mesh: Mesh
    pair: StarPair

    def __post_init__(self) -> None:
        if self.values.shape != (self.mesh.n_s, self.mesh.n_theta):
            raise MeshMismatchError(
                f"field shape {self.values.shape} does not match mesh "
                f"({self.mesh.n_s}, {self.mesh.n_theta})"
            )


@dataclass(frozen=True)
class SolveResult:
    field: ScalarField
    energy: EnergyBreakdown
    iterations: int


class Assembly:
    """Precomputed geometry and the discrete energy, its gradient, and
    curvature actions for one (pair, mesh) combination."""

    def __init__(self, pair: StarPair, mesh: Mesh):
        self.pair = pair
        self.mesh = mesh
        n_s, n_t = mesh.n_s, mesh.n_theta
        self.ds = 1.0 / (n_s - 1)
        self.dt = 2.0 * math.pi / n_t
        theta = np.arange(n_t) * self.dt
        self.theta = theta
        rk = pair.inner.radius(theta)
        rkp = pair.inner.radius_deriv(theta)
        ro = pair.outer.radius(theta)
        rop = pair.outer.radius_deriv(theta)
        g = ro - rk
        gp = rop - rkp
        s = np.linspace(0.0, 1.0, n_s)[:, None]
        self.s = s[:, 0]
        rho = rk[None, :] + s * g[None, :]
        q = (rkp[None, :] + s * gp[None, :]) / g[None, :]
        w = rho * g[None, :] * self.ds * self.dt
        self.rho = rho
        self.P = 0.25 * w * (1.0 / g[None, :] ** 2 + q**2 / rho**2)
        self.Q = -0.5 * w * q / rho**2
        self.C = 0.25 * w / rho**2
        mu = np.full(n_s, 2.0)
        mu[0] = mu[-1] = 1.0
        self._Pe = 2.0 * (self.P[:-1] + self.P[1:])
        self._Ce = (self.C + np.roll(self.C, -1, axis=1)) * mu[:, None]
        # Outer boundary arclength weights for the dissipation integral.
        self.bw = np.sqrt(ro**2 + rop**2) * self.dt
        self.x = rho * np.cos(theta)[None, :]
        self.y = rho * np.sin(theta)[None, :]
        # Metric of the polar map, used by the shell dilation law.
        self.g = g
        self.outer_r = ro

    # -- differences ------------------------------------------------------

    def _us(self, u: np.ndarray) -> np.ndarray:
        return np.diff(u, axis=0) / self.ds

    def _ut(self, u: np.ndarray) -> np.ndarray:
        return (np.roll(u, -1, axis=1) - u) / self.dt

    # -- Dirichlet term ----------------------------------------------------

    def dirichlet_energy(self, u: np.ndarray) -> float:
        US = self._us(u)
        UT = self._ut(u)
        V = UT + np.roll(UT, 1, axis=1)
        e_rad = np.sum(self._Pe * US * US)
        e_ang = np.sum(self._Ce * UT * UT)
        e_cross = np.sum(US * (self.Q[:-1] * V[:-1] + self.Q[1:] * V[1:]))
        return float(e_rad + e_ang + e_cross)

    def dirichlet_grad(self, u: np.ndarray) -> np.ndarray:
        US = self._us(u)
        UT = self._ut(u)
        V = UT + np.roll(UT, 1, axis=1)
        GUS = 2.0 * self._Pe * US + self.Q[:-1] * V[:-1] + self.Q[1:] * V[1:]
        W = np.zeros_like(u)
        W[:-1] += US
        W[1:] += US
        QW = self.Q * W
        GUT = 2.0 * self._Ce * UT + QW + np.roll(QW, -1, axis=1)
        grad = np.zeros_like(u)
        grad[1:] += GUS / self.ds
        grad[:-1] -= GUS / self.ds
        grad += (np.roll(GUT, 1, axis=1) - GUT) / self.dt
        return grad

    # -- boundary term -----------------------------------------------------

    def boundary_energy(self, u: np.ndarray, law: DissipationLaw) -> float:
        return float(np.sum(self.bw * law.value(u[-1])))

    def boundary_grad_row(self, u: np.ndarray, law: DissipationLaw, h: float = 1e-7) -> np.ndarray:
        ub = u[-1]
        hi = np.minimum(ub + h, 1.0)
        lo = np.maximum(ub - h, 0.0)
        return self.bw * (law.value(hi) - law.value(lo)) / (hi - lo)

    def boundary_curvature(self, u: np.ndarray, d: np.ndarray, law: DissipationLaw,
                           h: float = 1e-4) -> float:
        ub = u[-1]
        lo = np.clip(ub - h, 0.0, 1.0 - 2 * h)
        mid = lo + h
        hi = lo + 2 * h
        second = (law.value(hi) - 2.0 * law.value(mid) + law.value(lo)) / h**2
        return float(np.sum(self.bw * second * d[-1] ** 2))

    # -- total energy ------------------------------------------------------

    def energy(self, u: np.ndarray, law: DissipationLaw) -> float:
        return self.dirichlet_energy(u) + self.boundary_energy(u, law)

    def gradient(self, u: np.ndarray, law: DissipationLaw) -> np.ndarray:
        grad = self.dirichlet_grad(u)
        grad[-1] += self.boundary_grad_row(u, law)
        grad[0] = 0.0
        return grad

    def breakdown(self, u: np.ndarray, law: DissipationLaw) -> EnergyBreakdown:
        trace = float(np.sum(self.bw * u[-1]) / np.sum(self.bw))
        return EnergyBreakdown(
            dirichlet=self.dirichlet_energy(u),
            boundary=self.boundary_energy(u, law),
            penalty=0.0,
            trace=trace,
        )


def _project_gradient(g: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Zero the gradient components that push against an active clamp."""
    g = g.copy()
    g[(u <= 0.0) & (g > 0.0)] = 0.0
    g[(u >= 1.0) & (g < 0.0)] = 0.0
    g[0] = 0.0
    return g


def solve_state(
    pair: StarPair,
    law: DissipationLaw,
    mesh: Optional[Mesh] = None,
    tol: float = 1e-10,
    max_iters: int = 20000,
    u0: Optional[np.ndarray] = None,
) -> SolveResult:
    """Minimize the discrete insulation energy over admissible temperatures.

    Starts from the constant 1 state (or a caller-supplied warm start),
    iterates projected Polak-Ribiere conjugate gradients with steps sized by
    the exact quadratic curvature along the search direction plus an Armijo
    backtracking guard, and stops once the relative energy decrease falls
    below `tol` on consecutive iterations.  Clamping keeps nodal values in
    [0, 1]; the inner row stays pinned at 1.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    mesh = mesh or Mesh()
    asm = Assembly(pair, mesh)
    n_s, n_t = mesh.n_s, mesh.n_theta
    if u0 is None:
        u = np.ones((n_s, n_t))
    else:
        if u0.shape != (n_s, n_t):
            raise MeshMismatchError("warm start has the wrong shape")
        u = np.clip(u0, 0.0, 1.0).copy()
    u[0] = 1.0

    energy = asm.energy(u, law)
    g = _project_gradient(asm.gradient(u, law), u)
    d = -g
    gg = float(np.sum(g * g))
    stagnant = 0
    iterations = 0
    converged = gg == 0.0
    while not converged and iterations < max_iters:
        iterations += 1
        gd = float(np.sum(g * d))
        if gd >= 0.0:
            d = -g
            gd = -gg
            if gd == 0.0:
                converged = True
                break
        hd = asm.dirichlet_grad(d)
        hd[0] = 0.0
        curv = float(np.sum(d * hd)) + asm.boundary_curvature(u, d, law)
        if curv > 0.0:
            alpha = -gd / curv
        else:
            alpha = 0.25 / max(float(np.max(np.abs(d))), 1e-30)
        accepted = False
        for _ in range(60):
            u_new = np.clip(u + alpha * d, 0.0, 1.0)
            u_new[0] = 1.0
            e_new = asm.energy(u_new, law)
            if e_new <= energy + 1e-4 * alpha * gd:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            if np.array_equal(d, -g):
                converged = True  # no descent along steepest direction
                break
            d = -g
            continue
        decrease = energy - e_new
        u, energy = u_new, e_new
        g_new = _project_gradient(asm.gradient(u, law), u)
        gg_new = float(np.sum(g_new * g_new))
        beta = max(0.0, float(np.sum(g_new * (g_new - g))) / gg) if gg > 0 else 0.0
        d = -g_new + beta * d
        g, gg = g_new, gg_new
        if decrease <= tol * (abs(energy) + 1e-300):
            stagnant += 1
            if stagnant >= 2:
                converged = True
        else:
            stagnant = 0
    if not converged:
        raise ConvergenceError(
            f"state solver did not meet tol={tol} within {max_iters} iterations"
        )
    field_obj = ScalarField(values=u, mesh=mesh, pair=pair)
    return SolveResult(field=field_obj, energy=asm.breakdown(u, law), iterations=iterations)


def _require_same_pair(field: ScalarField, pair: StarPair) -> None:
    same = field.pair.inner.coeffs == pair.inner.coeffs and field.pair.outer.coeffs == pair.outer.coeffs
    if not same:
        raise MeshMismatchError("field was built on a different pair")


def energy_of(field: ScalarField, pair: StarPair, law: DissipationLaw) -> EnergyBreakdown:
    """Discrete energy of a given field, without optimizing.

    Uses the same assembly as the solver, so evaluating a solved field
    reproduces the reported energy exactly.
    """
    _require_same_pair(field, pair)
    asm = Assembly(pair, field.mesh)
    return asm.breakdown(field.values, law)


def scale_field(field: ScalarField, pair: StarPair, t: float) -> Tuple[ScalarField, StarPair]:
    """Dilate the geometry by t keeping nodal values.

    In 2D the Dirichlet term is invariant under dilation and the boundary
    term scales linearly with t.  Raises GeometryError when the scaled pair
    violates the minimum gap.
    """
    if t <= 0.0:
        raise ValueError("scale factor must be positive")
    _require_same_pair(field, pair)
    new_pair = pair.scaled(t)
    new_field = ScalarField(values=field.values.copy(), mesh=field.mesh, pair=new_pair)
    return new_field, new_pair


def dump_field(field: ScalarField, path: str) -> None:
    """Write a field as CSV: one header line `n_s,n_theta,fourier_order,
    <inner coeffs>,<outer coeffs>` followed by the n_s grid rows."""
    pair = field.pair
    order = max(pair.inner.order, pair.outer.order)
    inner = pair.inner.with_order(order).coeffs
    outer = pair.outer.with_order(order).coeffs
    header = [str(field.mesh.n_s), str(field.mesh.n_theta), str(order)]
    header += [repr(float(c)) for c in inner] + [repr(float(c)) for c in outer]
    lines = [",".join(header)]
    for row in field.values:
        lines.append(",".join(repr(float(v)) for v in row))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def load_field(path: str) -> ScalarField:
    """Read a field written by `dump_field`."""
    with open(path, "r", encoding="utf-8") as handle:
        lines = [ln for ln in handle.read().splitlines() if ln.strip()]
    head = lines[0].split(",")
    n_s, n_t, order = int(head[0]), int(head[1]), int(head[2])
    ncoef = 2 * order + 1
    coefs = [float(v) for v in head[3:]]
    if len(coefs) != 2 * ncoef:
        raise ValueError("field header has the wrong number of coefficients")
    pair = StarPair(FourierShape(coefs[:ncoef]), FourierShape(coefs[ncoef:]))
    values = np.array([[float(v) for v in ln.split(",")] for ln in lines[1 : n_s + 1]])
    return ScalarField(values=values, mesh=Mesh(n_s, n_t), pair=pair)
