"""Level-set machinery over solved temperature fields.

Decomposes the level boundaries of a field into their interior part (the
contour inside the annulus) and exterior part (the portion of the outer
boundary above the level), measures superlevel areas, evaluates the
comparison functional

    H(t, phi) = beta * len(exterior) + int_{interior} phi - int_{u > t} phi^2,

transplants the radial gradient ratio onto the level sets of a general
field by area matching, scans truncation thresholds of the relaxed
crack-admitting energy, and evaluates the high-cutoff feasibility bound.

All lengths and areas come from splitting each mesh cell into two triangles
with linear interpolation: contours are chords, partial areas are exact for
the linear interpolant, consistent first order with the bilinear field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .annulus import Assembly, ScalarField, StarPair, energy_of
from .dissipation import Convection, DissipationLaw, unit_ball_volume
from .radial import gradient_ratio

__all__ = [
    "LevelDecomposition",
    "RadialReference",
    "HInequalityReport",
    "TruncationReport",
    "HighCutoffReport",
    "DegenerateFieldError",
    "decompose_levels",
    "h_function",
    "nodal_gradient_ratio",
    "dearrangement",
    "h_inequality_check",
    "truncation_scan",
    "high_cutoff_bound",
    "levels_to_csv",
]


class DegenerateFieldError(ValueError):
    """The field is constant; its level structure is empty."""


@dataclass(frozen=True)
class LevelDecomposition:
    """Per-level geometry of a field: t values, contour length inside the
    annulus, outer-boundary length above the level, superlevel area within
    the annulus, and (optionally) the line and squared-area integrals of a
    supplied density."""

    levels: np.ndarray
    interior_length: np.ndarray
    exterior_length: np.ndarray
    area: np.ndarray
    density_line: Optional[np.ndarray] = None
    density_sq_area: Optional[np.ndarray] = None


@dataclass(frozen=True)
class RadialReference:
    """Concentric-ball comparison solution (dimension, beta, outer radius)."""

    n: int
    beta: float
    R: float


@dataclass(frozen=True)
class HInequalityReport:
    min_H: float
    weighted_integral: float
    energy: float
    passes: bool


@dataclass(frozen=True)
class TruncationReport:
    best_t: float
    best_energy: float
    reference_energy: float
    improved: bool


@dataclass(frozen=True)
class HighCutoffReport:
    delta: float
    feasible: bool


class _Triangulation:
    """Triangle split of the annulus mesh with per-triangle vertex data."""

    def __init__(self, asm: Assembly, values: np.ndarray):
        x, y, u = asm.x, asm.y, values
        n_s, n_t = u.shape

        def corners(a: np.ndarray):
            a00 = a[:-1]
            a10 = a[1:]
            a01 = np.roll(a, -1, axis=1)[:-1]
            a11 = np.roll(a, -1, axis=1)[1:]
            return a00, a10, a01, a11

        x00, x10, x01, x11 = corners(x)
        y00, y10, y01, y11 = corners(y)
        u00, u10, u01, u11 = corners(u)
        # Triangles (00, 10, 11) and (00, 11, 01) per cell, flattened.
        self.vx = np.concatenate(
            [np.stack([x00, x10, x11], -1), np.stack([x00, x11, x01], -1)]
        ).reshape(-1, 3)
        self.vy = np.concatenate(
            [np.stack([y00, y10, y11], -1), np.stack([y00, y11, y01], -1)]
        ).reshape(-1, 3)
        self.vu = np.concatenate(
            [np.stack([u00, u10, u11], -1), np.stack([u00, u11, u01], -1)]
        ).reshape(-1, 3)
        cross = (self.vx[:, 1] - self.vx[:, 0]) * (self.vy[:, 2] - self.vy[:, 0]) - (
            self.vx[:, 2] - self.vx[:, 0]
        ) * (self.vy[:, 1] - self.vy[:, 0])
        self.tri_area = 0.5 * np.abs(cross)

    def attach(self, nodal: np.ndarray) -> np.ndarray:
        """Per-triangle vertex values of a nodal array (same layout as vu)."""
        a00 = nodal[:-1]
        a10 = nodal[1:]
        a01 = np.roll(nodal, -1, axis=1)[:-1]
        a11 = np.roll(nodal, -1, axis=1)[1:]
        return np.concatenate(
            [np.stack([a00, a10, a11], -1), np.stack([a00, a11, a01], -1)]
        ).reshape(-1, 3)

    def gradient_sq(self) -> np.ndarray:
        """Squared gradient of the linear interpolant, one value per triangle."""
        ux1 = self.vx[:, 1] - self.vx[:, 0]
        uy1 = self.vy[:, 1] - self.vy[:, 0]
        ux2 = self.vx[:, 2] - self.vx[:, 0]
        uy2 = self.vy[:, 2] - self.vy[:, 0]
        du1 = self.vu[:, 1] - self.vu[:, 0]
        du2 = self.vu[:, 2] - self.vu[:, 0]
        det = ux1 * uy2 - ux2 * uy1
        det = np.where(np.abs(det) < 1e-300, 1e-300, det)
        gx = (du1 * uy2 - du2 * uy1) / det
        gy = (ux1 * du2 - ux2 * du1) / det
        return gx * gx + gy * gy

    def superlevel(self, t: float, density: Optional[np.ndarray] = None):
        """(area, contour length, density line integral, density^2 area
        integral) of {u > t} for the linear interpolant.

        Partial triangle areas are exact; density integrals use vertex-mean
        values over the clipped polygon and the chord endpoints.
        """
        d = self.vu - t
        pos = d > 0.0
        npos = pos.sum(axis=1)
        area = float(np.sum(self.tri_area[npos == 3]))
        line = 0.0
        phi_line = 0.0
        phi_area = 0.0
        if density is not None:
            phi_sq = density * density
            phi_area = float(
                np.sum(self.tri_area[npos == 3] * np.mean(phi_sq[npos == 3], axis=1))
            )

        def gather(arr: np.ndarray, idx: np.ndarray, sel: np.ndarray) -> np.ndarray:
            return arr[sel][np.arange(sel.sum()), idx]

        for lone_above in (True, False):
            sel = npos == (1 if lone_above else 2)
            if not np.any(sel):
                continue
            lone = np.argmax(pos[sel] if lone_above else ~pos[sel], axis=1)
            ib = (lone + 1) % 3
            ic = (lone + 2) % 3
            da = gather(d, lone, sel)
            db = gather(d, ib, sel)
            dc = gather(d, ic, sel)
            tau_b = da / (da - db)
            tau_c = da / (da - dc)
            ax, bx, cx = gather(self.vx, lone, sel), gather(self.vx, ib, sel), gather(self.vx, ic, sel)
            ay, by, cy = gather(self.vy, lone, sel), gather(self.vy, ib, sel), gather(self.vy, ic, sel)
            pbx, pby = ax + tau_b * (bx - ax), ay + tau_b * (by - ay)
            pcx, pcy = ax + tau_c * (cx - ax), ay + tau_c * (cy - ay)
            seg = np.hypot(pbx - pcx, pby - pcy)
            line += float(np.sum(seg))
            ta = self.tri_area[sel]
            corner_area = ta * tau_b * tau_c
            if lone_above:
                area += float(np.sum(corner_area))
            else:
                area += float(np.sum(ta - corner_area))
            if density is not None:
                fa = gather(density, lone, sel)
                fb = gather(density, ib, sel)
                fc = gather(density, ic, sel)
                fpb = fa + tau_b * (fb - fa)
                fpc = fa + tau_c * (fc - fa)
                phi_line += float(np.sum(seg * 0.5 * (fpb + fpc)))
                corner_mean = (fa * fa + fpb * fpb + fpc * fpc) / 3.0
                if lone_above:
                    phi_area += float(np.sum(corner_area * corner_mean))
                else:
                    quad_mean = (fb * fb + fc * fc + fpb * fpb + fpc * fpc) / 4.0
                    phi_area += float(np.sum((ta - corner_area) * quad_mean))
        return area, line, phi_line, phi_area


def decompose_levels(
    field: ScalarField,
    pair: StarPair,
    n_levels: int,
    density: Optional[ScalarField] = None,
    levels: Optional[np.ndarray] = None,
) -> LevelDecomposition:
    """Level decomposition of a field at uniform levels in (0, 1).

    When a density field phi is supplied, its line integral over each
    interior contour and the integral of phi^2 over each superlevel set are
    accumulated alongside the geometry.
    """
    u = field.values
    if float(np.max(u) - np.min(u)) < 1e-14:
        raise DegenerateFieldError("field is constant; no level structure")
    if density is not None and density.values.shape != u.shape:
        raise ValueError("density grid does not match the field grid")
    asm = Assembly(pair, field.mesh)
    tri = _Triangulation(asm, u)
    dens = tri.attach(density.values) if density is not None else None
    if levels is None:
        if n_levels < 1:
            raise ValueError("n_levels must be positive")
        levels = (np.arange(n_levels) + 0.5) / n_levels
    levels = np.asarray(levels, dtype=float)
    interior = np.empty_like(levels)
    exterior = np.empty_like(levels)
    area = np.empty_like(levels)
    dline = np.empty_like(levels) if dens is not None else None
    darea = np.empty_like(levels) if dens is not None else None
    outer_vals = u[-1]
    for k, t in enumerate(levels):
        a, line, pl, pa = tri.superlevel(float(t), dens)
        interior[k] = line
        area[k] = a
        exterior[k] = float(np.sum(asm.bw[outer_vals > t]))
        if dens is not None:
            dline[k] = pl
            darea[k] = pa
    return LevelDecomposition(
        levels=levels,
        interior_length=interior,
        exterior_length=exterior,
        area=area,
        density_line=dline,
        density_sq_area=darea,
    )


def h_function(dec: LevelDecomposition, beta: float) -> np.ndarray:
    """H(t, phi) per level from a decomposition carrying density integrals."""
    if dec.density_line is None or dec.density_sq_area is None:
        raise ValueError("decomposition carries no density integrals")
    return beta * dec.exterior_length + dec.density_line - dec.density_sq_area


def nodal_gradient_ratio(field: ScalarField, pair: StarPair) -> ScalarField:
    """|grad u| / u at the mesh nodes.

    Radial differences are centered in the interior and one-sided
    second-order at the two boundary rows; angular differences are centered
    everywhere.  The result feeds the comparison functional as the density
    whose H value reproduces the energy.
    """
    asm = Assembly(pair, field.mesh)
    u = field.values
    ds, dt = asm.ds, asm.dt
    us = np.empty_like(u)
    us[1:-1] = (u[2:] - u[:-2]) / (2 * ds)
    us[0] = (-1.5 * u[0] + 2.0 * u[1] - 0.5 * u[2]) / ds
    us[-1] = (1.5 * u[-1] - 2.0 * u[-2] + 0.5 * u[-3]) / ds
    ut = (np.roll(u, -1, axis=1) - np.roll(u, 1, axis=1)) / (2 * dt)
    g = asm.g[None, :]
    gp = asm.pair.outer.radius_deriv(asm.theta) - asm.pair.inner.radius_deriv(asm.theta)
    rkp = asm.pair.inner.radius_deriv(asm.theta)
    q = (rkp[None, :] + asm.s[:, None] * gp[None, :]) / g
    u_rho = us / g
    u_ang = (ut - q * us) / asm.rho
    grad = np.hypot(u_rho, u_ang)
    ratio = grad / np.maximum(u, 1e-12)
    return ScalarField(values=ratio, mesh=field.mesh, pair=pair)


def dearrangement(
    field: ScalarField, pair: StarPair, reference: RadialReference, n_area_levels: int = 512
) -> ScalarField:
    """Transplant the radial gradient ratio onto the level sets of a field.

    Each node is assigned the radius whose concentric ball has the same
    volume as the node's superlevel set (annulus part plus the inner body),
    and receives the reference ratio |grad u*|/u* at that radius.  The
    output is constant on discrete level sets of the field by construction.
    """
    u = field.values
    if float(np.max(u) - np.min(u)) < 1e-14:
        raise DegenerateFieldError("field is constant; no level structure")
    asm = Assembly(pair, field.mesh)
    tri = _Triangulation(asm, u)
    inner_area = pair.inner.area()
    lo = float(np.min(u))
    hi = float(np.max(u))
    ts = np.linspace(lo, hi, n_area_levels)
    ts = ts[1:-1]
    areas = np.array([tri.superlevel(float(t))[0] for t in ts])
    # Superlevel area is nonincreasing in t; build the node-value lookup.
    full_area = float(np.sum(tri.tri_area))
    t_knots = np.concatenate([[lo], ts, [hi]])
    a_knots = np.concatenate([[full_area], areas, [0.0]])
    node_area = np.interp(u.ravel(), t_knots, a_knots).reshape(u.shape)
    r = np.sqrt((node_area + inner_area) / math.pi)
    r = np.clip(r, 1.0, reference.R)
    phi = gradient_ratio(reference.n, reference.beta, reference.R, r)
    return ScalarField(values=phi, mesh=field.mesh, pair=pair)


def h_inequality_check(
    field: ScalarField,
    pair: StarPair,
    beta: float,
    n_levels: int = 64,
    phi: Optional[ScalarField] = None,
) -> HInequalityReport:
    """Check that some level satisfies H(t, phi) <= E and that the
    t-weighted average of H - E is nonpositive, within 2% of E.

    By default phi is the dearrangement of the reference solution on the
    volume-matched ball pair; any nonnegative bounded density is accepted.
    """
    energy = energy_of(field, pair, Convection(beta)).total
    if phi is None:
        R_ref = math.sqrt(pair.outer.area() / math.pi)
        phi = dearrangement(field, pair, RadialReference(2, beta, R_ref))
    dec = decompose_levels(field, pair, n_levels, density=phi)
    h_vals = h_function(dec, beta)
    t = dec.levels
    y = t * (h_vals - energy)
    weighted = float(np.trapezoid(y, t))
    weighted += float(y[0]) * float(t[0] - 0.0)
    weighted += float(y[-1]) * float(1.0 - t[-1])
    tol = 0.02 * abs(energy)
    min_h = float(np.min(h_vals))
    passes = (weighted <= tol) and (min_h <= energy + tol)
    return HInequalityReport(
        min_H=min_h, weighted_integral=weighted, energy=energy, passes=passes
    )


def truncation_scan(
    field: ScalarField, pair: StarPair, law: DissipationLaw, n_thresholds: int = 64
) -> TruncationReport:
    """Scan thresholds t and evaluate the relaxed energy of u 1_{u > t}.

    Cutting at t removes the Dirichlet energy and the boundary dissipation
    of the region below the threshold, at the price of a crack along the
    contour {u = t} with density theta(t) per unit length (the far side of
    the jump sits at 0 and theta(0) = 0).  The zero threshold reproduces
    the input energy, so the best scanned energy never exceeds it.  All
    terms use the triangle quadrature so the comparison is exact.
    """
    u = field.values
    asm = Assembly(pair, field.mesh)
    tri = _Triangulation(asm, u)
    grad_sq = tri.gradient_sq()
    boundary_each = asm.bw * np.asarray(law.value(np.clip(u[-1], 0.0, 1.0)))
    if n_thresholds < 1:
        raise ValueError("n_thresholds must be positive")
    thresholds = np.arange(n_thresholds) / n_thresholds
    energies = np.empty(n_thresholds)
    for k, t in enumerate(thresholds):
        d = tri.vu - t
        npos = (d > 0.0).sum(axis=1)
        dirich = float(np.sum(grad_sq[npos == 3] * tri.tri_area[npos == 3]))
        dirich += _partial_dirichlet(tri, grad_sq, float(t))
        _, line, _, _ = tri.superlevel(float(t))
        crack = float(law.value(float(t))) * line
        boundary = float(np.sum(boundary_each[u[-1] > t]))
        energies[k] = dirich + crack + boundary
    reference = float(energies[0])
    k_best = int(np.argmin(energies))
    best = float(energies[k_best])
    return TruncationReport(
        best_t=float(thresholds[k_best]),
        best_energy=best,
        reference_energy=reference,
        improved=best < reference - 1e-12,
    )


def _partial_dirichlet(tri: _Triangulation, grad_sq: np.ndarray, t: float) -> float:
    """Dirichlet energy of the clipped parts of mixed triangles at level t."""
    d = tri.vu - t
    pos = d > 0.0
    npos = pos.sum(axis=1)
    total = 0.0
    for lone_above in (True, False):
        sel = npos == (1 if lone_above else 2)
        if not np.any(sel):
            continue
        lone = np.argmax(pos[sel] if lone_above else ~pos[sel], axis=1)
        ib = (lone + 1) % 3
        ic = (lone + 2) % 3
        rows = np.arange(sel.sum())
        da = d[sel][rows, lone]
        db = d[sel][rows, ib]
        dc = d[sel][rows, ic]
        tau_b = da / (da - db)
        tau_c = da / (da - dc)
        corner = tri.tri_area[sel] * tau_b * tau_c
        part = corner if lone_above else tri.tri_area[sel] - corner
        total += float(np.sum(grad_sq[sel] * part))
    return total


def high_cutoff_bound(
    law: DissipationLaw, n: int, M: float, C_n: float = 1.0, grid: int = 4096
) -> HighCutoffReport:
    """Largest delta with delta + C_n theta(1)/sqrt(theta(delta)) (M - omega_n)^(1/2n) < 1.

    Feasibility of a delta close to 1 certifies that states may be truncated
    just below their maximum without raising the relaxed energy; it requires
    the volume excess M - omega_n to be small.  C_n is caller-supplied.
    """
    if n < 2:
        raise ValueError("dimension must be at least 2")
    w = unit_ball_volume(n)
    if M < w:
        raise ValueError("M must be at least the unit ball volume")
    deltas = np.arange(1, grid) / grid
    theta1 = law.value(1.0)
    excess = (M - w) ** (1.0 / (2 * n)) if M > w else 0.0
    theta_d = np.asarray(law.value(deltas))
    with np.errstate(divide="ignore"):
        term = np.where(
            excess == 0.0,
            0.0,
            C_n * theta1 * excess / np.sqrt(np.where(theta_d > 0, theta_d, np.inf)),
        )
    ok = deltas + term < 1.0
    if not np.any(ok):
        return HighCutoffReport(delta=0.0, feasible=False)
    return HighCutoffReport(delta=float(deltas[np.where(ok)[0][-1]]), feasible=True)


def levels_to_csv(dec: LevelDecomposition, beta: float, path: str) -> None:
    """Write the per-level decomposition as CSV: t, interior_length,
    exterior_length, area, H_value (H only when density integrals exist)."""
    have_h = dec.density_line is not None and dec.density_sq_area is not None
    h_vals = h_function(dec, beta) if have_h else None
    lines = ["t,interior_length,exterior_length,area,H_value"]
    for k in range(len(dec.levels)):
        h_txt = repr(float(h_vals[k])) if have_h else ""
        lines.append(
            ",".join(
                [
                    repr(float(dec.levels[k])),
                    repr(float(dec.interior_length[k])),
                    repr(float(dec.exterior_length[k])),
                    repr(float(dec.area[k])),
                    h_txt,
                ]
            )
        )
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")
