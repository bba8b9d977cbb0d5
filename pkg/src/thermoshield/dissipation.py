"""Boundary dissipation laws and their structural diagnostics.

A dissipation law is a nondecreasing, lower-semicontinuous function
``theta: [0, 1] -> [0, inf)`` with ``theta(0) = 0``.  It models the energy
density of heat transfer across the outer boundary of an insulated body:
convection (quadratic), radiation (quintic polynomial in the normalized
temperature), constant-flux (linear), power laws, a surface-material cost
with a jump at zero, and tabulated laws given by knots.

Besides pointwise evaluation and differentiation, this module provides the
structural quantities that decide which optimization regimes apply to a law:
the infimum of ``theta(s/3)/theta(s)``, a volume threshold built from it,
the flatness criterion at the hot end, and a quadratic regularization that
makes any law behave like ``O(u^2)`` near zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple, Union

import numpy as np
from scipy.integrate import quad

__all__ = [
    "DissipationLaw",
    "Convection",
    "Radiation",
    "Linear",
    "Power",
    "SurfaceCost",
    "Tabulated",
    "FlatCriterion",
    "NonDifferentiableError",
    "DegenerateLawError",
    "hyp_theta_inf",
    "volume_bound",
    "flat_criterion",
    "epsilon_regularize",
    "law_to_json",
    "law_from_json",
]

ArrayLike = Union[float, np.ndarray]

# Slack for the construction-time monotonicity check (pure rounding noise).
_MONOTONE_TOL = 1e-12
_DOMAIN_TOL = 1e-12


class NonDifferentiableError(ValueError):
    """The law has no derivative at the requested point (jump or cusp)."""


class DegenerateLawError(ValueError):
    """The law vanishes identically on the evaluation grid."""


def _check_domain(u: np.ndarray) -> np.ndarray:
    if np.any(u < -_DOMAIN_TOL) or np.any(u > 1.0 + _DOMAIN_TOL):
        raise ValueError(f"dissipation law argument outside [0, 1]: {u}")
    return np.clip(u, 0.0, 1.0)


@dataclass(frozen=True)
class DissipationLaw:
    """Base class; concrete laws implement `_raw` on validated arrays."""

    def __post_init__(self) -> None:
        self._validate_params()
        grid = np.linspace(0.0, 1.0, 1024)
        vals = self._raw(grid)
        if abs(float(vals[0])) > _MONOTONE_TOL:
            raise ValueError(f"{type(self).__name__}: theta(0) must be 0")
        if np.any(vals < -_MONOTONE_TOL):
            raise ValueError(f"{type(self).__name__}: negative values on [0, 1]")
        if np.any(np.diff(vals) < -_MONOTONE_TOL):
            raise ValueError(f"{type(self).__name__}: not nondecreasing on [0, 1]")

    def _validate_params(self) -> None:
        pass

    def _raw(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def value(self, u: ArrayLike) -> ArrayLike:
        """Evaluate theta(u); u may be a scalar or an array in [0, 1]."""
        arr = _check_domain(np.asarray(u, dtype=float))
        out = self._raw(arr)
        return float(out) if np.isscalar(u) or np.ndim(u) == 0 else out

    def derivative(self, u: float) -> float:
        """Derivative theta'(u); one-sided at the interval ends."""
        raise NotImplementedError


@dataclass(frozen=True)
class Convection(DissipationLaw):
    """theta(u) = beta * u**2, the Robin/Newton-cooling law."""

    beta: float

    def _validate_params(self) -> None:
        if self.beta <= 0:
            raise ValueError("beta must be positive")

    def _raw(self, u: np.ndarray) -> np.ndarray:
        return self.beta * u * u

    def derivative(self, u: float) -> float:
        _check_domain(np.asarray(u, dtype=float))
        return 2.0 * self.beta * u


@dataclass(frozen=True)
class Radiation(DissipationLaw):
    """Stefan-Boltzmann transfer in the normalized temperature u.

    theta(u) = u^5/5 + gamma u^4 + 2 gamma^2 u^3 + 2 gamma^3 u^2, where
    gamma is the ratio of the ambient temperature to the temperature excess
    of the hot body.
    """

    gamma: float

    def _validate_params(self) -> None:
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")

    def _raw(self, u: np.ndarray) -> np.ndarray:
        g = self.gamma
        return u * u * (2 * g**3 + u * (2 * g**2 + u * (g + u / 5.0)))

    def derivative(self, u: float) -> float:
        _check_domain(np.asarray(u, dtype=float))
        g = self.gamma
        return u * (4 * g**3 + u * (6 * g**2 + u * (4 * g + u)))


@dataclass(frozen=True)
class Linear(DissipationLaw):
    """theta(u) = c * u, a constant heat flux per unit temperature."""

    c: float

    def _validate_params(self) -> None:
        if self.c <= 0:
            raise ValueError("c must be positive")

    def _raw(self, u: np.ndarray) -> np.ndarray:
        return self.c * u

    def derivative(self, u: float) -> float:
        _check_domain(np.asarray(u, dtype=float))
        return self.c


@dataclass(frozen=True)
class Power(DissipationLaw):
    """theta(u) = c * u**alpha."""

    c: float
    alpha: float

    def _validate_params(self) -> None:
        if self.c <= 0 or self.alpha <= 0:
            raise ValueError("c and alpha must be positive")

    def _raw(self, u: np.ndarray) -> np.ndarray:
        return self.c * np.power(u, self.alpha)

    def derivative(self, u: float) -> float:
        _check_domain(np.asarray(u, dtype=float))
        if u == 0.0:
            if self.alpha > 1.0:
                return 0.0
            if self.alpha == 1.0:
                return self.c
            raise NonDifferentiableError("power law with alpha < 1 has a cusp at 0")
        return self.c * self.alpha * u ** (self.alpha - 1.0)


@dataclass(frozen=True)
class SurfaceCost(DissipationLaw):
    """theta(u) = c1 * 1_{u > 0} + c2 * u**alpha.

    The jump c1 at zero prices the surface of highly insulating material;
    lower semicontinuity forces theta(0) = 0.
    """

    c1: float
    c2: float
    alpha: float

    def _validate_params(self) -> None:
        if self.c1 <= 0:
            raise ValueError("c1 must be positive")
        if self.c2 < 0 or self.alpha <= 0:
            raise ValueError("c2 must be nonnegative, alpha positive")

    def _raw(self, u: np.ndarray) -> np.ndarray:
        return np.where(u > 0.0, self.c1 + self.c2 * np.power(u, self.alpha), 0.0)

    def derivative(self, u: float) -> float:
        _check_domain(np.asarray(u, dtype=float))
        if u == 0.0:
            raise NonDifferentiableError("surface-cost law jumps at u = 0")
        if self.c2 == 0.0:
            return 0.0
        return self.c2 * self.alpha * u ** (self.alpha - 1.0)


@dataclass(frozen=True)
class Tabulated(DissipationLaw):
    """Law given by sorted (u, theta(u)) knots on [0, 1].

    Evaluation uses the nondecreasing piecewise-linear envelope that is
    continuous from the left: duplicated abscissae encode jumps and the
    value at a jump point is the lower (left) one, which keeps the law
    lower semicontinuous.  Beyond the last knot the law extends constantly.
    """

    knots: Tuple[Tuple[float, float], ...]
    _us: np.ndarray = field(init=False, repr=False, compare=False)
    _vs: np.ndarray = field(init=False, repr=False, compare=False)

    def __init__(self, knots: Sequence[Sequence[float]]):
        pairs = tuple((float(u), float(v)) for u, v in knots)
        object.__setattr__(self, "knots", pairs)
        us = np.array([p[0] for p in pairs])
        vs = np.array([p[1] for p in pairs])
        object.__setattr__(self, "_us", us)
        object.__setattr__(self, "_vs", vs)
        self.__post_init__()

    def _validate_params(self) -> None:
        us, vs = self._us, self._vs
        if len(us) < 2:
            raise ValueError("tabulated law needs at least two knots")
        if us[0] != 0.0 or vs[0] != 0.0:
            raise ValueError("tabulated law must start with the knot (0, 0)")
        if us[-1] > 1.0 or np.any(us < 0.0):
            raise ValueError("tabulated knots must lie in [0, 1]")
        if np.any(np.diff(us) < 0.0) or np.any(np.diff(vs) < -_MONOTONE_TOL):
            raise ValueError("tabulated knots must be sorted and nondecreasing")

    def _raw(self, u: np.ndarray) -> np.ndarray:
        us, vs = self._us, self._vs
        x = np.atleast_1d(u)
        idx = np.searchsorted(us, x, side="left")
        out = np.empty_like(x)
        # Exact hits take the first knot at that abscissa: the left limit.
        exact = (idx < len(us)) & (us[np.minimum(idx, len(us) - 1)] == x)
        out[exact] = vs[np.minimum(idx, len(us) - 1)][exact]
        beyond = idx >= len(us)
        out[beyond & ~exact] = vs[-1]
        mid = ~exact & ~beyond
        if np.any(mid):
            hi = idx[mid]
            lo = hi - 1
            span = us[hi] - us[lo]
            frac = np.where(span > 0, (x[mid] - us[lo]) / np.where(span > 0, span, 1.0), 0.0)
            out[mid] = vs[lo] + frac * (vs[hi] - vs[lo])
        return out.reshape(np.shape(u))

    def derivative(self, u: float, h: float = 1e-6) -> float:
        _check_domain(np.asarray(u, dtype=float))
        lo = max(0.0, u - h)
        hi = min(1.0, u + h)
        return (self.value(hi) - self.value(lo)) / (hi - lo)


@dataclass(frozen=True)
class FlatCriterion:
    """Outcome of the hot-end flatness test theta'(1)^2 / theta(1) < 4(n-1)."""

    ratio: float
    bound: float
    flat_optimal_for_small_M: bool


def hyp_theta_inf(law: DissipationLaw, grid_size: int = 4096) -> float:
    """Minimum of theta(s/3)/theta(s) over a logarithmic grid of s in (0, 1].

    The grid is geometric with ratio 3**(-1/m) so that small arguments are
    sampled densely; a uniform grid would undersample the region where the
    one-third comparison is most restrictive.  Grid points with theta(s) = 0
    are skipped (the ratio tends to a limit there).
    """
    if grid_size < 64:
        raise ValueError("grid_size must be at least 64")
    m = max(1, grid_size // 12)
    s = 3.0 ** (-np.arange(grid_size) / m)
    denom = np.asarray(law.value(s))
    keep = denom > 0.0
    if not np.any(keep):
        raise DegenerateLawError("law vanishes on the whole grid")
    numer = np.asarray(law.value(s[keep] / 3.0))
    return float(np.min(numer / denom[keep]))


def unit_ball_volume(n: int) -> float:
    """Volume of the unit ball in dimension n via the half-integer recurrence."""
    if n < 0:
        raise ValueError("dimension must be nonnegative")
    vol = 1.0 if n % 2 == 0 else 2.0
    for k in range(2 + n % 2, n + 1, 2):
        vol *= 2.0 * math.pi / k
    return vol


def volume_bound(law: DissipationLaw, n: int, c_n: float = 1.0) -> float:
    """Volume threshold omega_n + c_n * inf^(2n) * int_0^1 t^(2n-1)/theta(t)^n dt.

    Budgets below this threshold guarantee the insulation problem is
    well-posed for the law.  The integral is computed by adaptive quadrature
    on (1e-8, 1] decade by decade; when the per-decade contributions do not
    decay near zero the integral diverges and +inf is returned (any budget
    is then admissible).  c_n is a dimensional constant left to the caller.
    """
    if n < 2:
        raise ValueError("dimension must be at least 2")
    if c_n <= 0:
        raise ValueError("c_n must be positive")
    ratio = hyp_theta_inf(law)

    def integrand(t: float) -> float:
        return t ** (2 * n - 1) / law.value(t) ** n

    eps = 1e-8
    cuts = [10.0**-k for k in range(9)]  # 1, 1e-1, ..., 1e-8
    if law.value(eps) == 0.0 or any(law.value(c) == 0.0 for c in cuts[:-1]):
        return math.inf
    pieces = []
    for hi, lo in zip(cuts[:-1], cuts[1:]):
        val, _ = quad(integrand, lo, hi, limit=200)
        pieces.append(val)
    # Harmonic-or-worse decay near zero means the integral diverges.
    for prev, nxt in zip(pieces[:-1], pieces[1:]):
        if nxt >= 0.8 * prev and nxt > 0.0:
            return math.inf
    total = sum(pieces)
    return unit_ball_volume(n) + c_n * ratio ** (2 * n) * total


def flat_criterion(law: DissipationLaw, n: int) -> FlatCriterion:
    """Test theta'(1)^2/theta(1) < 4(n-1), under which no insulation is
    optimal for volume budgets close to the bare body."""
    if n < 2:
        raise ValueError("dimension must be at least 2")
    d1 = law.derivative(1.0)
    t1 = law.value(1.0)
    ratio = d1 * d1 / t1 if t1 > 0.0 else 0.0
    bound = 4.0 * (n - 1)
    return FlatCriterion(ratio=ratio, bound=bound, flat_optimal_for_small_M=ratio < bound)


def epsilon_regularize(law: DissipationLaw, eps: float) -> Tabulated:
    """Quadratically regularized law min((theta(1)+eps)(u/eps)^2, theta(u)+eps).

    The first branch caps the regularized law by a quadratic near zero, the
    second keeps it within eps of the original away from zero; the jump
    eps * 1_{u>0} of the second branch vanishes at 0.  Returned as a
    tabulated law sampled on a grid (uniform plus geometric near zero); the
    piecewise-linear chords of the quadratic branch can exceed it between
    knots by a relative O(grid ratio - 1), below 1e-3 at this resolution.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    grid = np.unique(
        np.concatenate(
            [[0.0], np.geomspace(1e-7, 1.0, 6145), np.linspace(0.0, 1.0, 1025)]
        )
    )
    cap = (law.value(1.0) + eps) * (grid / eps) ** 2
    shifted = np.asarray(law.value(grid)) + np.where(grid > 0.0, eps, 0.0)
    vals = np.minimum(cap, shifted)
    return Tabulated(list(zip(grid.tolist(), vals.tolist())))


_LAW_TAGS = {
    "convection": Convection,
    "radiation": Radiation,
    "linear": Linear,
    "power": Power,
    "surface_cost": SurfaceCost,
    "tabulated": Tabulated,
}


def law_to_json(law: DissipationLaw) -> dict:
    """Serialize a law to its wire-format dictionary."""
    if isinstance(law, Convection):
        return {"type": "convection", "beta": law.beta}
    if isinstance(law, Radiation):
        return {"type": "radiation", "gamma": law.gamma}
    if isinstance(law, Linear):
        return {"type": "linear", "c": law.c}
    if isinstance(law, Power):
        return {"type": "power", "c": law.c, "alpha": law.alpha}
    if isinstance(law, SurfaceCost):
        return {"type": "surface_cost", "c1": law.c1, "c2": law.c2, "alpha": law.alpha}
    if isinstance(law, Tabulated):
        return {"type": "tabulated", "knots": [[u, v] for u, v in law.knots]}
    raise TypeError(f"unknown law type {type(law).__name__}")


def law_from_json(data: dict) -> DissipationLaw:
    """Build a law from its wire-format dictionary."""
    try:
        tag = data["type"]
        cls = _LAW_TAGS[tag]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"unrecognized law specification: {data!r}") from exc
    kwargs = {k: v for k, v in data.items() if k != "type"}
    return cls(**kwargs)
