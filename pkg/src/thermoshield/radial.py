"""Closed-form and one-dimensional energies of concentric-ball configurations.

For a unit hot ball surrounded by a spherical insulation shell of outer
radius R in dimension n >= 2, the temperature is an explicit radial harmonic
profile and the insulation energy reduces to scalar formulas in R.  This
module evaluates those formulas for the convection law, minimizes the
general-law energy over the outer boundary temperature, classifies the
convection regimes (spread the budget / all-or-nothing / no insulation),
locates threshold radii, optimizes the penalized problem over R, and
evaluates the thin-shell perturbation expansion and the gradient-ratio
monotonicity test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np

from .dissipation import DissipationLaw, unit_ball_volume

__all__ = [
    "EnergyBreakdown",
    "RadialConfig",
    "RegimeReport",
    "BestRadius",
    "PerturbationExpansion",
    "phi",
    "phi_prime",
    "convection_energy",
    "convection_state",
    "gradient_ratio",
    "general_radial_energy",
    "threshold_radius",
    "classify_regime",
    "best_radius",
    "perturbation_expansion",
    "gradient_ratio_max",
]

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class EnergyBreakdown:
    """Insulation energy split into its three contributions.

    dirichlet : integral of |grad u|^2 over the shell
    boundary  : integral of theta(u) over the outer boundary
    penalty   : lambda * (insulation volume), zero for constrained problems
    trace     : outer boundary temperature (a single value for radial states,
                the arclength-weighted mean for discrete fields)
    """

    dirichlet: float
    boundary: float
    penalty: float
    trace: float

    @property
    def total(self) -> float:
        return self.dirichlet + self.boundary + self.penalty

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "dirichlet": self.dirichlet,
            "boundary": self.boundary,
            "penalty": self.penalty,
            "trace": self.trace,
        }


@dataclass(frozen=True)
class RadialConfig:
    """Concentric-ball configuration: unit inner ball, outer radius R,
    a dissipation law, and an optional penalization weight."""

    n: int
    law: DissipationLaw
    R: float
    lam: float = 0.0

    def __post_init__(self) -> None:
        _check_dim(self.n)
        if self.R < 1.0:
            raise ValueError("outer radius must be at least 1")
        if self.lam < 0.0:
            raise ValueError("penalization weight must be nonnegative")

    @property
    def inner_volume(self) -> float:
        return unit_ball_volume(self.n)

    def energy(self) -> "EnergyBreakdown":
        return general_radial_energy(self.n, self.law, self.R, self.lam)


@dataclass(frozen=True)
class RegimeReport:
    """Classification of the convection problem at volume budget R_max.

    regime 'a': energy decreasing in R, insulation spread to the budget.
    regime 'b': all-or-nothing against a threshold radius.
    regime 'c': no insulation, the bare ball is optimal (empty in 2D).
    """

    regime: str
    critical_radius: float
    threshold_radius: Optional[float]
    optimal_radius: float
    optimal_energy: float
    tie: bool

    def as_dict(self) -> dict:
        return {
            "regime": self.regime,
            "critical_radius": self.critical_radius,
            "threshold_radius": self.threshold_radius,
            "optimal_radius": self.optimal_radius,
            "optimal_energy": self.optimal_energy,
            "tie": self.tie,
        }


@dataclass(frozen=True)
class BestRadius:
    R_star: float
    energy: EnergyBreakdown


@dataclass(frozen=True)
class PerturbationExpansion:
    """Thin-shell trial energy and its first-order coefficient in the
    shell thickness."""

    energy_eps: float
    first_order_coeff: float


def phi(n: int, rho: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Increasing radial harmonic profile: log rho in 2D, -rho^(2-n)/(n-2) else."""
    r = np.asarray(rho, dtype=float)
    if np.any(r <= 0.0):
        raise ValueError("phi requires rho > 0")
    if n == 2:
        out = np.log(r)
    else:
        out = -1.0 / ((n - 2) * r ** (n - 2))
    return float(out) if np.ndim(rho) == 0 else out


def phi_prime(n: int, rho: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Derivative rho^(1-n) of the radial profile, any n >= 2."""
    r = np.asarray(rho, dtype=float)
    if np.any(r <= 0.0):
        raise ValueError("phi_prime requires rho > 0")
    out = r ** (1 - n)
    return float(out) if np.ndim(rho) == 0 else out


def _check_dim(n: int) -> None:
    if n < 2:
        raise ValueError("dimension must be at least 2")


def convection_energy(n: int, beta: float, R: float) -> EnergyBreakdown:
    """Energy of the ball pair (unit ball, ball of radius R) for theta = beta u^2."""
    _check_dim(n)
    if beta <= 0:
        raise ValueError("beta must be positive")
    if R < 1.0:
        raise ValueError("outer radius must be at least 1")
    per1 = n * unit_ball_volume(n)
    denom = phi_prime(n, R) + beta * (phi(n, R) - phi(n, 1.0))
    trace = phi_prime(n, R) / denom
    dirichlet = per1 * beta**2 * (phi(n, R) - phi(n, 1.0)) / denom**2
    boundary = per1 * beta * phi_prime(n, R) / denom**2
    return EnergyBreakdown(dirichlet=dirichlet, boundary=boundary, penalty=0.0, trace=trace)


def convection_state(
    n: int, beta: float, R: float, rho: Union[float, np.ndarray]
) -> Union[float, np.ndarray]:
    """Radial temperature of the convection ball pair at radius rho in [0, R]."""
    _check_dim(n)
    r = np.asarray(rho, dtype=float)
    if np.any(r < 0.0) or np.any(r > R * (1.0 + 1e-12)):
        raise ValueError("rho must lie in [0, R]")
    denom = phi_prime(n, R) + beta * (phi(n, R) - phi(n, 1.0))
    drop = phi(n, np.maximum(r, 1.0)) - phi(n, 1.0)
    out = 1.0 - beta * drop / denom
    return float(out) if np.ndim(rho) == 0 else out


def gradient_ratio(
    n: int, beta: float, R: float, rho: Union[float, np.ndarray]
) -> Union[float, np.ndarray]:
    """|grad u|/u of the convection state at radius rho in [1, R]."""
    r = np.asarray(rho, dtype=float)
    numer = beta * phi_prime(n, r)
    denom = phi_prime(n, R) + beta * (phi(n, R) - phi(n, r))
    out = numer / denom
    return float(out) if np.ndim(rho) == 0 else out


def gradient_ratio_max(n: int, beta: float, R: float, grid: int = 4096) -> float:
    """Maximum of |grad u|/u over the shell, on a uniform radial grid.

    The maximum is at most beta exactly when no smaller outer ball has
    lower energy, which makes this a cheap monotonicity certificate.
    """
    _check_dim(n)
    if R <= 1.0:
        raise ValueError("R must exceed 1")
    rho = np.linspace(1.0, R, grid)
    return float(np.max(gradient_ratio(n, beta, R, rho)))


def _golden_min(
    f: Callable[[float], float], a: float, b: float, tol: float = 1e-12, max_iter: int = 200
) -> Tuple[float, float]:
    """Golden-section minimization on [a, b]; returns (argmin, min)."""
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol * (1.0 + abs(a) + abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    x = c if fc <= fd else d
    return (x, min(fc, fd))


def general_radial_energy(
    n: int, law: DissipationLaw, R: float, lam: float = 0.0
) -> EnergyBreakdown:
    """Minimal shell energy for a general law at fixed outer radius R.

    The harmonic profile is determined by its outer trace l, so the energy
    is a scalar function of l: a Dirichlet term quadratic in (1 - l) plus
    the boundary term Per(B_R) theta(l).  The trace is found by a global
    grid scan refined by golden section; the global scan comes first
    because theta may be discontinuous or nonconvex, and the jump branch
    at l = 0 is compared explicitly.
    """
    _check_dim(n)
    if R < 1.0:
        raise ValueError("outer radius must be at least 1")
    if lam < 0.0:
        raise ValueError("penalization weight must be nonnegative")
    w = unit_ball_volume(n)
    per1 = n * w
    penalty = lam * w * (R**n - 1.0)
    if R == 1.0:
        return EnergyBreakdown(
            dirichlet=0.0, boundary=per1 * law.value(1.0), penalty=penalty, trace=1.0
        )
    per_R = per1 * R ** (n - 1)
    stiff = per1 / (phi(n, R) - phi(n, 1.0))

    def energy(l: float) -> float:
        return stiff * (1.0 - l) ** 2 + per_R * law.value(l)

    grid = np.linspace(0.0, 1.0, 4096)
    vals = stiff * (1.0 - grid) ** 2 + per_R * np.asarray(law.value(grid))
    k = int(np.argmin(vals))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, grid.size - 1)]
    l_ref, e_ref = _golden_min(energy, lo, hi)
    candidates = [(l_ref, e_ref), (float(grid[k]), float(vals[k])), (0.0, energy(0.0)), (1.0, energy(1.0))]
    l_star, _ = min(candidates, key=lambda t: t[1])
    return EnergyBreakdown(
        dirichlet=stiff * (1.0 - l_star) ** 2,
        boundary=per_R * law.value(l_star),
        penalty=penalty,
        trace=l_star,
    )


def threshold_radius(n: int, beta: float) -> Optional[float]:
    """Radius above the critical one at which the shell energy returns to the
    bare-ball value; exists only in the all-or-nothing regime.

    In 2D that regime is 0 < beta < 1; for n >= 3 it is n-2 < beta < n-1.
    Outside it, None is returned.
    """
    _check_dim(n)
    if beta <= 0:
        raise ValueError("beta must be positive")
    if n == 2:
        if not beta < 1.0:
            return None
    elif not (n - 2 < beta < n - 1):
        return None
    crit = (n - 1) / beta

    def gap(R: float) -> float:
        return phi_prime(n, R) + beta * (phi(n, R) - phi(n, 1.0)) - 1.0

    lo = crit
    hi = 2.0 * crit
    while gap(hi) <= 0.0:
        hi *= 2.0
    while hi - lo > 1e-10 * hi:
        mid = 0.5 * (lo + hi)
        if gap(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def classify_regime(n: int, beta: float, R_max: float, tie_tol: float = 1e-9) -> RegimeReport:
    """Pick the optimal outer ball radius in [1, R_max] for the convection law.

    Regime 'a' (beta >= n-1): the energy decreases in R, use the full budget.
    Regime 'c' (beta <= n-2): the bare ball wins outright.
    Regime 'b' (between): compare the budget to the threshold radius; at a
    tie both radii are optimal and the bare ball is reported with the tie
    flag set.
    """
    _check_dim(n)
    if beta <= 0:
        raise ValueError("beta must be positive")
    if R_max < 1.0:
        raise ValueError("R_max must be at least 1")
    crit = max(1.0, (n - 1) / beta)
    threshold = None
    tie = False
    if beta >= n - 1:
        regime = "a"
        r_opt = R_max
    elif beta <= n - 2:
        regime = "c"
        r_opt = 1.0
    else:
        regime = "b"
        threshold = threshold_radius(n, beta)
        if abs(R_max - threshold) < tie_tol:
            tie = True
            r_opt = 1.0
        else:
            r_opt = 1.0 if R_max < threshold else R_max
    energy = convection_energy(n, beta, r_opt)
    return RegimeReport(
        regime=regime,
        critical_radius=crit,
        threshold_radius=threshold,
        optimal_radius=r_opt,
        optimal_energy=energy.total,
        tie=tie,
    )


def best_radius(
    n: int, law: DissipationLaw, R_max: float = math.inf, lam: float = 0.0
) -> BestRadius:
    """Globally minimize the (optionally penalized) shell energy over R.

    For lam > 0 the search bracket may be unbounded: it grows until the
    penalty term alone exceeds the bare-ball energy, which caps the volume
    any minimizer can afford.  Scanning is log-spaced in R - 1 with the
    bare ball included, then refined by golden section.  This reports the
    best concentric pair; for general laws no claim is made against
    non-spherical competitors.
    """
    _check_dim(n)
    w = unit_ball_volume(n)
    if not math.isfinite(R_max):
        if lam <= 0.0:
            raise ValueError("R_max must be finite for the constrained problem")
        bare = n * w * law.value(1.0)
        hi = 2.0
        while lam * w * (hi**n - 1.0) <= bare:
            hi *= 2.0
        R_max = hi
    if R_max < 1.0:
        raise ValueError("R_max must be at least 1")

    def total(R: float) -> float:
        return general_radial_energy(n, law, R, lam).total

    if R_max == 1.0:
        return BestRadius(1.0, general_radial_energy(n, law, 1.0, lam))
    radii = np.concatenate(
        [[1.0], 1.0 + np.geomspace((R_max - 1.0) * 1e-6, R_max - 1.0, 511)]
    )
    vals = np.array([total(R) for R in radii])
    k = int(np.argmin(vals))
    lo = radii[max(k - 1, 0)]
    hi = radii[min(k + 1, radii.size - 1)]
    R_ref, e_ref = _golden_min(total, lo, hi, tol=1e-13)
    candidates = [
        (R_ref, e_ref),
        (float(radii[k]), float(vals[k])),
        (1.0, float(vals[0])),
        (float(R_max), float(vals[-1])),
    ]
    R_star, _ = min(candidates, key=lambda t: t[1])
    return BestRadius(R_star, general_radial_energy(n, law, R_star, lam))


def perturbation_expansion(n: int, law: DissipationLaw, eps: float) -> PerturbationExpansion:
    """Energy of the thin-shell trial state of thickness eps and the exact
    first-order coefficient of its expansion around the bare ball.

    The trial state drops linearly with slope theta'(1)/2 across the shell;
    its energy is evaluated in closed form.  The first-order coefficient
    ((n-1) theta(1) - theta'(1)^2/4) Per(B_1) is negative exactly when the
    flatness criterion fails, in which case a thin shell beats no shell.
    """
    _check_dim(n)
    if not 0.0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 0.5)")
    d1 = law.derivative(1.0)
    t1 = law.value(1.0)
    arg = 1.0 - 0.5 * d1 * eps
    if arg < 0.0:
        raise ValueError("eps too large: trial state leaves [0, 1]")
    w = unit_ball_volume(n)
    per1 = n * w
    energy_eps = per1 * (1.0 + eps) ** (n - 1) * law.value(arg) + w * (
        (1.0 + eps) ** n - 1.0
    ) * d1**2 / 4.0
    coeff = ((n - 1) * t1 - d1**2 / 4.0) * per1
    return PerturbationExpansion(energy_eps=energy_eps, first_order_coeff=coeff)
