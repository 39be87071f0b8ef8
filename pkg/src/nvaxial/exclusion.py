"""Upper limits on the axial-vector coupling constant from a detection threshold on ``g``.

With the exotic term dominating and ``u < 0`` the coupling is affine in
``alpha``::

    g = -(4 pi lam c P0 g_s mu_B rho u1) / (nu sqrt(2 m omega_r hbar)) * alpha
        - P0 g_s mu_B rho R^2 mu0 nu hbar u2 / (4 sqrt(2 m omega_r hbar))

Requiring ``g < g_c`` bounds ``alpha`` from above at each range ``lam``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

from .coupling import (AxialCoupling, coupling_g, exotic_prefactor, log_neg_u_exotic_factor,
                       u_exotic_factor, u_magnetic)
from .errors import DomainError, RegimeError
from .params import CONSTANTS, ExperimentConfig, PhysicalConstants, boson_mass_from_range

__all__ = [
    "LAMBDA_MIN",
    "LAMBDA_MAX",
    "G_MIN",
    "ThresholdSpec",
    "ExclusionPoint",
    "default_lambda_grid",
    "g_from_alpha",
    "alpha_from_g",
    "exclusion_bound",
    "log10_exclusion_bound",
    "exclusion_curve",
    "invert_coupling_g",
    "validation_report",
    "format_exclusion_csv",
]

LAMBDA_MIN = 1e-10  # m
LAMBDA_MAX = 1e-1  # m
G_MIN = 1e-2  # rad/s, smallest g for which the affine form is used


@dataclass(frozen=True)
class ThresholdSpec:
    """Smallest spin-phonon coupling ``g_c`` (rad/s) that shows up as a peak."""

    g_c: float = 0.3

    def __post_init__(self):
        if not (self.g_c > 0 and math.isfinite(self.g_c)):
            raise DomainError(f"g_c must be positive and finite, got {self.g_c!r}")


@dataclass(frozen=True)
class ExclusionPoint:
    """One point of an exclusion curve.

    ``alpha_bound`` is ``inf`` where the bound exceeds the double range;
    ``log10_alpha_bound`` is always finite.
    """

    lam: float
    boson_mass_ev: float
    alpha_bound: float
    log10_alpha_bound: float


def default_lambda_grid(n: int = 181) -> np.ndarray:
    return np.logspace(math.log10(LAMBDA_MIN), math.log10(LAMBDA_MAX), n)


def _check_lambda(lam: float) -> None:
    # tolerate round-off from logspace at the end points
    if not (LAMBDA_MIN * (1 - 1e-12) <= lam <= LAMBDA_MAX * (1 + 1e-12)):
        raise DomainError(f"lam={lam!r} outside [{LAMBDA_MIN:g}, {LAMBDA_MAX:g}] m")


def _spin_factor(config: ExperimentConfig, consts: PhysicalConstants) -> float:
    return config.P0 * consts.g_s * consts.mu_B * config.rho


def _zp_factor(config: ExperimentConfig, consts: PhysicalConstants) -> float:
    return math.sqrt(2.0 * config.mass * config.omega_r * consts.hbar)


def g_from_alpha(coupling: AxialCoupling, config: ExperimentConfig,
                 consts: PhysicalConstants = CONSTANTS) -> float:
    """Signed affine coupling ``g(alpha)`` valid while ``u < 0``.

    Raises
    ------
    RegimeError
        If the result is negative, i.e. ``u >= 0`` and the affine form does
        not describe ``|u|``.
    """
    lam = coupling.lam
    S, Z = _spin_factor(config, consts), _zp_factor(config, consts)
    u1 = u_exotic_factor(lam, config)
    u2, _ = u_magnetic(config, consts)
    exotic = -(4.0 * math.pi * lam * consts.c * S * u1) / (consts.nu * Z) * coupling.alpha
    magnetic = S * config.R**2 * consts.mu0 * consts.nu * consts.hbar * u2 / (4.0 * Z)
    g = exotic - magnetic
    if g < 0 and -g <= 8 * np.finfo(float).eps * magnetic:
        g = 0.0  # rounding at the affine root
    if g < 0:
        raise RegimeError(f"affine coupling is negative (g={g!r}) at alpha={coupling.alpha!r}, "
                          f"lam={lam!r}; use coupling_g with |u|")
    return g


def alpha_from_g(g: float, lam: float, config: ExperimentConfig,
                 consts: PhysicalConstants = CONSTANTS) -> float:
    """Invert :func:`g_from_alpha` for ``alpha``.

    Requires ``lam`` in [1e-10, 1e-1] m and ``g >= 1e-2`` rad/s. Returns
    ``inf`` when ``u1`` underflows.
    """
    _check_lambda(lam)
    if not (g >= G_MIN and math.isfinite(g)):
        raise DomainError(f"g={g!r} below the validity floor {G_MIN:g} rad/s")
    S, Z = _spin_factor(config, consts), _zp_factor(config, consts)
    u1 = u_exotic_factor(lam, config)
    u2, _ = u_magnetic(config, consts)
    c, nu = consts.c, consts.nu
    if u1 == 0.0:
        return _from_logs(g, lam, config, consts)[0]
    return (-(nu * Z) / (4.0 * math.pi * lam * c * S * u1) * g
            - config.R**2 * consts.mu0 * nu * nu * consts.hbar * u2 / (16.0 * math.pi * lam * c * u1))


def _from_logs(g: float, lam: float, config: ExperimentConfig,
               consts: PhysicalConstants) -> tuple[float, float]:
    """Bound for threshold ``g`` as ``(value, log10 value)``, safe against underflow of ``u1``."""
    S, Z = _spin_factor(config, consts), _zp_factor(config, consts)
    u2, _ = u_magnetic(config, consts)
    nu = consts.nu
    numerator = g * Z * nu + S * u2 * 0.25 * config.R**2 * consts.mu0 * nu * nu * consts.hbar
    log_neg_u1 = log_neg_u_exotic_factor(lam, config)
    ln_value = (math.log(numerator) - math.log(4.0 * math.pi * lam * S * consts.c) - log_neg_u1)
    log10_value = ln_value / math.log(10.0)
    value = math.exp(ln_value) if ln_value < 709.0 else math.inf
    return value, log10_value


def exclusion_bound(lam: float, threshold: ThresholdSpec, config: ExperimentConfig,
                    consts: PhysicalConstants = CONSTANTS) -> float:
    """Largest ``alpha`` compatible with ``g < g_c`` at range ``lam``.

    ``-[g_c sqrt(2 m omega_r hbar) nu + P0 g_s mu_B rho u2 R^2/4 mu0 nu^2 hbar]
    / (4 pi lam u1 P0 g_s mu_B rho c)``

    Raises
    ------
    DomainError
        Outside [1e-10, 1e-1] m, or if ``u1 >= 0`` for this geometry.
    """
    _check_lambda(lam)
    u1 = u_exotic_factor(lam, config)
    if u1 == 0.0:
        # u1 underflowed; the sign check and value come from the log form
        return _from_logs(threshold.g_c, lam, config, consts)[0]
    if u1 > 0:
        raise DomainError(f"u1={u1!r} >= 0 at lam={lam!r}; the bound needs u1 < 0")
    S, Z = _spin_factor(config, consts), _zp_factor(config, consts)
    u2, _ = u_magnetic(config, consts)
    nu = consts.nu
    numerator = threshold.g_c * Z * nu + S * u2 * 0.25 * config.R**2 * consts.mu0 * nu * nu * consts.hbar
    return -numerator / (4.0 * math.pi * lam * u1 * S * consts.c)


def log10_exclusion_bound(lam: float, threshold: ThresholdSpec, config: ExperimentConfig,
                          consts: PhysicalConstants = CONSTANTS) -> float:
    _check_lambda(lam)
    return _from_logs(threshold.g_c, lam, config, consts)[1]


def exclusion_curve(threshold: ThresholdSpec, lambda_grid: Iterable[float], config: ExperimentConfig,
                    consts: PhysicalConstants = CONSTANTS) -> list[ExclusionPoint]:
    """Bound and boson mass for every range in an ascending grid."""
    grid = [float(x) for x in lambda_grid]
    if not grid:
        raise DomainError("lambda grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("lambda grid must be strictly ascending")
    points = []
    for lam in grid:
        bound = exclusion_bound(lam, threshold, config, consts)
        log10_bound = log10_exclusion_bound(lam, threshold, config, consts)
        _, mass_ev = boson_mass_from_range(lam, consts)
        points.append(ExclusionPoint(lam, mass_ev, bound, log10_bound))
    return points


def invert_coupling_g(g_target: float, lam: float, config: ExperimentConfig,
                      consts: PhysicalConstants = CONSTANTS) -> float:
    """Smallest ``alpha >= 0`` with ``coupling_g(alpha, lam) >= g_target``, found numerically.

    Uses the absolute-value coupling directly (no affine rewrite); ``inf``
    if ``g_target`` is out of reach in double precision.
    """
    def excess(alpha):
        return coupling_g(AxialCoupling(alpha, lam), config, consts) - g_target

    if excess(0.0) >= 0:
        return 0.0
    slope = exotic_prefactor(lam, consts) * u_exotic_factor(lam, config)
    if slope == 0.0:
        return math.inf
    _, magnetic = u_magnetic(config, consts)
    lo = abs(magnetic / slope) if slope < 0 else 0.0  # where u changes sign
    hi = max(lo, 1e-300) * 2.0
    while excess(hi) < 0:
        if hi > 1e300:
            return math.inf
        hi *= 2.0
    if excess(lo) >= 0:
        return lo
    return brentq(excess, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=1000)


def validation_report(threshold: ThresholdSpec, lambda_grid: Sequence[float], config: ExperimentConfig,
                      consts: PhysicalConstants = CONSTANTS, rtol: float = 0.01) -> list[dict]:
    """Closed-form bound next to the numeric inversion of ``coupling_g``, flagged beyond ``rtol``.

    Rows where ``u1`` underflows carry ``comparable=False`` and are never flagged.
    """
    rows = []
    for lam in lambda_grid:
        closed = exclusion_bound(float(lam), threshold, config, consts)
        direct = invert_coupling_g(threshold.g_c, float(lam), config, consts)
        if u_exotic_factor(float(lam), config) == 0.0:
            # the forward model underflows here; only the log-space bound exists
            rows.append({"lambda_m": float(lam), "eq_bound": closed, "direct_bound": direct,
                         "rel_diff": math.nan, "flagged": False, "comparable": False})
            continue
        if math.isinf(closed) and math.isinf(direct):
            rel = 0.0
        elif math.isinf(closed) or math.isinf(direct):
            rel = math.inf
        else:
            rel = abs(closed - direct) / abs(direct) if direct else math.inf
        rows.append({"lambda_m": float(lam), "eq_bound": closed, "direct_bound": direct,
                     "rel_diff": rel, "flagged": rel > rtol, "comparable": True})
    return rows


def format_exclusion_csv(points: Sequence[ExclusionPoint]) -> str:
    lines = ["lambda_m,mass_ev,alpha_upper"]
    for p in points:
        lines.append(f"{p.lam:.17g},{p.boson_mass_ev:.17g},{p.alpha_bound:.17g}")
    return "\n".join(lines) + "\n"
