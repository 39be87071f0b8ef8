"""Field of the polarized cylinder at the NV and the resulting spin-phonon coupling.

The NV sits on the symmetry axis of a uniformly polarized cylinder (radius
``R``, thickness ``h``) whose near face is a distance ``d`` away. The
on-axis field gradient per unit polarized spin density is the kernel ``u``;
it splits into a magnetostatic part built from ``u2`` and an exotic Yukawa
part built from ``u1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .params import CONSTANTS, ExperimentConfig, PhysicalConstants

__all__ = [
    "AxialCoupling",
    "CouplingResult",
    "b_eff_point",
    "u_magnetic",
    "u_exotic_factor",
    "log_neg_u_exotic_factor",
    "exotic_prefactor",
    "u_total",
    "zero_point_amplitude",
    "field_gradient",
    "coupling_g",
    "coupling_result",
]

_EXP_FLOOR = -700.0


def _exp(x: float) -> float:
    # Underflow policy: tiny exponentials are exactly zero.
    return 0.0 if x < _EXP_FLOOR else math.exp(x)


@dataclass(frozen=True)
class AxialCoupling:
    """Dimensionless coupling constant ``alpha`` and range ``lam`` (m).

    Negative ``alpha`` is accepted so that affine identities can be checked
    on both sides of zero.
    """

    alpha: float
    lam: float

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise DomainError(f"interaction range must be positive and finite, got {self.lam!r}")
        if not math.isfinite(self.alpha):
            raise DomainError(f"coupling constant must be finite, got {self.alpha!r}")


@dataclass(frozen=True)
class CouplingResult:
    u1: float  # dimensionless
    u2: float  # m^-3
    u: float  # T m^2, signed
    G_m: float  # T/m
    a0: float  # m
    g: float  # rad/s


def b_eff_point(r: float, angle: float, coupling: AxialCoupling,
                consts: PhysicalConstants = CONSTANTS) -> float:
    """Effective field (T) at the NV from one polarized spin at distance ``r``.

    ``angle`` is measured between the NV axis and the separation vector.
    """
    if not r > 0:
        raise DomainError(f"separation must be positive, got {r!r}")
    cos2 = math.cos(angle) ** 2
    magnetic = -consts.mu0 * consts.nu * consts.hbar * (3.0 * cos2 - 1.0) / (8.0 * math.pi * r**3)
    exotic = coupling.alpha * (2.0 * consts.c / consts.nu) * _exp(-r / coupling.lam) / r
    return magnetic + exotic


def u_magnetic(config: ExperimentConfig, consts: PhysicalConstants = CONSTANTS) -> tuple[float, float]:
    """Return ``(u2, magnetic part of u)``.

    ``u2 = (R^2+d^2)^{-3/2} - (R^2+(d+h)^2)^{-3/2}`` and the magnetic part is
    ``R^2/4 * mu0 nu hbar * u2``.
    """
    R, d, h = config.R, config.d, config.h
    u2 = (R * R + d * d) ** -1.5 - (R * R + (d + h) ** 2) ** -1.5
    return u2, 0.25 * R * R * consts.mu0 * consts.nu * consts.hbar * u2


def _u1_parts(lam: float, config: ExperimentConfig) -> tuple[float, float]:
    """Split ``u1 = exp(-d/lam) * bracket`` with a well-conditioned bracket.

    ``bracket = e^{-p} + e^{-q} - e^{-s} - 1`` with ``p = sqrt(R^2+d^2) - d``,
    ``q = h``, ``s = sqrt(R^2+(d+h)^2) - d`` (all over ``lam``), written with
    ``expm1`` so the large-``lam`` cancellation keeps full precision.
    """
    if not (lam > 0 and math.isfinite(lam)):
        raise DomainError(f"interaction range must be positive and finite, got {lam!r}")
    R, d, h = config.R, config.d, config.h
    near_rim = math.hypot(R, d)
    far_rim = math.hypot(R, d + h)
    bracket = (math.expm1(-(near_rim - d) / lam) + math.expm1(-h / lam)
               - math.expm1(-(far_rim - d) / lam))
    return -d / lam, bracket


def u_exotic_factor(lam: float, config: ExperimentConfig) -> float:
    """Four-exponential sum

    ``u1 = e^{-sqrt(R^2+d^2)/lam} + e^{-(d+h)/lam} - e^{-sqrt(R^2+(d+h)^2)/lam} - e^{-d/lam}``.
    """
    log_scale, bracket = _u1_parts(lam, config)
    return _exp(log_scale) * bracket


def log_neg_u_exotic_factor(lam: float, config: ExperimentConfig) -> float:
    """Natural log of ``-u1``, finite even where ``u1`` itself underflows.

    Raises
    ------
    DomainError
        If ``u1 >= 0`` (non-physical geometry).
    """
    log_scale, bracket = _u1_parts(lam, config)
    if not bracket < 0:
        raise DomainError(f"u1 is not negative for lam={lam!r} (bracket={bracket!r})")
    return log_scale + math.log(-bracket)


def exotic_prefactor(lam: float, consts: PhysicalConstants = CONSTANTS) -> float:
    """``4 pi lam c / nu``: converts ``alpha * u1`` into a kernel contribution."""
    return 4.0 * math.pi * lam * consts.c / consts.nu


def u_total(coupling: AxialCoupling, config: ExperimentConfig,
            consts: PhysicalConstants = CONSTANTS) -> float:
    """Signed gradient kernel ``u`` (T m^2); affine in ``coupling.alpha``."""
    _, magnetic = u_magnetic(config, consts)
    if coupling.alpha == 0.0:
        return magnetic
    u1 = u_exotic_factor(coupling.lam, config)
    return magnetic + coupling.alpha * exotic_prefactor(coupling.lam, consts) * u1


def zero_point_amplitude(config: ExperimentConfig, consts: PhysicalConstants = CONSTANTS) -> float:
    return math.sqrt(consts.hbar / (2.0 * config.mass * config.omega_r))


def field_gradient(u: float, config: ExperimentConfig) -> float:
    """On-axis gradient magnitude ``rho * P0 * |u|`` (T/m)."""
    return config.rho * config.P0 * abs(u)


def coupling_g(coupling: AxialCoupling, config: ExperimentConfig,
               consts: PhysicalConstants = CONSTANTS) -> float:
    """Spin-phonon coupling ``P0 g_s mu_B rho |u| / sqrt(2 m omega_r hbar)`` (rad/s)."""
    u = u_total(coupling, config, consts)
    return (config.P0 * consts.g_s * consts.mu_B * config.rho * abs(u)
            / math.sqrt(2.0 * config.mass * config.omega_r * consts.hbar))


def coupling_result(coupling: AxialCoupling, config: ExperimentConfig,
                    consts: PhysicalConstants = CONSTANTS) -> CouplingResult:
    u2, _ = u_magnetic(config, consts)
    u1 = u_exotic_factor(coupling.lam, config)
    u = u_total(coupling, config, consts)
    return CouplingResult(
        u1=u1,
        u2=u2,
        u=u,
        G_m=field_gradient(u, config),
        a0=zero_point_amplitude(config, consts),
        g=coupling_g(coupling, config, consts),
    )
