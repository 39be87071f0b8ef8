"""Physical constants, unit helpers and the experiment configuration.

Every rate-like quantity (``omega_r``, ``Upsilon1``, ``Upsilon2``,
``Delta_s``, ``Omega``, ``gamma_n`` and the spin-phonon coupling ``g``) is an
angular frequency in rad/s. Quoted laboratory numbers such as "2 MHz" or
"1 kHz" are used as the numeric value of the angular quantity, so
``omega_r = 2e6`` rad/s.

Config files are plain text, one ``key = value`` per line, SI units::

    # NV/cantilever setup
    R = 5.0e-7        # cylinder radius, m
    d = 8.0e-8
    Omega = 1e3

``#`` starts a comment. Every key is optional and falls back to
:func:`default_config`; unknown keys are rejected.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from scipy import constants as _codata

from .errors import ConfigError, DomainError

__all__ = [
    "PhysicalConstants",
    "ExperimentConfig",
    "CONSTANTS",
    "default_config",
    "boson_mass_from_range",
    "range_from_boson_mass",
    "debye_to_si",
    "parse_config",
    "load_config",
    "config_to_text",
]

DEBYE = 1e-21 / _codata.c  # C*m, exact SI definition


@dataclass(frozen=True)
class PhysicalConstants:
    """SI constants. ``nu`` is derived as ``g_s * mu_B / hbar`` (rad/s/T).

    ``k_B`` is carried for completeness only; thermal noise is not simulated.
    """

    hbar: float = _codata.hbar
    c: float = _codata.c
    mu0: float = _codata.mu_0
    mu_B: float = _codata.physical_constants["Bohr magneton"][0]
    g_s: float = 2.0
    debye: float = DEBYE
    k_B: float = _codata.k
    e: float = _codata.e
    nu: float = field(init=False)

    def __post_init__(self):
        for f in fields(self):
            if f.name == "nu":
                continue
            value = getattr(self, f.name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"constant {f.name} must be finite and positive, got {value!r}")
        object.__setattr__(self, "nu", self.g_s * self.mu_B / self.hbar)


CONSTANTS = PhysicalConstants()


_POSITIVE = ("R", "d", "h", "rho", "mass", "omega_r", "Q", "Upsilon2", "Omega", "mu_dipole")


@dataclass(frozen=True)
class ExperimentConfig:
    """Geometry, spin ensemble, resonator and drive parameters (SI, rad/s).

    ``Upsilon1`` defaults to ``2 * Upsilon2``; any other value is rejected
    because the closed-form susceptibility assumes that ratio.
    """

    R: float
    d: float
    h: float
    rho: float
    P0: float
    omega_r: float
    Q: float
    mass: float
    Upsilon2: float
    Omega: float
    mu_dipole: float
    Delta_s: float = 0.0
    Upsilon1: float | None = None

    def __post_init__(self):
        for name in _POSITIVE:
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be a finite positive number, got {value!r}")
        if not (0.0 < self.P0 <= 1.0):
            raise ConfigError(f"P0 must lie in (0, 1], got {self.P0!r}")
        if not math.isfinite(self.Delta_s):
            raise ConfigError(f"Delta_s must be finite, got {self.Delta_s!r}")
        if self.Upsilon1 is None:
            object.__setattr__(self, "Upsilon1", 2.0 * self.Upsilon2)
        elif not math.isclose(self.Upsilon1, 2.0 * self.Upsilon2, rel_tol=1e-12, abs_tol=0.0):
            raise ConfigError(
                f"Upsilon1 must equal 2*Upsilon2 ({2.0 * self.Upsilon2!r}), got {self.Upsilon1!r}"
            )

    @property
    def gamma_n(self) -> float:
        """Mechanical damping rate ``omega_r / Q``."""
        return self.omega_r / self.Q

    def with_(self, **changes) -> "ExperimentConfig":
        """Copy with some fields replaced (``Upsilon1`` follows ``Upsilon2``)."""
        if "Upsilon2" in changes and "Upsilon1" not in changes:
            changes["Upsilon1"] = None
        return replace(self, **changes)


def default_config() -> ExperimentConfig:
    """Reference parameter set of the proposed NV/cantilever experiment."""
    return ExperimentConfig(
        R=500e-9,
        d=80e-9,
        h=50e-9,
        rho=1.62e-3 * 1e27,  # 1.62e-3 nm^-3
        P0=0.1,
        omega_r=2e6,
        Q=1e6,
        mass=1e-15,
        Upsilon2=1e3,
        Omega=1e3,
        mu_dipole=debye_to_si(10.0),
        Delta_s=0.0,
    )


def boson_mass_from_range(lam: float, consts: PhysicalConstants = CONSTANTS) -> tuple[float, float]:
    """Mass of the exchanged boson for interaction range ``lam``.

    Returns
    -------
    (mass_kg, rest_energy_eV)
        ``hbar / (lam c)`` and ``hbar c / lam`` expressed in eV.
    """
    if not (lam > 0 and math.isfinite(lam)):
        raise DomainError(f"interaction range must be positive and finite, got {lam!r}")
    mass = consts.hbar / (lam * consts.c)
    energy_ev = consts.hbar * consts.c / lam / consts.e
    return mass, energy_ev


def range_from_boson_mass(mass_kg: float, consts: PhysicalConstants = CONSTANTS) -> float:
    if not (mass_kg > 0 and math.isfinite(mass_kg)):
        raise DomainError(f"boson mass must be positive and finite, got {mass_kg!r}")
    return consts.hbar / (mass_kg * consts.c)


def debye_to_si(value: float) -> float:
    """Dipole moment in debye to C*m."""
    return value * DEBYE


_CONFIG_KEYS = {f.name for f in fields(ExperimentConfig)}


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse ``key = value`` text on top of ``base`` (default parameters)."""
    base = default_config() if base is None else base
    values = asdict(base)
    # Upsilon1 is re-derived unless given explicitly.
    values["Upsilon1"] = None
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if "=" not in line:
            col = len(line) - len(line.lstrip()) + 1
            raise ConfigError("expected 'key = value'", lineno, col)
        key_part, value_part = line.split("=", 1)
        key = key_part.strip()
        key_col = len(key_part) - len(key_part.lstrip()) + 1
        value_col = len(key_part) + 2 + (len(value_part) - len(value_part.lstrip()))
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno, key_col)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} (first set on line {seen[key]})", lineno, key_col)
        token = value_part.strip()
        try:
            value = float(token)
        except ValueError:
            raise ConfigError(f"value for {key!r} is not a number: {token!r}", lineno, value_col) from None
        if not math.isfinite(value):
            raise ConfigError(f"value for {key!r} must be finite", lineno, value_col)
        seen[key] = lineno
        values[key] = value
    try:
        return ExperimentConfig(**values)
    except ConfigError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path | None) -> ExperimentConfig:
    """Read a config file; ``None`` gives :func:`default_config`."""
    if path is None:
        return default_config()
    return parse_config(Path(path).read_text(encoding="utf-8"))


def config_to_text(config: ExperimentConfig) -> str:
    """Serialize a config so that :func:`parse_config` reproduces it exactly."""
    lines = []
    for f in fields(config):
        value = getattr(config, f.name)
        lines.append(f"{f.name} = {float(value)!r}")
    return "\n".join(lines) + "\n"
