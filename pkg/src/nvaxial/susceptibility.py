"""Pump-probe response of the driven NV spin coupled to the cantilever mode.

The probe response is reported as the complex *bracket*
``(w0 A + B* C) / (C Omega - A D)`` (units of s); the physical first-order
susceptibility is ``mu^2 / hbar`` times it. Spectra plot the dimensionless
absorption ``Upsilon2 * Im(bracket)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .errors import ConsistencyError, DomainError, SingularityError, WindowTooNarrowError
from .params import CONSTANTS, ExperimentConfig, PhysicalConstants

__all__ = [
    "SusceptibilityInputs",
    "SpectrumPoint",
    "Spectrum",
    "PeakReport",
    "HeightPoint",
    "population_inversion",
    "inversion_cubic",
    "eta",
    "closed_form_coefficients",
    "chi_bracket",
    "susceptibility",
    "spectrum_scan",
    "peak_report",
    "height_vs_g",
]


@dataclass(frozen=True)
class SusceptibilityInputs:
    """Rates (rad/s) entering the probe response. ``Upsilon1`` must be ``2 * Upsilon2``."""

    g: float
    Delta_s: float
    Omega: float
    Upsilon1: float
    Upsilon2: float
    omega_r: float
    gamma_n: float

    def __post_init__(self):
        for name in ("Omega", "Upsilon1", "Upsilon2", "omega_r", "gamma_n"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be positive and finite, got {value!r}")
        if not (self.g >= 0 and math.isfinite(self.g)):
            raise DomainError(f"g must be non-negative and finite, got {self.g!r}")
        if not math.isfinite(self.Delta_s):
            raise DomainError(f"Delta_s must be finite, got {self.Delta_s!r}")
        if not math.isclose(self.Upsilon1, 2.0 * self.Upsilon2, rel_tol=1e-12):
            raise DomainError("the closed form requires Upsilon1 == 2 * Upsilon2")

    @classmethod
    def from_config(cls, config: ExperimentConfig, g: float) -> "SusceptibilityInputs":
        return cls(
            g=g,
            Delta_s=config.Delta_s,
            Omega=config.Omega,
            Upsilon1=config.Upsilon1,
            Upsilon2=config.Upsilon2,
            omega_r=config.omega_r,
            gamma_n=config.gamma_n,
        )

    def with_g(self, g: float) -> "SusceptibilityInputs":
        return SusceptibilityInputs(g, self.Delta_s, self.Omega, self.Upsilon1, self.Upsilon2,
                                    self.omega_r, self.gamma_n)


# --- population inversion -------------------------------------------------

_HOMOTOPY_STEPS = 16


def inversion_cubic(w, inputs: SusceptibilityInputs, shift_per_w: float | None = None):
    """Residual ``(w+1)[Upsilon2^2 + (a w - Delta_s)^2] + 2 Omega^2 w`` with ``a = g^2/omega_r``."""
    a = inputs.g**2 / inputs.omega_r if shift_per_w is None else shift_per_w
    return ((w + 1.0) * (inputs.Upsilon2**2 + (a * w - inputs.Delta_s) ** 2)
            + 2.0 * inputs.Omega**2 * w)


def _roots_in_unit_interval(inputs: SusceptibilityInputs, a: float) -> list[float]:
    """All roots of the inversion cubic on [-1, 0] for shift coefficient ``a``."""
    U2, Ds, Om = inputs.Upsilon2, inputs.Delta_s, inputs.Omega
    K = U2 * U2 + Ds * Ds
    # f'(w) = 3 a^2 w^2 + 2 (a^2 - 2 a Ds) w + (K - 2 a Ds + 2 Om^2)
    c2, c1, c0 = 3.0 * a * a, 2.0 * (a * a - 2.0 * a * Ds), K - 2.0 * a * Ds + 2.0 * Om * Om
    cuts = [-1.0, 0.0]
    if c2 > 0:
        disc = c1 * c1 - 4.0 * c2 * c0
        if disc > 0:
            sq = math.sqrt(disc)
            q = -0.5 * (c1 + math.copysign(sq, c1))
            for x in (q / c2, c0 / q if q != 0 else math.nan):
                if -1.0 < x < 0.0:
                    cuts.append(x)
    cuts.sort()

    def f(w):
        return inversion_cubic(w, inputs, a)

    roots = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        flo, fhi = f(lo), f(hi)
        if flo == 0.0:
            roots.append(lo)
        elif flo * fhi < 0:
            roots.append(brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500))
    if f(cuts[-1]) == 0.0:
        roots.append(cuts[-1])
    return sorted(set(roots))


def population_inversion(inputs: SusceptibilityInputs) -> float:
    """Steady-state inversion ``w0 = 2<S_z>`` in [-1, 0].

    When the cubic has several roots in [-1, 0] the branch connected to the
    ``g = 0`` solution is followed by continuation in ``g^2`` over a geometric
    ladder of 16 steps.

    Raises
    ------
    ConsistencyError
        If no root lies in [-1, 0].
    """
    U2, Ds, Om = inputs.Upsilon2, inputs.Delta_s, inputs.Omega
    K = U2 * U2 + Ds * Ds
    w_free = -K / (K + 2.0 * Om * Om)
    a_target = inputs.g**2 / inputs.omega_r
    if a_target == 0.0:
        return w_free
    roots = _roots_in_unit_interval(inputs, a_target)
    if not roots:
        raise ConsistencyError(f"no inversion root in [-1, 0] for {inputs}")
    if len(roots) == 1:
        return roots[0]
    # a ~ sqrt(K + 2 Omega^2) is where the cubic term starts to matter
    a_start = min(a_target, 1e-6 * math.sqrt(K + 2.0 * Om * Om))
    ratio = (a_target / a_start) ** (1.0 / _HOMOTOPY_STEPS)
    w = w_free
    for k in range(_HOMOTOPY_STEPS + 1):
        a = a_start * ratio**k if k < _HOMOTOPY_STEPS else a_target
        candidates = _roots_in_unit_interval(inputs, a)
        if not candidates:
            raise ConsistencyError(f"continuation lost the root at a={a!r}")
        w = min(candidates, key=lambda r: abs(r - w))
    return w


# --- closed form ------------------------------------------------------------

def eta(delta, inputs: SusceptibilityInputs):
    """Mechanical response ``omega_r / (omega_r^2 - delta^2 - i delta gamma_n)``."""
    wr = inputs.omega_r
    delta = np.asarray(delta, dtype=float)
    out = wr / (wr * wr - delta * delta - 1j * delta * inputs.gamma_n)
    return out[()] if out.ndim == 0 else out


def closed_form_coefficients(delta, inputs: SusceptibilityInputs, omega0: float | None = None) -> dict:
    """Intermediate coefficients ``omega0, B, D, E, eta, A, C, numerator, denominator``."""
    if omega0 is None:
        omega0 = population_inversion(inputs)
    return kernels.closed_form_terms(delta, inputs.g, inputs.Delta_s, inputs.Omega, inputs.Upsilon1,
                                     inputs.Upsilon2, inputs.omega_r, inputs.gamma_n, omega0)


def chi_bracket(delta: float, inputs: SusceptibilityInputs, omega0: float | None = None) -> complex:
    """Closed-form probe bracket at one detuning (s).

    Raises
    ------
    SingularityError
        If ``|C Omega - A D| < 1e-300``.
    """
    c = closed_form_coefficients(float(delta), inputs, omega0)
    den = complex(c["denominator"])
    if abs(den) < 1e-300:
        raise SingularityError(f"closed-form denominator vanishes at delta={delta!r}", delta=delta)
    return complex(c["numerator"]) / den


def susceptibility(delta: float, inputs: SusceptibilityInputs, mu_dipole: float,
                   consts: PhysicalConstants = CONSTANTS) -> complex:
    """Dimensional first-order susceptibility ``mu^2/hbar * bracket``."""
    return mu_dipole**2 / consts.hbar * chi_bracket(delta, inputs)


# --- spectra ----------------------------------------------------------------

class SpectrumPoint(NamedTuple):
    delta: float
    chi_bracket: complex
    absorption: float
    singular: bool


@dataclass(frozen=True)
class Spectrum:
    """Uniformly sampled probe response, ordered by detuning."""

    inputs: SusceptibilityInputs
    omega0: float
    delta: np.ndarray
    bracket: np.ndarray
    absorption: np.ndarray

    @property
    def singular(self) -> np.ndarray:
        return ~np.isfinite(self.bracket)

    def __len__(self):
        return len(self.delta)

    def points(self) -> Iterator[SpectrumPoint]:
        sing = self.singular
        for i in range(len(self.delta)):
            yield SpectrumPoint(float(self.delta[i]), complex(self.bracket[i]),
                                float(self.absorption[i]), bool(sing[i]))


def spectrum_scan(inputs: SusceptibilityInputs, window: tuple[float, float], n_points: int) -> Spectrum:
    """Closed-form spectrum at ``n_points`` evenly spaced detunings in ``window``.

    Singular detunings come back as NaN and are flagged in
    :attr:`Spectrum.singular` instead of aborting the scan.
    """
    lo, hi = window
    if not lo < hi:
        raise DomainError(f"window must satisfy lo < hi, got {window!r}")
    if n_points < 2:
        raise DomainError(f"need at least 2 points, got {n_points}")
    delta = np.linspace(lo, hi, int(n_points))
    w0 = population_inversion(inputs)
    bracket = kernels.bracket_array(delta, inputs.g, inputs.Delta_s, inputs.Omega, inputs.Upsilon1,
                                    inputs.Upsilon2, inputs.omega_r, inputs.gamma_n, w0)
    return Spectrum(inputs, w0, delta, bracket, inputs.Upsilon2 * bracket.imag)


@dataclass(frozen=True)
class PeakReport:
    """Signed peak height above a smooth background.

    ``baseline`` is the background value at ``center``; ``height`` is
    ``absorption(center) - baseline``.
    """

    center: float
    height: float
    baseline: float
    window: tuple[float, float]


_OUTER_FRACTION = 0.2
_FLAT_RTOL = 1e-9


def _background_fit(x, y, mask):
    # quadratic through the outer samples; the far-detuned tail is smooth
    return np.polynomial.Polynomial.fit(x[mask], y[mask], 2)


def peak_report(spectrum: Spectrum, expected_center: float) -> PeakReport:
    """Locate the sharp feature near ``expected_center`` and measure it.

    The background is a least-squares quadratic through the outer 20% of
    the window (10% on each side). The extremum of the residual gives the
    center and signed height.

    Raises
    ------
    WindowTooNarrowError
        If a non-negligible extremum falls on the first or last sample.
    """
    delta, absorption = spectrum.delta, spectrum.absorption
    n = len(delta)
    lo, hi = float(delta[0]), float(delta[-1])
    if not lo <= expected_center <= hi:
        raise DomainError(f"expected center {expected_center!r} outside window [{lo!r}, {hi!r}]")
    if n < 10:
        raise DomainError(f"peak analysis needs at least 10 samples, got {n}")
    if not np.all(np.isfinite(absorption)):
        raise SingularityError("spectrum contains singular points", delta=float(delta[~np.isfinite(absorption)][0]))
    n_side = max(1, int(round(0.5 * _OUTER_FRACTION * n)))
    mask = np.zeros(n, dtype=bool)
    mask[:n_side] = True
    mask[n - n_side:] = True
    background = _background_fit(delta, absorption, mask)(delta)
    residual = absorption - background
    i = int(np.argmax(np.abs(residual)))
    scale = float(np.max(np.abs(background)))
    significant = abs(residual[i]) > _FLAT_RTOL * scale + 1e-30
    if significant and (i == 0 or i == n - 1):
        raise WindowTooNarrowError(f"extremum at window edge delta={delta[i]!r}; widen the window")
    return PeakReport(center=float(delta[i]), height=float(residual[i]),
                      baseline=float(background[i]), window=(lo, hi))


class HeightPoint(NamedTuple):
    g: float
    height_pos: float
    height_neg: float


def height_vs_g(inputs: SusceptibilityInputs, g_grid: Sequence[float], half_width: float = 50.0,
                n_points: int = 2001) -> list[HeightPoint]:
    """Peak heights at ``+omega_r`` and ``-omega_r`` for each coupling in ``g_grid``.

    Output order follows ``g_grid``.
    """
    g_values = [float(g) for g in g_grid]
    if not g_values:
        raise DomainError("g grid is empty")
    if any(not (g >= 0 and math.isfinite(g)) for g in g_values):
        raise DomainError("g values must be non-negative and finite")
    wr = inputs.omega_r
    out = []
    for g in g_values:
        inp = inputs.with_g(g)
        pos = peak_report(spectrum_scan(inp, (wr - half_width, wr + half_width), n_points), wr)
        neg = peak_report(spectrum_scan(inp, (-wr - half_width, -wr + half_width), n_points), -wr)
        out.append(HeightPoint(g, pos.height, neg.height))
    return out
