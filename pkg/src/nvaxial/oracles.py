"""Slow, independent re-computations used to certify the closed forms.

* cylinder volume quadrature of the point-spin field, differentiated in the
  gap ``d``, against the kernel ``u``;
* a direct 6x6 complex solve of the linearized mean-field equations against
  the closed-form probe bracket;
* a time-domain integration of the full mean-field equations with the probe
  on, demodulated at the probe frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import kernels
from .coupling import AxialCoupling, u_total
from .errors import AccuracyError, DomainError, NotConvergedError, SingularityError
from .params import CONSTANTS, ExperimentConfig, PhysicalConstants
from .susceptibility import (SusceptibilityInputs, closed_form_coefficients,
                             population_inversion)

__all__ = [
    "QuadratureSpec",
    "TimeDomainSpec",
    "TimeDomainResult",
    "field_integral",
    "onaxis_magnetic_field",
    "gradient_oracle",
    "gradient_check",
    "cubic_roots_companion",
    "linear_system",
    "linear_system_chi",
    "system_coefficients",
    "localize_discrepancy",
    "compare_closed_form",
    "two_level_bracket",
    "run_time_domain",
    "time_domain_chi",
]


# --- volume quadrature --------------------------------------------------------

@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-13
    abs_tol: float = 0.0  # T
    max_subdivisions: int = 200

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError("rel_tol must be positive")
        if self.abs_tol < 0:
            raise DomainError("abs_tol must be non-negative")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be at least 1")


def _quad(func, a, b, spec, what):
    out = quad(func, a, b, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
               limit=spec.max_subdivisions, full_output=1)
    value, err = out[0], out[1]
    if len(out) > 3:
        raise AccuracyError(f"{what}: {out[3].splitlines()[0]}", estimate=value, error=err)
    return value


def field_integral(distance: float, coupling: AxialCoupling, config: ExperimentConfig,
                   consts: PhysicalConstants = CONSTANTS, spec: QuadratureSpec = QuadratureSpec(),
                   terms: str = "both") -> float:
    """On-axis field (T) of the polarized cylinder with its near face at ``distance``.

    Integrates the point-spin effective field over the cylinder in
    (radial ``s``, axial ``z``) coordinates with Jacobian ``2 pi s`` and
    multiplies by ``rho * P0``. ``terms`` selects ``"both"``,
    ``"magnetic"`` or ``"exotic"``.
    """
    if not distance > 0:
        raise DomainError(f"distance must be positive, got {distance!r}")
    if terms not in ("both", "magnetic", "exotic"):
        raise ValueError(f"unknown terms {terms!r}")
    mag_k = -consts.mu0 * consts.nu * consts.hbar / (8.0 * math.pi)
    exo_k = coupling.alpha * 2.0 * consts.c / consts.nu
    lam = coupling.lam
    use_mag = terms in ("both", "magnetic")
    use_exo = terms in ("both", "exotic") and exo_k != 0.0

    def radial(s, z):
        r2 = s * s + z * z
        r = math.sqrt(r2)
        val = 0.0
        if use_mag:
            val += mag_k * (3.0 * z * z / r2 - 1.0) / (r2 * r)
        if use_exo:
            val += exo_k * math.exp(-r / lam) / r
        return 2.0 * math.pi * s * val

    def slab(z):
        return _quad(lambda s: radial(s, z), 0.0, config.R, spec, f"radial integral at z={z!r}")

    total = _quad(slab, distance, distance + config.h, spec, "axial integral")
    return config.rho * config.P0 * total


def onaxis_magnetic_field(distance: float, config: ExperimentConfig,
                          consts: PhysicalConstants = CONSTANTS) -> float:
    """Closed-form magnetostatic on-axis field of the cylinder (T).

    ``-rho P0 mu0 nu hbar / 4 * [z / sqrt(R^2 + z^2)]`` evaluated between
    ``distance`` and ``distance + h``.
    """
    R = config.R
    z1, z2 = distance, distance + config.h
    bracket = z2 / math.hypot(R, z2) - z1 / math.hypot(R, z1)
    return -config.rho * config.P0 * consts.mu0 * consts.nu * consts.hbar / 4.0 * bracket


def gradient_oracle(coupling: AxialCoupling, config: ExperimentConfig,
                    consts: PhysicalConstants = CONSTANTS, spec: QuadratureSpec = QuadratureSpec(),
                    terms: str = "both", rel_step: float = 1e-5) -> float:
    """``dB/dd`` (T/m) from central differences of :func:`field_integral`.

    Step ``d * rel_step``, one Richardson extrapolation with the half step.
    """
    d = config.d
    h = d * rel_step

    def central(step):
        hi = field_integral(d + step, coupling, config, consts, spec, terms)
        lo = field_integral(d - step, coupling, config, consts, spec, terms)
        return (hi - lo) / (2.0 * step)

    return (4.0 * central(0.5 * h) - central(h)) / 3.0


def gradient_check(coupling: AxialCoupling, config: ExperimentConfig,
                   consts: PhysicalConstants = CONSTANTS, spec: QuadratureSpec = QuadratureSpec(),
                   tol: float = 1e-5) -> dict:
    """Compare the quadrature gradient with ``rho P0 u`` from the closed form."""
    expected = config.rho * config.P0 * u_total(coupling, config, consts)
    try:
        actual = gradient_oracle(coupling, config, consts, spec)
    except AccuracyError as exc:
        return {"name": f"gradient alpha={coupling.alpha!r} lam={coupling.lam!r}",
                "expected": expected, "actual": exc.estimate, "rel_err": None,
                "pass": False, "message": str(exc)}
    rel = abs(actual - expected) / abs(actual)
    return {"name": f"gradient alpha={coupling.alpha!r} lam={coupling.lam!r}",
            "expected": expected, "actual": actual, "rel_err": rel, "pass": rel < tol}


# --- linearized equations ------------------------------------------------------

def cubic_roots_companion(inputs: SusceptibilityInputs, lo: float = -1.0, hi: float = 0.0) -> list[float]:
    """Real roots of the inversion cubic in [lo, hi] via the companion matrix."""
    a = inputs.g**2 / inputs.omega_r
    Ds, U2, Om = inputs.Delta_s, inputs.Upsilon2, inputs.Omega
    K = U2 * U2 + Ds * Ds
    coeffs = [a * a, a * a - 2.0 * a * Ds, K - 2.0 * a * Ds + 2.0 * Om * Om, K]
    while coeffs and coeffs[0] == 0.0:
        coeffs.pop(0)
    roots = np.roots(coeffs)
    scale = max(1.0, float(np.max(np.abs(roots)))) if len(roots) else 1.0
    real = [float(r.real) for r in roots if abs(r.imag) <= 1e-7 * scale]
    return sorted(r for r in real if lo - 1e-12 <= r <= hi + 1e-12)


def _oracle_inversion(inputs: SusceptibilityInputs) -> float:
    roots = cubic_roots_companion(inputs)
    if len(roots) == 1:
        return roots[0]
    # several branches: defer the branch choice to the continuation policy
    return population_inversion(inputs)


def linear_system(delta: float, inputs: SusceptibilityInputs, omega0: float | None = None):
    """Coefficient matrix and right-hand side of the linearized response.

    Unknowns, in order: ``Sz+, (Sz-)*, S+, (S-)*, tau+, (tau-)*``, the
    ``exp(-i delta t)`` parts of the fluctuations (conjugating the
    ``exp(+i delta t)`` equations). The probe amplitude ``mu E2 / hbar`` is
    set to 1 so ``S+`` is the bracket directly.
    """
    w = _oracle_inversion(inputs) if omega0 is None else omega0
    g, Om, U1, U2 = inputs.g, inputs.Omega, inputs.Upsilon1, inputs.Upsilon2
    wr, gn = inputs.omega_r, inputs.gamma_n
    sz0 = 0.5 * w
    tau0 = -2.0 * g * sz0 / wr
    det = inputs.Delta_s + g * tau0  # detuning including the static displacement
    # stationary coherence from dS-/dt = 0
    s0 = -2j * Om * sz0 / (U2 + 1j * det)
    mech = wr * wr - delta * delta - 1j * delta * gn
    M = np.zeros((6, 6), dtype=complex)
    b = np.zeros(6, dtype=complex)
    # dSz/dt, exp(-i delta t) part and conjugated exp(+i delta t) part
    for row, sz_col in ((0, 0), (1, 1)):
        M[row, sz_col] = U1 - 1j * delta
        M[row, 2] = 1j * Om
        M[row, 3] = -1j * Om
        b[row] = 1j * np.conj(s0)
    # dS-/dt, exp(-i delta t)
    M[2, 2] = U2 + 1j * det - 1j * delta
    M[2, 4] = 1j * g * s0
    M[2, 0] = 2j * Om
    b[2] = -2j * sz0
    # dS-/dt, exp(+i delta t), conjugated
    M[3, 3] = U2 - 1j * det - 1j * delta
    M[3, 5] = -1j * g * np.conj(s0)
    M[3, 1] = -2j * Om
    # resonator, both sidebands
    M[4, 4] = mech
    M[4, 0] = 2.0 * g * wr
    M[5, 5] = mech
    M[5, 1] = 2.0 * g * wr
    return M, b


def linear_system_chi(delta: float, inputs: SusceptibilityInputs, omega0: float | None = None) -> complex:
    """Probe bracket from a direct solve of :func:`linear_system`."""
    M, b = linear_system(delta, inputs, omega0)
    # rows span ~omega_r^2 .. Upsilon; equilibrate before the solve
    scale = 1.0 / np.max(np.abs(M), axis=1)
    Ms, bs = M * scale[:, None], b * scale
    if np.linalg.cond(Ms) > 1e15:
        raise SingularityError(f"linearized system is singular at delta={delta!r}", delta=delta)
    return complex(np.linalg.solve(Ms, bs)[2])


def system_coefficients(delta: float, inputs: SusceptibilityInputs, omega0: float | None = None) -> dict:
    """Read the closed-form coefficients back out of :func:`linear_system`.

    Eliminating ``tau`` and ``(S-)*`` from the matrix rows gives the same
    named quantities as the closed form (``B, E, D, eta, A, C``), so the two
    routes can be compared coefficient by coefficient.
    """
    w = _oracle_inversion(inputs) if omega0 is None else omega0
    M, b = linear_system(delta, inputs, w)
    Om = inputs.Omega
    E = 1j * M[3, 3]
    D = -1j * M[2, 2]
    B = np.conj(b[0] / 1j)
    eta = inputs.omega_r / M[4, 4]
    # tau+ = -(M40/M44) Sz+ ; (tau-)* = -(M51/M55) (Sz-)*
    y_from_x = M[2, 0] - M[2, 4] * M[4, 0] / M[4, 4]
    z_from_x = M[3, 1] - M[3, 5] * M[5, 1] / M[5, 5]
    r_z = -z_from_x / M[3, 3]
    # x-row, rescaled so the S+ coefficient is E * Omega
    s = E * Om / M[0, 2]
    A = -s * (M[0, 0] + M[0, 3] * r_z)
    # y-row, rescaled so the S+ coefficient is D
    s2 = D / M[2, 2]
    C = -E * s2 * y_from_x
    return {"omega0": w, "B": complex(B), "E": complex(E), "D": complex(D), "eta": complex(eta),
            "A": complex(A), "C": complex(C)}


_COEFF_ORDER = ("omega0", "B", "E", "D", "eta", "A", "C")


def localize_discrepancy(closed: dict, system: dict, rtol: float = 1e-10) -> tuple[str, float] | None:
    """First coefficient (in dependency order) where the two routes disagree.

    Returns ``(name, relative error)`` or ``None`` when all agree.
    """
    for name in _COEFF_ORDER:
        a, b = complex(closed[name]), complex(system[name])
        ref = max(abs(a), abs(b))
        err = abs(a - b) / ref if ref else 0.0
        if err > rtol:
            return name, err
    return None


def compare_closed_form(deltas, inputs: SusceptibilityInputs, rtol: float = 1e-10) -> dict:
    """Closed form vs linear solve over ``deltas`` with a discrepancy report."""
    w = population_inversion(inputs)
    rows = []
    worst = 0.0
    first_bad = None
    for delta in np.asarray(deltas, dtype=float):
        closed_terms = closed_form_coefficients(float(delta), inputs, w)
        closed = complex(closed_terms["numerator"]) / complex(closed_terms["denominator"])
        solved = linear_system_chi(float(delta), inputs, w)
        rel = abs(closed - solved) / abs(solved)
        worst = max(worst, rel)
        ok = rel < rtol
        rows.append({"delta": float(delta), "closed": [closed.real, closed.imag],
                     "linear": [solved.real, solved.imag], "rel_err": rel, "pass": ok})
        if not ok and first_bad is None:
            loc = localize_discrepancy(
                {k: complex(v) for k, v in closed_terms.items() if k in _COEFF_ORDER},
                system_coefficients(float(delta), inputs, w), rtol)
            first_bad = {"delta": float(delta),
                         "coefficient": None if loc is None else loc[0],
                         "rel_err": None if loc is None else loc[1]}
    return {"g": inputs.g, "max_rel_err": worst, "pass": first_bad is None,
            "discrepancy": first_bad, "points": rows}


def two_level_bracket(delta: float, inputs: SusceptibilityInputs, omega0: float | None = None) -> complex:
    """Uncoupled (``g = 0``) pumped two-level response by direct elimination.

    ``Sz+ = (i B* - Omega w0 / a) / (Upsilon1 - i delta + 2 Omega^2 (1/a + 1/b))``
    and ``S+ = -i (w0 + 2 Omega Sz+) / a`` with
    ``a = Upsilon2 + i(Delta_s - delta)``, ``b = Upsilon2 - i(Delta_s + delta)``.
    ``omega0`` may be forced (e.g. -1 for an undriven spin).
    """
    U2, Ds, Om = inputs.Upsilon2, inputs.Delta_s, inputs.Omega
    if omega0 is None:
        K = U2 * U2 + Ds * Ds
        omega0 = -K / (K + 2.0 * Om * Om)
    a = U2 + 1j * (Ds - delta)
    b = U2 - 1j * (Ds + delta)
    s0 = -1j * Om * omega0 / (U2 + 1j * Ds)
    x = (1j * np.conj(s0) - Om * omega0 / a) / (inputs.Upsilon1 - 1j * delta + 2.0 * Om * Om * (1.0 / a + 1.0 / b))
    return complex(-1j * (omega0 + 2.0 * Om * x) / a)


# --- time domain ---------------------------------------------------------------

@dataclass(frozen=True)
class TimeDomainSpec:
    """Settings for the mean-field time-domain oracle.

    ``t_end`` defaults to ``settle_factor / min(Upsilon2, gamma_n)`` plus the
    demodulation window. ``dt`` is an upper bound; the step actually used
    fits a whole number of steps in one probe period.
    """

    t_end: float | None = None
    dt: float | None = None
    probe_amplitude_ratio: float = 1e-3
    demod_cycles: int = 400
    n_blocks: int = 4
    settle_factor: float = 25.0
    drift_tol: float = 1e-3
    max_steps: int = 20_000_000

    def __post_init__(self):
        if not 0 < self.probe_amplitude_ratio <= 1e-3:
            raise DomainError("probe_amplitude_ratio must lie in (0, 1e-3]")
        if self.demod_cycles < self.n_blocks or self.n_blocks < 2:
            raise DomainError("need n_blocks >= 2 and demod_cycles >= n_blocks")
        if self.settle_factor < 10:
            raise DomainError("settle_factor must be at least 10 relaxation times")
        if self.dt is not None and not self.dt > 0:
            raise DomainError("dt must be positive")


@dataclass(frozen=True)
class TimeDomainResult:
    bracket: complex
    blocks: np.ndarray  # per-block bracket estimates
    drift: float
    dt: float
    steps: int
    backend: str


def run_time_domain(delta: float, inputs: SusceptibilityInputs,
                    spec: TimeDomainSpec = TimeDomainSpec()) -> TimeDomainResult:
    """Integrate from the ground state and demodulate ``S^-`` at the probe frequency.

    Raises
    ------
    DomainError
        On invalid step size, too short a settling time, or a run that would
        exceed ``spec.max_steps`` (high-Q resonators need a reduced Q here).
    NotConvergedError
        If block estimates drift by more than ``spec.drift_tol``.
    """
    if delta == 0 or not math.isfinite(delta):
        raise DomainError("time-domain demodulation needs a non-zero finite detuning")
    wr = inputs.omega_r
    dt_limit = 2.0 * math.pi / (50.0 * wr)
    dt_max = spec.dt if spec.dt is not None else 2.0 * math.pi / (64.0 * max(wr, abs(delta)))
    if not dt_max < dt_limit:
        raise DomainError(f"dt={dt_max!r} does not resolve the resonator; need dt < {dt_limit!r}")
    period = 2.0 * math.pi / abs(delta)
    n_per = max(2, math.ceil(period / dt_max))
    dt = period / n_per
    n_blocks = spec.n_blocks
    n_cycles = -(-spec.demod_cycles // n_blocks) * n_blocks
    slowest = min(inputs.Upsilon2, inputs.gamma_n)
    min_settle = 10.0 / slowest
    if spec.t_end is None:
        settle = spec.settle_factor / slowest
    else:
        settle = spec.t_end - n_cycles * period
        if settle < min_settle:
            raise DomainError(f"t_end leaves {settle!r} s to settle; need >= {min_settle!r} s")
    n_settle = math.ceil(settle / dt)
    steps = n_settle + n_cycles * n_per
    if steps > spec.max_steps:
        hint = " (reduced-Q required: mechanical ringdown too slow)" if inputs.gamma_n < inputs.Upsilon2 else ""
        raise DomainError(f"time-domain run needs {steps} steps > max_steps={spec.max_steps}{hint}; "
                          f"Q={wr / inputs.gamma_n:.3g}")
    eps = spec.probe_amplitude_ratio * inputs.Omega
    blocks = kernels.integrate_probe_response(
        float(delta), inputs.g, inputs.Delta_s, inputs.Omega, inputs.Upsilon1, inputs.Upsilon2,
        wr, inputs.gamma_n, eps, dt, n_settle, n_per, n_cycles, n_blocks)
    blocks = np.asarray(blocks) / eps
    mean = complex(blocks.mean())
    drift = float(np.max(np.abs(blocks - mean)) / abs(mean))
    if drift > spec.drift_tol:
        raise NotConvergedError(f"demodulated response drifts by {drift:.3g} between blocks "
                                f"(tolerance {spec.drift_tol:g}); increase t_end")
    return TimeDomainResult(mean, blocks, drift, dt, steps, kernels.backend_name())


def time_domain_chi(delta: float, inputs: SusceptibilityInputs,
                    spec: TimeDomainSpec = TimeDomainSpec()) -> complex:
    """Probe bracket ``hbar S+ / (mu E2)`` from the time-domain oracle."""
    return run_time_domain(delta, inputs, spec).bracket
