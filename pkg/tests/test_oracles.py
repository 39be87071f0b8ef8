import math

import numpy as np
import pytest

import nvaxial.oracles as oracles
from nvaxial.coupling import AxialCoupling, exotic_prefactor, u_exotic_factor, u_magnetic
from nvaxial.errors import AccuracyError, DomainError, NotConvergedError
from nvaxial.oracles import (QuadratureSpec, TimeDomainSpec, compare_closed_form, field_integral,
                             gradient_check, gradient_oracle, linear_system_chi, localize_discrepancy,
                             onaxis_magnetic_field, run_time_domain, system_coefficients,
                             time_domain_chi, two_level_bracket)
from nvaxial.susceptibility import (SusceptibilityInputs, chi_bracket, closed_form_coefficients,
                                    population_inversion)

MAG = AxialCoupling(0.0, 1e-7)
EXO = AxialCoupling(1e-40, 1e-7)


# --- quadrature -------------------------------------------------------------------

def test_field_integral_scales_with_rho(cfg):
    a = field_integral(cfg.d, MAG, cfg)
    b = field_integral(cfg.d, MAG, cfg.with_(rho=cfg.rho * 1e-30))
    assert b == pytest.approx(a * 1e-30, rel=1e-13)


def test_field_integral_magnetic_matches_closed_form(cfg):
    for dist in (cfg.d, 2 * cfg.d):
        assert field_integral(dist, MAG, cfg, terms="magnetic") == pytest.approx(
            onaxis_magnetic_field(dist, cfg), rel=1e-12)


def test_field_integral_exotic_finite(cfg):
    v = field_integral(cfg.d, EXO, cfg, terms="exotic")
    assert math.isfinite(v) and v > 0
    with pytest.raises(DomainError):
        field_integral(0.0, EXO, cfg)
    with pytest.raises(ValueError):
        field_integral(cfg.d, EXO, cfg, terms="nope")


@pytest.mark.parametrize("coupling", [MAG, EXO])
def test_gradient_check(cfg, coupling):
    r = gradient_check(coupling, cfg)
    assert r["pass"] and r["rel_err"] < 1e-5


def test_gradient_sign_matches_signed_u(cfg):
    # the quadrature derivative is signed and equals rho P0 u, not its magnitude
    grad = gradient_oracle(MAG, cfg)
    assert grad == pytest.approx(cfg.rho * cfg.P0 * u_magnetic(cfg)[1], rel=1e-5)


def test_exotic_gradient_affine_in_alpha(cfg):
    g1 = gradient_oracle(AxialCoupling(1e-40, 1e-7), cfg, terms="exotic")
    g2 = gradient_oracle(AxialCoupling(2e-40, 1e-7), cfg, terms="exotic")
    assert g2 == pytest.approx(2 * g1, rel=1e-9)
    expected = cfg.rho * cfg.P0 * 1e-40 * exotic_prefactor(1e-7) * u_exotic_factor(1e-7, cfg)
    assert g1 == pytest.approx(expected, rel=1e-5)


def test_exotic_negligible_at_long_range(cfg):
    lam, alpha = 1e-1, 1e-40
    ratio = (alpha * exotic_prefactor(lam) * u_exotic_factor(lam, cfg)) / u_magnetic(cfg)[1]
    assert abs(ratio) < 1e-10
    mag = gradient_oracle(AxialCoupling(alpha, lam), cfg, terms="magnetic")
    exo = gradient_oracle(AxialCoupling(alpha, lam), cfg, terms="exotic")
    assert exo / mag == pytest.approx(ratio, rel=1e-3)


def test_quadrature_invariant_under_more_subdivisions(cfg):
    a = field_integral(cfg.d, EXO, cfg, spec=QuadratureSpec(max_subdivisions=200))
    b = field_integral(cfg.d, EXO, cfg, spec=QuadratureSpec(max_subdivisions=400))
    assert b == pytest.approx(a, rel=1e-13)


def test_quadrature_budget_exceeded(cfg):
    with pytest.raises(AccuracyError) as info:
        field_integral(cfg.d, AxialCoupling(1e-40, 1e-9), cfg, spec=QuadratureSpec(max_subdivisions=1))
    assert info.value.estimate is not None


def test_quadrature_spec_validation():
    with pytest.raises(DomainError):
        QuadratureSpec(rel_tol=0.0)
    with pytest.raises(DomainError):
        QuadratureSpec(max_subdivisions=0)


# --- linear system ---------------------------------------------------------------

def test_linear_hand_value():
    inp = SusceptibilityInputs(0.0, 0.0, 1e3, 2e3, 1e3, 2e6, 2.0)
    assert linear_system_chi(0.0, inp) == pytest.approx(1j / 9e3, rel=1e-13)


@pytest.mark.parametrize("g", [0.0, 0.3, 1.0, 100.0, 1000.0])
def test_closed_form_vs_linear_grid(inputs0, g):
    wr = inputs0.omega_r
    deltas = np.linspace(-wr - 50, wr + 50, 41)
    rep = compare_closed_form(deltas, inputs0.with_g(g))
    assert rep["pass"], rep["discrepancy"]
    assert rep["max_rel_err"] < 1e-10


def test_system_coefficients_match_closed_form(inputs0):
    inp = inputs0.with_g(100.0)
    d = inp.omega_r + 3.0
    closed = closed_form_coefficients(d, inp)
    assert localize_discrepancy({k: complex(closed[k]) for k in ("omega0", "B", "E", "D", "eta", "A", "C")},
                                system_coefficients(d, inp)) is None


def test_discrepancy_is_localized(monkeypatch, inputs0):
    """A closed form with D in place of E inside C must be caught and named."""
    real = closed_form_coefficients

    def swapped(delta, inputs, omega0=None):
        c = dict(real(delta, inputs, omega0))
        C = 2.0 * c["D"] * (inputs.g**2 * c["eta"] * c["B"] - inputs.Omega)
        c["C"] = C
        c["numerator"] = c["omega0"] * c["A"] + np.conj(c["B"]) * C
        c["denominator"] = C * inputs.Omega - c["A"] * c["D"]
        return c

    monkeypatch.setattr(oracles, "closed_form_coefficients", swapped)
    wr = inputs0.omega_r
    rep = compare_closed_form(np.linspace(wr - 50, wr + 50, 5), inputs0.with_g(1.0))
    assert not rep["pass"]
    assert rep["discrepancy"]["coefficient"] == "C"


def test_two_level_limits():
    inp = SusceptibilityInputs(0.0, 30.0, 1e-6, 2e3, 1e3, 2e6, 2.0)
    d = np.linspace(-3000, 3000, 6001)
    im = [linear_system_chi(x, inp, -1.0).imag for x in d]
    assert d[int(np.argmax(im))] == pytest.approx(30.0, abs=1.0)
    driven = SusceptibilityInputs(0.0, 120.0, 800.0, 600.0, 300.0, 2e6, 2.0)
    for x in (-500.0, 0.0, 37.0, 900.0):
        assert two_level_bracket(x, driven) == pytest.approx(chi_bracket(x, driven), rel=1e-12)


# --- time domain -------------------------------------------------------------------

@pytest.fixture(scope="module")
def td_inputs(reduced_q):
    return SusceptibilityInputs.from_config(reduced_q, 50.0)


def test_time_domain_matches_linear_at_resonance(td_inputs):
    d = td_inputs.omega_r
    res = run_time_domain(d, td_inputs)
    ref = linear_system_chi(d, td_inputs)
    assert abs(res.bracket - ref) < 1e-2 * abs(ref)
    assert res.drift < 1e-3 and len(res.blocks) == 4


def test_time_domain_linear_in_probe(td_inputs):
    d = 1.1 * td_inputs.omega_r
    a = time_domain_chi(d, td_inputs, TimeDomainSpec(probe_amplitude_ratio=1e-3))
    b = time_domain_chi(d, td_inputs, TimeDomainSpec(probe_amplitude_ratio=5e-4))
    assert abs(a - b) < 1e-3 * abs(a)


def test_time_domain_uncoupled_two_level(td_inputs):
    inp = td_inputs.with_g(0.0)
    d = 0.9 * inp.omega_r
    assert abs(time_domain_chi(d, inp) - two_level_bracket(d, inp)) < 1e-3 * abs(two_level_bracket(d, inp))


def test_time_domain_high_q_refused(inputs0):
    with pytest.raises(DomainError, match="reduced-Q required"):
        run_time_domain(inputs0.omega_r, inputs0.with_g(1.0))


def test_time_domain_guards(td_inputs):
    wr = td_inputs.omega_r
    with pytest.raises(DomainError):
        run_time_domain(wr, td_inputs, TimeDomainSpec(dt=2 * math.pi / (40 * wr)))
    with pytest.raises(DomainError):
        run_time_domain(wr, td_inputs, TimeDomainSpec(t_end=1e-3))
    with pytest.raises(DomainError):
        run_time_domain(0.0, td_inputs)
    with pytest.raises(NotConvergedError):
        run_time_domain(wr, td_inputs, TimeDomainSpec(settle_factor=10, drift_tol=1e-14))
    with pytest.raises(DomainError):
        TimeDomainSpec(probe_amplitude_ratio=1e-2)
