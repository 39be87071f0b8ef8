import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nvaxial.coupling import (AxialCoupling, b_eff_point, coupling_g, coupling_result, exotic_prefactor,
                              log_neg_u_exotic_factor, u_exotic_factor, u_magnetic, u_total,
                              zero_point_amplitude)
from nvaxial.errors import DomainError
from nvaxial.exclusion import default_lambda_grid
from nvaxial.oracles import onaxis_magnetic_field
from nvaxial.params import CONSTANTS as K, default_config

MAGIC = math.acos(1.0 / math.sqrt(3.0))


def test_b_eff_magic_angle_zero():
    c = AxialCoupling(0.0, 1e-7)
    on_axis = abs(b_eff_point(1e-7, 0.0, c))
    assert abs(b_eff_point(1e-7, MAGIC, c)) < 1e-15 * on_axis


def test_b_eff_on_axis_magnetic():
    r = 1.3e-7
    expected = -K.mu0 * K.nu * K.hbar / (4 * math.pi * r**3)
    assert b_eff_point(r, 0.0, AxialCoupling(0.0, 1e-7)) == pytest.approx(expected, rel=1e-14)


def test_b_eff_term_by_term(cfg):
    r, lam, alpha = cfg.d, 1e-7, 1e-30
    mag = -K.mu0 * K.nu * K.hbar * (3 * 1.0 - 1) / (8 * math.pi * r**3)
    exo = alpha * 2 * K.c / K.nu * math.exp(-r / lam) / r
    assert b_eff_point(r, 0.0, AxialCoupling(alpha, lam)) == pytest.approx(mag + exo, rel=1e-14)


def test_b_eff_rejects_nonpositive_r():
    with pytest.raises(DomainError):
        b_eff_point(0.0, 0.0, AxialCoupling(0.0, 1e-7))


def test_coupling_validation():
    with pytest.raises(DomainError):
        AxialCoupling(1.0, 0.0)
    with pytest.raises(DomainError):
        AxialCoupling(math.nan, 1e-7)


def test_u2_zero_thickness():
    geom = SimpleNamespace(R=5e-7, d=8e-8, h=0.0)
    assert u_magnetic(geom)[0] == 0.0


def test_u2_positive_and_matches_onaxis_derivative(cfg):
    u2, mag = u_magnetic(cfg)
    assert u2 > 0
    step = cfg.d * 1e-4
    fd = (onaxis_magnetic_field(cfg.d + step, cfg) - onaxis_magnetic_field(cfg.d - step, cfg)) / (2 * step)
    assert fd == pytest.approx(cfg.rho * cfg.P0 * mag, rel=1e-7)


def test_u1_examples(cfg):
    assert u_exotic_factor(1e-12, cfg) == 0.0
    assert abs(u_exotic_factor(1e-1, cfg)) < 1e-5
    assert u_exotic_factor(1e-7, cfg) == pytest.approx(-0.176, abs=1e-3)
    with pytest.raises(DomainError):
        u_exotic_factor(0.0, cfg)
    with pytest.raises(DomainError):
        u_exotic_factor(-1e-7, cfg)


def test_u1_matches_four_exponentials(cfg):
    R, d, h = cfg.R, cfg.d, cfg.h
    for lam in (3e-8, 1e-7, 1e-6):
        direct = (math.exp(-math.hypot(R, d) / lam) + math.exp(-(d + h) / lam)
                  - math.exp(-math.hypot(R, d + h) / lam) - math.exp(-d / lam))
        assert u_exotic_factor(lam, cfg) == pytest.approx(direct, rel=1e-12)


def test_u1_sign_and_lambda_u1_monotone(cfg):
    grid = default_lambda_grid()
    u1 = np.array([u_exotic_factor(x, cfg) for x in grid])
    assert np.all(u1 <= 0)
    lu = grid * u1
    assert np.all(np.diff(lu) <= 0)
    R, d, h = cfg.R, cfg.d, cfg.h
    limit = d + math.hypot(R, d + h) - (d + h) - math.hypot(R, d)
    assert limit < 0
    assert lu[-1] == pytest.approx(limit, rel=1e-5)


def test_log_neg_u1(cfg):
    for lam in (1e-9, 1e-7, 1e-3):
        assert log_neg_u_exotic_factor(lam, cfg) == pytest.approx(math.log(-u_exotic_factor(lam, cfg)), rel=1e-12)
    # finite where u1 itself underflows to zero
    assert u_exotic_factor(1e-10, cfg) == 0.0
    assert math.isfinite(log_neg_u_exotic_factor(1e-10, cfg))


def test_u_total_alpha_zero_is_magnetic(cfg):
    assert u_total(AxialCoupling(0.0, 1e-7), cfg) == u_magnetic(cfg)[1]


@given(alpha=st.floats(min_value=-1e-12, max_value=1e-12), lam=st.floats(min_value=1e-9, max_value=1e-1))
def test_u_total_affine(alpha, lam):
    cfg = default_config()
    u0 = u_total(AxialCoupling(0.0, lam), cfg)
    u1 = u_total(AxialCoupling(alpha, lam), cfg)
    u2 = u_total(AxialCoupling(2 * alpha, lam), cfg)
    slope = exotic_prefactor(lam) * u_exotic_factor(lam, cfg)
    scale = abs(u0) + abs(2 * alpha * slope)
    assert abs((u2 - u0) - 2 * (u1 - u0)) <= 1e-12 * scale
    assert abs((u1 - u0) - alpha * slope) <= 1e-12 * scale


def test_g_scales_linearly_with_rho(cfg):
    c = AxialCoupling(0.0, 1e-7)
    base = coupling_g(c, cfg)
    assert coupling_g(c, cfg.with_(rho=cfg.rho * 1e-20)) == pytest.approx(base * 1e-20, rel=1e-14)
    assert coupling_g(c, cfg.with_(rho=cfg.rho * 1e-300)) < 1e-290


def test_g_even_in_u(cfg):
    lam = 1e-7
    mag = u_magnetic(cfg)[1]
    flip = -2.0 * mag / (exotic_prefactor(lam) * u_exotic_factor(lam, cfg))
    assert u_total(AxialCoupling(flip, lam), cfg) == pytest.approx(-mag, rel=1e-12)
    assert coupling_g(AxialCoupling(flip, lam), cfg) == pytest.approx(coupling_g(AxialCoupling(0.0, lam), cfg), rel=1e-12)


@settings(max_examples=60)
@given(r=st.floats(0.2, 5.0), d=st.floats(0.2, 5.0), h=st.floats(0.2, 5.0), m=st.floats(0.1, 10.0),
       wr=st.floats(0.1, 10.0), alpha=st.floats(0.0, 1e-10), lam=st.floats(1e-9, 1e-2))
def test_eq22_equals_composed_chain(r, d, h, m, wr, alpha, lam):
    base = default_config()
    cfg = base.with_(R=base.R * r, d=base.d * d, h=base.h * h, mass=base.mass * m, omega_r=base.omega_r * wr)
    c = AxialCoupling(alpha, lam)
    res = coupling_result(c, cfg)
    a0 = math.sqrt(K.hbar / (2 * cfg.mass * cfg.omega_r))
    G_m = cfg.rho * cfg.P0 * abs(res.u)
    chain = K.g_s * K.mu_B * G_m * a0 / K.hbar
    assert res.g >= 0
    assert res.g == pytest.approx(chain, rel=1e-12)
    assert res.a0 == pytest.approx(a0, rel=1e-15)
    assert res.G_m == pytest.approx(G_m, rel=1e-15)


def test_default_g_value(cfg):
    g = coupling_g(AxialCoupling(0.0, 1e-7), cfg)
    assert 1e-3 < g < 1e-2
    assert zero_point_amplitude(cfg) == pytest.approx(math.sqrt(K.hbar / (2e-15 * 2e6)), rel=1e-15)
