"""Pure Python / NumPy kernels. Mirrors the compiled ``_core`` module exactly."""

import cmath

import numpy as np

BACKEND = "python"


def closed_form_terms(delta, g, Delta_s, Omega, Upsilon1, Upsilon2, omega_r, gamma_n, omega0):
    """All intermediate terms of the closed-form probe response.

    Works elementwise on arrays of ``delta``. Returns a dict with keys
    ``omega0, B, D, E, eta, A, C, numerator, denominator``.
    """
    delta = np.asarray(delta, dtype=float)
    shift = g * g * omega0 / omega_r
    eta = omega_r / (omega_r * omega_r - delta * delta - 1j * delta * gamma_n)
    B = Omega * omega0 / (1j * Upsilon2 - Delta_s + shift)
    Bc = np.conj(B)
    D = Delta_s - 1j * Upsilon2 - shift - delta
    E = Delta_s + 1j * Upsilon2 - shift + delta
    A = 2.0 * g * g * eta * Bc * Omega - 2.0 * Omega * Omega + E * (delta + 1j * Upsilon1)
    C = 2.0 * E * (g * g * eta * B - Omega)
    return {
        "omega0": omega0,
        "B": B,
        "D": D,
        "E": E,
        "eta": eta,
        "A": A,
        "C": C,
        "numerator": omega0 * A + Bc * C,
        "denominator": C * Omega - A * D,
    }


def bracket_array(delta, g, Delta_s, Omega, Upsilon1, Upsilon2, omega_r, gamma_n, omega0):
    """Closed-form bracket for every detuning; NaN where the denominator vanishes."""
    terms = closed_form_terms(delta, g, Delta_s, Omega, Upsilon1, Upsilon2, omega_r, gamma_n, omega0)
    den = np.atleast_1d(terms["denominator"])
    num = np.atleast_1d(terms["numerator"]) * np.ones_like(den)
    out = np.full(den.shape, complex(np.nan, np.nan))
    ok = np.abs(den) >= 1e-300
    out[ok] = num[ok] / den[ok]
    return out


def _rhs(sz, s, tau, v, ph, delta_s, g, Omega, U1, U2, wr, gn, eps):
    # ph = exp(+i delta t)
    sph = s * ph
    dsz = -U1 * (sz + 0.5) + 2.0 * Omega * s.imag + 2.0 * eps * sph.imag
    ds = (-(U2 + 1j * (delta_s + g * tau)) * s
          - 2j * Omega * sz - 2j * eps * sz * ph.conjugate())
    dv = -gn * v - wr * wr * tau - 2.0 * g * wr * sz
    return dsz, ds, v, dv


def integrate_probe_response(delta, g, Delta_s, Omega, Upsilon1, Upsilon2, omega_r, gamma_n,
                             eps, dt, n_settle, n_per, n_cycles, n_blocks):
    """Fixed-step RK4 of the mean-field equations with the probe on.

    Starts in the spin ground state with the resonator at rest, runs
    ``n_settle`` steps, then averages ``S^-(t) exp(i delta t)`` with the
    trapezoidal rule over ``n_cycles * n_per`` steps split into ``n_blocks``
    equal blocks. Plain left-point sums would let the slowly settling
    stationary coherence leak in at first order in ``dt``.
    ``dt * delta * n_per`` must be a multiple of 2 pi for the demodulation
    to be exact.

    Returns
    -------
    numpy.ndarray
        Complex block means, length ``n_blocks``.
    """
    if n_cycles % n_blocks:
        raise ValueError("n_cycles must be divisible by n_blocks")
    half = 0.5 * dt
    # phase table at half-step resolution over one probe period
    table = [cmath.exp(1j * delta * half * j) for j in range(2 * n_per)]
    sz, s, tau, v = -0.5, 0j, 0.0, 0.0
    per_block = (n_cycles // n_blocks) * n_per
    total = n_settle + n_cycles * n_per
    out = np.zeros(n_blocks, dtype=complex)
    acc = 0j
    args = (Delta_s, g, Omega, Upsilon1, Upsilon2, omega_r, gamma_n, eps)
    j = 0  # index of t_k in the half-step table
    for k in range(total):
        p0 = table[j]
        if k >= n_settle:
            # trapezoidal weights: a block's end sample is shared with the next block
            q = k - n_settle
            f = s * p0
            if q % per_block == 0:
                if q:
                    out[q // per_block - 1] = (acc + 0.5 * f) / per_block
                acc = 0.5 * f
            else:
                acc += f
        jm = j + 1
        p1 = table[jm if jm < 2 * n_per else jm - 2 * n_per]
        jn = j + 2
        if jn >= 2 * n_per:
            jn -= 2 * n_per
        p2 = table[jn]
        a1, b1, c1, d1 = _rhs(sz, s, tau, v, p0, *args)
        a2, b2, c2, d2 = _rhs(sz + half * a1, s + half * b1, tau + half * c1, v + half * d1, p1, *args)
        a3, b3, c3, d3 = _rhs(sz + half * a2, s + half * b2, tau + half * c2, v + half * d2, p1, *args)
        a4, b4, c4, d4 = _rhs(sz + dt * a3, s + dt * b3, tau + dt * c3, v + dt * d3, p2, *args)
        w = dt / 6.0
        sz += w * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        s += w * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        tau += w * (c1 + 2.0 * c2 + 2.0 * c3 + c4)
        v += w * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
        j = jn
    out[n_blocks - 1] = (acc + 0.5 * s * table[j]) / per_block
    return out


__all__ = ["BACKEND", "closed_form_terms", "bracket_array", "integrate_probe_response"]
