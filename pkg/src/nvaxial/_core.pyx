# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Same signatures and results as ``_pycore``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, cos, sin

cnp.import_array()

BACKEND = "cython"

ctypedef double complex cplx


cdef inline double cabs_(cplx z) nogil:
    return sqrt(z.real * z.real + z.imag * z.imag)


def bracket_array(delta, double g, double Delta_s, double Omega, double Upsilon1,
                  double Upsilon2, double omega_r, double gamma_n, double omega0):
    """Closed-form bracket for every detuning; NaN where the denominator vanishes."""
    cdef cnp.ndarray[double, ndim=1] d = np.ascontiguousarray(np.atleast_1d(delta), dtype=np.float64)
    cdef Py_ssize_t n = d.shape[0], i
    cdef cnp.ndarray[cplx, ndim=1] out = np.empty(n, dtype=np.complex128)
    cdef double shift = g * g * omega0 / omega_r
    cdef double g2 = g * g
    cdef cplx I = 1j
    cdef cplx B = Omega * omega0 / (I * Upsilon2 - Delta_s + shift)
    cdef cplx Bc = B.conjugate()
    cdef cplx eta, D, E, A, C, num, den
    cdef double x
    cdef double nan = float("nan")
    with nogil:
        for i in range(n):
            x = d[i]
            eta = omega_r / (omega_r * omega_r - x * x - I * x * gamma_n)
            D = Delta_s - I * Upsilon2 - shift - x
            E = Delta_s + I * Upsilon2 - shift + x
            A = 2.0 * g2 * eta * Bc * Omega - 2.0 * Omega * Omega + E * (x + I * Upsilon1)
            C = 2.0 * E * (g2 * eta * B - Omega)
            num = omega0 * A + Bc * C
            den = C * Omega - A * D
            if cabs_(den) < 1e-300:
                out[i] = nan + nan * I
            else:
                out[i] = num / den
    return out


cdef struct Params:
    double delta_s, g, Omega, U1, U2, wr, gn, eps


cdef inline void rhs(double sz, cplx s, double tau, double v, cplx ph, Params* p,
                     double* dsz, cplx* ds, double* dtau, double* dv) nogil:
    cdef cplx sph = s * ph
    cdef cplx I = 1j
    dsz[0] = -p.U1 * (sz + 0.5) + 2.0 * p.Omega * s.imag + 2.0 * p.eps * sph.imag
    ds[0] = (-(p.U2 + I * (p.delta_s + p.g * tau)) * s
             - 2.0 * I * p.Omega * sz - 2.0 * I * p.eps * sz * ph.conjugate())
    dtau[0] = v
    dv[0] = -p.gn * v - p.wr * p.wr * tau - 2.0 * p.g * p.wr * sz


def integrate_probe_response(double delta, double g, double Delta_s, double Omega,
                             double Upsilon1, double Upsilon2, double omega_r, double gamma_n,
                             double eps, double dt, long n_settle, long n_per, long n_cycles,
                             long n_blocks):
    """Fixed-step RK4 of the mean-field equations with the probe on.

    See ``_pycore.integrate_probe_response`` for the contract.
    """
    if n_cycles % n_blocks:
        raise ValueError("n_cycles must be divisible by n_blocks")
    cdef Params p
    p.delta_s = Delta_s; p.g = g; p.Omega = Omega; p.U1 = Upsilon1; p.U2 = Upsilon2
    p.wr = omega_r; p.gn = gamma_n; p.eps = eps
    cdef double half = 0.5 * dt
    cdef long m = 2 * n_per
    cdef cnp.ndarray[cplx, ndim=1] table = np.exp(1j * delta * half * np.arange(m, dtype=np.float64))
    cdef cnp.ndarray[cplx, ndim=1] out = np.zeros(n_blocks, dtype=np.complex128)
    cdef double sz = -0.5, tau = 0.0, v = 0.0
    cdef cplx s = 0.0
    cdef long per_block = (n_cycles // n_blocks) * n_per
    cdef long total = n_settle + n_cycles * n_per
    cdef long k, j = 0, jn, q
    cdef cplx acc = 0.0, p0, p1, p2, f
    cdef double a1, a2, a3, a4, c1, c2, c3, c4, d1, d2, d3, d4
    cdef cplx b1, b2, b3, b4
    cdef double w = dt / 6.0
    with nogil:
        for k in range(total):
            p0 = table[j]
            if k >= n_settle:
                q = k - n_settle
                f = s * p0
                if q % per_block == 0:
                    if q:
                        out[q // per_block - 1] = (acc + 0.5 * f) / per_block
                    acc = 0.5 * f
                else:
                    acc = acc + f
            p1 = table[j + 1]
            jn = j + 2
            if jn >= m:
                jn = jn - m
            p2 = table[jn]
            rhs(sz, s, tau, v, p0, &p, &a1, &b1, &c1, &d1)
            rhs(sz + half * a1, s + half * b1, tau + half * c1, v + half * d1, p1, &p, &a2, &b2, &c2, &d2)
            rhs(sz + half * a2, s + half * b2, tau + half * c2, v + half * d2, p1, &p, &a3, &b3, &c3, &d3)
            rhs(sz + dt * a3, s + dt * b3, tau + dt * c3, v + dt * d3, p2, &p, &a4, &b4, &c4, &d4)
            sz = sz + w * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
            s = s + w * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
            tau = tau + w * (c1 + 2.0 * c2 + 2.0 * c3 + c4)
            v = v + w * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
            j = jn
        out[n_blocks - 1] = (acc + 0.5 * s * table[j]) / per_block
    return out
