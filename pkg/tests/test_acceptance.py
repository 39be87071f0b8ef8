"""One test per acceptance criterion, each recording a PASS/FAIL line.

Criteria that are physically unattainable with the stated tolerance are
still checked at that tolerance; they fail, and the recorded line carries
the measured value so the gap is visible.
"""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from nvaxial.cli import main
from nvaxial.coupling import AxialCoupling
from nvaxial.exclusion import (ThresholdSpec, alpha_from_g, default_lambda_grid, exclusion_bound,
                               exclusion_curve, g_from_alpha)
from nvaxial.oracles import (compare_closed_form, cubic_roots_companion, gradient_check, linear_system_chi,
                             run_time_domain)
from nvaxial.susceptibility import SusceptibilityInputs, height_vs_g, peak_report, population_inversion, spectrum_scan

HW = 50.0
N = 2001
TH = ThresholdSpec(0.3)


def record(key, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {detail}"
    ACCEPTANCE_LINES[key] = line
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def fig2(inputs0):
    t0 = time.perf_counter()
    wr = inputs0.omega_r
    out = {}
    for g in (0.0, 0.5, 1.0):
        inp = inputs0.with_g(g)
        for sign in (1, -1):
            s = spectrum_scan(inp, (sign * wr - HW, sign * wr + HW), N)
            out[g, sign] = (s, peak_report(s, sign * wr))
    return out, time.perf_counter() - t0


def test_1a_uncoupled_flat(fig2):
    spectra, elapsed = fig2
    worst = max(float(np.ptp(s.absorption) / abs(np.mean(s.absorption)))
                for (g, _), (s, _) in spectra.items() if g == 0.0)
    record("1a", worst < 1e-6 and elapsed < 10,
           f"g=0 spectrum relative spread {worst:.3e} (limit 1e-6), {elapsed:.2f}s")


def test_1b_peak_signs_and_centers(fig2):
    spectra, _ = fig2
    step = 2 * HW / (N - 1)
    ok, worst = True, 0.0
    for g in (0.5, 1.0):
        for sign in (1, -1):
            rep = spectra[g, sign][1]
            off = abs(rep.center - sign * spectra[g, sign][0].inputs.omega_r)
            worst = max(worst, off)
            ok &= off <= step and math.copysign(1.0, rep.height) == sign
    record("1b", ok, f"peak signs follow detuning sign, max center offset {worst:g} rad/s (step {step:g})")


def test_1c_height_grows(fig2):
    spectra, _ = fig2
    h05, h1 = abs(spectra[0.5, 1][1].height), abs(spectra[1.0, 1][1].height)
    h05n, h1n = abs(spectra[0.5, -1][1].height), abs(spectra[1.0, -1][1].height)
    record("1c", h1 > h05 and h1n > h05n, f"|h(g=1)|={h1:.4e} > |h(g=0.5)|={h05:.4e}")


def test_1d_equal_heights(fig2):
    spectra, _ = fig2
    worst = 0.0
    for g in (0.5, 1.0):
        hp, hn = abs(spectra[g, 1][1].height), abs(spectra[g, -1][1].height)
        worst = max(worst, abs(hp - hn) / hp)
    record("1d", worst < 0.01, f"max | |h+| - |h-| | / |h+| = {worst:.3e} (limit 1e-2)")


def test_2_monotone_heights(inputs0):
    pts = height_vs_g(inputs0, [0.3, 1.0, 10.0, 100.0, 1000.0])
    pos = [p.height_pos for p in pts]
    record("2", all(b > a for a, b in zip(pos, pos[1:])),
           "heights " + ", ".join(f"{h:.3e}" for h in pos))


def test_3_inversion():
    simple = SusceptibilityInputs(0.0, 0.0, 1e3, 2e3, 1e3, 2e6, 2.0)
    exact_err = abs(population_inversion(simple) + 1.0 / 3.0)
    rng = np.random.default_rng(20261018)
    worst = 0.0
    for _ in range(100):
        U2 = 10 ** rng.uniform(1, 4)
        inp = SusceptibilityInputs(g=10 ** rng.uniform(-2, 3), Delta_s=rng.uniform(-2e3, 2e3),
                                   Omega=10 ** rng.uniform(1, 4), Upsilon1=2 * U2, Upsilon2=U2,
                                   omega_r=10 ** rng.uniform(4, 7), gamma_n=10 ** rng.uniform(-1, 2))
        w = population_inversion(inp)
        worst = max(worst, min(abs(w - r) for r in cubic_roots_companion(inp)))
    record("3", exact_err < 1e-14 and worst < 1e-12,
           f"|w0 + 1/3| = {exact_err:.1e}, companion-root cross-check max {worst:.1e} over 100 draws")


def test_4_closed_form_vs_linear(inputs0):
    wr = inputs0.omega_r
    deltas = np.linspace(-wr - 50, wr + 50, 41)
    worst, silent = 0.0, False
    for g in (0.0, 0.3, 1.0, 100.0):
        rep = compare_closed_form(deltas, inputs0.with_g(g))
        worst = max(worst, rep["max_rel_err"])
        silent |= not rep["pass"] and not rep.get("discrepancy")
    record("4", worst < 1e-10 and not silent, f"max rel err {worst:.2e} on 41 x 4 grid (limit 1e-10)")


def test_5_quadrature(cfg):
    t0 = time.perf_counter()
    reps = [gradient_check(AxialCoupling(0.0, 1e-7), cfg), gradient_check(AxialCoupling(1e-40, 1e-7), cfg)]
    elapsed = time.perf_counter() - t0
    worst = max(r["rel_err"] for r in reps)
    record("5", worst < 1e-5 and elapsed < 60, f"gradient rel err {worst:.2e} (limit 1e-5), {elapsed:.1f}s")


def test_6_time_domain(reduced_q):
    inp = SusceptibilityInputs.from_config(reduced_q, 50.0)
    t0 = time.perf_counter()
    errs = []
    for frac in (0.9, 1.0, 1.1):
        d = frac * inp.omega_r
        ref = linear_system_chi(d, inp)
        errs.append(abs(run_time_domain(d, inp).bracket - ref) / abs(ref))
    elapsed = time.perf_counter() - t0
    record("6", max(errs) < 1e-2 and elapsed < 300,
           f"Q=100 g=50 rel errs {', '.join(f'{e:.1e}' for e in errs)} (limit 1e-2), {elapsed:.1f}s")


def test_7_constraint_identities(cfg):
    rng = np.random.default_rng(7)
    rt = 0.0
    for _ in range(200):
        lam = 10 ** rng.uniform(-9, -1)
        g = 10 ** rng.uniform(math.log10(1.001e-2), 4)
        a = alpha_from_g(g, lam, cfg)
        g_back = g_from_alpha(AxialCoupling(a, lam), cfg)
        rt = max(rt, abs(g_back - g) / g, abs(alpha_from_g(g_back, lam, cfg) - a) / abs(a))
    grid = default_lambda_grid()
    ident = max(abs(exclusion_bound(l, TH, cfg) / alpha_from_g(TH.g_c, l, cfg) - 1)
                for l in grid if math.isfinite(exclusion_bound(l, TH, cfg)))
    overlap = abs(exclusion_bound(1e-4, TH, cfg) / exclusion_bound(1e-6, TH, cfg) - 1)
    logs = [p.log10_alpha_bound for p in exclusion_curve(TH, grid, cfg)]
    monotone = all(b <= a for a, b in zip(logs, logs[1:]))
    flat = exclusion_bound(1e-4, TH, cfg) / exclusion_bound(1e-1, TH, cfg) - 1
    ok = rt < 1e-12 and ident < 1e-12 and overlap < 0.01 and monotone and abs(flat) < 0.02
    record("7", ok, f"round trip {rt:.1e}, identity {ident:.1e}, 1e-4 vs 1e-6 m differ {overlap:.3%} "
                    f"(limit 1%), monotone={monotone}, 1e-4..1e-1 spread {flat:.1e}")


def test_8_independent_evaluation(cfg):
    script = Path(__file__).with_name("independent_bound.py")
    out = subprocess.run([sys.executable, str(script), "1e-7", "0.3"], capture_output=True, text=True, check=True)
    ref = float(out.stdout.strip())
    got = exclusion_bound(1e-7, TH, cfg)
    rel = abs(got - ref) / abs(ref)
    record("8", rel < 1e-9, f"bound(1e-7 m) {got:.12e} vs independent {ref:.12e}, rel {rel:.1e}")


def test_9_determinism(tmp_path):
    same = True
    for cmd, name in ((["spectrum", "--g", "1"], "spectrum.csv"), (["constrain"], "exclusion.csv")):
        blobs = []
        for i in range(2):
            out = tmp_path / f"{cmd[0]}{i}"
            assert main([*cmd, "--no-svg", "--out", str(out)]) == 0
            blobs.append((out / name).read_bytes())
        same &= blobs[0] == blobs[1]
    record("9", same, "repeated spectrum and constrain runs give byte-identical CSV")
