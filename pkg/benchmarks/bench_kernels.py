"""Time the compiled and pure-Python kernels on the same workloads.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints best-of-N wall times per backend and the speedup. Backends that are
not importable are reported and skipped.
"""

import argparse
import math
import timeit

import numpy as np

from nvaxial import kernels
from nvaxial.params import default_config
from nvaxial.susceptibility import SusceptibilityInputs, population_inversion


def workloads():
    inp = SusceptibilityInputs.from_config(default_config(), 1.0)
    w0 = population_inversion(inp)
    rates = (inp.g, inp.Delta_s, inp.Omega, inp.Upsilon1, inp.Upsilon2, inp.omega_r, inp.gamma_n)
    delta = np.linspace(inp.omega_r - 50, inp.omega_r + 50, 200_001)

    td = SusceptibilityInputs.from_config(default_config().with_(Q=100.0), 50.0)
    td_rates = (td.g, td.Delta_s, td.Omega, td.Upsilon1, td.Upsilon2, td.omega_r, td.gamma_n)
    n_per = 64
    dt = 2 * math.pi / td.omega_r / n_per
    td_args = (td.omega_r, *td_rates, 1.0, dt, 20_000, n_per, 40, 4)

    return {
        "bracket_array (200k detunings)": lambda b: b.bracket_array(delta, *rates, w0),
        "integrate_probe_response (22.6k RK4 steps)": lambda b: b.integrate_probe_response(*td_args),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    names = kernels.available_backends()
    for missing in {"python", "cython"} - set(names):
        print(f"backend {missing!r} not available; skipped")
    for label, job in workloads().items():
        times = {}
        for name in names:
            backend = kernels.get_backend(name)
            times[name] = min(timeit.repeat(lambda: job(backend), number=1, repeat=args.repeat))
        line = "  ".join(f"{n}={t * 1e3:9.2f} ms" for n, t in times.items())
        if len(times) == 2:
            line += f"  speedup x{times['python'] / times['cython']:.1f}"
        print(f"{label:45s} {line}")


if __name__ == "__main__":
    main()
