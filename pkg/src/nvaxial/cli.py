"""Command-line front end.

Every subcommand writes its outputs into ``--out`` together with a
``<command>_manifest.json`` listing the resolved configuration, input
digests and every file produced. Exit codes: 0 success, 1 verification
failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, kernels
from .coupling import AxialCoupling
from .errors import ConfigError, DomainError, NVAxialError, WindowTooNarrowError
from .exclusion import (LAMBDA_MAX, LAMBDA_MIN, ThresholdSpec, exclusion_curve, format_exclusion_csv,
                        validation_report)
from .oracles import (TimeDomainSpec, compare_closed_form, cubic_roots_companion, gradient_check,
                      linear_system_chi, time_domain_chi)
from .params import ExperimentConfig, config_to_text, load_config
from .susceptibility import (SusceptibilityInputs, height_vs_g, peak_report, population_inversion,
                             spectrum_scan)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2

LINEAR_G_GRID = (0.0, 0.3, 1.0, 100.0)
LINEAR_N_DELTA = 41
TIMEDOMAIN_FRACTIONS = (0.9, 1.0, 1.1)
_PLOT_BOUND_MAX = 1e100


@dataclass
class RunManifest:
    """What a run consumed and produced; written next to the outputs."""

    command: str
    arguments: dict
    config: dict
    config_text: str
    version: str
    backend: str
    inputs: dict = field(default_factory=dict)  # path -> sha256
    outputs: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def write(self, out_dir: Path) -> Path:
        path = out_dir / f"{self.command}_manifest.json"
        self.outputs.append(path.name)
        path.write_text(json.dumps(_jsonable(asdict(self)), indent=2, sort_keys=True) + "\n")
        return path


def _jsonable(obj):
    """Replace complex and non-finite numbers so the JSON stays standard."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return [_jsonable(float(obj.real)), _jsonable(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# --- plotting -------------------------------------------------------------------

def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    matplotlib.rcParams["svg.hashsalt"] = "nvaxial"
    matplotlib.rcParams["svg.fonttype"] = "none"
    return plt


def _save_svg(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})


def _plot_spectrum(spec, path: Path, annotate_at: float | None) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(spec.delta, spec.absorption, lw=1.0)
    if annotate_at is not None:
        ax.axvline(annotate_at, color="0.6", lw=0.8, ls="--")
    ax.set_xlabel("probe detuning δ (rad/s)")
    ax.set_ylabel("absorption Υ₂·Im χ (arb.)")
    ax.set_title(f"g = {spec.inputs.g:g} rad/s")
    fig.tight_layout()
    _save_svg(fig, path)
    plt.close(fig)


def _plot_heights(points, path: Path) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    g = np.array([p.g for p in points])
    pos = np.abs([p.height_pos for p in points])
    neg = np.abs([p.height_neg for p in points])
    ax.plot(g, pos, "o-", label="positive peak (+ω_r)")
    ax.plot(g, neg, "s--", label="negative peak (−ω_r), magnitude")
    ax.set_xscale("log")
    if np.all(pos > 0) and np.all(neg > 0):
        ax.set_yscale("log")
    ax.set_xlabel("spin-phonon coupling g (rad/s)")
    ax.set_ylabel("peak height (arb.)")
    ax.legend()
    fig.tight_layout()
    _save_svg(fig, path)
    plt.close(fig)


def _plot_exclusion(points, path: Path) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    lam = np.array([p.lam for p in points])
    bound = np.array([p.alpha_bound for p in points])
    # log tick placement overflows near the double limit, so very weak bounds are not drawn
    shown = np.isfinite(bound) & (bound <= _PLOT_BOUND_MAX)
    ax.plot(lam[shown], bound[shown], lw=1.2)
    ax.set_xscale("log")
    ax.set_yscale("log")
    if not shown.all():
        ax.set_title(f"bounds above {_PLOT_BOUND_MAX:.0e} omitted", fontsize=9)
    ax.set_xlabel("interaction range λ (m)")
    ax.set_ylabel("upper limit on α")
    fig.tight_layout()
    _save_svg(fig, path)
    plt.close(fig)


# --- commands -------------------------------------------------------------------

def _start(args, command: str) -> tuple[ExperimentConfig, RunManifest, Path]:
    config = load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    arguments = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}
    manifest = RunManifest(command=command, arguments=arguments, config=asdict(config),
                           config_text=config_to_text(config), version=__version__,
                           backend=kernels.backend_name())
    if args.config is not None:
        manifest.inputs[str(args.config)] = _digest(Path(args.config))
    return config, manifest, out


def cmd_spectrum(args) -> int:
    config, manifest, out = _start(args, "spectrum")
    if args.n_points < 2:
        raise DomainError(f"--n-points must be at least 2, got {args.n_points}")
    if not args.half_width > 0:
        raise DomainError("--half-width must be positive")
    wr = config.omega_r
    center = {"pos": wr, "neg": -wr}.get(args.center)
    if center is None:
        try:
            center = float(args.center)
        except ValueError:
            raise DomainError(f"--center must be pos, neg or a number, got {args.center!r}") from None
    inputs = SusceptibilityInputs.from_config(config, args.g)
    spec = spectrum_scan(inputs, (center - args.half_width, center + args.half_width), args.n_points)

    rows = ["delta,re_bracket,im_bracket,absorption"]
    for p in spec.points():
        rows.append(",".join(_fmt(x) for x in (p.delta, p.chi_bracket.real, p.chi_bracket.imag, p.absorption)))
    csv_path = out / "spectrum.csv"
    _write_text(csv_path, "\n".join(rows) + "\n")
    manifest.outputs.append(csv_path.name)
    singular = [float(d) for d in spec.delta[spec.singular]]
    if singular:
        manifest.notes.append({"singular_deltas": singular})

    if not args.no_svg:
        annotate = None
        expected = wr if abs(center - wr) <= args.half_width else (-wr if abs(center + wr) <= args.half_width else None)
        if expected is not None and args.n_points >= 10 and not singular:
            try:
                rep = peak_report(spec, expected)
            except WindowTooNarrowError:
                rep = None
            if rep is not None and abs(rep.height) > 1e-9 * abs(rep.baseline):
                annotate = rep.center
        if annotate is not None:
            manifest.notes.append({"peak_center": annotate})
        svg_path = out / "spectrum.svg"
        _plot_spectrum(spec, svg_path, annotate)
        manifest.outputs.append(svg_path.name)
    manifest.write(out)
    return EXIT_OK


def cmd_heights(args) -> int:
    config, manifest, out = _start(args, "heights")
    if not args.g:
        raise DomainError("--g needs at least one value")
    if any(not (g > 0 and math.isfinite(g)) for g in args.g):
        raise DomainError("g values must be positive")
    inputs = SusceptibilityInputs.from_config(config, 0.0)
    points = height_vs_g(inputs, args.g, half_width=args.half_width, n_points=args.n_points)
    rows = ["g,height_pos,height_neg"]
    rows += [f"{_fmt(p.g)},{_fmt(p.height_pos)},{_fmt(p.height_neg)}" for p in points]
    csv_path = out / "heights.csv"
    _write_text(csv_path, "\n".join(rows) + "\n")
    manifest.outputs.append(csv_path.name)
    if not args.no_svg:
        svg_path = out / "heights.svg"
        _plot_heights(points, svg_path)
        manifest.outputs.append(svg_path.name)
    manifest.write(out)
    return EXIT_OK


def cmd_constrain(args) -> int:
    config, manifest, out = _start(args, "constrain")
    lo, hi, n = args.lambda_lo, args.lambda_hi, args.n
    if n < 1:
        raise DomainError("--n must be at least 1")
    if not (LAMBDA_MIN <= lo <= hi <= LAMBDA_MAX):
        raise DomainError(f"need {LAMBDA_MIN:g} <= lambda_lo <= lambda_hi <= {LAMBDA_MAX:g} m")
    if n > 1 and not lo < hi:
        raise DomainError("lambda_lo must be below lambda_hi when n > 1")
    grid = [lo] if n == 1 else np.logspace(math.log10(lo), math.log10(hi), n)
    threshold = ThresholdSpec(args.g_c)
    points = exclusion_curve(threshold, grid, config)
    csv_path = out / "exclusion.csv"
    _write_text(csv_path, format_exclusion_csv(points))
    manifest.outputs.append(csv_path.name)

    report = validation_report(threshold, [p.lam for p in points], config)
    report_path = out / "exclusion_validation.json"
    _write_text(report_path, json.dumps(_jsonable({
        "rtol": 0.01,
        "flagged": sum(r["flagged"] for r in report),
        "rows": report,
    }), indent=2) + "\n")
    manifest.outputs.append(report_path.name)
    if not args.no_svg:
        svg_path = out / "exclusion.svg"
        _plot_exclusion(points, svg_path)
        manifest.outputs.append(svg_path.name)
    manifest.write(out)
    return EXIT_OK


def _entry(name, expected, actual, rel_err, passed, message=None) -> dict:
    e = {"name": name, "expected": expected, "actual": actual, "rel_err": rel_err, "pass": bool(passed)}
    if message:
        e["message"] = message
    return e


def _suite_quadrature(config: ExperimentConfig) -> list[dict]:
    entries = []
    for coupling in (AxialCoupling(0.0, 1e-7), AxialCoupling(1e-40, 1e-7)):
        try:
            r = gradient_check(coupling, config)
        except NVAxialError as exc:
            entries.append(_entry(f"gradient alpha={coupling.alpha!r} lam={coupling.lam!r}",
                                  None, None, None, False, str(exc)))
            continue
        entries.append(_entry(r["name"], r["expected"], r["actual"], r["rel_err"], r["pass"], r.get("message")))
    return entries


def _suite_linear(config: ExperimentConfig) -> list[dict]:
    entries = []
    wr = config.omega_r
    deltas = np.concatenate([np.linspace(wr - 50, wr + 50, LINEAR_N_DELTA),
                             np.linspace(-wr - 50, -wr + 50, LINEAR_N_DELTA)])
    for g in LINEAR_G_GRID:
        inputs = SusceptibilityInputs.from_config(config, g)
        try:
            w = population_inversion(inputs)
            roots = cubic_roots_companion(inputs)
            nearest = min(roots, key=lambda r: abs(r - w)) if roots else math.nan
            err = abs(nearest - w)
            entries.append(_entry(f"inversion g={g!r}", nearest, w, err, err < 1e-12))
            rep = compare_closed_form(deltas, inputs, rtol=1e-10)
        except NVAxialError as exc:
            entries.append(_entry(f"closed form vs linear system g={g!r}", None, None, None, False, str(exc)))
            continue
        worst = max(rep["points"], key=lambda p: p["rel_err"])
        msg = None
        if rep["discrepancy"] is not None:
            msg = f"first differing coefficient: {rep['discrepancy']['coefficient']}"
        entries.append(_entry(f"closed form vs linear system g={g!r} ({len(deltas)} detunings)",
                              complex(*worst["linear"]), complex(*worst["closed"]),
                              rep["max_rel_err"], rep["pass"], msg))
    return entries


def _suite_timedomain(config: ExperimentConfig, g: float) -> list[dict]:
    entries = []
    inputs = SusceptibilityInputs.from_config(config, g)
    spec = TimeDomainSpec()
    for frac in TIMEDOMAIN_FRACTIONS:
        delta = frac * config.omega_r
        name = f"time domain vs linear system g={g!r} delta={frac:g}*omega_r"
        try:
            expected = linear_system_chi(delta, inputs)
            actual = time_domain_chi(delta, inputs, spec)
        except NVAxialError as exc:
            entries.append(_entry(name, None, None, None, False, str(exc)))
            continue
        rel = abs(actual - expected) / abs(expected)
        entries.append(_entry(name, expected, actual, rel, rel < 1e-2))
    return entries


def cmd_verify(args) -> int:
    config, manifest, out = _start(args, "verify")
    suites = ["quadrature", "linear", "timedomain"] if args.suite == "all" else [args.suite]
    entries = []
    for suite in suites:
        if suite == "quadrature":
            batch = _suite_quadrature(config)
        elif suite == "linear":
            batch = _suite_linear(config)
        else:
            batch = _suite_timedomain(config, args.g)
        for e in batch:
            e["suite"] = suite
        entries.extend(batch)
    passed = all(e["pass"] for e in entries)
    report = {"suite": args.suite, "pass": passed, "entries": entries}
    report_path = out / "verify_report.json"
    _write_text(report_path, json.dumps(_jsonable(report), indent=2) + "\n")
    manifest.outputs.append(report_path.name)
    manifest.write(out)
    for e in entries:
        status = "PASS" if e["pass"] else "FAIL"
        line = f"{status} [{e['suite']}] {e['name']}"
        if e["rel_err"] is not None:
            line += f" rel_err={e['rel_err']:.3g}"
        if e.get("message"):
            line += f" :: {e['message']}"
        print(line)
    return EXIT_OK if passed else EXIT_VERIFY_FAILED


# --- parser ---------------------------------------------------------------------

def _float_list(text: str) -> list[float]:
    text = text.strip()
    if not text:
        return []
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="key = value parameter file (defaults built in)")
    common.add_argument("--out", default="out", help="output directory (created if missing)")
    common.add_argument("--no-svg", action="store_true", help="skip SVG plots")

    parser = argparse.ArgumentParser(prog="nvaxial", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--backend", choices=["auto", "python", "cython"], default="auto",
                        help="kernel implementation (default: compiled when available)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", parents=[common], help="probe absorption spectrum")
    p.add_argument("--g", type=float, required=True, help="spin-phonon coupling (rad/s)")
    p.add_argument("--center", default="pos", help="pos, neg (=+/-omega_r) or a detuning in rad/s")
    p.add_argument("--half-width", type=float, default=50.0, help="rad/s")
    p.add_argument("--n-points", type=int, default=2001)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("heights", parents=[common], help="peak heights versus g")
    p.add_argument("--g", type=_float_list, required=True, help="comma-separated couplings (rad/s)")
    p.add_argument("--half-width", type=float, default=50.0)
    p.add_argument("--n-points", type=int, default=2001)
    p.set_defaults(func=cmd_heights)

    p = sub.add_parser("constrain", parents=[common], help="exclusion curve alpha(lambda)")
    p.add_argument("--g-c", type=float, default=0.3, help="detection threshold on g (rad/s)")
    p.add_argument("--lambda-lo", type=float, default=LAMBDA_MIN)
    p.add_argument("--lambda-hi", type=float, default=LAMBDA_MAX)
    p.add_argument("--n", type=int, default=181)
    p.set_defaults(func=cmd_constrain)

    p = sub.add_parser("verify", parents=[common], help="run the verification oracles")
    p.add_argument("--suite", choices=["quadrature", "linear", "timedomain", "all"], default="all")
    p.add_argument("--g", type=float, default=1.0, help="coupling used by the time-domain suite (rad/s)")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    backend = args.__dict__.pop("backend")
    previous = None
    try:
        if backend != "auto":
            previous = kernels.set_backend(backend)
        return args.func(args)
    except ConfigError as exc:
        print(f"nvaxial: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, ImportError, OSError) as exc:
        print(f"nvaxial: {exc}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        if previous is not None:
            kernels.set_backend(previous)


if __name__ == "__main__":
    sys.exit(main())
