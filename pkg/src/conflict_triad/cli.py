"""Command-line front end.

Exit status: 0 on success, 1 on usage, parse or validation errors, 2 when
the simulated trajectory collapses (the report is still written).
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .analysis import ClassifierSettings, PhaseKind, TooShort, classify, parameter_sweep, report_line
from .bilateral import BilateralModel, iterate_bilateral
from .config import PRESETS, ExperimentConfig, ParseError, ValidationError, dump_config, get_preset, load_config
from .core import TriadError
from .export import read_trajectory, render_phase_plot, write_trajectory
from .triad import run_triad

log = logging.getLogger("conflict_triad")

EXIT_OK, EXIT_USAGE, EXIT_COLLAPSE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _floats(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _axes(text: str) -> tuple[str, str]:
    parts = [s.strip() for s in text.split(",")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two selectors like P_1,Q_1, got {text!r}")
    return parts[0], parts[1]


def _add_settings(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("classifier")
    g.add_argument("--fix-tol", type=float)
    g.add_argument("--cyc-tol", type=float)
    g.add_argument("--window", type=int)
    g.add_argument("--max-period", type=int)
    g.add_argument("--tail-fraction", type=float)


def _settings(args, base: ClassifierSettings) -> ClassifierSettings:
    changes = {
        k: getattr(args, k)
        for k in ("fix_tol", "cyc_tol", "window", "max_period", "tail_fraction")
        if getattr(args, k, None) is not None
    }
    try:
        return replace(base, **changes)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--steps", type=int, help="override the configured step count")
    p.add_argument("--output", "-o", help="trajectory CSV path")
    p.add_argument("--reg-input", choices=("pre", "post"))
    p.add_argument("--plot", type=_axes, action="append", metavar="X,Y", help="phase-plane axes, e.g. P_1,Q_1")
    p.add_argument("--plot-dir", default=".", help="directory for SVG plots (default: current)")
    _add_settings(p)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="conflict-triad", description="Simulate and classify conflict-triad dynamics.")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="simulate a configuration file")
    p.add_argument("config")
    _add_run_options(p)

    p = sub.add_parser("preset", help="run a built-in configuration")
    p.add_argument("preset", choices=sorted(PRESETS))
    p.add_argument("--describe", action="store_true", help="print the preset and its notes, then exit")
    _add_run_options(p)

    p = sub.add_parser("bilateral", help="iterate a two-substance map")
    p.add_argument("--model", required=True, choices=[m.value for m in BilateralModel])
    for letter in "pqr":
        p.add_argument(f"--{letter}", type=_floats, help=f"initial {letter} vector (comma separated)")
    p.add_argument("--steps", type=int, default=1)
    p.add_argument("--output", "-o", help="CSV path for the whole run")

    p = sub.add_parser("classify", help="classify a trajectory CSV")
    p.add_argument("trajectory")
    _add_settings(p)

    p = sub.add_parser("sweep", help="classify runs over a grid of one parameter or coordinate")
    p.add_argument("config")
    p.add_argument("--target", required=True, help="d1..c or a coordinate such as R_2")
    p.add_argument("--grid", required=True, type=_floats)
    p.add_argument("--steps", type=int)
    p.add_argument("--output", "-o", help="table path (default: stdout)")
    p.add_argument("--workers", type=int, default=1)
    _add_settings(p)
    return ap


def _simulate(cfg: ExperimentConfig, args, out_default: str) -> int:
    if args.steps is not None:
        cfg = replace(cfg, steps=args.steps)
    if args.reg_input is not None:
        cfg = replace(cfg, reg_input=args.reg_input)
    settings = _settings(args, cfg.classifier)
    traj = run_triad(cfg.triad_config(), cfg.steps)
    out = args.output or cfg.output or out_default
    write_trajectory(traj, out)
    log.info("wrote %d rows to %s", len(traj), out)
    for xs, ys in args.plot or ():
        svg = Path(args.plot_dir) / f"phase_{xs}_{ys}.svg"
        render_phase_plot(traj, (xs, ys), svg)
        log.info("wrote %s", svg)
    try:
        label = classify(traj, settings)
        print(report_line(label))
    except TooShort as exc:
        print("phase=unclassified")
        log.warning("%s", exc)
        return EXIT_OK
    return EXIT_COLLAPSE if label.kind is PhaseKind.COLLAPSE else EXIT_OK


def _cmd_run(args) -> int:
    return _simulate(load_config(args.config), args, "trajectory.csv")


def _cmd_preset(args) -> int:
    preset = get_preset(args.preset)
    if args.describe:
        print(f"# {args.preset}: {preset.description}")
        print("# plot axes: " + "; ".join(f"{x},{y}" for x, y in preset.plot_axes))
        sys.stdout.write(dump_config(preset.config))
        return EXIT_OK
    return _simulate(preset.config, args, f"{args.preset}.csv")


def _cmd_bilateral(args) -> int:
    model = BilateralModel(args.model)
    xname, yname = model.names
    x0, y0 = getattr(args, xname), getattr(args, yname)
    if x0 is None or y0 is None:
        raise UsageError(f"model {model.value} needs --{xname} and --{yname}")
    if args.steps < 1:
        raise ValidationError("steps must be >= 1")
    traj = iterate_bilateral(model, x0, y0, args.steps)
    if args.output:
        n = traj.n
        header = "step," + ",".join([f"{xname}_{i}" for i in range(1, n + 1)] + [f"{yname}_{i}" for i in range(1, n + 1)])
        with open(args.output, "w") as fh:
            fh.write(header + "\n")
            for N in range(len(traj)):
                fh.write(",".join([str(N), *(repr(float(v)) for v in np.concatenate([traj.x[N], traj.y[N]]))]) + "\n")
    print(f"{xname}=" + ",".join(repr(float(v)) for v in traj.x[-1]))
    print(f"{yname}=" + ",".join(repr(float(v)) for v in traj.y[-1]))
    print(f"theta={float(traj.conflict_index()[-1])!r}")
    if traj.collapse is not None:
        print(f"phase=collapse collapse_step={traj.collapse.step}")
        return EXIT_COLLAPSE
    return EXIT_OK


def _cmd_classify(args) -> int:
    traj = read_trajectory(args.trajectory)
    label = classify(traj, _settings(args, ClassifierSettings()))
    print(report_line(label))
    return EXIT_COLLAPSE if label.kind is PhaseKind.COLLAPSE else EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    steps = args.steps or cfg.steps
    result = parameter_sweep(
        cfg.triad_config(), args.target, args.grid, steps, _settings(args, cfg.classifier), workers=args.workers
    )
    lines = ["value,label"] + [f"{v!r},{lab.name}" + (f":{lab.period}" if lab.period else "") for v, lab in result.points]
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    for lo, hi in result.bifurcations:
        print(f"bifurcation={lo!r},{hi!r}", file=sys.stderr if not args.output else sys.stdout)
    return EXIT_OK


COMMANDS = {
    "run": _cmd_run,
    "preset": _cmd_preset,
    "bilateral": _cmd_bilateral,
    "classify": _cmd_classify,
    "sweep": _cmd_sweep,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ValidationError, TriadError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
