"""Experiment configuration files and built-in presets.

The file format is line oriented::

    # comment
    n = 4
    d1 = 0.09
    P = 9000, 5000, 2000, 12000

Arrays are comma separated.  Unknown keys are rejected.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .analysis import ClassifierSettings
from .core import PARAM_NAMES, AmountState, TriadParams
from .triad import TriadConfig


class ParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class ValidationError(ValueError):
    pass


SCALAR_FLOAT = set(PARAM_NAMES) | {"fix-tol", "cyc-tol", "tail-fraction"}
SCALAR_INT = {"n", "steps", "window", "max-period"}
ARRAYS = {"P", "R", "Q"}
STRINGS = {"reg-input", "output"}
KNOWN_KEYS = SCALAR_FLOAT | SCALAR_INT | ARRAYS | STRINGS

_SETTING_KEYS = {
    "fix-tol": "fix_tol",
    "cyc-tol": "cyc_tol",
    "window": "window",
    "max-period": "max_period",
    "tail-fraction": "tail_fraction",
}


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    d1: float
    d2: float
    d3: float
    a: float
    b: float
    c: float
    P: tuple[float, ...]
    R: tuple[float, ...]
    Q: tuple[float, ...]
    steps: int = 2000
    reg_input: str = "post"
    classifier: ClassifierSettings = field(default_factory=ClassifierSettings)
    output: Optional[str] = None

    def __post_init__(self):
        for name in ("P", "R", "Q"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        self.validate()

    def validate(self) -> None:
        if self.n < 2:
            raise ValidationError(f"n must be >= 2, got {self.n}")
        for name in ("P", "R", "Q"):
            arr = getattr(self, name)
            if len(arr) != self.n:
                raise ValidationError(f"{name} has {len(arr)} entries but n = {self.n}")
            if any(not math.isfinite(v) or v < 0 for v in arr):
                raise ValidationError(f"{name} entries must be finite and nonnegative")
        for name in PARAM_NAMES:
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be positive, got {v!r}")
        if self.steps < 1:
            raise ValidationError(f"steps must be >= 1, got {self.steps}")
        if self.reg_input not in ("pre", "post"):
            raise ValidationError(f"reg-input must be 'pre' or 'post', got {self.reg_input!r}")

    @property
    def params(self) -> TriadParams:
        return TriadParams(**{k: getattr(self, k) for k in PARAM_NAMES})

    @property
    def initial(self) -> AmountState:
        return AmountState(self.P, self.R, self.Q)

    def triad_config(self) -> TriadConfig:
        return TriadConfig(self.params, self.initial, self.reg_input)

    def with_coordinate(self, name: str, region: int, value: float) -> "ExperimentConfig":
        arr = list(getattr(self, name))
        arr[region - 1] = value
        return replace(self, **{name: tuple(arr)})


def _parse_value(key: str, raw: str, lineno: int):
    try:
        if key in SCALAR_INT:
            return int(raw)
        if key in SCALAR_FLOAT:
            return float(raw)
        if key in ARRAYS:
            items = [s.strip() for s in raw.split(",")]
            if any(not s for s in items):
                raise ValueError("empty array entry")
            return tuple(float(s) for s in items)
    except ValueError as exc:
        raise ParseError(f"bad value for {key!r}: {raw!r} ({exc})", lineno) from None
    return raw


def parse_config(text: str) -> ExperimentConfig:
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno)
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ParseError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ParseError(f"duplicate key {key!r}", lineno)
        if not raw:
            raise ParseError(f"missing value for {key!r}", lineno)
        values[key] = _parse_value(key, raw, lineno)

    required = {"n", *PARAM_NAMES, "P", "R", "Q"}
    missing = sorted(required - values.keys())
    if missing:
        raise ValidationError(f"missing required keys: {', '.join(missing)}")
    try:
        settings = ClassifierSettings(**{_SETTING_KEYS[k]: values[k] for k in _SETTING_KEYS if k in values})
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    return ExperimentConfig(
        n=values["n"],
        **{k: values[k] for k in PARAM_NAMES},
        P=values["P"],
        R=values["R"],
        Q=values["Q"],
        steps=values.get("steps", 2000),
        reg_input=values.get("reg-input", "post"),
        classifier=settings,
        output=values.get("output"),
    )


def load_config(path) -> ExperimentConfig:
    """Read an experiment configuration file."""
    return parse_config(Path(path).read_text())


def dump_config(cfg: ExperimentConfig) -> str:
    """Render a configuration in the file format accepted by :func:`load_config`."""
    s = cfg.classifier
    lines = [f"n = {cfg.n}"]
    lines += [f"{k} = {getattr(cfg, k)!r}" for k in PARAM_NAMES]
    lines += [f"{k} = " + ", ".join(repr(v) for v in getattr(cfg, k)) for k in ("P", "R", "Q")]
    lines += [
        f"steps = {cfg.steps}",
        f"reg-input = {cfg.reg_input}",
        f"fix-tol = {s.fix_tol!r}",
        f"cyc-tol = {s.cyc_tol!r}",
        f"window = {s.window}",
        f"max-period = {s.max_period}",
        f"tail-fraction = {s.tail_fraction!r}",
    ]
    if cfg.output:
        lines.append(f"output = {cfg.output}")
    return "\n".join(lines) + "\n"


EXAMPLE1 = ExperimentConfig(
    n=4,
    d1=0.09,
    d2=0.01,
    d3=0.09,
    a=0.1,
    b=0.6,
    c=0.1,
    P=(9000, 5000, 2000, 12000),
    R=(30, 80, 50, 10),
    Q=(5, 1, 2, 4),
    steps=2000,
)

_MULTIDIM = ExperimentConfig(
    n=4,
    d1=0.001,
    d2=0.000001,
    d3=0.0012,
    a=0.1,
    b=0.6,
    c=0.1,
    P=(9000, 5000, 2000, 5),
    R=(30, 40, 50, 10),
    Q=(50, 2, 1, 40),
    steps=10000,
)


@dataclass(frozen=True)
class Preset:
    config: ExperimentConfig
    description: str
    plot_axes: tuple[tuple[str, str], ...] = (("P_1", "Q_1"),)


PRESETS: dict[str, Preset] = {
    "example1": Preset(
        EXAMPLE1,
        "Four regions, d1=d3=0.09, d2=0.01, a=0.1, b=0.6, c=0.1. "
        "Expected to spiral into the equilibrium of regional means "
        "P=7000, R=42.5, Q=3 within 2000 steps.",
        (("P_1", "Q_1"), ("P_1", "R_1")),
    ),
    "example2": Preset(
        replace(EXAMPLE1, R=(30, 40, 50, 10)),
        "example1 with R_2 lowered from 80 to 40 (total resource 170 -> 130). "
        "Expected to settle onto an egg-shaped closed loop by about step 400. "
        "In double precision the run is a bounded quasi-periodic oscillation "
        "(mean P_1 return time about 42 steps) with no exact lag recurrence, "
        "so at the default cyc-tol it is not labelled a Cycle.",
        (("P_1", "Q_1"), ("P_1", "R_1")),
    ),
    "example3": Preset(
        replace(EXAMPLE1, Q=(5, 100, 2, 4)),
        "example1 with Q_2 set to 100.  The change is sometimes stated as "
        "Q_2=10 -> 100, but example1 has Q_2=1; the baseline here is "
        "example1 with only Q_2 altered.  Expected: a nearly square closed "
        "loop.  Both the R_2 and Q_2 series are worth plotting, since the "
        "oscillating quantity is labelled inconsistently in the original "
        "figures.",
        (("P_2", "Q_2"), ("R_2", "Q_2")),
    ),
    "fig-multidim": Preset(
        _MULTIDIM,
        "Multi-dimensional attractor: d1=0.001, d2=0.000001, d3=0.0012, "
        "a=0.1, b=0.6, c=0.1, P=(9000,5000,2000,5), R=(30,40,50,10), "
        "Q=(50,2,1,40).  Plotted in (P_4, Q_4).  Figure numbers for this and "
        "the next preset are inconsistent in the original; the parameter "
        "values attached to each figure are used.",
        (("P_4", "Q_4"),),
    ),
    "fig-carno": Preset(
        replace(_MULTIDIM, d3=0.0017),
        "Carno-type cycle: the multi-dimensional attractor parameters with "
        "d3=0.0017, plotted in (R_2, Q_2).",
        (("R_2", "Q_2"),),
    ),
    "fig-basins": Preset(
        ExperimentConfig(
            n=4,
            d1=0.95,
            d2=0.01,
            d3=0.01,
            a=0.1,
            b=0.6,
            c=0.1,
            P=(9000, 5000, 2000, 12000),
            R=(30, 40, 50, 10),
            Q=(5, 1, 2, 4),
            steps=10000,
        ),
        "Several attracting sets with overlapping basins: d1=0.95, "
        "d2=d3=0.01, a=0.1, b=0.6, c=0.1, P=(9000,5000,2000,12000), "
        "R=(30,40,50,10), Q=(5,1,2,4).  Plotted in (P_1, Q_1).",
        (("P_1", "Q_1"),),
    ),
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValidationError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
