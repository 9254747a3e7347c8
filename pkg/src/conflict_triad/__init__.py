"""Simulation and phase analysis of the conflict-triad dynamical system.

Three substances (population P, resource R, threat Q) are spread over n
regions.  Their occupation probabilities interact through bilateral maps
and through a coupled three-substance map that conserves totals.
"""

__version__ = "0.1.0"

from .core import (
    AmountState,
    DimensionMismatch,
    InvalidParameter,
    NegativeCoordinate,
    StochasticVector,
    TriadError,
    TriadParams,
    UnknownSelector,
    ZeroTotal,
    inner,
    normalize,
)
from .bilateral import (
    BilateralModel,
    BilateralTrajectory,
    Collapse,
    DegenerateIndex,
    InvalidEpsilon,
    OrderingSymbol,
    WrongModel,
    instability_probe,
    iterate_bilateral,
    minus_minus_step,
    minus_plus_step,
    ordering_sequence,
    plus_minus_step,
)
from .triad import (
    CollapseError,
    TriadConfig,
    TriadTrajectory,
    amount_step,
    equilibrium_state,
    redistribution_step,
    run_triad,
    triad_step,
)
from .analysis import (
    ClassifierSettings,
    Pair,
    PhaseKind,
    PhaseLabel,
    SweepResult,
    TooShort,
    classify,
    conflict_index_series,
    detect_period,
    parameter_sweep,
    report_line,
)
from .config import PRESETS, ExperimentConfig, ParseError, ValidationError, get_preset, load_config
from .export import read_trajectory, render_phase_plot, write_trajectory

__all__ = [name for name in dir() if not name.startswith("_")]
