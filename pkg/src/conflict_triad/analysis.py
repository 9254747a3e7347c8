"""Phase classification of trajectories and parameter sweeps.

States are compared in the max norm after dividing each coordinate by its
substance total, so P, R and Q contribute on the same dimensionless scale.
"""
from __future__ import annotations

import enum
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .bilateral import BilateralTrajectory
from .core import PARAM_NAMES, AmountState, TriadError, UnknownSelector
from .triad import TriadConfig, TriadTrajectory, coordinate_index, run_triad, triad_step, CollapseError

Trajectory = Union[TriadTrajectory, BilateralTrajectory]


class TooShort(TriadError, ValueError):
    pass


@dataclass(frozen=True)
class ClassifierSettings:
    fix_tol: float = 1e-6
    cyc_tol: float = 1e-6
    window: int = 50
    max_period: int = 5000
    tail_fraction: float = 0.5

    def __post_init__(self):
        if not (self.fix_tol > 0 and self.cyc_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.window < 2:
            raise ValueError("window must be >= 2")
        if self.max_period < 2:
            raise ValueError("max_period must be >= 2")
        if not 0 < self.tail_fraction < 1:
            raise ValueError("tail_fraction must lie in (0, 1)")


class PhaseKind(enum.Enum):
    FIXED_POINT = "fixed-point"
    CYCLE = "cycle"
    WAVE_OF_CYCLES = "wave-of-cycles"
    QUASI_CHAOTIC = "quasi-chaotic"
    COLLAPSE = "collapse"


@dataclass(frozen=True, eq=False)
class PhaseLabel:
    """Outcome of :func:`classify`.

    Only the fields relevant to ``kind`` are set: ``limit`` for a fixed
    point, ``period`` and ``reference`` for a cycle, ``periods`` for a wave
    of cycles and ``collapse_step`` for a collapse.
    """

    kind: PhaseKind
    period: Optional[int] = None
    reference: Optional[np.ndarray] = None
    limit: Optional[np.ndarray] = None
    periods: tuple[int, ...] = ()
    collapse_step: Optional[int] = None
    residual: Optional[float] = None

    def __post_init__(self):
        if self.kind is PhaseKind.CYCLE and (self.period is None or self.period < 2):
            raise ValueError("a cycle needs a period >= 2")
        if self.kind is PhaseKind.WAVE_OF_CYCLES and len(set(self.periods)) < 2:
            raise ValueError("a wave of cycles needs at least two distinct periods")

    @property
    def name(self) -> str:
        return self.kind.value

    def __eq__(self, other):
        if not isinstance(other, PhaseLabel):
            return NotImplemented
        return (
            self.kind is other.kind
            and self.period == other.period
            and self.periods == other.periods
            and self.collapse_step == other.collapse_step
            and _arr_eq(self.limit, other.limit)
            and _arr_eq(self.reference, other.reference)
        )

    def __hash__(self):
        return hash((self.kind, self.period, self.periods, self.collapse_step))

    def __str__(self):
        return report_line(self)


def _arr_eq(a, b) -> bool:
    if a is None or b is None:
        return a is b
    return np.array_equal(a, b)


def report_line(label: PhaseLabel) -> str:
    """Machine-readable ``key=value`` summary in the fixed key order
    phase, period, limit, collapse_step; inapplicable keys are omitted."""
    parts = [f"phase={label.name}"]
    if label.kind is PhaseKind.CYCLE:
        parts.append(f"period={label.period}")
    elif label.kind is PhaseKind.WAVE_OF_CYCLES:
        parts.append("period=" + ",".join(str(k) for k in label.periods))
    if label.limit is not None:
        parts.append("limit=" + ",".join(repr(float(v)) for v in label.limit))
    if label.collapse_step is not None:
        parts.append(f"collapse_step={label.collapse_step}")
    return " ".join(parts)


def _as_series(series) -> np.ndarray:
    if isinstance(series, (TriadTrajectory, BilateralTrajectory)):
        return series.scaled_array()
    arr = np.asarray(series, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    return arr


def recurrence_residual(series, k: int, span: Optional[int] = None) -> float:
    """Max-norm of ``x[N+k] - x[N]`` over the last ``span`` admissible N.

    ``span`` defaults to ``k`` (one full period).  Returns ``inf`` when the
    series is too short to hold ``k + span`` states.
    """
    x = _as_series(series)
    span = k if span is None else span
    L = x.shape[0]
    if k < 1 or span < 1 or k + span > L:
        return float("inf")
    a = x[L - k - span : L - k]
    b = x[L - span : L]
    return float(np.max(np.abs(b - a)))


def detect_period(series, cyc_tol: float, max_period: int, min_span: int = 0) -> Optional[int]:
    """Smallest lag ``k >= 2`` whose recurrence residual stays below ``cyc_tol``.

    The residual is checked over ``max(k, min_span)`` consecutive states at
    the end of the series, and ``k`` is capped at half the series length.
    A series that already recurs at lag 1 is stationary; that is a fixed
    point rather than a cycle, so ``None`` is returned for it.
    """
    x = _as_series(series)
    L = x.shape[0]
    if recurrence_residual(x, 1, max(1, min_span)) < cyc_tol:
        return None
    top = min(max_period, L // 2)
    for k in range(2, top + 1):
        span = max(k, min_span)
        if k + span > L:
            break
        if recurrence_residual(x, k, span) < cyc_tol:
            return k
    return None


def _fixed_point(tail: np.ndarray, settings: ClassifierSettings) -> bool:
    w = settings.window
    if tail.shape[0] < w + 1:
        return False
    steps = np.max(np.abs(np.diff(tail[-(w + 1) :], axis=0)), axis=1)
    return bool(np.all(steps < settings.fix_tol))


def _sustained_period(tail: np.ndarray, settings: ClassifierSettings) -> Optional[int]:
    """Smallest lag ``k >= 2`` that recurs across the entire tail.

    The cheap end-of-tail test of :func:`detect_period` screens each lag
    first; survivors must also recur over all ``len(tail) - k`` pairs, so a
    trajectory that only recently settled (or switches between cycles) is
    not reported as a single cycle.
    """
    L = tail.shape[0]
    if recurrence_residual(tail, 1, max(1, settings.window)) < settings.cyc_tol:
        return None
    for k in range(2, min(settings.max_period, L // 2) + 1):
        span = max(k, settings.window)
        if k + span > L:
            break
        if recurrence_residual(tail, k, span) < settings.cyc_tol and recurrence_residual(tail, k, L - k) < settings.cyc_tol:
            return k
    return None


def _segment_periods(tail: np.ndarray, settings: ClassifierSettings) -> list[int]:
    """Periods found on consecutive non-overlapping tail segments.

    A coarse pass over the two halves of the tail bounds the largest period
    present; the tail is then cut into segments of four times that period
    and each segment is searched separately.
    """
    half = tail.shape[0] // 2
    coarse = [detect_period(seg, settings.cyc_tol, settings.max_period) for seg in (tail[:half], tail[half:])]
    found = [k for k in coarse if k is not None]
    if not found:
        return []
    seg_len = 4 * max(found)
    periods = []
    for start in range(0, tail.shape[0] - seg_len + 1, seg_len):
        k = detect_period(tail[start : start + seg_len], settings.cyc_tol, min(settings.max_period, 2 * max(found)))
        if k is not None:
            periods.append(k)
    return periods


def classify(trajectory: Trajectory, settings: ClassifierSettings = ClassifierSettings()) -> PhaseLabel:
    """Assign a phase label to a trajectory.

    Decision order on the tail (the last ``tail_fraction`` of the states):
    collapse marker, fixed point, cycle, wave of cycles, quasi-chaos.  A
    cycle must recur over the whole tail; shorter-lived recurrences are
    left to the wave-of-cycles test.
    """
    if trajectory.collapse is not None:
        return PhaseLabel(PhaseKind.COLLAPSE, collapse_step=trajectory.collapse.step)
    L = len(trajectory)
    if L < 2 * settings.window:
        raise TooShort(f"need at least {2 * settings.window} states, got {L}")
    x = trajectory.scaled_array()
    if not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(x), axis=1))[0])
        return PhaseLabel(PhaseKind.COLLAPSE, collapse_step=bad)
    start = L - max(int(round(settings.tail_fraction * L)), 2 * settings.window)
    tail = x[max(start, 0) :]

    if _fixed_point(tail, settings) and _limit_is_sound(trajectory, settings):
        limit = trajectory.data[-1].copy() if isinstance(trajectory, TriadTrajectory) else x[-1].copy()
        return PhaseLabel(PhaseKind.FIXED_POINT, limit=limit, residual=_last_step(tail))

    k = _sustained_period(tail, settings)
    if k is not None:
        res = recurrence_residual(tail, k, tail.shape[0] - k)
        ref = trajectory.data[-1].copy() if isinstance(trajectory, TriadTrajectory) else x[-1].copy()
        return PhaseLabel(PhaseKind.CYCLE, period=k, reference=ref, residual=res)

    periods = _segment_periods(tail, settings)
    if len(set(periods)) >= 2:
        distinct = tuple(dict.fromkeys(periods))
        return PhaseLabel(PhaseKind.WAVE_OF_CYCLES, periods=distinct)
    return PhaseLabel(PhaseKind.QUASI_CHAOTIC)


def _last_step(tail: np.ndarray) -> float:
    return float(np.max(np.abs(tail[-1] - tail[-2])))


def _limit_is_sound(trajectory: Trajectory, settings: ClassifierSettings) -> bool:
    # re-apply the map to the candidate limit when the trajectory knows it
    if not isinstance(trajectory, TriadTrajectory) or trajectory.params is None:
        return True
    limit = trajectory.final
    try:
        nxt = triad_step(limit, trajectory.params, trajectory.reg_input)
    except CollapseError:
        return False
    scale = np.repeat(np.asarray(trajectory.totals), trajectory.n)
    change = np.max(np.abs(nxt.as_array() - limit.as_array()) / scale)
    return bool(change < 10 * settings.fix_tol)


class Pair(enum.Enum):
    PR = "PR"
    PQ = "PQ"
    QR = "QR"


def conflict_index_series(trajectory: Trajectory, pair: Pair | str | None = None) -> np.ndarray:
    """Per-step conflict index between two substances.

    For a triad trajectory ``pair`` picks the substances; a bilateral
    trajectory has only one pair and ``pair`` is ignored.
    """
    if isinstance(trajectory, BilateralTrajectory):
        return trajectory.conflict_index()
    if len(trajectory) == 0:
        raise TooShort("empty trajectory")
    pair = Pair(pair if pair is not None else "PR")
    x = trajectory.scaled_array()
    n = trajectory.n
    blocks = {"P": x[:, :n], "R": x[:, n : 2 * n], "Q": x[:, 2 * n :]}
    u, v = blocks[pair.value[0]], blocks[pair.value[1]]
    u = u / u.sum(axis=1, keepdims=True)
    v = v / v.sum(axis=1, keepdims=True)
    return np.einsum("ij,ij->i", u, v)


def apply_selector(config: TriadConfig, target: str, value: float) -> TriadConfig:
    """Copy of ``config`` with one parameter or initial coordinate replaced."""
    if target in PARAM_NAMES:
        return config.with_params(**{target: value})
    idx = coordinate_index(target, config.n)
    flat = config.initial.as_array().copy()
    flat[idx] = value
    return replace(config, initial=AmountState.from_array(flat))


def validate_selector(config: TriadConfig, target: str) -> None:
    if target not in PARAM_NAMES:
        coordinate_index(target, config.n)


@dataclass(frozen=True)
class SweepResult:
    points: list[tuple[float, PhaseLabel]]
    bifurcations: list[tuple[float, float]] = field(default_factory=list)

    def labels(self) -> list[PhaseLabel]:
        return [lab for _, lab in self.points]


def _sweep_point(args):
    config, target, value, steps, settings = args
    traj = run_triad(apply_selector(config, target, value), steps)
    return classify(traj, settings)


def _same_phase(a: PhaseLabel, b: PhaseLabel) -> bool:
    return a.kind is b.kind and a.period == b.period and a.periods == b.periods


def parameter_sweep(
    config: TriadConfig,
    target: str,
    grid: Sequence[float],
    steps: int,
    settings: ClassifierSettings = ClassifierSettings(),
    workers: int = 1,
) -> SweepResult:
    """Classify the run obtained for each grid value of ``target``.

    ``target`` is one of d1, d2, d3, a, b, c or an initial coordinate such
    as ``"R_2"``.  Grid points are independent; with ``workers > 1`` they
    run in separate processes.  Output order always follows ``grid``.
    Consecutive grid values with different phases are reported as
    bifurcation intervals.
    """
    grid = [float(v) for v in grid]
    if not grid:
        raise ValueError("grid must not be empty")
    validate_selector(config, target)
    jobs = [(config, target, v, steps, settings) for v in grid]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            labels = list(pool.map(_sweep_point, jobs))
    else:
        labels = [_sweep_point(j) for j in jobs]
    points = list(zip(grid, labels))
    intervals = [
        (grid[i], grid[i + 1]) for i in range(len(grid) - 1) if not _same_phase(labels[i], labels[i + 1])
    ]
    return SweepResult(points, intervals)
