"""The three-substance conflict map.

One step of the triad map is the pipeline

1. ``amount_step``        regional amounts updated, totals held fixed;
2. normalization          amounts turned into occupation probabilities;
3. ``redistribution_step`` Lotka-Volterra style reweighting of p, r, q;
4. rescaling              probabilities multiplied back by the totals.

A negative interim value or a non-positive normalizer is a collapse: the
state has lost physical meaning and the trajectory ends there.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Literal, Optional

import numpy as np

from .bilateral import Collapse
from .core import (
    AmountState,
    DimensionMismatch,
    StochasticVector,
    TriadError,
    TriadParams,
    UnknownSelector,
    inner,
)

log = logging.getLogger(__name__)

P_GUARD = 1e-300

RegInput = Literal["pre", "post"]


class CollapseError(TriadError, ArithmeticError):
    """Raised by a step that would leave the nonnegative cone."""

    def __init__(self, reason: str, stage: Optional[str] = None, detail: str = ""):
        self.reason = reason
        self.stage = stage
        self.detail = detail
        where = f" in {stage}" if stage else ""
        super().__init__(f"collapse ({reason}){where}: {detail}" if detail else f"collapse ({reason}){where}")


def _amount_arrays(P, R, Q, totals, params: TriadParams):
    if np.any(P < P_GUARD):
        raise CollapseError("division-by-zero", detail=f"P has a coordinate below {P_GUARD}: {P}")
    Pn = P + params.d1 * (R - Q)
    Rn = R + (1.0 / params.d3) * (Q / P)
    Qn = Q + params.d2 * (R - Q)
    for name, arr in (("P", Pn), ("R", Rn), ("Q", Qn)):
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise CollapseError("negative", detail=f"interim {name} numerator {arr}")
    out = []
    for name, arr, total in zip("PRQ", (Pn, Rn, Qn), totals):
        if not total > 0:
            raise CollapseError("division-by-zero", detail=f"total of {name} is zero")
        z = math.fsum(arr) / total
        if not z > 0:
            raise CollapseError("negative", detail=f"normalizer Z_{name} = {z!r}")
        out.append(arr / z)
    return out


def amount_step(state: AmountState, params: TriadParams) -> AmountState:
    """Quantitative update of regional amounts with conserved totals.

    Numerators ``P_i + d1 (R_i - Q_i)``, ``R_i + Q_i / (d3 P_i)`` and
    ``Q_i + d2 (R_i - Q_i)`` are rescaled so each substance keeps its total.
    """
    P, R, Q = _amount_arrays(state.P, state.R, state.Q, state.totals, params)
    return AmountState(P, R, Q, state.totals)


def _unit(arr: np.ndarray) -> np.ndarray:
    return arr / math.fsum(arr)


def _redistribute_arrays(p, r, q, params: TriadParams):
    a, b, c = params.a, params.b, params.c
    fp = 1.0 + a * (r - q)
    fr = 1.0 - c * p - b * q
    fq = 1.0 + p / c - b * r
    for name, f in (("p", fp), ("r", fr), ("q", fq)):
        if np.any(f < 0):
            raise CollapseError("negative", detail=f"{name} numerator factor {f}")
    zp = 1.0 + a * (inner(p, r) - inner(p, q))
    zr = 1.0 - c * inner(r, p) - b * inner(r, q)
    zq = 1.0 + inner(q, p) / c - b * inner(q, r)
    for name, z in (("p", zp), ("r", zr), ("q", zq)):
        if not z > 0:
            raise CollapseError("negative", detail=f"normalizer z_{name} = {z!r}")
    # dividing by z and then re-summing is the same as dividing by the sum
    # of numerators; the latter keeps drift off the simplex at rounding level
    return _unit(p * fp), _unit(r * fr), _unit(q * fq)


def redistribution_step(p, r, q, params: TriadParams):
    """Reweight the occupation probabilities of the three substances.

    ``p_i <- p_i (1 + a (r_i - q_i)) / z_p``,
    ``r_i <- r_i (1 - c p_i - b q_i) / z_r``,
    ``q_i <- q_i (1 + p_i / c - b r_i) / z_q``.
    """
    vecs = [v.coords if isinstance(v, StochasticVector) else StochasticVector(v).coords for v in (p, r, q)]
    if not (vecs[0].shape == vecs[1].shape == vecs[2].shape):
        raise DimensionMismatch("p, r, q must have equal dimension")
    return tuple(StochasticVector(v) for v in _redistribute_arrays(*vecs, params))


def _triad_arrays(P, R, Q, totals, params: TriadParams, reg_input: RegInput = "post"):
    try:
        Pa, Ra, Qa = _amount_arrays(P, R, Q, totals, params)
    except CollapseError as exc:
        exc.stage = "amounts"
        raise
    src = (Pa, Ra, Qa) if reg_input == "post" else (P, R, Q)
    p, r, q = (_unit(x) for x in src)
    try:
        p, r, q = _redistribute_arrays(p, r, q, params)
    except CollapseError as exc:
        exc.stage = "redistribution"
        raise
    return p * totals[0], r * totals[1], q * totals[2]


def triad_step(state: AmountState, params: TriadParams, reg_input: RegInput = "post") -> AmountState:
    """One full step of the triad map.

    ``reg_input`` selects whether redistribution sees the probabilities after
    the amount update (``"post"``, default) or those of the incoming state
    (``"pre"``).  Under ``"pre"`` the amount update has no effect on the
    result, since only its distribution would have been used.
    """
    if reg_input not in ("pre", "post"):
        raise ValueError(f"reg_input must be 'pre' or 'post', got {reg_input!r}")
    P, R, Q = _triad_arrays(state.P, state.R, state.Q, state.totals, params, reg_input)
    return AmountState(P, R, Q, state.totals)


def equilibrium_state(initial: AmountState) -> AmountState:
    """Every region set to the arithmetic mean of its substance."""
    n = initial.n
    return AmountState(
        np.full(n, initial.totals[0] / n),
        np.full(n, initial.totals[1] / n),
        np.full(n, initial.totals[2] / n),
        initial.totals,
    )


@dataclass(frozen=True)
class TriadConfig:
    params: TriadParams
    initial: AmountState
    reg_input: RegInput = "post"

    def __post_init__(self):
        if self.reg_input not in ("pre", "post"):
            raise ValueError(f"reg_input must be 'pre' or 'post', got {self.reg_input!r}")
        if self.has_zero_coordinates:
            log.warning("initial state has zero coordinates; the equilibrium results assume all are nonzero")

    @property
    def n(self) -> int:
        return self.initial.n

    @property
    def has_zero_coordinates(self) -> bool:
        return bool(np.any(self.initial.as_array() == 0))

    def with_params(self, **changes) -> "TriadConfig":
        return replace(self, params=self.params.replace(**changes))


@dataclass(frozen=True, eq=False)
class TriadTrajectory:
    """Recorded states of a triad run.

    ``data`` has one row per step holding ``(P_1..P_n, R_1..R_n, Q_1..Q_n)``.
    If the run collapsed, ``collapse.step`` is the step that failed; no row
    exists for it.
    """

    data: np.ndarray
    totals: tuple[float, float, float]
    params: Optional[TriadParams] = None
    reg_input: RegInput = "post"
    collapse: Optional[Collapse] = None
    _scale: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[1] % 3:
            raise DimensionMismatch(f"trajectory data must be (steps, 3n), got {data.shape}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        n = data.shape[1] // 3
        object.__setattr__(self, "_scale", np.repeat(np.asarray(self.totals, dtype=float), n))

    def __len__(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1] // 3

    @property
    def steps(self) -> int:
        return len(self) - 1

    def state(self, N: int) -> AmountState:
        return AmountState.from_array(self.data[N], self.totals)

    @property
    def states(self):
        return [self.state(N) for N in range(len(self))]

    @property
    def final(self) -> AmountState:
        return self.state(-1)

    def scaled_array(self) -> np.ndarray:
        """Coordinates divided by their substance total."""
        return self.data / self._scale

    def column(self, selector: str) -> np.ndarray:
        return self.data[:, coordinate_index(selector, self.n)]

    def slice(self, start: int, stop: Optional[int] = None) -> "TriadTrajectory":
        return replace(self, data=self.data[start:stop], collapse=self.collapse)


def coordinate_index(selector: str, n: int) -> int:
    """Column of ``"P_2"``-style selectors (1-based region index)."""
    try:
        letter, idx = selector.split("_")
        i = int(idx)
    except ValueError:
        raise UnknownSelector(f"bad coordinate selector {selector!r}") from None
    if letter not in "PRQ" or len(letter) != 1 or not 1 <= i <= n:
        raise UnknownSelector(f"bad coordinate selector {selector!r} for n={n}")
    return "PRQ".index(letter) * n + (i - 1)


def run_triad(config: TriadConfig, steps: int) -> TriadTrajectory:
    """Iterate the triad map, stopping at the first collapse."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    init = config.initial
    n, totals = init.n, init.totals
    data = np.empty((steps + 1, 3 * n))
    data[0] = init.as_array()
    P, R, Q = init.P, init.R, init.Q
    collapse = None
    done = steps
    for k in range(steps):
        try:
            P, R, Q = _triad_arrays(P, R, Q, totals, config.params, config.reg_input)
        except CollapseError as exc:
            collapse = Collapse(step=k + 1, reason=exc.reason, stage=exc.stage)
            done = k
            break
        data[k + 1, :n], data[k + 1, n : 2 * n], data[k + 1, 2 * n :] = P, R, Q
    return TriadTrajectory(data[: done + 1].copy(), totals, config.params, config.reg_input, collapse)
