"""Two-substance conflict maps on pairs of stochastic vectors.

Three sign patterns are supported:

* plus-minus  -- x grows where y is present, y decays where x is present
* minus-plus  -- the mirror image (x decays, y grows)
* minus-minus -- each decays where the other is present

Each map divides the coordinatewise numerators by their (compensated) sum.
In exact arithmetic that sum equals ``1 +/- theta`` with ``theta = (x, y)``,
so this is the same map while also keeping iterates on the simplex.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .core import (
    DimensionMismatch,
    StochasticVector,
    TriadError,
    inner,
)


class DegenerateIndex(TriadError, ArithmeticError):
    """Conflict index reached 1, which makes a normalizer vanish."""


class WrongModel(TriadError, ValueError):
    pass


class InvalidEpsilon(TriadError, ValueError):
    pass


class BilateralModel(enum.Enum):
    PLUS_MINUS = "pm"
    MINUS_PLUS = "mp"
    MINUS_MINUS = "mm"

    @property
    def code(self) -> int:
        return _CODES[self]

    @property
    def names(self) -> tuple[str, str]:
        """Conventional substance letters for (x, y)."""
        return {"pm": ("p", "r"), "mp": ("p", "q"), "mm": ("q", "r")}[self.value]


_CODES = {BilateralModel.PLUS_MINUS: 0, BilateralModel.MINUS_PLUS: 1, BilateralModel.MINUS_MINUS: 2}


@njit(cache=True)
def _csum(v):
    # Neumaier summation; inputs are nonnegative
    s = 0.0
    c = 0.0
    for x in v:
        t = s + x
        if abs(s) >= abs(x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        s = t
    return s + c


@njit(cache=True)
def _step_into(kind, x, y, out_x, out_y):
    """One bilateral step. Returns theta, or -1.0 if the step is degenerate."""
    n = x.size
    theta = 0.0
    prods = np.empty(n)
    for i in range(n):
        prods[i] = x[i] * y[i]
    theta = _csum(prods)
    if theta == 0.0:
        # every numerator equals its input and the normalizer is exactly 1
        for i in range(n):
            out_x[i] = x[i]
            out_y[i] = y[i]
        return theta
    if not theta < 1.0:
        return -1.0
    for i in range(n):
        if kind == 0:
            out_x[i] = x[i] * (1.0 + y[i])
            out_y[i] = y[i] * (1.0 - x[i])
        elif kind == 1:
            out_x[i] = x[i] * (1.0 - y[i])
            out_y[i] = y[i] * (1.0 + x[i])
        else:
            out_x[i] = x[i] * (1.0 - y[i])
            out_y[i] = y[i] * (1.0 - x[i])
    zx = _csum(out_x)
    zy = _csum(out_y)
    if not (zx > 0.0 and zy > 0.0):
        return -1.0
    for i in range(n):
        out_x[i] = out_x[i] / zx
        out_y[i] = out_y[i] / zy
    return theta


@njit(cache=True)
def _iterate(kind, x0, y0, steps, xs, ys):
    """Fill xs, ys (shape (steps+1, n)); return the number of steps completed."""
    xs[0, :] = x0
    ys[0, :] = y0
    for k in range(steps):
        if _step_into(kind, xs[k], ys[k], xs[k + 1], ys[k + 1]) < 0.0:
            return k
    return steps


def _coords(v) -> np.ndarray:
    if isinstance(v, StochasticVector):
        return v.coords
    return StochasticVector(v).coords


def _step(model: BilateralModel, x, y) -> tuple[StochasticVector, StochasticVector]:
    a, b = _coords(x), _coords(y)
    if a.shape != b.shape:
        raise DimensionMismatch(f"dimensions differ: {a.size} vs {b.size}")
    out_x, out_y = np.empty_like(a), np.empty_like(b)
    if _step_into(model.code, a, b, out_x, out_y) < 0.0:
        raise DegenerateIndex(f"conflict index {inner(a, b)!r} leaves no room for normalization")
    return StochasticVector(out_x), StochasticVector(out_y)


def plus_minus_step(p, r):
    """``p_i <- p_i (1 + r_i) / (1 + theta)``, ``r_i <- r_i (1 - p_i) / (1 - theta)``."""
    return _step(BilateralModel.PLUS_MINUS, p, r)


def minus_plus_step(p, q):
    """``p_i <- p_i (1 - q_i) / (1 - theta)``, ``q_i <- q_i (1 + p_i) / (1 + theta)``."""
    return _step(BilateralModel.MINUS_PLUS, p, q)


def minus_minus_step(q, r):
    """``q_i <- q_i (1 - r_i) / (1 - theta)``, ``r_i <- r_i (1 - q_i) / (1 - theta)``."""
    return _step(BilateralModel.MINUS_MINUS, q, r)


STEP_FUNCTIONS = {
    BilateralModel.PLUS_MINUS: plus_minus_step,
    BilateralModel.MINUS_PLUS: minus_plus_step,
    BilateralModel.MINUS_MINUS: minus_minus_step,
}


@dataclass(frozen=True)
class Collapse:
    """Marks the step at which a trajectory stopped and why."""

    step: int
    reason: str
    stage: Optional[str] = None


@dataclass(frozen=True, eq=False)
class BilateralTrajectory:
    """Iterates of a bilateral map; row N of ``x`` and ``y`` is step N."""

    model: BilateralModel
    x: np.ndarray
    y: np.ndarray
    collapse: Optional[Collapse] = None

    def __len__(self) -> int:
        return self.x.shape[0]

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def steps(self) -> int:
        return len(self) - 1

    def state(self, N: int) -> tuple[StochasticVector, StochasticVector]:
        return StochasticVector(self.x[N]), StochasticVector(self.y[N])

    def conflict_index(self) -> np.ndarray:
        """Per-step inner product of the pair."""
        return np.einsum("ij,ij->i", self.x, self.y)

    def scaled_array(self) -> np.ndarray:
        # already dimensionless
        return np.hstack([self.x, self.y])


def iterate_bilateral(model: BilateralModel | str, x0, y0, steps: int) -> BilateralTrajectory:
    """Run ``steps`` iterations of a bilateral map from ``(x0, y0)``.

    A degenerate step (conflict index 1) truncates the run; the returned
    trajectory then carries a :class:`Collapse` naming the failing step.
    """
    model = BilateralModel(model)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    a, b = _coords(x0), _coords(y0)
    if a.shape != b.shape:
        raise DimensionMismatch(f"dimensions differ: {a.size} vs {b.size}")
    xs = np.empty((steps + 1, a.size))
    ys = np.empty((steps + 1, a.size))
    done = _iterate(model.code, a, b, steps, xs, ys)
    collapse = None
    if done < steps:
        xs, ys = xs[: done + 1].copy(), ys[: done + 1].copy()
        collapse = Collapse(step=done + 1, reason="degenerate-index")
    xs.setflags(write=False)
    ys.setflags(write=False)
    return BilateralTrajectory(model, xs, ys, collapse)


class OrderingSymbol(enum.Enum):
    """Strict orderings of ``(p_i, r_i, theta)`` in cyclic order."""

    E1 = "r<p<theta"
    E2 = "p<r<theta"
    E3 = "p<theta<r"
    E4 = "theta<p<r"
    E5 = "theta<r<p"
    E6 = "r<theta<p"

    @property
    def index(self) -> int:
        return int(self.name[1])

    def successor(self) -> "OrderingSymbol":
        return _SYMBOLS[self.index % 6]


_SYMBOLS = list(OrderingSymbol)


def _classify_orderings(p: np.ndarray, r: np.ndarray, th: np.ndarray) -> np.ndarray:
    """Label codes 1..6 per entry, 0 where two of the three values tie."""
    codes = np.zeros(p.shape, dtype=np.int8)
    codes[(r < p) & (p < th)] = 1
    codes[(p < r) & (r < th)] = 2
    codes[(p < th) & (th < r)] = 3
    codes[(th < p) & (p < r)] = 4
    codes[(th < r) & (r < p)] = 5
    codes[(r < th) & (th < p)] = 6
    return codes


def ordering_sequence(trajectory: BilateralTrajectory, i: int) -> list[OrderingSymbol]:
    """Per-step ordering label of coordinate ``i`` against the conflict index.

    A step with a tie takes the label of the next strictly ordered step.
    Trailing ties with no strict successor are dropped, so a trajectory that
    never orders strictly yields an empty list.
    """
    if trajectory.model is not BilateralModel.PLUS_MINUS:
        raise WrongModel(f"ordering labels are defined for plus-minus runs, got {trajectory.model.value}")
    if not 0 <= i < trajectory.n:
        raise IndexError(f"coordinate {i} out of range for n={trajectory.n}")
    codes = _classify_orderings(trajectory.x[:, i], trajectory.y[:, i], trajectory.conflict_index())
    strict = np.flatnonzero(codes)
    if strict.size == 0:
        return []
    # backward fill: each step points at the first strict step at or after it
    nxt = np.searchsorted(strict, np.arange(strict[-1] + 1))
    filled = codes[strict[nxt]]
    return [_SYMBOLS[c - 1] for c in filled]


def label_changes(labels: list[OrderingSymbol]) -> list[OrderingSymbol]:
    """Collapse runs of equal labels, keeping one entry per change event."""
    out: list[OrderingSymbol] = []
    for lab in labels:
        if not out or out[-1] is not lab:
            out.append(lab)
    return out


def follows_cycle(changes: list[OrderingSymbol]) -> bool:
    """True when each change moves to the cyclic successor e1->e2->...->e6->e1."""
    return all(b is a.successor() for a, b in zip(changes, changes[1:]))


def instability_probe(epsilon: float, n: int, steps: int) -> tuple[float, float]:
    """Perturb the uniform fixed point and measure how the deviation evolves.

    ``p`` gets ``+epsilon`` on coordinate 1 and ``-epsilon`` on coordinate 2;
    ``r`` gets the opposite pattern.  Returns the max-norm deviation from the
    uniform vector over both ``p`` and ``r`` at step 0 and at step ``steps``.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not (0.0 <= epsilon < 1.0 / n):
        raise InvalidEpsilon(f"epsilon must lie in [0, 1/n) = [0, {1.0 / n}), got {epsilon!r}")
    u = np.full(n, 1.0 / n)
    d = np.zeros(n)
    d[0], d[1] = epsilon, -epsilon
    p0, r0 = u + d, u - d
    traj = iterate_bilateral(BilateralModel.PLUS_MINUS, p0, r0, steps)
    if traj.collapse is not None:
        raise DegenerateIndex(f"probe degenerated at step {traj.collapse.step}")

    def deviation(row):
        return float(max(np.max(np.abs(traj.x[row] - u)), np.max(np.abs(traj.y[row] - u))))

    return deviation(0), deviation(-1)
