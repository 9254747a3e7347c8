"""Numeric building blocks: stochastic vectors, amount states, parameters.

All containers are immutable; their arrays are flagged read-only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SIMPLEX_TOL = 1e-12
TOTAL_RTOL = 1e-9


class TriadError(Exception):
    """Base class for every error raised by this package."""


class ZeroTotal(TriadError, ValueError):
    pass


class NegativeCoordinate(TriadError, ValueError):
    pass


class DimensionMismatch(TriadError, ValueError):
    pass


class InvalidParameter(TriadError, ValueError):
    pass


class UnknownSelector(TriadError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


def _frozen(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be one-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StochasticVector:
    """Nonnegative coordinates summing to one (occupation probabilities)."""

    coords: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.coords, "coords")
        if arr.size < 2:
            raise DimensionMismatch("a stochastic vector needs at least 2 coordinates")
        if not np.all(np.isfinite(arr)):
            raise TriadError("non-finite coordinate")
        if np.any(arr < 0):
            raise NegativeCoordinate(f"negative coordinate in {arr}")
        total = math.fsum(arr)
        if abs(total - 1.0) > SIMPLEX_TOL:
            raise TriadError(f"coordinates sum to {total!r}, not 1")
        object.__setattr__(self, "coords", arr)

    @classmethod
    def uniform(cls, n: int) -> "StochasticVector":
        return cls(np.full(n, 1.0 / n))

    @property
    def n(self) -> int:
        return self.coords.size

    def __len__(self) -> int:
        return self.coords.size

    def __getitem__(self, i):
        return self.coords[i]

    def __iter__(self):
        return iter(self.coords)

    def __eq__(self, other):
        if not isinstance(other, StochasticVector):
            return NotImplemented
        return np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash(self.coords.tobytes())

    def __repr__(self):
        return f"StochasticVector({self.coords.tolist()})"


def _exact_unit_sum(c: np.ndarray) -> np.ndarray:
    # fold the residual of the exactly rounded sum into the largest coordinate
    for _ in range(4):
        residual = 1.0 - math.fsum(c)
        if residual == 0.0:
            break
        k = int(np.argmax(c))
        c[k] += residual
    return c


def normalize(amounts: Sequence[float]) -> StochasticVector:
    """Divide amounts by their total.

    The result is adjusted by at most a few ulps so that its exactly rounded
    sum is 1.0; this makes ``normalize`` idempotent bit for bit.
    """
    arr = np.array(amounts, dtype=float)
    if arr.ndim != 1:
        raise DimensionMismatch("amounts must be one-dimensional")
    if np.any(arr < 0):
        raise NegativeCoordinate(f"negative amount in {arr}")
    total = math.fsum(arr)
    if total <= 0.0:
        raise ZeroTotal("all amounts are zero")
    if total == 1.0:
        return StochasticVector(arr)
    return StochasticVector(_exact_unit_sum(arr / total))


def inner(u: StochasticVector | np.ndarray, v: StochasticVector | np.ndarray) -> float:
    """Conflict index: the inner product of two stochastic vectors."""
    a = u.coords if isinstance(u, StochasticVector) else np.asarray(u, dtype=float)
    b = v.coords if isinstance(v, StochasticVector) else np.asarray(v, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"dimensions differ: {a.size} vs {b.size}")
    # fsum of elementwise products is order independent, hence symmetric
    return math.fsum(a * b)


@dataclass(frozen=True, eq=False)
class AmountState:
    """Absolute regional amounts of population P, resource R and threat Q.

    ``totals`` defaults to the coordinate sums.  A caller carrying conserved
    totals forward may pass them explicitly; they must agree with the sums
    to a relative 1e-9.  A zero total is representable; the triad map
    treats it as a collapse.
    """

    P: np.ndarray
    R: np.ndarray
    Q: np.ndarray
    totals: tuple[float, float, float] | None = field(default=None)

    def __post_init__(self):
        P, R, Q = (_frozen(getattr(self, k), k) for k in "PRQ")
        if not (P.size == R.size == Q.size):
            raise DimensionMismatch(f"P, R, Q lengths differ: {P.size}, {R.size}, {Q.size}")
        if P.size < 2:
            raise DimensionMismatch("need at least 2 regions")
        for name, arr in zip("PRQ", (P, R, Q)):
            if not np.all(np.isfinite(arr)):
                raise TriadError(f"non-finite coordinate in {name}")
            if np.any(arr < 0):
                raise NegativeCoordinate(f"negative coordinate in {name}: {arr}")
        sums = (math.fsum(P), math.fsum(R), math.fsum(Q))
        if self.totals is None:
            totals = sums
        else:
            totals = tuple(float(t) for t in self.totals)
            for name, t, s in zip("PRQ", totals, sums):
                if abs(t - s) > TOTAL_RTOL * max(abs(t), abs(s)):
                    raise TriadError(f"cached total of {name} ({t!r}) disagrees with sum {s!r}")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "totals", totals)

    @property
    def n(self) -> int:
        return self.P.size

    def as_array(self) -> np.ndarray:
        """Flat vector ``(P_1..P_n, R_1..R_n, Q_1..Q_n)``."""
        return np.concatenate([self.P, self.R, self.Q])

    @classmethod
    def from_array(cls, flat, totals=None) -> "AmountState":
        flat = np.asarray(flat, dtype=float)
        if flat.size % 3:
            raise DimensionMismatch("flat state length must be a multiple of 3")
        n = flat.size // 3
        return cls(flat[:n], flat[n : 2 * n], flat[2 * n :], totals)

    def stochastic(self) -> tuple[StochasticVector, StochasticVector, StochasticVector]:
        return normalize(self.P), normalize(self.R), normalize(self.Q)

    def __eq__(self, other):
        if not isinstance(other, AmountState):
            return NotImplemented
        return np.array_equal(self.as_array(), other.as_array())

    def __hash__(self):
        return hash(self.as_array().tobytes())

    def __repr__(self):
        return f"AmountState(P={self.P.tolist()}, R={self.R.tolist()}, Q={self.Q.tolist()})"


PARAM_NAMES = ("d1", "d2", "d3", "a", "b", "c")


@dataclass(frozen=True)
class TriadParams:
    """Coupling rates d1, d2, d3 and redistribution intensities a, b, c."""

    d1: float
    d2: float
    d3: float
    a: float
    b: float
    c: float

    def __post_init__(self):
        for name in PARAM_NAMES:
            value = float(getattr(self, name))
            if not (value > 0 and math.isfinite(value)):
                raise InvalidParameter(f"{name} must be a positive finite number, got {value!r}")
            object.__setattr__(self, name, value)

    def replace(self, **changes) -> "TriadParams":
        values = {k: getattr(self, k) for k in PARAM_NAMES}
        values.update(changes)
        return TriadParams(**values)
