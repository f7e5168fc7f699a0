"""Dyadic grids, intervals and piecewise-constant functions.

Everything in the package lives on a :class:`GridSpec`: a root interval
``[origin, origin + 2**span_log2)`` cut into ``2**level`` equal cells.
Intervals are addressed by cell indices (:class:`Span`), so every
breakpoint is a dyadic rational and integrals of piecewise-constant data
are finite sums with no quadrature error.  Functions are extended by zero
outside the root.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Union

import numpy as np

MAX_LEVEL = 26


def _as_dyadic(x) -> Fraction:
    if isinstance(x, str):
        x = x.strip()
    try:
        q = Fraction(x)
    except (ValueError, TypeError, OverflowError) as exc:
        raise ValueError(f"origin {x!r} is not a rational number") from exc
    d = q.denominator
    if d & (d - 1):
        raise ValueError(f"origin {x!r} is not a dyadic rational")
    return q


@dataclass(frozen=True)
class GridSpec:
    """Uniform dyadic grid over the root interval."""

    origin: Fraction
    span_log2: int
    level: int

    @property
    def ncells(self) -> int:
        return 1 << self.level

    @property
    def width(self) -> float:
        return math.ldexp(1.0, self.span_log2 - self.level)

    @property
    def exact_width(self) -> Fraction:
        return Fraction(2) ** (self.span_log2 - self.level)

    @property
    def length(self) -> float:
        return math.ldexp(1.0, self.span_log2)

    @property
    def left(self) -> float:
        return float(self.origin)

    @property
    def right(self) -> float:
        return self.left + self.length

    def edges(self) -> np.ndarray:
        return self.left + self.width * np.arange(self.ncells + 1, dtype=float)

    def centers(self) -> np.ndarray:
        return self.left + self.width * (np.arange(self.ncells, dtype=float) + 0.5)

    @property
    def root(self) -> "DyadicInterval":
        return DyadicInterval(self, 0, 0)

    def dyadic(self, depth: int, index: int) -> "DyadicInterval":
        return DyadicInterval(self, depth, index)

    def intervals(self, depth: int) -> Iterator["DyadicInterval"]:
        for j in range(1 << depth):
            yield DyadicInterval(self, depth, j)

    def index_of(self, x) -> Fraction:
        """Position of ``x`` in cell units (exact)."""
        return (Fraction(x) - self.origin) / self.exact_width

    def span(self, a, b) -> "Span":
        """Grid-aligned interval ``[a, b)`` given by real endpoints."""
        lo, hi = self.index_of(a), self.index_of(b)
        if lo.denominator != 1 or hi.denominator != 1:
            raise ValueError(f"[{a}, {b}) is not aligned with the grid breakpoints")
        if hi < lo:
            raise ValueError("interval endpoints out of order")
        return Span(int(lo), int(hi))

    def __str__(self) -> str:
        return f"grid {self.origin} {self.span_log2} {self.level}"


def build_grid(origin=0, span_log2: int = 0, level: int = 0) -> GridSpec:
    """Grid whose ``2**level`` cells tile ``[origin, origin + 2**span_log2)``."""
    if int(level) != level or int(span_log2) != span_log2:
        raise ValueError("span_log2 and level must be integers")
    level, span_log2 = int(level), int(span_log2)
    if level < 0 or level > MAX_LEVEL:
        raise ValueError(f"level must lie in [0, {MAX_LEVEL}], got {level}")
    return GridSpec(_as_dyadic(origin), span_log2, level)


@dataclass(frozen=True)
class Span:
    """Half-open run of cells ``[start, stop)``.

    ``start``/``stop`` may fall outside the root (zero extension applies).
    ``scale`` overrides the normalizing length, in cells; dilated intervals
    keep ``gamma * len(Q)`` even after clipping.
    """

    start: int
    stop: int
    scale: float | None = None

    def __len__(self) -> int:
        return self.stop - self.start

    @property
    def norm(self) -> float:
        return float(self.stop - self.start) if self.scale is None else float(self.scale)

    def clip(self, n: int) -> "Span":
        lo, hi = max(self.start, 0), min(self.stop, n)
        return Span(lo, max(lo, hi), self.scale)

    def contains(self, other: "Span") -> bool:
        return self.start <= other.start and other.stop <= self.stop

    def disjoint(self, other: "Span") -> bool:
        return self.stop <= other.start or other.stop <= self.start

    def bounds(self, grid: GridSpec) -> tuple[float, float]:
        return grid.left + self.start * grid.width, grid.left + self.stop * grid.width


@dataclass(frozen=True)
class DyadicInterval:
    """Node ``(depth, index)`` of the dyadic tree over the root."""

    grid: GridSpec = field(repr=False)
    depth: int
    index: int

    def __post_init__(self):
        if not 0 <= self.depth <= self.grid.level:
            raise ValueError(f"depth {self.depth} outside [0, {self.grid.level}]")
        if not 0 <= self.index < (1 << self.depth):
            raise ValueError(f"index {self.index} outside [0, 2**{self.depth})")

    @property
    def span(self) -> Span:
        n = 1 << (self.grid.level - self.depth)
        return Span(self.index * n, (self.index + 1) * n)

    @property
    def ncells(self) -> int:
        return 1 << (self.grid.level - self.depth)

    @property
    def length(self) -> float:
        return math.ldexp(1.0, self.grid.span_log2 - self.depth)

    @property
    def left(self) -> float:
        return self.grid.left + self.index * self.length

    @property
    def right(self) -> float:
        return self.left + self.length

    @property
    def is_root(self) -> bool:
        return self.depth == 0

    def children(self) -> tuple["DyadicInterval", "DyadicInterval"]:
        if self.depth == self.grid.level:
            raise ValueError("finest cell has no dyadic children on this grid")
        d, j = self.depth + 1, 2 * self.index
        return DyadicInterval(self.grid, d, j), DyadicInterval(self.grid, d, j + 1)

    def contains(self, other: "DyadicInterval") -> bool:
        return other.depth >= self.depth and (other.index >> (other.depth - self.depth)) == self.index

    def __str__(self) -> str:
        return f"[{self.left:g}, {self.right:g})"


Interval = Union[Span, DyadicInterval]


def as_span(I: Interval) -> Span:
    return I.span if isinstance(I, DyadicInterval) else I


def parent(Q: DyadicInterval) -> DyadicInterval:
    """Dyadic parent: the unique tree node containing ``Q`` with twice its length."""
    if Q.depth == 0:
        raise ValueError("the root interval has no dyadic parent")
    return DyadicInterval(Q.grid, Q.depth - 1, Q.index >> 1)


def dilate(Q: Interval, gamma: float) -> Span:
    """Concentric dilation ``gamma * Q`` snapped outward to breakpoints.

    The normalizer stays ``gamma * |Q|`` regardless of snapping or clipping.
    """
    if gamma < 1:
        raise ValueError("dilation factor must be >= 1")
    s = as_span(Q)
    n = len(s)
    center = Fraction(s.start + s.stop, 2)
    half = Fraction(gamma) * n / 2
    lo = math.floor(center - half)
    hi = math.ceil(center + half)
    return Span(lo, hi, float(gamma) * n)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Piecewise-constant function: one value per finest cell, zero outside."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.ncells,):
            raise ValueError(f"expected {self.grid.ncells} cell values, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, grid: GridSpec, c: float) -> "GridFunction":
        return cls(grid, np.full(grid.ncells, float(c)))

    @classmethod
    def indicator(cls, grid: GridSpec, a, b) -> "GridFunction":
        s = grid.span(a, b).clip(grid.ncells)
        v = np.zeros(grid.ncells)
        v[s.start:s.stop] = 1.0
        return cls(grid, v)

    @classmethod
    def from_cell_averages(cls, grid: GridSpec, antiderivative) -> "GridFunction":
        e = grid.edges()
        return cls(grid, np.diff(antiderivative(e)) / grid.width)

    def _new(self, v) -> "GridFunction":
        return GridFunction(self.grid, v)

    def _other(self, g):
        if isinstance(g, GridFunction):
            if g.grid != self.grid:
                raise ValueError("grid functions live on different grids")
            return g.values
        return float(g)

    def __add__(self, g):
        return self._new(self.values + self._other(g))

    __radd__ = __add__

    def __sub__(self, g):
        return self._new(self.values - self._other(g))

    def __rsub__(self, g):
        return self._new(self._other(g) - self.values)

    def __mul__(self, g):
        return self._new(self.values * self._other(g))

    __rmul__ = __mul__

    def __truediv__(self, g):
        return self._new(self.values / self._other(g))

    def __neg__(self):
        return self._new(-self.values)

    def __abs__(self):
        return self._new(np.abs(self.values))

    def __pow__(self, q):
        return self._new(self.values ** q)

    def restrict(self, I: Interval) -> np.ndarray:
        s = as_span(I).clip(self.grid.ncells)
        return self.values[s.start:s.stop]


def integrate(f: GridFunction, I: Interval) -> float:
    """Exact integral of ``f`` over a grid-aligned interval (zero outside the root)."""
    vals = f.restrict(I)
    if vals.size == 0:
        return 0.0
    return float(np.sum(vals)) * f.grid.width


def average(f: GridFunction, I: Interval) -> float:
    s = as_span(I)
    if s.norm <= 0:
        raise ValueError("average over an empty interval")
    return integrate(f, s) / (s.norm * f.grid.width)


def _exact_count(t: float, width: float) -> int:
    # floor(t / width) without rounding: both are binary64, hence dyadic
    return math.floor(Fraction(t) / Fraction(width))


def rearrangement_value(f: GridFunction, I: Interval, t: float) -> float:
    """Non-increasing rearrangement ``(|f| chi_I)^*(t)`` for ``0 < t <= |I|``."""
    s = as_span(I)
    length = len(s) * f.grid.width
    if not 0 < t <= length:
        raise ValueError(f"t must lie in (0, {length}], got {t}")
    vals = np.abs(np.concatenate([f.restrict(s), np.zeros(len(s) - len(f.restrict(s)))]))
    k = _exact_count(t, f.grid.width)
    if k >= vals.size:
        return 0.0
    return float(-np.partition(-vals, k)[k])


def median(f: GridFunction, I: Interval) -> float:
    """Lower median: the least ``m`` with neither ``{f > m}`` nor ``{f < m}`` above half of ``I``."""
    s = as_span(I)
    if len(s) <= 0:
        raise ValueError("median over an empty interval")
    vals = f.restrict(s)
    if vals.size < len(s):
        vals = np.concatenate([vals, np.zeros(len(s) - vals.size)])
    k = (vals.size - 1) // 2
    return float(np.partition(vals, k)[k])


def block_view(values: np.ndarray, depth: int) -> np.ndarray:
    """Cells grouped by the ``2**depth`` dyadic intervals at ``depth``."""
    return values.reshape(1 << depth, -1)


def dyadic_averages(f: GridFunction) -> list[np.ndarray]:
    """``avgs[d][j]`` is the average of ``f`` over the node ``(d, j)``."""
    L = f.grid.level
    out = [None] * (L + 1)
    cur = f.values.copy()
    out[L] = cur
    for d in range(L - 1, -1, -1):
        cur = 0.5 * (cur[0::2] + cur[1::2])
        out[d] = cur
    return out


def upsample(values: np.ndarray, level: int) -> np.ndarray:
    """Expand per-node values at some depth to per-cell values."""
    return np.repeat(values, (1 << level) // values.size)


def read_function(path) -> GridFunction:
    """Function file: ``grid origin span_log2 level`` then one value per line."""
    grid = None
    vals: list[float] = []
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if grid is None:
                head = line.split()
                if len(head) != 4 or head[0] != "grid":
                    raise ValueError(f"{path}: first line must be 'grid origin span_log2 level'")
                grid = build_grid(head[1], int(head[2]), int(head[3]))
                continue
            vals.append(float(line))
    if grid is None:
        raise ValueError(f"{path}: missing grid header")
    if len(vals) != grid.ncells:
        raise ValueError(f"{path}: expected {grid.ncells} values, found {len(vals)}")
    return GridFunction(grid, np.array(vals))


def write_function(path, f: GridFunction) -> None:
    g = f.grid
    with open(path, "w") as fh:
        fh.write(f"grid {g.origin} {g.span_log2} {g.level}\n")
        fh.writelines(f"{v!r}\n" for v in f.values.tolist())
