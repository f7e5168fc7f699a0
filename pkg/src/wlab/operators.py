"""Operators acting on grid functions.

Outputs are grid functions sampled at cell centers.  Maximal functions take
exact suprema over the finite family of admissible grid intervals; the
truncated singular integrals integrate the kernel exactly over each cell.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
from scipy.interpolate import CubicSpline

from . import _kernels
from .dyadic import DyadicInterval, GridFunction, GridSpec, average, dilate, dyadic_averages, upsample
from .weights import Weight

MODES = ("uncentered", "centered", "dyadic")


# ----------------------------------------------------------- maximal functions

def _measure_cells(f: GridFunction, measure: Weight | None) -> np.ndarray:
    if measure is None:
        return np.full(f.grid.ncells, f.grid.width)
    if measure.grid != f.grid:
        raise ValueError("weight and function live on different grids")
    return measure.values * f.grid.width


def maximal(f: GridFunction, mode: str = "uncentered", measure: Weight | None = None) -> GridFunction:
    """Hardy-Littlewood maximal function of ``f`` w.r.t. Lebesgue or ``measure``.

    ``uncentered``: all grid intervals containing the cell; ``centered``: odd
    runs of cells centered on it; ``dyadic``: its dyadic ancestors.  The
    weighted measure vanishes outside the root.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    W = _measure_cells(f, measure)
    F = np.abs(f.values) * W
    if mode == "uncentered":
        X = np.concatenate([[0.0], np.cumsum(W)])
        Y = np.concatenate([[0.0], np.cumsum(F)])
        out = np.empty(f.grid.ncells)
        _kernels.max_slope(X, Y, out)
    elif mode == "centered":
        out = np.empty(f.grid.ncells)
        _kernels.centered_sup(F, W, measure is None, out)
    else:
        L = f.grid.level
        out = F / W
        fs, ws = F, W
        for d in range(L - 1, -1, -1):
            fs = fs[0::2] + fs[1::2]
            ws = ws[0::2] + ws[1::2]
            out = np.maximum(out, upsample(fs / ws, L))
    return GridFunction(f.grid, out)


# ----------------------------------------------------------- singular kernels

_REJECTED = ("riesz", "beurling")


@dataclass(frozen=True)
class KernelSpec:
    """Odd 1-D Calderon-Zygmund kernel: ``hilbert`` (1/x) or a tabulated ``K``.

    A tabulated kernel is stored through ``G(x) = x K(x)`` for ``x > 0``,
    interpolated by a cubic spline in ``log x`` and held constant outside the
    table.  Integrals of ``K`` over ``[a, b]`` are then integrals of ``G`` in
    ``log x`` and are taken exactly from the spline antiderivative.
    """

    kind: str
    x: np.ndarray | None = field(default=None, repr=False)
    values: np.ndarray | None = field(default=None, repr=False)
    bound: float = 1.0

    def __post_init__(self):
        if self.kind in _REJECTED:
            raise ValueError(f"{self.kind} kernels act in dimension n >= 2; this library is one-dimensional")
        if self.kind not in ("hilbert", "tabulated"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "tabulated":
            x = np.asarray(self.x, float)
            v = np.asarray(self.values, float)
            if x.shape != v.shape or x.ndim != 1:
                raise ValueError("tabulated kernel needs matching abscissae and values")
            pos = x > 0
            if pos.sum() < 2:
                raise ValueError("tabulated kernel needs at least two positive abscissae")
            _check_odd(x, v)
            order = np.argsort(x[pos])
            xp, vp = x[pos][order], v[pos][order]
            if np.any(np.diff(xp) <= 0):
                raise ValueError("duplicate abscissae in tabulated kernel")
            G = xp * vp
            if np.any(np.abs(G) > self.bound * (1 + 1e-12)):
                raise ValueError("tabulated kernel violates |K(x)| <= c/|x|")
            spline = CubicSpline(np.log(xp), G)
            object.__setattr__(self, "_u", (math.log(xp[0]), math.log(xp[-1])))
            object.__setattr__(self, "_G", (G[0], G[-1]))
            object.__setattr__(self, "_anti", spline.antiderivative())

    @classmethod
    def hilbert(cls) -> "KernelSpec":
        return cls("hilbert")

    @classmethod
    def named(cls, name: str) -> "KernelSpec":
        return cls(name.strip().lower())

    @classmethod
    def tabulated(cls, x, values, bound: float = 1.0) -> "KernelSpec":
        return cls("tabulated", np.asarray(x, float), np.asarray(values, float), float(bound))

    @classmethod
    def from_file(cls, path, bound: float = 1.0) -> "KernelSpec":
        """Two-column text file: abscissa, value."""
        data = np.loadtxt(path, ndmin=2)
        if data.shape[1] != 2:
            raise ValueError(f"{path}: expected two columns")
        return cls.tabulated(data[:, 0], data[:, 1], bound)

    def _log_antiderivative(self, u):
        # integral of G over (-inf, u] relative to u0, with constant tails
        u = np.asarray(u, float)
        u0, u1 = self._u
        g0, g1 = self._G
        mid = np.clip(u, u0, u1)
        out = self._anti(mid)
        out = out + np.where(u < u0, g0 * (u - u0), 0.0)
        out = out + np.where(u > u1, g1 * (u - u1), 0.0)
        return out

    def integral(self, a, b):
        """Integral of ``K`` over ``[a, b]`` with ``0 < a <= b`` (arrays)."""
        a = np.asarray(a, float)
        b = np.asarray(b, float)
        if self.kind == "hilbert":
            return np.log(b / a)
        return self._log_antiderivative(np.log(b)) - self._log_antiderivative(np.log(a))

    def __call__(self, x):
        x = np.asarray(x, float)
        if self.kind == "hilbert":
            return 1.0 / x
        ax = np.abs(x)
        u = np.clip(np.log(ax), *self._u)
        G = self._anti.derivative()(u)
        return np.sign(x) * G / ax


def _check_odd(x, v, tol=1e-9):
    lookup = dict(zip(x.tolist(), v.tolist()))
    for xi, vi in lookup.items():
        if xi > 0 and -xi in lookup:
            if abs(vi + lookup[-xi]) > tol * max(1.0, abs(vi)):
                raise ValueError(f"tabulated kernel is not odd at x = {xi}")
        if xi == 0 and vi != 0:
            raise ValueError("odd kernel must vanish at 0")


def _ring_coefficients(kernel: KernelSpec, h: float, m: int, eps: float, delta: float) -> np.ndarray:
    """``coef[k]``: integral of K over ``{eps < t < delta} ∩ ((k-1/2)h, (k+1/2)h)``."""
    k = np.arange(1, m)
    lo = np.maximum((k - 0.5) * h, eps)
    hi = np.minimum((k + 0.5) * h, delta)
    coef = np.zeros(m)
    ok = hi > lo
    coef[1:][ok] = kernel.integral(lo[ok], hi[ok])
    return coef


def _antisymmetric_apply(f: np.ndarray, coef: np.ndarray) -> np.ndarray:
    # out[c] = sum_k coef[k] (f[c-k] - f[c+k])
    m = f.size
    kern = np.concatenate([-coef[:0:-1], [0.0], coef[1:]])
    return np.convolve(f, kern)[m - 1:2 * m - 1]


def singular_truncated(f: GridFunction, kernel: KernelSpec, eps: float, delta: float) -> GridFunction:
    """``int_{eps < |x-y| < delta} f(y) K(x-y) dy`` at every cell center."""
    if not 0 < eps < delta:
        raise ValueError("need 0 < eps < delta")
    m, h = f.grid.ncells, f.grid.width
    coef = _ring_coefficients(kernel, h, m, eps, delta)
    return GridFunction(f.grid, _antisymmetric_apply(f.values, coef))


def truncated_at(f: GridFunction, kernel: KernelSpec, x: float, eps: float, delta: float) -> float:
    """Truncated singular integral of ``f`` at an arbitrary point ``x``."""
    if not 0 < eps < delta:
        raise ValueError("need 0 < eps < delta")
    e = f.grid.edges()
    t_lo, t_hi = x - e[1:], x - e[:-1]          # t = x - y over each cell
    total = np.zeros(f.grid.ncells)
    # t > 0 part
    a = np.maximum(np.maximum(t_lo, 0.0), eps)
    b = np.minimum(t_hi, delta)
    ok = b > a
    total[ok] += kernel.integral(a[ok], b[ok])
    # t < 0 part, K odd
    a = np.maximum(np.maximum(-t_hi, 0.0), eps)
    b = np.minimum(-t_lo, delta)
    ok = b > a
    total[ok] -= kernel.integral(a[ok], b[ok])
    return float(np.dot(total, f.values))


def singular_maximal(f: GridFunction, kernel: KernelSpec) -> GridFunction:
    """``T* f = sup_{eps < delta} |T_{eps,delta} f|`` at every cell center.

    At a cell center the truncated integral is ``S(delta) - S(eps)`` with
    ``S`` monotone between the half-integer radii, so the sup is
    ``max S - min S`` over those radii.
    """
    m, h = f.grid.ncells, f.grid.width
    k = np.arange(1, m)
    coef = np.zeros(m)
    coef[1:] = kernel.integral((k - 0.5) * h, (k + 0.5) * h)
    out = np.empty(m)
    _kernels.truncation_sup(np.ascontiguousarray(f.values), coef, out)
    return GridFunction(f.grid, out)


# --------------------------------------------------------------- Haar shifts

ShiftRule = Callable[[int], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class HaarShiftSpec:
    """Generalized Haar shift with parameters ``(m, k)``.

    ``rule(d)`` returns ``(hp, hpp)``, each of shape ``(2**d, 2**m, 2**k, 2)``:
    for the node ``Q = (d, q)``, the ``i``-th descendant ``Q'`` at depth
    ``d+m`` and the ``j``-th descendant ``Q''`` at depth ``d+k``,
    ``hp[q, i, j]`` holds the values of ``h_{Q'}`` on the two children of
    ``Q'`` and ``hpp[q, i, j]`` those of ``h_{Q''}`` on the children of ``Q''``.
    """

    m: int
    k: int
    rule: ShiftRule = field(repr=False)
    name: str = "custom"

    @property
    def complexity(self) -> int:
        return max(self.m, self.k)

    def coefficients(self, d: int) -> tuple[np.ndarray, np.ndarray]:
        hp, hpp = (np.asarray(a, float) for a in self.rule(d))
        shape = (1 << d, 1 << self.m, 1 << self.k, 2)
        if hp.shape != shape or hpp.shape != shape:
            raise ValueError(f"shift rule must return arrays of shape {shape}")
        norm = np.abs(hp).max(axis=-1) * np.abs(hpp).max(axis=-1)
        if np.any(norm > 1 + 1e-12):
            raise ValueError("Haar functions violate ||h'||_inf ||h''||_inf <= 1")
        return hp, hpp

    def cancellative(self, d: int) -> tuple[bool, bool]:
        hp, hpp = self.coefficients(d)
        return bool(np.all(hp.sum(-1) == 0)), bool(np.all(hpp.sum(-1) == 0))


def _haar_pair(d: int):
    a = np.zeros((1 << d, 1, 1, 2))
    a[..., 0], a[..., 1] = 1.0, -1.0
    return a


def identity_shift() -> HaarShiftSpec:
    """``m = k = 0`` with ``h' = h''`` the sup-normalized Haar function."""
    return HaarShiftSpec(0, 0, lambda d: (_haar_pair(d), _haar_pair(d)), "identity")


def _petermichl_rule(d: int):
    hp = np.zeros((1 << d, 1, 2, 2))
    hp[..., 0], hp[..., 1] = 1.0, -1.0
    hpp = np.zeros((1 << d, 1, 2, 2))
    hpp[:, :, 0, :] = (1.0, -1.0)
    hpp[:, :, 1, :] = (-1.0, 1.0)
    return hp, hpp


def petermichl_shift() -> HaarShiftSpec:
    """``m = 0, k = 1``: sends ``h_I`` to ``(h_{I-} - h_{I+}) / sqrt(2)``."""
    return HaarShiftSpec(0, 1, _petermichl_rule, "petermichl")


BUILTIN_SHIFTS = {"identity": identity_shift, "petermichl": petermichl_shift}


def shift_depths(spec: HaarShiftSpec, grid: GridSpec) -> range:
    top = grid.level - spec.complexity - 1
    if top < 0:
        raise ValueError(f"grid level {grid.level} cannot resolve a shift of complexity {spec.complexity}")
    return range(top + 1)


def _shift_terms(spec: HaarShiftSpec, f: GridFunction):
    """Yield the per-cell contribution of each depth, in order."""
    grid = f.grid
    L = grid.level
    sums = [None] * (L + 1)
    cur = f.values * grid.width
    sums[L] = cur
    for d in range(L - 1, -1, -1):
        cur = cur[0::2] + cur[1::2]
        sums[d] = cur
    for d in shift_depths(spec, grid):
        hp, hpp = spec.coefficients(d)
        size = math.ldexp(1.0, grid.span_log2 - d)
        I = sums[d + spec.m + 1].reshape(1 << d, 1 << spec.m, 1, 2)
        inner = (hp * I).sum(-1)                     # (q, i, j)
        coef = inner / size
        vals = (coef[..., None] * hpp).sum(1)        # (q, j, 2)
        yield upsample(vals.reshape(-1), L)


def haar_shift(spec: HaarShiftSpec, f: GridFunction) -> GridFunction:
    """``sum_Q sum_{Q', Q''} <f, h_{Q'}> / |Q| * h_{Q''}`` over the grid tree."""
    out = np.zeros(f.grid.ncells)
    for term in _shift_terms(spec, f):
        out += term
    return GridFunction(f.grid, out)


def haar_shift_maximal(spec: HaarShiftSpec, f: GridFunction) -> GridFunction:
    """Sup over depth truncations of the absolute partial sums."""
    acc = np.zeros(f.grid.ncells)
    best = np.zeros(f.grid.ncells)
    for term in _shift_terms(spec, f):
        acc += term
        np.maximum(best, np.abs(acc), out=best)
    return GridFunction(f.grid, best)


# ---------------------------------------------------------- square functions

def dyadic_square(f: GridFunction) -> GridFunction:
    """``(sum over non-root dyadic Q containing x of (f_Q - f_parent)^2)^(1/2)``."""
    L = f.grid.level
    avgs = dyadic_averages(f)
    acc = np.zeros(f.grid.ncells)
    for d in range(1, L + 1):
        diff = avgs[d] - np.repeat(avgs[d - 1], 2)
        acc += upsample(diff * diff, L)
    return GridFunction(f.grid, np.sqrt(acc))


# ----------------------------------------------------------- vector maximal

@dataclass(frozen=True)
class VectorFunction:
    components: tuple[GridFunction, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("vector function needs at least one component")
        if any(c.grid != comps[0].grid for c in comps):
            raise ValueError("components live on different grids")
        object.__setattr__(self, "components", comps)

    @property
    def grid(self) -> GridSpec:
        return self.components[0].grid

    def norm(self, q: float) -> GridFunction:
        v = np.stack([np.abs(c.values) for c in self.components])
        return GridFunction(self.grid, (v ** q).sum(0) ** (1 / q))


def vec_maximal(fs: VectorFunction, q: float, mode: str = "uncentered", measure: Weight | None = None) -> GridFunction:
    """``(sum_i (M f_i)^q)^(1/q)``."""
    if not q > 1:
        raise ValueError("vector maximal function needs q > 1")
    acc = np.zeros(fs.grid.ncells)
    for c in fs.components:
        acc += maximal(c, mode, measure).values ** q
    return GridFunction(fs.grid, acc ** (1 / q))


# ---------------------------------------------------------- sparse operator

def _family_intervals(family) -> Iterable[DyadicInterval]:
    return family.intervals() if hasattr(family, "intervals") else family


def sparse_averaging(family, f: GridFunction, gamma: float = 1.0, nu: float = 1.0) -> GridFunction:
    """``(sum_Q (avg_{gamma Q} |f|)^nu chi_Q)^(1/nu)`` over the family (a multiset)."""
    if gamma < 1 or nu < 1:
        raise ValueError("need gamma >= 1 and nu >= 1")
    af = abs(f)
    acc = np.zeros(f.grid.ncells)
    for Q in _family_intervals(family):
        if not isinstance(Q, DyadicInterval) or Q.grid != f.grid:
            raise ValueError(f"interval {Q!r} does not belong to the function's grid tree")
        s = Q.span
        acc[s.start:s.stop] += average(af, dilate(Q, gamma)) ** nu
    return GridFunction(f.grid, acc ** (1 / nu))
