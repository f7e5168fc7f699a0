"""Weights and their characteristics.

A :class:`Weight` is a strictly positive grid function.  Weights built
from a recipe also carry the continuum density they came from, so cell
integrals of ``w**q`` and ``log w`` are taken exactly from antiderivatives
rather than from the cell averages.  Characteristics of such a weight are
those of the continuum weight restricted to grid-aligned intervals; drop the
density (:meth:`Weight.discrete`) to get the characteristics of the
piecewise-constant weight itself.

Interval sums are read off a dyadic tree of block sums, so every sum is a
short sum of same-sign terms and small intervals near a zero or pole of the
weight keep full relative accuracy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .dyadic import GridFunction, GridSpec, Interval, Span, as_span

SCOPES = ("dyadic", "windowed", "all")


# ---------------------------------------------------------------- densities

def _int_pow(A, B, b):
    """Integral of x**b over [A, B], 0 <= A <= B (arrays)."""
    A = np.asarray(A, float)
    B = np.asarray(B, float)
    out = np.zeros(np.broadcast(A, B).shape)
    if b == 0:
        return B - A
    pos = B > A
    zero = pos & (A == 0)
    inner = pos & (A > 0)
    if b > -1:
        out[zero] = B[zero] ** (b + 1) / (b + 1)
    else:
        out[zero] = np.inf
    a, d = A[inner], (B - A)[inner]
    z = np.log1p(d / a)
    if b == -1:
        out[inner] = z
    else:
        out[inner] = a ** (b + 1) * np.expm1((b + 1) * z) / (b + 1)
    return out


def _int_log(A, B):
    """Integral of log x over [A, B], 0 <= A <= B (arrays)."""
    A = np.asarray(A, float)
    B = np.asarray(B, float)
    out = np.zeros(np.broadcast(A, B).shape)
    pos = B > A
    zero = pos & (A == 0)
    inner = pos & (A > 0)
    out[zero] = B[zero] * (np.log(B[zero]) - 1.0)
    a, b = A[inner], B[inner]
    d = b - a
    out[inner] = d * (np.log(b) - 1.0) + a * np.log1p(d / a)
    return out


def _split_abs(u, v):
    """Pieces of [u, v] on each side of 0 as distance ranges (A, B)."""
    neg_A = np.maximum(-v, 0.0)
    neg_B = np.maximum(-u, 0.0)
    neg_A = np.minimum(neg_A, neg_B)
    pos_A = np.maximum(u, 0.0)
    pos_B = np.maximum(v, 0.0)
    pos_A = np.minimum(pos_A, pos_B)
    return (neg_A, neg_B), (pos_A, pos_B)


@dataclass(frozen=True)
class PowerPieces:
    """Density ``coef * |x - center| ** expo`` on consecutive pieces ``[lo, hi)``."""

    pieces: tuple[tuple[float, float, float, float, float], ...]

    def power(self, q: float) -> "PowerPieces":
        return PowerPieces(tuple((lo, hi, c ** q, x0, a * q) for lo, hi, c, x0, a in self.pieces))

    def scaled(self, s: float) -> "PowerPieces":
        return PowerPieces(tuple((lo, hi, c * s, x0, a) for lo, hi, c, x0, a in self.pieces))

    def _clipped(self, edges):
        for lo, hi, c, x0, a in self.pieces:
            u = np.clip(edges[:-1], lo, hi)
            v = np.clip(edges[1:], lo, hi)
            yield u - x0, v - x0, c, a

    def cell_integrals(self, edges: np.ndarray, q: float = 1.0) -> np.ndarray:
        """Integral of ``density**q`` over each cell."""
        out = np.zeros(edges.size - 1)
        for u, v, c, a in self._clipped(edges):
            b = a * q
            (nA, nB), (pA, pB) = _split_abs(u, v)
            out += c ** q * (_int_pow(nA, nB, b) + _int_pow(pA, pB, b))
        return out

    def log_cell_integrals(self, edges: np.ndarray) -> np.ndarray:
        out = np.zeros(edges.size - 1)
        for u, v, c, a in self._clipped(edges):
            out += (v - u) * math.log(c)
            if a != 0:
                (nA, nB), (pA, pB) = _split_abs(u, v)
                out += a * (_int_log(nA, nB) + _int_log(pA, pB))
        return out


# ------------------------------------------------------------------ weights

class Weight:
    """Strictly positive weight on a grid, with cached dyadic block sums."""

    def __init__(self, grid: GridSpec, values, density: PowerPieces | None = None, label: str = ""):
        v = np.array(values, dtype=float)
        if v.shape != (grid.ncells,):
            raise ValueError(f"expected {grid.ncells} cell values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("weight has a non-finite cell average")
        if np.any(v <= 0):
            raise ValueError("weight cell values must be strictly positive")
        v.setflags(write=False)
        self.grid = grid
        self.values = v
        self.density = density
        self.label = label
        self._moments: dict = {}
        self._trees: dict = {}

    def __repr__(self):
        return f"Weight({self.label or 'custom'}, {self.grid})"

    @property
    def function(self) -> GridFunction:
        return GridFunction(self.grid, self.values)

    def discrete(self) -> "Weight":
        """Same cell values, no continuum density."""
        return Weight(self.grid, self.values, None, self.label + "|discrete")

    def scaled(self, c: float) -> "Weight":
        d = None if self.density is None else self.density.scaled(c)
        return Weight(self.grid, c * self.values, d, self.label)

    def moments(self, q) -> np.ndarray:
        """Per-cell integral of ``w**q``; ``q='log'`` gives the integral of ``log w``."""
        key = q if q == "log" else float(q)
        if key not in self._moments:
            h = self.grid.width
            if self.density is not None:
                e = self.grid.edges()
                m = self.density.log_cell_integrals(e) if key == "log" else self.density.cell_integrals(e, key)
            else:
                m = h * (np.log(self.values) if key == "log" else self.values ** key)
            m.setflags(write=False)
            self._moments[key] = m
        return self._moments[key]

    def tree(self, q) -> list[np.ndarray]:
        """``tree(q)[d][j]``: integral of ``w**q`` over dyadic node ``(d, j)``."""
        key = q if q == "log" else float(q)
        if key not in self._trees:
            L = self.grid.level
            levels = [None] * (L + 1)
            cur = self.moments(key)
            levels[L] = cur
            for d in range(L - 1, -1, -1):
                cur = cur[0::2] + cur[1::2]
                levels[d] = cur
            self._trees[key] = levels
        return self._trees[key]

    def interval_sum(self, q, I: Interval) -> float:
        """Integral of ``w**q`` (or ``log w``) over a grid-aligned interval inside the root."""
        s = _inside(self.grid, I)
        levels = self.tree(q)
        L = self.grid.level
        a, b = s.start, s.stop
        total = 0.0
        while a < b:
            j = L if a == 0 else min(L, (a & -a).bit_length() - 1)
            while a + (1 << j) > b:
                j -= 1
            total += levels[L - j][a >> j]
            a += 1 << j
        return float(total)

    def measure(self, I: Interval) -> float:
        return self.interval_sum(1.0, I)


def _inside(grid: GridSpec, I: Interval) -> Span:
    s = as_span(I)
    if s.start < 0 or s.stop > grid.ncells or len(s) <= 0:
        raise ValueError("interval must be a nonempty grid-aligned subinterval of the root")
    return s


# ------------------------------------------------------------------ recipes

@dataclass(frozen=True)
class Recipe:
    kind: str
    params: tuple

    def __str__(self):
        return f"{self.kind}:" + ",".join(repr(float(x)) for x in self.params)


def parse_recipe(text: str) -> Recipe:
    """Parse ``const:c``, ``power:a``, ``step:t`` or ``bump:delta,N,p``."""
    if isinstance(text, Recipe):
        return text
    kind, _, rest = str(text).partition(":")
    kind = kind.strip().lower()
    arity = {"const": 1, "power": 1, "step": 1, "bump": (2, 3)}
    if kind not in arity or not rest:
        raise ValueError(f"bad weight recipe {text!r}; expected const:c, power:a, step:t or bump:delta,N,p")
    try:
        vals = [float(x) for x in rest.split(",")]
    except ValueError as exc:
        raise ValueError(f"bad weight recipe {text!r}") from exc
    want = arity[kind]
    if (isinstance(want, int) and len(vals) != want) or (isinstance(want, tuple) and len(vals) not in want):
        raise ValueError(f"bad number of parameters in recipe {text!r}")
    if kind == "bump":
        if len(vals) == 2:
            # bump:delta,p with N left to the grid default
            return Recipe("bump", (vals[0], None, vals[1]))
        return Recipe("bump", (vals[0], vals[1], vals[2]))
    return Recipe(kind, tuple(vals))


def default_bump_center(grid: GridSpec) -> float:
    return math.ldexp(1.0, grid.span_log2 - 2)


def recipe_density(recipe: Recipe, grid: GridSpec) -> PowerPieces:
    inf = math.inf
    kind, par = recipe.kind, recipe.params
    if kind == "const":
        (c,) = par
        if not c > 0:
            raise ValueError("constant weight needs c > 0")
        return PowerPieces(((-inf, inf, c, 0.0, 0.0),))
    if kind == "power":
        (a,) = par
        if not a > -1:
            raise ValueError("power weight |x|^a needs a > -1 for finite cell averages")
        return PowerPieces(((-inf, inf, 1.0, 0.0, a),))
    if kind == "step":
        (t,) = par
        if not t > 0:
            raise ValueError("step weight needs t > 0")
        return PowerPieces(((-inf, 0.0, 1.0, 0.0, 0.0), (0.0, 1.0, t, 0.0, 0.0), (1.0, inf, 1.0, 0.0, 0.0)))
    if kind == "bump":
        delta, N, p = par
        if N is None:
            N = default_bump_center(grid)
        if not 0 < delta < 1:
            raise ValueError("bump weight needs 0 < delta < 1")
        if not p > 1:
            raise ValueError("bump weight needs p > 1")
        if not N >= 4:
            raise ValueError("bump weight needs N >= 4")
        if grid.left > -1 or grid.right < N + 1:
            raise ValueError(f"root [{grid.left}, {grid.right}) must contain [-1, {N + 1}]")
        a = (p - 1) * (1 - delta)
        return PowerPieces((
            (-inf, -1.0, 1.0, 0.0, 0.0),
            (-1.0, 1.0, 1.0, 0.0, a),
            (1.0, N - 1.0, 1.0, 0.0, 0.0),
            (N - 1.0, N + 1.0, 1.0, float(N), delta - 1.0),
            (N + 1.0, inf, 1.0, 0.0, 0.0),
        ))
    raise ValueError(f"unknown recipe kind {kind!r}")


def make_weight(recipe, grid: GridSpec) -> Weight:
    """Weight whose cells hold the exact averages of the continuum recipe."""
    recipe = parse_recipe(recipe)
    if recipe.kind == "bump" and recipe.params[1] is None:
        delta, _, p = recipe.params
        recipe = Recipe("bump", (delta, default_bump_center(grid), p))
    dens = recipe_density(recipe, grid)
    vals = dens.cell_integrals(grid.edges()) / grid.width
    if not np.all(np.isfinite(vals)):
        raise ValueError(f"recipe {recipe} has a non-finite cell average on this grid")
    return Weight(grid, vals, dens, str(recipe))


def dual_weight(w: Weight, p: float) -> Weight:
    """``sigma = w ** (-1/(p-1))``: exact cell averages when ``w`` has a density."""
    if not p > 1:
        raise ValueError("dual weight needs p > 1")
    q = -1.0 / (p - 1.0)
    vals = w.moments(q) / w.grid.width
    dens = None if w.density is None else w.density.power(q)
    return Weight(w.grid, vals, dens, f"dual[{p}]({w.label})")


# ------------------------------------------------------- local characteristics

def ap_local(w: Weight, I: Interval, p: float) -> float:
    """``(avg_I w) (avg_I w^{-1/(p-1)})^{p-1}``."""
    if not p > 1:
        raise ValueError("A_p needs p > 1")
    s = _inside(w.grid, I)
    ln = len(s) * w.grid.width
    return (w.interval_sum(1.0, s) / ln) * (w.interval_sum(-1.0 / (p - 1), s) / ln) ** (p - 1)


def ainf_exp_local(w: Weight, I: Interval) -> float:
    """``(avg_I w) exp(-avg_I log w)``."""
    s = _inside(w.grid, I)
    ln = len(s) * w.grid.width
    return (w.interval_sum(1.0, s) / ln) * math.exp(-w.interval_sum("log", s) / ln)


def fujii_wilson_local(w: Weight, I: Interval) -> float:
    """``(1/w(I)) * integral over I of M(w chi_I)``, M the uncentered grid maximal function."""
    s = _inside(w.grid, I)
    out = np.empty(1)
    _kernels.fujii_wilson_windows(w.values, len(s), np.array([s.start], dtype=np.int64), out)
    return float(out[0])


# -------------------------------------------------------------------- scans

@dataclass(frozen=True)
class MixedExponents:
    """Exponents of ``sup_Q A_p(w;Q)^alpha F(w;Q)^beta``; ``second`` picks F."""

    p: float
    r: float
    alpha: float
    beta: float
    second: str = "ar"

    def __post_init__(self):
        if self.second not in ("ar", "ainf", "fw"):
            raise ValueError("second factor must be one of 'ar', 'ainf', 'fw'")
        if not self.p > 1:
            raise ValueError("p must exceed 1")
        if self.alpha < 0 or self.beta < 0 or self.alpha + self.beta > 2:
            raise ValueError("need alpha, beta >= 0 and alpha + beta <= 2")
        if self.second == "ar" and not self.r >= self.p:
            raise ValueError("need r >= p")


@dataclass(frozen=True)
class CharacteristicScan:
    """Supremum of a local characteristic over a family of grid intervals."""

    scope: str
    value: float
    argmax: Span

    def witness(self, grid: GridSpec) -> tuple[float, float]:
        lo, hi = self.argmax.bounds(grid)
        return lo, hi - lo


def _check_scope(scope):
    if scope not in SCOPES:
        raise ValueError(f"scope must be one of {SCOPES}, got {scope!r}")


def _windows(w: Weight, keys: Sequence, scope: str):
    """Yield ``(n, starts, sums)`` per candidate length ``n`` (in cells)."""
    _check_scope(scope)
    m = w.grid.ncells
    L = w.grid.level
    if scope == "dyadic":
        trees = {k: w.tree(k) for k in keys}
        for d in range(L, -1, -1):
            n = 1 << (L - d)
            yield n, np.arange(0, m, n), {k: trees[k][d] for k in keys}
    elif scope == "windowed":
        cur = {k: np.array(w.moments(k)) for k in keys}
        n = 1
        while True:
            yield n, np.arange(m - n + 1), cur
            if 2 * n > m:
                break
            cur = {k: v[:-n] + v[n:] for k, v in cur.items()}
            n *= 2
    else:
        cells = {k: np.array(w.moments(k)) for k in keys}
        cur = dict(cells)
        for n in range(1, m + 1):
            if n > 1:
                cur = {k: cur[k][:-1] + cells[k][n - 1:] for k in keys}
            yield n, np.arange(m - n + 1), cur


def _fw_values(w: Weight, n: int, starts: np.ndarray) -> np.ndarray:
    out = np.empty(starts.size)
    _kernels.fujii_wilson_windows(w.values, n, starts.astype(np.int64), out)
    return out


def scan(w: Weight, local, keys: Sequence, scope: str = "windowed", needs_fw: bool = False) -> CharacteristicScan:
    """Generic supremum: ``local(sums, n_cells, starts, fw)`` evaluated per length.

    Ties go to the smaller left endpoint, then to the shorter interval.
    """
    best, bstart, bn = -math.inf, 0, 0
    h = w.grid.width
    for n, starts, sums in _windows(w, keys, scope):
        fw = _fw_values(w, n, starts) if needs_fw else None
        vals = local(sums, n * h, fw)
        if vals.size == 0:
            continue
        vals = np.where(np.isnan(vals), -np.inf, vals)
        i = int(np.argmax(vals))
        v = float(vals[i])
        if v > best or (v == best and starts[i] < bstart):
            best, bstart, bn = v, int(starts[i]), n
    return CharacteristicScan(scope, best, Span(bstart, bstart + bn))


def _ap_from(sums, ln, p):
    s = sums[-1.0 / (p - 1)]
    return (sums[1.0] / ln) * (s / ln) ** (p - 1)


def ap_norm(w: Weight, p: float, scope: str = "windowed") -> CharacteristicScan:
    if not p > 1:
        raise ValueError("A_p needs p > 1")
    return scan(w, lambda s, ln, fw: _ap_from(s, ln, p), (1.0, -1.0 / (p - 1)), scope)


def ainf_exp_norm(w: Weight, scope: str = "windowed") -> CharacteristicScan:
    return scan(w, lambda s, ln, fw: (s[1.0] / ln) * np.exp(-s["log"] / ln), (1.0, "log"), scope)


def fw_norm(w: Weight, scope: str = "windowed") -> CharacteristicScan:
    return scan(w, lambda s, ln, fw: fw, (1.0,), scope, needs_fw=True)


def mixed_norm(w: Weight, e: MixedExponents, scope: str = "windowed") -> CharacteristicScan:
    """``sup_Q A_p(w;Q)^alpha F(w;Q)^beta`` over the scope, with its maximizing interval."""
    keys = [1.0, -1.0 / (e.p - 1)]
    if e.second == "ar" and e.beta:
        keys.append(-1.0 / (e.r - 1))
    if e.second == "ainf" and e.beta:
        keys.append("log")
    keys = list(dict.fromkeys(keys))

    def local(s, ln, fw):
        val = _ap_from(s, ln, e.p) ** e.alpha
        if e.beta:
            if e.second == "ar":
                f = _ap_from(s, ln, e.r)
            elif e.second == "ainf":
                f = (s[1.0] / ln) * np.exp(-s["log"] / ln)
            else:
                f = fw
            val = val * f ** e.beta
        return val

    return scan(w, local, keys, scope, needs_fw=(e.second == "fw" and e.beta != 0))


@dataclass(frozen=True)
class LaceyTerms:
    value: float
    ap: CharacteristicScan
    fw_w: CharacteristicScan
    fw_sigma: CharacteristicScan


def lacey_terms(w: Weight, p: float, scope: str = "windowed") -> LaceyTerms:
    if not p > 1:
        raise ValueError("p must exceed 1")
    pp = p / (p - 1)
    a = ap_norm(w, p, scope)
    fw = fw_norm(w, scope)
    fs = fw_norm(dual_weight(w, p), scope)
    val = a.value ** (1 / p) * max(fw.value ** (1 / pp), fs.value ** (1 / p))
    return LaceyTerms(val, a, fw, fs)


def lacey_rhs(w: Weight, p: float, scope: str = "windowed") -> float:
    """``||w||_{A_p}^{1/p} max(||w||'_{A_inf}^{1/p'}, ||sigma||'_{A_inf}^{1/p})``."""
    return lacey_terms(w, p, scope).value
