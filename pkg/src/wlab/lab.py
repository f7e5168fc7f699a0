"""Weighted norm experiments: operator-norm lower bounds, bound harnesses and sweeps.

Every experiment produces a list of :class:`RatioRecord` rows plus fitted
log-log slopes, and can be written as CSV.  Rows are independent and are
evaluated through an order-preserving thread pool, so the output does not
depend on the worker count.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Callable, Sequence

import numpy as np

from .dyadic import DyadicInterval, GridFunction, GridSpec, Span, build_grid, dilate, upsample
from .operators import (VectorFunction, dyadic_square, haar_shift, haar_shift_maximal, maximal,
                        petermichl_shift, singular_maximal, KernelSpec, vec_maximal)
from .oscillation import _bad_count, _min_spread
from .weights import (MixedExponents, PowerPieces, Weight, ap_norm, dual_weight, fw_norm,
                      lacey_terms, make_weight, mixed_norm, SCOPES)


# ------------------------------------------------------------------- norms

def weighted_norm(f, w: Weight | None, p: float, q: float = 2.0) -> float:
    """``(int |f|^p w)^(1/p)``.

    ``f`` is a grid function, a vector function (pointwise l^q size) or an
    array of cell values on the weight's grid.
    """
    if not p >= 1:
        raise ValueError("weighted norm needs p >= 1")
    if isinstance(f, np.ndarray):
        if w is None:
            raise ValueError("raw cell values need a weight to fix the grid")
        a, grid = np.abs(f), w.grid
    elif isinstance(f, VectorFunction):
        a, grid = f.norm(q).values, f.grid
    else:
        a, grid = np.abs(f.values), f.grid
    if w is not None and w.grid != grid:
        raise ValueError("function and weight live on different grids")
    wv = 1.0 if w is None else w.values
    return float(np.sum(a ** p * wv) * grid.width) ** (1.0 / p)


# --------------------------------------------------------------- operators

@dataclass(frozen=True)
class Operator:
    name: str
    apply: Callable = field(repr=False)
    vector: bool = False
    q: float = 2.0


_HILBERT = KernelSpec.hilbert()


def _vec_norm(q: float):
    def apply(fs: VectorFunction) -> GridFunction:
        return vec_maximal(fs, q)
    return apply


OPERATORS = {
    "identity": Operator("identity", lambda f: f),
    "zero": Operator("zero", lambda f: GridFunction(f.grid, np.zeros(f.grid.ncells))),
    "hilbert": Operator("hilbert", lambda f: singular_maximal(f, _HILBERT)),
    "sd": Operator("sd", dyadic_square),
    "max": Operator("max", lambda f: maximal(f, "uncentered")),
    "max_dyadic": Operator("max_dyadic", lambda f: maximal(f, "dyadic")),
    "petermichl": Operator("petermichl", lambda f: haar_shift(petermichl_shift(), f)),
    "petermichl_maximal": Operator("petermichl_maximal", lambda f: haar_shift_maximal(petermichl_shift(), f)),
    "mq": Operator("mq", _vec_norm(2.0), vector=True, q=2.0),
}
ALIASES = {"hilbert_maximal": "hilbert", "dyadic_square": "sd", "maximal": "max"}


def get_operator(name: str) -> Operator:
    key = ALIASES.get(name, name)
    if key.startswith("mq:"):
        q = float(key[3:])
        if not q > 1:
            raise ValueError("vector maximal function needs q > 1")
        return Operator(key, _vec_norm(q), vector=True, q=q)
    if key not in OPERATORS:
        raise ValueError(f"unknown operator {name!r}; choose from {sorted(OPERATORS)}")
    return OPERATORS[key]


# ------------------------------------------------------------ test families

@dataclass(frozen=True)
class Member:
    label: str
    f: object


def buckley_function(grid: GridSpec, delta: float) -> GridFunction:
    """Exact cell averages of ``x^(delta-1)`` on ``[0, 1]``, zero elsewhere."""
    if not 0 < delta < 1:
        raise ValueError("Buckley family needs 0 < delta < 1")
    dens = PowerPieces(((0.0, 1.0, 1.0, 0.0, delta - 1.0),))
    return GridFunction(grid, dens.cell_integrals(grid.edges()) / grid.width)


def _haar_atom(grid: GridSpec, d: int, j: int) -> GridFunction:
    v = np.zeros(grid.ncells)
    s = DyadicInterval(grid, d, j).span
    mid = (s.start + s.stop) // 2
    v[s.start:mid], v[mid:s.stop] = 1.0, -1.0
    return GridFunction(grid, v)


def _power_delta(w: Weight | None, p: float | None) -> float | None:
    if w is None or p is None or not w.label.startswith("power:"):
        return None
    a = float(w.label.split(":", 1)[1].split("|")[0])
    d = 1.0 - a / (p - 1.0)
    return d if 0 < d < 1 else None


def _coarse_nodes(grid: GridSpec, depth: int):
    for d in range(min(depth, grid.level) + 1):
        for j in range(1 << d):
            yield d, j


def _family_part(desc: str, grid: GridSpec, w: Weight | None, p: float | None) -> list[Member]:
    name, _, arg = desc.strip().partition(":")
    if name == "buckley":
        if arg:
            deltas = [float(x) for x in arg.split(",")]
        else:
            d = _power_delta(w, p)
            deltas = [d] if d is not None else [0.5, 0.2, 0.1]
        return [Member(f"buckley:{d!r}", buckley_function(grid, d)) for d in deltas]
    if name == "haar":
        depth = int(arg) if arg else 4
        return [Member(f"haar:{d},{j}", _haar_atom(grid, d, j))
                for d, j in _coarse_nodes(grid, min(depth, grid.level - 1))]
    if name == "indicator":
        depth = int(arg) if arg else 4
        out = []
        for d, j in _coarse_nodes(grid, depth):
            s = DyadicInterval(grid, d, j).span
            v = np.zeros(grid.ncells)
            v[s.start:s.stop] = 1.0
            out.append(Member(f"indicator:{d},{j}", GridFunction(grid, v)))
        return out
    if name == "dual":
        if w is None or p is None:
            raise ValueError("the dual family needs a weight and p")
        depth = int(arg) if arg else 4
        sig = dual_weight(w, p).values
        out = []
        for d, j in _coarse_nodes(grid, depth):
            s = DyadicInterval(grid, d, j).span
            v = np.zeros(grid.ncells)
            v[s.start:s.stop] = sig[s.start:s.stop]
            out.append(Member(f"dual:{d},{j}", GridFunction(grid, v)))
        return out
    if name == "random":
        parts = arg.split(",") if arg else ["0"]
        seed = int(parts[0])
        count = int(parts[1]) if len(parts) > 1 else 16
        rng = np.random.default_rng(seed)
        return [Member(f"random:{seed}#{i}", GridFunction(grid, rng.choice([-1.0, 1.0], grid.ncells)))
                for i in range(count)]
    raise ValueError(f"unknown test family {desc!r}; use buckley, haar, indicator, dual or random:<seed>")


def build_family(desc: str, grid: GridSpec, w: Weight | None = None, p: float | None = None) -> list[Member]:
    """Members of ``desc``; several families combine with ``+``, e.g. ``buckley+haar``."""
    out = []
    for part in desc.split("+"):
        out += _family_part(part, grid, w, p)
    if not out:
        raise ValueError("empty test family")
    return out


def vectorize(members: Sequence[Member]) -> list[Member]:
    """Pair consecutive members into two-component vector functions."""
    n = len(members)
    return [Member(f"({a.label})|({members[(i + 1) % n].label})",
                   VectorFunction((a.f, members[(i + 1) % n].f)))
            for i, a in enumerate(members)]


@dataclass(frozen=True)
class NormWitness:
    value: float
    label: str
    norm_Tf: float
    norm_f: float


def _as_input(op: Operator, members: Sequence[Member]) -> list[Member]:
    if op.vector and members and not isinstance(members[0].f, VectorFunction):
        return vectorize(members)
    return list(members)


def _input_size(op: Operator, m: Member) -> np.ndarray:
    # pointwise size of the input: l^q norm for vector inputs
    if isinstance(m.f, VectorFunction):
        return m.f.norm(op.q).values
    return np.abs(m.f.values)


def operator_norm_lower(op, w: Weight | None, p: float, family: Sequence[Member],
                        images: dict | None = None) -> NormWitness:
    """Max of ``||Tf||_{L^p(w)} / ||f||_{L^p(w)}`` over the family: a lower bound for the norm."""
    op = get_operator(op) if isinstance(op, str) else op
    best = None
    for m in _as_input(op, family):
        nf = _wnorm(_input_size(op, m), w, p, m)
        if nf == 0:
            continue
        if images is not None and m.label in images:
            Tf = images[m.label]
        else:
            Tf = np.abs(op.apply(m.f).values)
            if images is not None:
                images[m.label] = Tf
        nt = _wnorm(Tf, w, p, m)
        r = nt / nf
        if best is None or r > best.value:
            best = NormWitness(r, m.label, nt, nf)
    if best is None:
        raise ValueError("every member of the test family has zero norm")
    return best


def _wnorm(a: np.ndarray, w: Weight | None, p: float, m: Member) -> float:
    grid = m.f.grid
    wv = 1.0 if w is None else w.values
    return float(np.sum(a ** p * wv) * grid.width) ** (1.0 / p)


# ---------------------------------------------------------------- slope fits

@dataclass(frozen=True)
class SlopeFit:
    name: str
    points: tuple
    slope: float
    intercept: float
    max_residual: float


def fit_slope(points, name: str = "") -> SlopeFit:
    """Least-squares line through ``(log x, log y)``."""
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) < 2:
        raise ValueError("slope fit needs at least two points")
    if any(not (x > 0 and y > 0) or not math.isfinite(x) or not math.isfinite(y) for x, y in pts):
        raise ValueError("slope fit needs positive finite coordinates")
    lx = np.log([x for x, _ in pts])
    ly = np.log([y for _, y in pts])
    if np.ptp(lx) == 0:
        raise ValueError("slope fit needs at least two distinct abscissae")
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = np.abs(ly - (slope * lx + icpt)).max()
    return SlopeFit(name, tuple(zip(lx.tolist(), ly.tolist())), float(slope), float(icpt), float(res))


# ------------------------------------------------------------------ records

@dataclass(frozen=True)
class Constant:
    value: float
    argmax: Span | None = None


@dataclass(frozen=True)
class RatioRecord:
    """One sweep row: norms, their quotient and candidate constants with witnesses."""

    param: float
    scope: str
    norm_Tf: float | None = None
    norm_f: float | None = None
    ratio: float | None = None
    witness: str = ""
    constants: tuple[tuple[str, Constant], ...] = ()
    extras: tuple[tuple[str, object], ...] = ()
    reliable: bool = True

    def const(self, name: str) -> float:
        return dict(self.constants)[name].value

    def extra(self, name: str):
        return dict(self.extras)[name]


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class BoundReport:
    """Rows, the empirical constant (max normalized ratio) and the trend check."""

    name: str
    inequality: str
    rows: list
    fits: list
    checks: list
    constant: float = float("nan")
    argmax_params: tuple = ()

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def fit(self, name: str) -> SlopeFit:
        for f in self.fits:
            if f.name == name:
                return f
        raise KeyError(name)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _witness(span: Span | None, grid: GridSpec) -> str:
    if span is None:
        return ""
    lo, hi = span.bounds(grid)
    return f"{lo!r},{hi - lo!r}"


def report_csv(report: BoundReport, grid_of: Callable[[RatioRecord], GridSpec]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    cnames: list[str] = []
    enames: list[str] = []
    for r in report.rows:
        for n, _ in r.constants:
            if n not in cnames:
                cnames.append(n)
        for n, _ in r.extras:
            if n not in enames:
                enames.append(n)
    head = ["param", "scope", "norm_Tf", "norm_f", "ratio", "witness_f"]
    for n in cnames:
        head += [n, f"{n}_witness"]
    head += enames + ["reliable"]
    wr.writerow(head)
    for r in report.rows:
        g = grid_of(r)
        cs, es = dict(r.constants), dict(r.extras)
        row = [_fmt(r.param), r.scope, _fmt(r.norm_Tf), _fmt(r.norm_f), _fmt(r.ratio), r.witness]
        for n in cnames:
            c = cs.get(n)
            row += ["", ""] if c is None else [_fmt(c.value), _witness(c.argmax, g)]
        row += [_fmt(es.get(n)) for n in enames] + [_fmt(r.reliable)]
        wr.writerow(row)
    for f in report.fits:
        buf.write(f"#fit,{f.name},{f.slope!r},{f.intercept!r},{f.max_residual!r}\n")
    for c in report.checks:
        buf.write(f"#check,{c.name},{'pass' if c.passed else 'fail'},{c.detail}\n")
    return buf.getvalue()


def run_rows(func: Callable, params: Sequence, workers: int = 1) -> list:
    """Evaluate ``func`` on every parameter, keeping input order."""
    if workers <= 1:
        return [func(x) for x in params]
    _warm()
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(func, params))


_warmed = False


def _warm():
    # compile the numba kernels once, outside the worker threads
    global _warmed
    if not _warmed:
        g = build_grid(0, 0, 2)
        f = GridFunction(g, np.ones(4))
        maximal(f), maximal(f, "centered"), singular_maximal(f, _HILBERT)
        fw_norm(make_weight("const:1", g), "dyadic")
        _warmed = True


# ------------------------------------------------------------- configuration

@dataclass
class ExperimentConfig:
    """Everything an experiment needs; loadable from JSON."""

    experiment: str = "sharpness"
    origin: float = -32
    span_log2: int = 6
    level: int | None = None
    operator: str | None = None
    weight: str = "power"
    sweep: list = field(default_factory=list)
    p: float = 3.0
    r: float = 6.0
    alpha: float | None = None
    beta: float | None = None
    q: float = 2.0
    nu: float | None = None
    gamma: float | None = None
    bound: str | None = None
    bump_N: float | None = None
    scope: str = "windowed"
    family: str | None = None
    weight_model: str | None = None
    levels: list = field(default_factory=lambda: [8, 9])
    count: int = 200
    seed: int = 0
    workers: int = 1
    output: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def validate(self):
        if self.scope not in SCOPES:
            raise ValueError(f"scope must be one of {SCOPES}")
        if self.weight_model not in (None, "density", "cells"):
            raise ValueError("weight_model must be 'density' or 'cells'")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if not self.p > 1:
            raise ValueError("p must exceed 1")

    def grid(self, level: int | None = None) -> GridSpec:
        L = self.level if level is None else level
        if L is None:
            raise ValueError("grid level not set")
        return build_grid(self.origin, self.span_log2, L)


def sweep_recipe(kind: str, x: float, p: float, N: float | None = None) -> str:
    """Recipe for one sweep value: power takes delta, step takes t, bump takes delta."""
    if kind == "power":
        return f"power:{(p - 1) * (1 - x)!r}"
    if kind == "step":
        if not x > 0:
            raise ValueError("step weight needs t > 0")
        return f"step:{x!r}"
    if kind == "bump":
        return f"bump:{x!r},{N!r},{p!r}" if N is not None else f"bump:{x!r},{p!r}"
    if kind == "const":
        return f"const:{x!r}"
    raise ValueError(f"unknown weight sweep {kind!r}")


def _build(kind: str, x: float, p: float, grid: GridSpec, model: str, N=None) -> Weight:
    w = make_weight(sweep_recipe(kind, x, p, N), grid)
    return w if model == "density" else w.discrete()


def level_for(deltas: Sequence[float], span_log2: int) -> int:
    """Smallest level with cell width at most ``min(deltas) / 8``."""
    return span_log2 + math.ceil(math.log2(8.0 / min(deltas)))


# ----------------------------------------------------------- oscillation condition

@dataclass(frozen=True)
class OscillationReport:
    operator: str
    nu: float
    gamma: float
    level: int
    sup: float
    witness: str
    node: tuple
    skipped: int


def oscillation_corpus(grid: GridSpec, count: int = 200, seed: int = 0) -> list[Member]:
    """Resolution-independent functions: coarse steps, trigonometric polynomials, Haar atoms."""
    rng = np.random.default_rng(seed)
    e = grid.edges()
    x0, ln = grid.left, grid.length
    out = []
    for i in range(count):
        kind = i % 3
        if kind == 0:
            pieces = 1 << min(5, grid.level)
            vals = rng.standard_normal(pieces)
            out.append(Member(f"steps#{i}", GridFunction(grid, np.repeat(vals, grid.ncells // pieces))))
        elif kind == 1:
            a, b = rng.standard_normal(6), rng.standard_normal(6)
            F = np.zeros(e.size)
            for k in range(1, 7):
                om = 2 * math.pi * k / ln
                F += (a[k - 1] * np.sin(om * (e - x0)) - b[k - 1] * np.cos(om * (e - x0))) / om
            out.append(Member(f"trig#{i}", GridFunction(grid, np.diff(F) / grid.width)))
        else:
            d = int(rng.integers(0, min(5, grid.level)))
            j = int(rng.integers(0, 1 << d))
            out.append(Member(f"haar#{i}", _haar_atom(grid, d, j)))
    return out


def _dilated_averages(absf: np.ndarray, L: int, d: int, gamma: float) -> np.ndarray:
    n = 1 << (L - d)
    m = absf.size
    cum = np.concatenate([[0.0], np.cumsum(absf)])
    starts = np.arange(0, m, n)
    if gamma == 1:
        return (cum[starts + n] - cum[starts]) / n
    spans = [dilate(Span(int(s), int(s) + n), gamma) for s in starts[:1]]
    lo_off = spans[0].start - 0
    hi_off = spans[0].stop - n
    lo = np.clip(starts + lo_off, 0, m)
    hi = np.clip(starts + n + hi_off, 0, m)
    return (cum[hi] - cum[lo]) / (gamma * n)


def check_oscillation_condition(op, nu: float, gamma: float, corpus: Sequence[Member], lam: float = 0.125) -> OscillationReport:
    """Sup over corpus and dyadic ``Q`` of ``omega_lam(|Tf|^nu; Q) / (avg_{gamma Q} |f|)^nu``."""
    op = get_operator(op) if isinstance(op, str) else op
    if nu < 1 or gamma < 1:
        raise ValueError("need nu >= 1 and gamma >= 1")
    best, wit, node, skipped = 0.0, "", (0, 0), 0
    grid = None
    for m in corpus:
        grid = m.f.grid
        L = grid.level
        g = np.abs(op.apply(m.f).values) ** nu
        absf = np.abs(m.f.values)
        for d in range(L + 1):
            n = 1 << (L - d)
            s = np.sort(g.reshape(1 << d, n), axis=1)
            om = _min_spread(s, n - _bad_count(lam, n))
            avg = _dilated_averages(absf, L, d, gamma) ** nu
            ok = avg > 0
            skipped += int((~ok).sum())
            if not ok.any():
                continue
            ratio = np.where(ok, om / np.where(ok, avg, 1.0), -np.inf)
            j = int(np.argmax(ratio))
            if ratio[j] > best:
                best, wit, node = float(ratio[j]), m.label, (d, j)
    return OscillationReport(op.name, nu, gamma, -1 if grid is None else grid.level, best, wit, node, skipped)


def oscillation_stability(op, nu: float, gamma: float, cfg: ExperimentConfig) -> BoundReport:
    levels = list(cfg.levels)

    def row(L):
        g = cfg.grid(L)
        rep = check_oscillation_condition(op, nu, gamma, oscillation_corpus(g, cfg.count, cfg.seed))
        return RatioRecord(float(L), "dyadic", witness=rep.witness,
                           constants=(("osc_sup", Constant(rep.sup, DyadicInterval(g, *rep.node).span)),),
                           extras=(("skipped", rep.skipped),))
    rows = run_rows(row, levels, cfg.workers)
    sups = [r.const("osc_sup") for r in rows]
    checks = [Check("finite", all(math.isfinite(s) for s in sups), " ".join(repr(s) for s in sups))]
    for a, b, La, Lb in zip(sups, sups[1:], levels, levels[1:]):
        rel = abs(b - a) / a if a > 0 else (0.0 if b == 0 else math.inf)
        checks.append(Check(f"refine_{La}_{Lb}", rel <= 0.10, f"relative change {rel!r}"))
    name = get_operator(op).name if isinstance(op, str) else op.name
    return BoundReport(f"oscillation:{name}", "omega_{1/8}(|Tf|^nu;Q) <= c (avg_{gamma Q}|f|)^nu",
                       rows, [], checks, max(sups), ())


# ------------------------------------------------------------ key bounds

KEY_BOUNDS = {
    "hilbert": ("hilbert", "power"),
    "square": ("sd", "step"),
    "vector": ("mq", "step"),
    "sparse": ("sd", "step"),
}


def bound_exponents(bound: str, p: float, r: float, q: float = 2.0, nu: float | None = None) -> MixedExponents:
    """Exponents ``alpha = 1/(p-1)`` and the matching ``beta``, after checking the hypotheses."""
    if bound == "hilbert":
        if not 2 <= p <= r:
            raise ValueError("the hilbert bound needs 2 <= p <= r")
        beta = 1 - 1 / (p - 1)
    elif bound == "square":
        if not 3 <= p <= r:
            raise ValueError("the square bound needs 3 <= p <= r")
        beta = 0.5 - 1 / (p - 1)
    elif bound == "vector":
        if not (q > 1 and q + 1 < p <= r):
            raise ValueError("the vector bound needs q + 1 < p <= r")
        beta = 1 / q - 1 / (p - 1)
    elif bound == "sparse":
        if nu is None or not (nu >= 1 and nu + 1 <= p <= r):
            raise ValueError("the sparse bound needs nu + 1 <= p <= r")
        beta = 1 / nu - 1 / (p - 1)
    else:
        raise ValueError(f"unknown key bound {bound!r}; choose from {sorted(KEY_BOUNDS)}")
    return MixedExponents(p, r, 1 / (p - 1), beta)


def _normalized_sweep(cfg: ExperimentConfig, op: Operator, constant: Callable[[Weight], Constant],
                      family: str, model: str) -> list[RatioRecord]:
    grid = cfg.grid()
    N = cfg.bump_N
    base = build_family(family, grid) if "dual" not in family else None
    images: dict = {}

    def row(x):
        w = _build(cfg.weight, x, cfg.p, grid, model, N)
        members = base if base is not None else build_family(family, grid, w, cfg.p)
        nw = operator_norm_lower(op, w, cfg.p, members, images if base is not None else None)
        c = constant(w)
        return RatioRecord(float(x), cfg.scope, nw.norm_Tf, nw.norm_f, nw.value, nw.label,
                           (("bound_constant", c),), (("normalized", nw.value / c.value),))

    if base is not None:
        # images do not depend on the weight: fill the cache once, in order
        for m in _as_input(op, base):
            images[m.label] = np.abs(op.apply(m.f).values)
    return run_rows(row, cfg.sweep, cfg.workers)


def _flatness(name: str, inequality: str, rows: list[RatioRecord], tol: float = 0.05) -> BoundReport:
    norm = [r.extra("normalized") for r in rows]
    fit = fit_slope([(r.param, v) for r, v in zip(rows, norm)], "normalized")
    top = max(norm)
    arg = tuple(r.param for r, v in zip(rows, norm) if v == top)
    checks = [Check("trend_flat", abs(fit.slope) <= tol, f"slope {fit.slope!r} tolerance {tol!r}")]
    return BoundReport(name, inequality, rows, [fit], checks, top, arg)


KEY_FAMILY = "buckley+haar+indicator+random:0,8"


def check_key_bound(bound: str, cfg: ExperimentConfig, family: str | None = None) -> BoundReport:
    """``||Tf|| / (mixed(w) ||f||)`` across a weight sweep; flat trend expected."""
    e = bound_exponents(bound, cfg.p, cfg.r, cfg.q, cfg.nu)
    op_name = cfg.operator or KEY_BOUNDS[bound][0]
    if bound == "vector" and op_name == "mq":
        op_name = f"mq:{cfg.q!r}"
    op = get_operator(op_name)
    fam = family or cfg.family or _default_key_family(cfg)
    model = cfg.weight_model or "cells"

    def constant(w):
        s = mixed_norm(w, e, cfg.scope)
        return Constant(s.value, s.argmax)

    rows = _normalized_sweep(cfg, op, constant, fam, model)
    return _flatness(f"keybound:{bound}", f"||Tf||_p,w <= C ||w||_(A_p)^{e.alpha!r}(A_r)^{e.beta!r} ||f||_p,w", rows)


def _default_key_family(cfg: ExperimentConfig) -> str:
    if cfg.weight == "power":
        return "buckley:" + ",".join(repr(float(x)) for x in cfg.sweep) + "+haar+indicator+random:0,8"
    return "haar+indicator+random:0,8"


def buckley_check(cfg: ExperimentConfig, family: str | None = None) -> BoundReport:
    """``||Mf|| / (||w||_{A_p}^{1/(p-1)} ||f||)`` across a weight sweep."""
    op = get_operator(cfg.operator or "max")
    fam = family or cfg.family or _default_key_family(cfg)
    model = cfg.weight_model or "cells"

    def constant(w):
        s = ap_norm(w, cfg.p, cfg.scope)
        return Constant(s.value ** (1 / (cfg.p - 1)), s.argmax)

    rows = _normalized_sweep(cfg, op, constant, fam, model)
    return _flatness("buckley", "||Mf||_p,w <= C ||w||_A_p^(1/(p-1)) ||f||_p,w", rows)


# ------------------------------------------------------------- experiments

def _mixed_row(w: Weight, e: MixedExponents, scope: str) -> Constant:
    s = mixed_norm(w, e, scope)
    return Constant(s.value, s.argmax)


def exp_sharpness(cfg: ExperimentConfig) -> BoundReport:
    """Power weight and Buckley function: norm ratio and mixed constant against delta."""
    op = get_operator(cfg.operator or "hilbert")
    deltas = [float(x) for x in cfg.sweep]
    if any(not 0 < d < 1 for d in deltas):
        raise ValueError("deltas must lie in (0, 1)")
    if not cfg.r > cfg.p:
        raise ValueError("sharpness experiment needs r > p")
    p = cfg.p
    alpha = cfg.alpha if cfg.alpha is not None else 1 / (p - 1)
    if cfg.beta is not None:
        beta = cfg.beta
    elif op.name == "sd":
        beta = 0.5 - alpha
    else:
        beta = 1 - alpha
    e = MixedExponents(p, cfg.r, alpha, max(beta, 0.0))
    level = cfg.level if cfg.level is not None else level_for(deltas, cfg.span_log2)
    grid = cfg.grid(level)
    model = cfg.weight_model or "density"

    def row(d):
        w = _build("power", d, p, grid, model)
        f = buckley_function(grid, d)
        Tf = np.abs(op.apply(f).values)
        nt = weighted_norm(Tf, w, p)
        nf = weighted_norm(f, w, p)
        reliable = grid.width <= d / 8
        # share of ||f||^p carried by the first cell [0, h): h^delta in the continuum
        first = float(grid.width ** d)
        return RatioRecord(d, cfg.scope, nt, nf, nt / nf, f"buckley:{d!r}",
                           (("mixed", _mixed_row(w, e, cfg.scope)),),
                           (("unresolved_mass", first),), reliable)

    rows = run_rows(row, deltas, cfg.workers)
    fr = fit_slope([(r.param, r.ratio) for r in rows], "ratio")
    fm = fit_slope([(r.param, r.const("mixed")) for r in rows], "mixed")
    checks = [Check("ratio_slope", -1.15 <= fr.slope <= -0.85, f"slope {fr.slope!r} target -1"),
              Check("mixed_slope", abs(fm.slope + alpha * (p - 1)) <= 0.1,
                    f"slope {fm.slope!r} target {-alpha * (p - 1)!r}"),
              # the constant has to grow at least as fast as the norm ratio
              Check("constant_keeps_pace", fm.slope <= fr.slope + 0.1,
                    f"constant slope {fm.slope!r} ratio slope {fr.slope!r}")]
    return BoundReport(f"sharpness:{op.name}", "ratio ~ delta^-1, mixed ~ delta^(-alpha(p-1))",
                       rows, [fr, fm], checks)


def exp_step(cfg: ExperimentConfig) -> BoundReport:
    """Step weight: A_p and mixed grow like t, Fujii-Wilson norms like log t."""
    p, r = cfg.p, cfg.r
    if not p > 2 or not r > p:
        raise ValueError("step experiment needs p > 2 and r > p")
    ts = [float(t) for t in cfg.sweep]
    if any(t <= 0 for t in ts):
        raise ValueError("step heights must be positive")
    grid = cfg.grid(cfg.level if cfg.level is not None else 10)
    e = MixedExponents(p, r, 1 / (p - 1), 1 - 1 / (p - 1))
    model = cfg.weight_model or "density"

    def row(t):
        w = _build("step", t, p, grid, model)
        lt = lacey_terms(w, p, cfg.scope)
        mixed = _mixed_row(w, e, cfg.scope)
        cs = (("ap", Constant(lt.ap.value, lt.ap.argmax)), ("mixed", mixed),
              ("fw_w", Constant(lt.fw_w.value, lt.fw_w.argmax)),
              ("fw_sigma", Constant(lt.fw_sigma.value, lt.fw_sigma.argmax)),
              ("lacey", Constant(lt.value)))
        return RatioRecord(t, cfg.scope, constants=cs, extras=(("lacey_over_mixed", lt.value / mixed.value),))

    rows = run_rows(row, ts, cfg.workers)
    fits, checks = [], []
    big = [r for r in rows if r.param > 1]
    if len(big) >= 2:
        fits.append(fit_slope([(r.param, r.const("ap")) for r in big], "ap"))
        fits.append(fit_slope([(r.param, r.const("mixed")) for r in big], "mixed"))
        fits.append(fit_slope([(r.param, r.extra("lacey_over_mixed")) for r in big], "lacey_over_mixed"))
        lm = [r.extra("lacey_over_mixed") for r in big]
        checks.append(Check("lacey_over_mixed_decreasing", all(b < a for a, b in zip(lm, lm[1:]))))
    for row_ in rows:
        t = row_.param
        if t >= 3:
            checks.append(Check(f"fw_w<=4logt@{t!r}", row_.const("fw_w") <= 4 * math.log(t)))
        if t >= 3 ** (p - 1):
            checks.append(Check(f"fw_sigma<=4logt/(p-1)@{t!r}", row_.const("fw_sigma") <= 4 * math.log(t) / (p - 1)))
    return BoundReport("step", "lacey << mixed for step weights", rows, fits, checks)


def exp_bump(cfg: ExperimentConfig) -> BoundReport:
    """Two-bump weight: mixed ~ 1/delta while the Lacey constant grows faster."""
    p, r = cfg.p, cfg.r
    if not p > 2 or not r > p:
        raise ValueError("bump experiment needs p > 2 and r > p")
    deltas = [float(x) for x in cfg.sweep]
    level = cfg.level if cfg.level is not None else level_for(deltas, cfg.span_log2)
    grid = cfg.grid(level)
    N = cfg.bump_N
    e = MixedExponents(p, r, 1 / (p - 1), 1 - 1 / (p - 1))
    model = cfg.weight_model or "density"

    def row(d):
        w = _build("bump", d, p, grid, model, N)
        center = float(w.label.split(",")[1])
        lt = lacey_terms(w, p, cfg.scope)
        mixed = _mixed_row(w, e, cfg.scope)
        ap_lo, ap_hi = lt.ap.argmax.bounds(grid)
        fw_lo, fw_hi = lt.fw_w.argmax.bounds(grid)
        cs = (("ap", Constant(lt.ap.value, lt.ap.argmax)), ("mixed", mixed),
              ("fw_w", Constant(lt.fw_w.value, lt.fw_w.argmax)),
              ("fw_sigma", Constant(lt.fw_sigma.value, lt.fw_sigma.argmax)),
              ("lacey", Constant(lt.value)))
        ex = (("mixed_over_lacey", mixed.value / lt.value),
              ("ap_witness_has_0", ap_lo <= 0 <= ap_hi),
              ("fw_witness_has_N", fw_lo <= center <= fw_hi))
        return RatioRecord(d, cfg.scope, constants=cs, extras=ex, reliable=grid.width <= d / 8)

    rows = run_rows(row, deltas, cfg.workers)
    fits = [fit_slope([(r.param, r.const(n)) for r in rows], n) for n in ("ap", "fw_w", "mixed", "lacey")]
    fits.append(fit_slope([(r.param, r.extra("mixed_over_lacey")) for r in rows], "mixed_over_lacey"))
    ml = [r.extra("mixed_over_lacey") for r in sorted(rows, key=lambda r: -r.param)]
    fm = fits[-1]
    checks = [Check("mixed_over_lacey_decreasing", all(b < a for a, b in zip(ml, ml[1:]))),
              Check("mixed_over_lacey_slope", fm.slope >= 0.3, f"slope {fm.slope!r} target >= 0.3"),
              Check("witnesses", all(r.extra("ap_witness_has_0") and r.extra("fw_witness_has_N") for r in rows))]
    return BoundReport("bump", "mixed << lacey for two-bump weights", rows, fits, checks)


def run_experiment(cfg: ExperimentConfig) -> tuple[BoundReport, str]:
    """Run the configured experiment and return the report with its CSV text."""
    kind = cfg.experiment
    if kind == "sharpness":
        rep = exp_sharpness(cfg)
        level = cfg.level if cfg.level is not None else level_for(cfg.sweep, cfg.span_log2)
        grid = cfg.grid(level)
    elif kind == "step":
        rep = exp_step(cfg)
        grid = cfg.grid(cfg.level if cfg.level is not None else 10)
    elif kind == "bump":
        rep = exp_bump(cfg)
        grid = cfg.grid(cfg.level if cfg.level is not None else level_for(cfg.sweep, cfg.span_log2))
    elif kind == "keybound":
        rep = check_key_bound(cfg.bound or "hilbert", cfg)
        grid = cfg.grid()
    elif kind == "buckley":
        rep = buckley_check(cfg)
        grid = cfg.grid()
    elif kind == "oscillation":
        op = cfg.operator or "sd"
        nu = cfg.nu if cfg.nu is not None else (2.0 if get_operator(op).name == "sd" else 1.0)
        gamma = cfg.gamma if cfg.gamma is not None else (1.0 if get_operator(op).name == "sd" else 3.0)
        rep = oscillation_stability(op, nu, gamma, cfg)
        text = report_csv(rep, lambda r: cfg.grid(int(r.param)))
        return rep, text
    else:
        raise ValueError(f"unknown experiment {kind!r}")
    return rep, report_csv(rep, lambda r: grid)
