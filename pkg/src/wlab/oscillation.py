"""Local mean oscillation, the local sharp maximal function and sparse families.

``decompose`` is a stopping-time construction.  Starting from ``Q0``, each
selected interval ``P`` gets the threshold ``alpha_P = 2 * omega_{1/4}(f; P)``
and we select the maximal dyadic ``Q`` strictly inside ``P`` whose median
moves by more than ``alpha_P``:

    |m_f(Q) - m_f(P)| > alpha_P.

Every such ``Q`` has at least half its cells in the set where ``f`` is more
than ``omega_{1/4}(f; P)`` away from the optimal constant for ``P``.  That set
holds at most a quarter of ``P``, so the selected intervals cover at most half
of ``P``.  Telescoping medians along the chain of selected intervals gives

    |f - m_f(Q0)| <= 2 M#_{1/4} f + 4 sum omega_{1/8}(f; parent(Q)) chi_Q,

which is sharper than what ``check_pointwise_bound`` tests.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import numpy as np

from .dyadic import (DyadicInterval, GridFunction, GridSpec, Interval, as_span,
                     build_grid, median, parent, upsample)

SHARP_LAMBDA = 0.25
SUM_LAMBDA = 0.125


def _bad_count(lam: float, n: int) -> int:
    if not 0 < lam < 1:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    return math.floor(Fraction(lam) * n)


def _min_spread(sorted_vals: np.ndarray, keep: int) -> np.ndarray:
    # half the smallest range of `keep` consecutive sorted values, per row
    n = sorted_vals.shape[-1]
    spans = sorted_vals[..., keep - 1:] - sorted_vals[..., :n - keep + 1]
    return 0.5 * spans.min(axis=-1)


def local_oscillation(f: GridFunction, I: Interval, lam: float) -> float:
    """``omega_lambda(f; I) = inf_c ((f - c) chi_I)^*(lambda |I|)``.

    The quantile is below ``r`` iff all but ``floor(lambda n)`` cells lie in
    ``[c - r, c + r]``, so the infimum is half the tightest range of
    ``n - floor(lambda n)`` consecutive sorted values.
    """
    s = as_span(I)
    n = len(s)
    if n <= 0:
        raise ValueError("oscillation over an empty interval")
    k = _bad_count(lam, n)
    vals = f.restrict(s)
    if vals.size < n:
        vals = np.concatenate([vals, np.zeros(n - vals.size)])
    return float(_min_spread(np.sort(vals), n - k))


@dataclass
class _NodeStats:
    """Medians and oscillations of every dyadic node, per depth."""

    medians: list
    omegas: dict

    @classmethod
    def build(cls, f: GridFunction, lambdas) -> "_NodeStats":
        L = f.grid.level
        medians, omegas = [], {lam: [] for lam in lambdas}
        for d in range(L + 1):
            n = 1 << (L - d)
            s = np.sort(f.values.reshape(1 << d, n), axis=1)
            medians.append(s[:, (n - 1) // 2])
            for lam in lambdas:
                omegas[lam].append(_min_spread(s, n - _bad_count(lam, n)))
        return cls(medians, omegas)


def _check_node(f: GridFunction, Q0: DyadicInterval):
    if not isinstance(Q0, DyadicInterval) or Q0.grid != f.grid:
        raise ValueError("Q0 must be a dyadic interval of the function's grid")


def local_sharp_maximal(f: GridFunction, Q0: DyadicInterval, lam: float) -> GridFunction:
    """Sup of ``omega_lambda(f; Q')`` over dyadic ``Q' ⊆ Q0`` containing each cell; zero off ``Q0``."""
    _check_node(f, Q0)
    _bad_count(lam, 1)
    L = f.grid.level
    stats = _NodeStats.build(f, [lam])
    out = np.zeros(f.grid.ncells)
    s = Q0.span
    for d in range(Q0.depth, L + 1):
        out = np.maximum(out, upsample(stats.omegas[lam][d], L))
    mask = np.zeros(f.grid.ncells, bool)
    mask[s.start:s.stop] = True
    return GridFunction(f.grid, np.where(mask, out, 0.0))


# ------------------------------------------------------------ sparse families

@dataclass(frozen=True)
class SparseFamily:
    """Levels ``k = 1, 2, ...`` of dyadic intervals inside ``root``."""

    root: DyadicInterval
    base_median: float
    levels: tuple[tuple[DyadicInterval, ...], ...] = ()

    @property
    def grid(self) -> GridSpec:
        return self.root.grid

    def __len__(self) -> int:
        return sum(len(lv) for lv in self.levels)

    def intervals(self) -> Iterator[DyadicInterval]:
        for lv in self.levels:
            yield from lv

    def items(self) -> Iterator[tuple[int, DyadicInterval]]:
        for k, lv in enumerate(self.levels, start=1):
            for Q in lv:
                yield k, Q

    def omega_mask(self, k: int) -> np.ndarray:
        """Cells of ``Omega_k`` (``k >= 1``; empty beyond the last level)."""
        mask = np.zeros(self.grid.ncells, bool)
        if 1 <= k <= len(self.levels):
            for Q in self.levels[k - 1]:
                s = Q.span
                mask[s.start:s.stop] = True
        return mask

    def to_text(self) -> str:
        g = self.grid
        lines = [
            "# sparse family: k depth index",
            f"grid {g.origin} {g.span_log2} {g.level}",
            f"root {self.root.depth} {self.root.index}",
            f"base_median {self.base_median!r}",
        ]
        lines += [f"{k} {Q.depth} {Q.index}" for k, Q in self.items()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SparseFamily":
        grid = root = base = None
        levels: dict[int, list] = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            head, *rest = line.split()
            if head == "grid":
                grid = build_grid(rest[0], int(rest[1]), int(rest[2]))
            elif head == "root":
                root = (int(rest[0]), int(rest[1]))
            elif head == "base_median":
                base = float(rest[0])
            else:
                if grid is None:
                    raise ValueError("sparse family text: interval before grid header")
                k, d, j = int(head), int(rest[0]), int(rest[1])
                if k < 1:
                    raise ValueError("sparse family levels start at k = 1")
                levels.setdefault(k, []).append(DyadicInterval(grid, d, j))
        if grid is None or root is None or base is None:
            raise ValueError("sparse family text: missing grid, root or base_median header")
        top = max(levels, default=0)
        lv = tuple(tuple(levels.get(k, ())) for k in range(1, top + 1))
        return cls(DyadicInterval(grid, *root), base, lv)


def decompose(f: GridFunction, Q0: DyadicInterval, verify: bool = True) -> SparseFamily:
    """Sparse family for ``f`` on ``Q0`` built by the median stopping rule above."""
    _check_node(f, Q0)
    L = f.grid.level
    stats = _NodeStats.build(f, [SHARP_LAMBDA])
    med, osc = stats.medians, stats.omegas[SHARP_LAMBDA]

    def select(P: DyadicInterval) -> list[DyadicInterval]:
        mP, alpha = med[P.depth][P.index], 2.0 * osc[P.depth][P.index]
        chosen = []
        stack = [(P.depth + 1, 2 * P.index + 1), (P.depth + 1, 2 * P.index)] if P.depth < L else []
        while stack:
            d, j = stack.pop()
            if abs(med[d][j] - mP) > alpha:
                chosen.append(DyadicInterval(f.grid, d, j))
            elif d < L:
                stack.append((d + 1, 2 * j + 1))
                stack.append((d + 1, 2 * j))
        return chosen

    levels = []
    current = [Q0]
    while True:
        nxt = [Q for P in current for Q in select(P)]
        if not nxt:
            break
        levels.append(tuple(nxt))
        current = nxt
    fam = SparseFamily(Q0, float(med[Q0.depth][Q0.index]), tuple(levels))
    if verify:
        rep = verify_family(fam)
        if not rep.ok:
            raise RuntimeError(f"decomposition failed its own check: {rep.message}")
    return fam


@dataclass(frozen=True)
class FamilyReport:
    ok: bool
    violation: str | None = None
    message: str = "all properties hold"
    witnesses: tuple = field(default=())


def verify_family(family: SparseFamily) -> FamilyReport:
    """Check disjointness per level, nesting of ``Omega_k``, the half-measure
    condition and the disjointness and size of the sets ``E_j^k``."""
    root = family.root
    rs = root.span
    for k, Q in family.items():
        if Q.grid != root.grid or not root.contains(Q) or Q == root:
            return FamilyReport(False, "domain", f"level {k}: {Q} is not a proper dyadic subinterval of the root", (k, Q))
    for k, lv in enumerate(family.levels, start=1):
        spans = sorted((Q.span.start, Q.span.stop, Q) for Q in lv)
        for (a0, b0, Q), (a1, b1, R) in zip(spans, spans[1:]):
            if a1 < b0:
                return FamilyReport(False, "overlap", f"level {k}: {Q} and {R} overlap", (k, Q, R))
    nlev = len(family.levels)
    masks = [family.omega_mask(k) for k in range(1, nlev + 2)]
    for k in range(1, nlev):
        out = masks[k] & ~masks[k - 1]
        if out.any():
            c = int(np.argmax(out))
            return FamilyReport(False, "nesting", f"Omega_{k + 1} not inside Omega_{k} (cell {c})", (k, c))
    E_cover = np.zeros(root.grid.ncells, int)
    total_E = 0
    for k, Q in family.items():
        s = Q.span
        inner = int(masks[k][s.start:s.stop].sum())
        n = len(s)
        if 2 * inner > n:
            return FamilyReport(False, "half-measure", f"|Omega_{k + 1} ∩ {Q}| = {inner}/{n} cells exceeds half", (k, Q))
        E = ~masks[k][s.start:s.stop]
        if 2 * int(E.sum()) < n:
            return FamilyReport(False, "E-size", f"|E| below half of {Q} at level {k}", (k, Q))
        E_cover[s.start:s.stop] += E
        total_E += int(E.sum())
    if E_cover.max(initial=0) > 1:
        c = int(np.argmax(E_cover))
        return FamilyReport(False, "E-disjoint", f"sets E_j^k overlap at cell {c}", (c,))
    if total_E > len(rs):
        return FamilyReport(False, "packing", "sum of |E_j^k| exceeds |Q0|", ())
    return FamilyReport(True)


@dataclass(frozen=True)
class PointwiseReport:
    ok: bool
    max_excess: float
    max_ratio: float
    worst_cell: int


def pointwise_sides(f: GridFunction, Q0: DyadicInterval, family: SparseFamily) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of ``|f - m_f(Q0)| <= 4 M#_{1/4} f + 4 sum omega_{1/8}(f; parent(Q)) chi_Q`` on ``Q0``."""
    _check_node(f, Q0)
    s = Q0.span
    lhs = np.abs(f.values - median(f, Q0))[s.start:s.stop]
    sharp = local_sharp_maximal(f, Q0, SHARP_LAMBDA).values[s.start:s.stop]
    acc = np.zeros(len(s))
    for Q in family.intervals():
        q = Q.span
        acc[q.start - s.start:q.stop - s.start] += local_oscillation(f, parent(Q), SUM_LAMBDA)
    return lhs, 4.0 * sharp + 4.0 * acc


def check_pointwise_bound(f: GridFunction, Q0: DyadicInterval, family: SparseFamily, tol: float = 1e-12) -> PointwiseReport:
    lhs, rhs = pointwise_sides(f, Q0, family)
    diff = lhs - rhs
    worst = int(np.argmax(diff))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > 0, lhs / rhs, np.where(lhs > 0, np.inf, 0.0))
    return PointwiseReport(bool(diff.max() <= tol), float(diff.max()), float(ratio.max()), worst + Q0.span.start)
