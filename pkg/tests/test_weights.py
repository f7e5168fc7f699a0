import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy import integrate as sint

from wlab.dyadic import Span, build_grid
from wlab.weights import (MixedExponents, Weight, ainf_exp_local, ainf_exp_norm, ap_local, ap_norm,
                          dual_weight, fujii_wilson_local, fw_norm, lacey_terms, make_weight,
                          mixed_norm, parse_recipe, scan)

G = build_grid(-8, 4, 6)       # root [-8, 8), 64 cells
ZOO = ["const:2.5", "power:-0.5", "power:0.3", "power:1.7", "step:0.1", "step:9", "step:1000", "bump:0.3,4,3"]


def admissible(recipe, p):
    # locally A_p iff every power exponent e has e < p - 1
    return all(ex < p - 1 for *_, ex in make_weight(recipe, G).density.pieces)


def random_span(rng, grid):
    a, b = sorted(rng.choice(grid.ncells + 1, 2, replace=False))
    return Span(int(a), int(b))


def brute_sup(w, local):
    # oracle: every grid-aligned interval, ties to smaller start then shorter
    best, arg = -math.inf, None
    m = w.grid.ncells
    for a in range(m):
        for b in range(a + 1, m + 1):
            v = local(Span(a, b))
            if v > best * (1 + 1e-12) or arg is None:
                best, arg = v, (a, b)
    return best


# ----------------------------------------------------------- construction

def test_step_exact_a2():
    g = build_grid(0, 1, 1)
    w = make_weight("step:9", g)
    assert w.values.tolist() == [9.0, 1.0]
    assert ap_local(w, g.root, 2) == pytest.approx(25 / 9, rel=1e-14)
    assert ainf_exp_local(w, g.root) == pytest.approx(5 / 3, rel=1e-14)


def test_power_cell_average():
    g = build_grid(0, 0, 2)
    w = make_weight("power:1", g)
    assert w.values[0] == pytest.approx(1 / 8, rel=1e-14)
    assert w.values[3] == pytest.approx(7 / 8, rel=1e-14)


def test_bump_plateau():
    g = build_grid(-16, 5, 7)
    w = make_weight("bump:0.2,8,4", g)
    e = g.edges()
    plateau = (e[:-1] >= 2) & (e[1:] <= 7)
    assert np.all(w.values[plateau] == 1.0)
    outside = (e[1:] <= -1) | (e[:-1] >= 9)
    assert np.all(w.values[outside] == 1.0)


def test_bump_default_center():
    g = build_grid(-128, 8, 10)
    w = make_weight("bump:0.1,4", g)
    assert "64.0" in w.label


@pytest.mark.parametrize("bad", ["power:-1", "step:0", "bump:1.2,8,4", "bump:0.1,2,4", "bump:0.1,8,1",
                                 "bump:0.1,100,4", "const:-1", "wedge:1", "power:", "step:1,2"])
def test_bad_recipes(bad):
    with pytest.raises(ValueError):
        make_weight(bad, G)


def test_weight_validation():
    with pytest.raises(ValueError):
        Weight(G, np.zeros(64))
    with pytest.raises(ValueError):
        Weight(G, np.full(64, np.inf))
    with pytest.raises(ValueError):
        Weight(G, np.ones(10))


@pytest.mark.parametrize("recipe", ["power:-0.5", "power:1.7", "bump:0.3,4,3"])
@pytest.mark.parametrize("q", [1.0, -0.5, 2.0])
def test_density_moments_vs_quadrature(recipe, q):
    w = make_weight(recipe, G)
    e = G.edges()
    d = w.density
    for i in [0, 30, 31, 32, 33, 40, 44, 63]:
        singular = [ex * q for lo, hi, c, ctr, ex in d.pieces if lo < e[i + 1] and hi > e[i] and
                    e[i] <= ctr <= e[i + 1]]
        if any(x <= -1 for x in singular):
            assert w.moments(q)[i] == np.inf
            continue
        def f(x):
            for lo, hi, c, ctr, ex in d.pieces:
                if lo <= x < hi:
                    return (c * abs(x - ctr) ** ex) ** q
            return 0.0
        brk = [p for p in (-1.0, 0.0, 1.0, 3.0, 4.0, 5.0) if e[i] < p < e[i + 1]]
        ref, _ = sint.quad(f, e[i], e[i + 1], points=brk or None, limit=200)
        assert w.moments(q)[i] == pytest.approx(ref, rel=1e-7, abs=1e-12)


def test_interval_sum_matches_direct():
    rng = np.random.default_rng(0)
    w = make_weight("power:1.7", G)
    for _ in range(200):
        s = random_span(rng, G)
        for q in (1.0, -0.5, "log"):
            assert w.interval_sum(q, s) == pytest.approx(w.moments(q)[s.start:s.stop].sum(), rel=1e-12, abs=1e-13)
    with pytest.raises(ValueError):
        w.interval_sum(1.0, Span(-1, 3))


# ----------------------------------------------------------- local values

@pytest.mark.parametrize("p", [1.5, 2, 3.7])
def test_constant_weight_is_one(p):
    w = make_weight("const:3", G)
    assert ap_local(w, G.root, p) == pytest.approx(1.0, rel=1e-14)
    assert ainf_exp_local(w, G.root) == pytest.approx(1.0, rel=1e-14)
    assert fujii_wilson_local(w, G.root) == pytest.approx(1.0, rel=1e-14)
    assert ap_norm(w, p).value == pytest.approx(1.0, rel=1e-13)


def test_fujii_wilson_examples():
    g = build_grid(0, 1, 1)
    w = make_weight("step:9", g)
    # M(w chi_Q) = [9, 5] on the two cells, w(Q) = 10
    assert fujii_wilson_local(w, g.root) == pytest.approx(14 / 10)
    assert fujii_wilson_local(w, Span(0, 1)) == pytest.approx(1.0)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(ZOO), st.floats(1.2, 8), st.integers(0, 10 ** 6))
def test_duality_identity(recipe, p, seed):
    assume(admissible(recipe, p))
    w = make_weight(recipe, G)
    s = random_span(np.random.default_rng(seed), G)
    sig = dual_weight(w, p)
    pp = p / (p - 1)
    assert ap_local(sig, s, pp) == pytest.approx(ap_local(w, s, p) ** (1 / (p - 1)), rel=1e-10)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(ZOO), st.floats(1.2, 6), st.floats(0.01, 3), st.integers(0, 10 ** 6))
def test_local_invariants(recipe, p, dp, seed):
    assume(admissible(recipe, p))
    w = make_weight(recipe, G)
    s = random_span(np.random.default_rng(seed), G)
    a = ap_local(w, s, p)
    assert a >= 1 - 1e-12
    assert ap_local(w, s, p + dp) <= a * (1 + 1e-12)
    assert ainf_exp_local(w, s) <= ap_local(w, s, p + dp) * (1 + 1e-12)
    assert ainf_exp_local(w, s) >= 1 - 1e-12
    assert fujii_wilson_local(w, s) >= 1 - 1e-12
    c = 7.3
    assert ap_local(w.scaled(c), s, p) == pytest.approx(a, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(ZOO), st.integers(0, 10 ** 6))
def test_sub_measure_inequality(recipe, seed):
    # |E|/|Q| <= A_p^{1/p} (w(E)/w(Q))^{1/p}
    w = make_weight(recipe, G)
    rng = np.random.default_rng(seed)
    Q = random_span(rng, G)
    n = len(Q)
    a = rng.integers(Q.start, Q.stop)
    b = rng.integers(a + 1, Q.stop + 1)
    E = Span(int(a), int(b))
    p = 2.5
    assume(admissible(recipe, p))
    rhs = ap_local(w, Q, p) ** (1 / p) * (w.measure(E) / w.measure(Q)) ** (1 / p)
    assert len(E) / n <= rhs * (1 + 1e-12)


# ----------------------------------------------------------- scans

def test_all_scope_matches_brute_force():
    g = build_grid(-4, 3, 4)
    for recipe in ["step:9", "power:1.7", "power:-0.5"]:
        w = make_weight(recipe, g)
        assert ap_norm(w, 2.0, "all").value == pytest.approx(brute_sup(w, lambda s: ap_local(w, s, 2.0)), rel=1e-12)
        assert ainf_exp_norm(w, "all").value == pytest.approx(brute_sup(w, lambda s: ainf_exp_local(w, s)), rel=1e-12)
        assert fw_norm(w, "all").value == pytest.approx(brute_sup(w, lambda s: fujii_wilson_local(w, s)), rel=1e-12)


@pytest.mark.parametrize("recipe", ZOO)
def test_scope_monotonicity(recipe):
    g = build_grid(-8, 4, 5)
    w = make_weight(recipe, g)
    for f in (lambda sc: ap_norm(w, 3, sc), lambda sc: ainf_exp_norm(w, sc), lambda sc: fw_norm(w, sc)):
        d, win, a = (f(sc).value for sc in ("dyadic", "windowed", "all"))
        assert d <= win * (1 + 1e-12) and win <= a * (1 + 1e-12)


def test_argmax_witness_and_tiebreak():
    g = build_grid(0, 1, 4)
    w = make_weight("step:9", g)
    r = ap_norm(w, 2, "windowed")
    assert r.witness(g) == (0.0, 2.0)
    assert r.value == pytest.approx(25 / 9)
    # constant weight: every interval ties, the first single cell wins
    r = ap_norm(make_weight("const:1", g), 2, "all")
    assert r.argmax == Span(0, 1)


def test_scan_reports_argmax_value():
    w = make_weight("power:1.7", G)
    for sc in ("dyadic", "windowed", "all"):
        r = ap_norm(w, 3, sc)
        assert ap_local(w, r.argmax, 3) == pytest.approx(r.value, rel=1e-12)


def test_mixed_norm_reductions():
    w = make_weight("power:1.7", G)
    p, r = 3.0, 6.0
    assert mixed_norm(w, MixedExponents(p, r, 1, 0)).value == pytest.approx(ap_norm(w, p).value, rel=1e-13)
    m = mixed_norm(w, MixedExponents(p, r, 0.5, 0.5, "ar"))
    assert m.value == pytest.approx(math.sqrt(ap_local(w, m.argmax, p) * ap_local(w, m.argmax, r)), rel=1e-12)
    m = mixed_norm(w, MixedExponents(p, r, 0.5, 1, "ainf"))
    assert m.value == pytest.approx(ap_local(w, m.argmax, p) ** 0.5 * ainf_exp_local(w, m.argmax), rel=1e-12)
    m = mixed_norm(w, MixedExponents(p, r, 0.5, 1, "fw"))
    assert m.value == pytest.approx(ap_local(w, m.argmax, p) ** 0.5 * fujii_wilson_local(w, m.argmax), rel=1e-12)
    assert mixed_norm(make_weight("const:2", G), MixedExponents(p, r, 0.5, 0.7)).value == pytest.approx(1.0)


@pytest.mark.parametrize("args", [(1.0, 2, 1, 0), (3, 2, 1, 0.5), (3, 6, -1, 0), (3, 6, 1.5, 1)])
def test_mixed_exponent_validation(args):
    with pytest.raises(ValueError):
        MixedExponents(*args)


def test_lacey_terms():
    w = make_weight("const:5", G)
    assert lacey_terms(w, 3).value == pytest.approx(1.0)
    w = make_weight("step:100", G)
    t = lacey_terms(w, 4)
    pp = 4 / 3
    assert t.value == pytest.approx(t.ap.value ** 0.25 * max(t.fw_w.value ** (1 / pp), t.fw_sigma.value ** 0.25))


def test_scan_rejects_bad_scope():
    with pytest.raises(ValueError):
        ap_norm(make_weight("const:1", G), 2, "everything")
