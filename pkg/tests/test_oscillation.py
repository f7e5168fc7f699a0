import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wlab.dyadic import GridFunction, Span, build_grid, median, rearrangement_value
from wlab.oscillation import (SparseFamily, check_pointwise_bound, decompose, local_oscillation,
                              local_sharp_maximal, verify_family)


def brute_oscillation(f, I, lam, cgrid=4001):
    # inf over a fine c-grid plus every midpoint of value pairs
    vals = f.restrict(I)
    pairs = [(a + b) / 2 for a in vals for b in vals]
    cs = np.concatenate([np.linspace(vals.min(), vals.max(), cgrid), pairs])
    return min(rearrangement_value(f - c, I, lam) for c in cs)


def test_half_zero_half_one():
    g = build_grid(0, 0, 3)
    f = GridFunction(g, [0.0] * 4 + [1.0] * 4)
    assert local_oscillation(f, g.root, 0.25) == 0.5
    assert local_oscillation(f, g.root, 0.5) == 0.0         # discard a half
    assert local_oscillation(GridFunction.constant(g, 7), g.root, 0.1) == 0.0


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-4, 4), min_size=8, max_size=8), st.sampled_from([0.1, 0.125, 0.25, 0.3, 0.5]))
def test_oscillation_vs_brute_force(vals, lam):
    g = build_grid(0, 0, 3)
    f = GridFunction(g, np.array(vals, float))
    got = local_oscillation(f, g.root, lam)
    assert got == pytest.approx(brute_oscillation(f, g.root, lam), abs=1e-12)
    # the median is a valid (not necessarily optimal) constant
    assert got <= rearrangement_value(f - median(f, g.root), g.root, lam) + 1e-12


def test_oscillation_monotone_in_lambda():
    rng = np.random.default_rng(0)
    g = build_grid(0, 0, 6)
    f = GridFunction(g, rng.standard_normal(64))
    lams = [0.01, 0.05, 0.125, 0.25, 0.4, 0.6, 0.9]
    vals = [local_oscillation(f, g.root, l) for l in lams]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        local_oscillation(f, g.root, 1.0)


def test_sharp_maximal():
    g = build_grid(0, 0, 4)
    f = GridFunction(g, np.arange(16.0))
    Ms = local_sharp_maximal(f, g.root, 0.25).values
    for c in range(16):
        ref = max(local_oscillation(f, Q, 0.25) for Q in (g.dyadic(d, c >> (4 - d)) for d in range(5)))
        assert Ms[c] == pytest.approx(ref)
    sub = g.dyadic(1, 1)
    Ms = local_sharp_maximal(f, sub, 0.25).values
    assert np.all(Ms[:8] == 0)
    assert np.all(local_sharp_maximal(GridFunction.constant(g, 2), g.root, 0.25).values == 0)


def test_decompose_constant_and_single_cell():
    g = build_grid(0, 0, 5)
    assert len(decompose(GridFunction.constant(g, 3), g.root)) == 0
    v = np.zeros(32)
    v[5] = 1.0
    fam = decompose(GridFunction(g, v), g.root)
    assert list(fam.intervals()) == [g.dyadic(5, 5)]


@pytest.mark.parametrize("seed", range(40))
def test_decompose_random(seed):
    rng = np.random.default_rng(seed)
    g = build_grid(0, 0, 7)
    kind = seed % 3
    if kind == 0:
        v = rng.standard_normal(128)
    elif kind == 1:
        v = np.repeat(rng.integers(-3, 4, 8), 16).astype(float) + 0.01 * rng.standard_normal(128)
    else:
        v = rng.standard_cauchy(128)
    f = GridFunction(g, v)
    for Q0 in (g.root, g.dyadic(2, 1)):
        fam = decompose(f, Q0)
        assert verify_family(fam).ok
        assert check_pointwise_bound(f, Q0, fam).ok


def test_decompose_deterministic():
    g = build_grid(0, 0, 8)
    f = GridFunction(g, np.random.default_rng(1).standard_normal(256))
    assert decompose(f, g.root).to_text() == decompose(f, g.root).to_text()


def test_family_text_roundtrip():
    g = build_grid(-2, 2, 8)
    f = GridFunction(g, np.random.default_rng(2).standard_normal(256) ** 3)
    fam = decompose(f, g.root)
    assert len(fam) > 0
    back = SparseFamily.from_text(fam.to_text())
    assert back == fam
    with pytest.raises(ValueError):
        SparseFamily.from_text("1 2 3\n")


def test_verify_family_flags_nesting():
    g = build_grid(0, 0, 4)
    fam = SparseFamily(g.root, 0.0, ((g.dyadic(2, 0),), (g.dyadic(3, 4),)))
    rep = verify_family(fam)
    assert not rep.ok and rep.violation == "nesting"
    fam = SparseFamily(g.root, 0.0, ((g.dyadic(1, 0), g.dyadic(2, 1)),))
    assert verify_family(fam).violation == "overlap"
    fam = SparseFamily(g.root, 0.0, ((g.dyadic(1, 0),), (g.dyadic(2, 0), g.dyadic(2, 1))))
    assert verify_family(fam).violation == "half-measure"
    assert verify_family(SparseFamily(g.root, 0.0, ((g.root,),))).violation == "domain"
    assert verify_family(SparseFamily(g.root, 0.0)).ok


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(-5, 5), st.floats(-5, 5))
def test_oscillation_scaling(seed, c, c0):
    g = build_grid(0, 0, 5)
    f = GridFunction(g, np.random.default_rng(seed).standard_normal(32))
    w = local_oscillation(f, g.root, 0.25)
    assert local_oscillation(c * f, g.root, 0.25) == pytest.approx(abs(c) * w, abs=1e-12)
    assert local_oscillation(f + c0, g.root, 0.25) == pytest.approx(w, abs=1e-12)


def test_sharp_maximal_monotone_and_haar():
    g = build_grid(0, 0, 5)
    f = GridFunction(g, np.random.default_rng(3).standard_normal(32))
    a = local_sharp_maximal(f, g.root, 0.1).values
    b = local_sharp_maximal(f, g.root, 0.3).values
    assert np.all(a >= b)
    h = GridFunction(g, [1.0] * 16 + [-1.0] * 16)
    np.testing.assert_allclose(local_sharp_maximal(h, g.root, 0.25).values, local_oscillation(h, g.root, 0.25))
    fam = decompose(h, g.root)
    assert check_pointwise_bound(h, g.root, fam).ok


def test_constant_family_median_and_bound():
    g = build_grid(0, 0, 4)
    f = GridFunction.constant(g, 2.5)
    fam = decompose(f, g.root)
    assert fam.base_median == 2.5 and len(fam) == 0
    rep = check_pointwise_bound(f, g.root, fam)
    assert rep.ok and rep.max_excess == 0
