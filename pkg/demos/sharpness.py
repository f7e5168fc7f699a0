"""Power weights |x|^((p-1)(1-delta)) against the Buckley functions x^(delta-1) on [0, 1].

The joint constant grows like a power of 1/delta and its slope is computed
from exact cell integrals.  The norm ratio is harder: a fraction h^delta of
||f||^p sits in the first cell, so the ratio only approaches its continuum
behaviour once h^delta is small.  The last column shows how far that is.
"""
from wlab.lab import ExperimentConfig, exp_sharpness

cfg = ExperimentConfig(operator="hilbert", p=3, r=6, sweep=[0.2, 0.1, 0.05, 0.025])
rep = exp_sharpness(cfg)
print(rep.name, "on", len(rep.rows), "deltas")
print(f"{'delta':>7} {'ratio':>9} {'mixed':>10} {'first-cell mass':>16}")
for row in rep.rows:
    print(f"{row.param:7g} {row.ratio:9.4f} {row.const('mixed'):10.3f} {row.extra('unresolved_mass'):16.3f}")
for fit in rep.fits:
    print(f"slope of {fit.name}: {fit.slope:+.3f}")
for c in rep.checks:
    print(("pass " if c.passed else "FAIL ") + c.name, c.detail)
