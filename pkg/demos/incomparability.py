"""Step weights favour the Fujii-Wilson form of the constant, two-bump weights favour the joint form."""
from wlab.lab import ExperimentConfig, exp_bump, exp_step

step = exp_step(ExperimentConfig(experiment="step", p=4, r=8, sweep=[10, 100, 1000, 10000]))
print("step weights, p=4, r=8")
for row in step.rows:
    print(f"  t={row.param:<7g} mixed={row.const('mixed'):10.3f} lacey={row.const('lacey'):8.3f} "
          f"ratio={row.extra('lacey_over_mixed'):.4f}")
print(f"  slope of lacey/mixed in t: {step.fit('lacey_over_mixed').slope:+.3f}")

bump = exp_bump(ExperimentConfig(experiment="bump", p=4, r=8, origin=-128, span_log2=8,
                                 sweep=[0.2, 0.1, 0.05, 0.025], scope="dyadic"))
print("\ntwo-bump weights, p=4, r=8, dyadic scope")
for row in bump.rows:
    print(f"  delta={row.param:<6g} mixed={row.const('mixed'):9.3f} lacey={row.const('lacey'):8.3f} "
          f"FW(w)={row.const('fw_w'):7.3f} ratio={row.extra('mixed_over_lacey'):.4f}")
for fit in bump.fits:
    print(f"  slope of {fit.name}: {fit.slope:+.3f}")
for c in step.checks + bump.checks:
    print(("pass " if c.passed else "FAIL ") + c.name, c.detail)
