"""Weight characteristics of a step weight, and where their suprema are attained.

The step weight equals t on [0, 1] and 1 elsewhere.  A_p grows like t while
both Fujii-Wilson constants grow only logarithmically, which is what separates
the two kinds of constants later on.
"""
import math

from wlab.dyadic import build_grid
from wlab.weights import (MixedExponents, ainf_exp_norm, ap_norm, dual_weight, fw_norm, make_weight,
                          mixed_norm)

grid = build_grid(-32, 6, 10)
p, r = 4.0, 8.0
e = MixedExponents(p, r, 1 / (p - 1), 1 - 1 / (p - 1))

print(f"root [{grid.left}, {grid.right}), {grid.ncells} cells, p={p}, r={r}")
print(f"{'t':>7} {'A_p':>10} {'A_inf exp':>10} {'FW(w)':>8} {'FW(sigma)':>9} {'4 log t':>8} {'mixed':>9}  A_p witness")
for t in (3, 10, 100, 1000):
    w = make_weight(f"step:{t}", grid)
    a = ap_norm(w, p)
    left, length = a.witness(grid)
    print(f"{t:7g} {a.value:10.3f} {ainf_exp_norm(w).value:10.3f} {fw_norm(w).value:8.3f} "
          f"{fw_norm(dual_weight(w, p)).value:9.3f} {4 * math.log(t):8.3f} {mixed_norm(w, e).value:9.3f}"
          f"  [{left}, {left + length})")

# wider scan families can only raise a supremum
w = make_weight("step:100", build_grid(-8, 4, 7))
print("\nscope monotonicity for step:100 on a coarser grid")
for scope in ("dyadic", "windowed", "all"):
    s = ap_norm(w, p, scope)
    print(f"  {scope:9s} A_p = {s.value:.4f}  witness {s.witness(w.grid)}")
