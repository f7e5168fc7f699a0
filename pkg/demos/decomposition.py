"""Sparse decomposition of a rough function and the pointwise bound it certifies."""
import numpy as np

from wlab.dyadic import GridFunction, build_grid
from wlab.oscillation import check_pointwise_bound, decompose, pointwise_sides, verify_family

grid = build_grid(0, 0, 10)
rng = np.random.default_rng(7)
x = grid.centers()
f = GridFunction(grid, np.sign(np.sin(9 * x)) + 0.2 * rng.standard_cauchy(grid.ncells))

fam = decompose(f, grid.root)
print(f"{len(fam)} intervals on {len(fam.levels)} levels, base median {fam.base_median:.4f}")
for k, lv in enumerate(fam.levels, start=1):
    cover = fam.omega_mask(k).mean()
    print(f"  level {k}: {len(lv):4d} intervals covering {cover:.3%} of the root")

print("family check:", verify_family(fam).message)
rep = check_pointwise_bound(f, grid.root, fam)
lhs, rhs = pointwise_sides(f, grid.root, fam)
print(f"pointwise bound holds: {rep.ok}, largest LHS/RHS {rep.max_ratio:.3f}, mean RHS {rhs.mean():.3f}")
