"""
The transpose-invariant state family
====================================

States are assembled from four vector blocks (two singlet-like vectors and
two (d-2)-fold degenerate families) whose twenty coefficients satisfy six
quadratic constraints.  On the constraint surface the density matrix equals
its own partial transpose, so it is PPT, hence bound entangled whenever it
is entangled at all.

The chart used everywhere in this package fixes the gauge B = V = 0 and
solves the constraints for the dependent coefficients; this script walks
through one random chart point and shows each structural fact numerically.
"""

import numpy as np

from pptbell.linalg import BipartiteShape, eigh, partial_transpose, rank_with_tol
from pptbell.model import (
    FreeStateParams,
    assemble_density,
    solve_constraints,
    state_spectrum,
)

rng = np.random.default_rng(7)
d = 5

# Draw the eleven free coefficients and complete them to a full parameter
# set.  A (and at d >= 4 the a block) is determined by the magnitude
# relation, the b01*b10 product by the cross-product relation.
free = FreeStateParams(*(0.3 * rng.standard_normal(11)))
sp = solve_constraints(d, free)
print(f"d = {d}")
print("constraint residuals:", ["%.1e" % r for r in sp.constraint_residuals(d)])
print("block norm total (should be 1):", sp.normalization(d))

# The four block weights are the eigenvalue levels of the state.
info = state_spectrum(d, sp)
print("block weights: s0 %.4f  s1 %.4f  d0 %.4f  d1 %.4f"
      % (info.p_s0, info.p_s1, info.p_d0, info.p_d1))

rho = assemble_density(d, sp)
pt = partial_transpose(rho, BipartiteShape(d, d))
print("trace:", np.trace(rho))
print("max |rho^TB - rho| :", np.max(np.abs(pt - rho)), "(transpose invariance)")
print("min eigenvalue      :", eigh(rho).values[-1])
print("rank at tol 1e-7    :", rank_with_tol(rho), "(expected", 2 * d - 2, ")")

# The nonzero spectrum splits into four levels: two simple ones from the
# singlet-like pair and two (d-2)-fold degenerate ones from the D families.
top = eigh(rho).values[: 2 * d - 2]
levels, counts = np.unique(np.round(top, 10), return_counts=True)
print("eigenvalue levels:", np.round(levels, 6), "with multiplicities", counts)

# Off the constraint surface the invariance fails immediately: perturb one
# coefficient by 1e-3 and the partial transpose moves away at the same scale.
vals = {f.name: getattr(sp, f.name) for f in sp.__dataclass_fields__.values()}
vals["a00"] += 1e-3
bad = type(sp)(**vals)
bad = bad.scaled(1.0 / np.sqrt(bad.normalization(d)))
rho_bad = assemble_density(d, bad)
pt_bad = partial_transpose(rho_bad, BipartiteShape(d, d))
print("after a 1e-3 nudge of a00: max |rho^TB - rho| =", np.max(np.abs(pt_bad - rho_bad)))
