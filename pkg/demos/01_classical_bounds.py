"""
Classical bounds of the inequality family
=========================================

Every member of the family has local bound zero: no assignment of fixed
outcomes to the measurement settings can make the expression positive.
This script enumerates all deterministic strategies for a few small
dimensions and prints the bound together with a strategy that attains it.
"""

import numpy as np

from pptbell.bell import (
    DeterministicStrategy,
    classical_bound,
    equivalent_under_relabeling,
    evaluate_strategy,
    make_d4_first,
    make_id,
    make_yu_oh,
)

# The main family: d two-outcome settings for Alice, one d-outcome and one
# two-outcome setting for Bob.
for d in range(3, 8):
    f = make_id(d)
    bound, strategy = classical_bound(f)
    print(f"d = {d}: classical bound {bound:+g}, attained by "
          f"alice {list(strategy.alice)}, bob {list(strategy.bob)}")

# The two variants: the first construction for d = 4 and the three-setting
# functional built from the Yu-Oh construction.
for name, f in (("d4-first", make_d4_first()), ("yu-oh d=3", make_yu_oh(3))):
    bound, _ = classical_bound(f)
    print(f"{name}: classical bound {bound:+g}")

# The d=3 member is the Yu-Oh functional up to relabeling of settings and
# outcomes; the canonical-form machinery proves it.
print("id(3) == yu-oh(3) up to relabeling:",
      equivalent_under_relabeling(make_id(3), make_yu_oh(3)))

# Spot check: random deterministic strategies never score above the bound.
rng = np.random.default_rng(0)
f = make_id(5)
worst = -np.inf
for _ in range(500):
    strat = DeterministicStrategy(
        alice=tuple(rng.integers(0, 2, size=5).tolist()),
        bob=(int(rng.integers(0, 5)), int(rng.integers(0, 2))),
    )
    worst = max(worst, evaluate_strategy(f, strat))
print(f"best of 500 random strategies at d=5: {worst:+g} (never above zero)")
