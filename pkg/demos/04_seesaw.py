"""
Alternating state/measurement search
====================================

Without assuming the state family at all, one can look for the best PPT
state and measurements by alternating three subproblems: the optimal
transpose-invariant-feasible state for fixed measurements (an SDP), then
Alice's projectors and Bob's two settings for the fixed state.  Accepted
cycles never lower the value, so the run is monotone by construction.

The violating basin is small: most starting points collapse onto the zero
corner (separable states score exactly zero here).  A full search therefore
uses twenty restarts mixing random and frame-aligned starts; this script
replays one frame-aligned start known to climb, which keeps the runtime at
a few seconds.
"""

import numpy as np

from pptbell.bell import make_id
from pptbell.seesaw import (
    SeesawConfig,
    extract_chart,
    frame_aligned_povms,
    optimal_ppt_state,
    seesaw_once,
    self_consistency_residual,
)

d = 3
cfg = SeesawConfig(restarts=1, max_cycles=120, rel_tol=1e-10, sdp_tol=1e-8, seed=0)
f = make_id(d)

# Deterministic replay: the search derives one generator per restart from
# (seed, d, dim, restart); restart 15 is one of the climbing ones.
rng = np.random.default_rng((cfg.seed, d, d, 15))
start = frame_aligned_povms(d, rng)
state = seesaw_once(f, d, cfg, rng, start_povms=start)

print(f"final value after {state.cycles} cycles: {state.value:.6e}")
history = np.array(state.history)
print("monotone:", bool(np.min(np.diff(history)) >= -1e-12))
print("value at cycles 1, 5, 20, last:",
      ", ".join("%.3e" % history[i] for i in (0, 4, 19, -1)))
print("fixed-point residual:", self_consistency_residual(f, state))

# Re-solving the state at the final measurements cannot find anything
# better; the run really is at an alternating fixed point.
_, recheck, _ = optimal_ppt_state(f, d, state.povms, sdp_tol=1e-8)
print("state re-solve at final measurements: %.6e (gain %.1e)"
      % (recheck, recheck - state.value))

# The converged run lands back on the parametrized family: fitting the
# chart reproduces the state and the value to the run's own precision.
fit = extract_chart(state, d)
print("chart fit: value %.6e, value gap %.1e, state residual %.1e"
      % (fit.value, fit.diagnostics["value_gap"], fit.diagnostics["state_residual"]))
print("fitted measurement cosines:",
      "x0 %.4f x1 %.4f x2 %.4f y0 %.4f y1 %.4f"
      % (fit.meas_params.x0, fit.meas_params.x1, fit.meas_params.x2,
         fit.meas_params.y0, fit.meas_params.y1))
