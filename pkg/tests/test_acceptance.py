"""Acceptance gate: the eight headline capabilities, each with pinned
tolerances and a runtime budget.  Every test prints one summary line; run
with -s (or read the captured output) to see them."""
from __future__ import annotations

import math
import time

import numpy as np

from pptbell.analytic import asymptotic_params, quantum_value_analytic
from pptbell.bell import classical_bound, make_d4_first, make_id, make_yu_oh
from pptbell.linalg import BipartiteShape, partial_transpose, rank_with_tol
from pptbell.model import (
    FreeStateParams,
    MeasurementParams,
    assemble_density,
    bell_operator,
    build_measurements,
    chi_vector,
    phi_vectors,
    solve_constraints,
    theta_frame,
)
from pptbell.optimize import SimplexConfig, maximize_violation, violation_curve
from pptbell.seesaw import SeesawConfig, restricted_dimension_search, seesaw

TABLE_VALUES = {
    3: 0.000265264,
    4: 0.000210913,
    5: 0.000162725,
    6: 0.000128375,
    7: 0.000103852,
    8: 0.000085873,
}


def random_chart(d, rng, scale=0.3):
    """One random constraint-satisfying parameter set."""
    return solve_constraints(d, FreeStateParams(*(scale * rng.standard_normal(11))))


def random_directions(rng):
    """One random normalized measurement parameter set."""
    theta, phi, psi = rng.uniform(0.1, math.pi / 2 - 0.1, size=3)
    return MeasurementParams(
        x0=math.cos(theta), x1=math.sin(theta) * math.cos(phi),
        x2=math.sin(theta) * math.sin(phi), y0=math.cos(psi), y1=math.sin(psi))


def test_criterion_1_classical_bounds():
    """All family members have classical bound exactly zero."""
    t0 = time.monotonic()
    for d in range(3, 11):
        bound, _ = classical_bound(make_id(d))
        assert bound == 0.0
    for f in (make_d4_first(), make_yu_oh(3)):
        bound, _ = classical_bound(f)
        assert bound == 0.0
    elapsed = time.monotonic() - t0
    assert elapsed < 10.0
    print(f"criterion 1: pass (bounds all zero for d=3..10 plus both variants, {elapsed:.1f}s)")


def test_criterion_2_table_reproduction():
    """Chart optimization reaches at least 0.99 of the published level for d=3..8."""
    t0 = time.monotonic()
    cfg = SimplexConfig(restarts=20, seed=0)
    worst_ratio = math.inf
    for d in range(3, 9):
        res = maximize_violation(d, cfg)
        ratio = res.value / TABLE_VALUES[d]
        worst_ratio = min(worst_ratio, ratio)
        assert ratio >= 0.99, f"d={d} reached only {ratio:.6f} of the published value"
        rho = assemble_density(d, res.state_params)
        pt = partial_transpose(rho, BipartiteShape(d, d))
        assert np.linalg.eigvalsh(rho)[0] >= -1e-9
        assert np.max(np.abs(pt - rho)) <= 1e-9
        assert rank_with_tol(rho, tol=1e-7) == 2 * d - 2
    elapsed = time.monotonic() - t0
    assert elapsed < 300.0
    print(f"criterion 2: pass (worst ratio {worst_ratio:.6f}, states invariant and rank 2d-2, {elapsed:.0f}s)")


def test_criterion_3_analytic_trace_oracle():
    """Closed-form values agree with operator traces on random draws."""
    rng = np.random.default_rng(0)
    worst = 0.0
    for d in range(4, 11):
        for _ in range(100):
            sp = random_chart(d, rng)
            mp = random_directions(rng)
            direct = float(np.trace(assemble_density(d, sp) @ bell_operator(d, build_measurements(d, mp))))
            worst = max(worst, abs(quantum_value_analytic(d, sp, mp).total - direct))
    assert worst <= 1e-10
    print(f"criterion 3: pass (worst analytic-vs-trace gap {worst:.2e} over 700 draws)")


def test_criterion_4_transpose_invariance_machinery():
    """Constraint-satisfying states are transpose-invariant; broken ones are not."""
    rng = np.random.default_rng(1)
    worst_pt = 0.0
    for d in range(3, 11):
        for _ in range(20):
            rho = assemble_density(d, random_chart(d, rng))
            pt = partial_transpose(rho, BipartiteShape(d, d))
            worst_pt = max(worst_pt, float(np.max(np.abs(pt - rho))))
    assert worst_pt <= 1e-11

    worst_span = 0.0
    for d in range(4, 11):
        fr = theta_frame(d)
        basis = np.array([chi_vector(d)] + phi_vectors(fr))
        worst_span = max(worst_span, float(np.max(np.abs(basis @ basis.T - np.eye(d - 1)))))
        proj = basis.T @ basis
        for p in range(d - 1):
            v = np.kron(fr.vectors[p], fr.vectors[p])
            worst_span = max(worst_span, float(np.linalg.norm(v - proj @ v)))
    assert worst_span <= 1e-11

    d = 6
    sp = random_chart(d, rng)
    broken = 0
    for field in ("a00", "b00", "u0", "v0p", "A", "u1p"):
        vals = {k: getattr(sp, k) for k in (
            "a00", "a01", "a10", "a11", "A", "b00", "b01", "b10", "b11", "B",
            "u0", "u0p", "u1", "u1p", "U", "v0", "v0p", "v1", "v1p", "V")}
        vals[field] += 1e-3
        bad = type(sp)(**vals)
        bad = bad.scaled(1.0 / math.sqrt(bad.normalization(d)))
        rho = assemble_density(d, bad)
        resid = float(np.max(np.abs(partial_transpose(rho, BipartiteShape(d, d)) - rho)))
        if resid > 1e-5:
            broken += 1
    assert broken == 6
    print(f"criterion 4: pass (invariance {worst_pt:.2e}, basis identity {worst_span:.2e}, "
          "all six single-coefficient breaks detected)")


def test_criterion_5_seesaw():
    """The alternating search reaches 0.9 of the published level at d=3,4 and
    finds nothing in one dimension less."""
    t0 = time.monotonic()
    cfg = SeesawConfig(restarts=20, max_cycles=150, rel_tol=1e-9, sdp_tol=1e-8, seed=0)
    reached = {}
    for d in (3, 4):
        res = seesaw(d, cfg)
        reached[d] = res.value
        assert res.value >= 0.9 * TABLE_VALUES[d], f"d={d}: {res.value}"
        history = np.array(res.best.history)
        assert np.min(np.diff(history)) >= -1e-9

    restricted = restricted_dimension_search(
        4, 3, SeesawConfig(restarts=50, max_cycles=150, rel_tol=1e-9, sdp_tol=1e-8, seed=0))
    assert restricted.value <= 1e-9
    elapsed = time.monotonic() - t0
    assert elapsed < 900.0
    print(f"criterion 5: pass (d=3 -> {reached[3]:.6e}, d=4 -> {reached[4]:.6e}, "
          f"restricted max {restricted.value:.2e}, {elapsed:.0f}s)")


def test_criterion_6_asymptotics():
    """The asymptotic law has the right root, sign change, and constants."""
    ap = asymptotic_params()
    assert abs(ap.z - 0.2282) <= 1e-4
    for d in range(3, 38):
        assert ap.q_approx(d) <= 0.0
    assert ap.q_approx(38) > 0.0
    assert abs(ap.c1 - 0.01686) / 0.01686 <= 5e-4
    assert abs(ap.c2 - 6.118) / 6.118 <= 5e-4
    print(f"criterion 6: pass (z={ap.z:.6f}, sign change at d=38, "
          f"constants {ap.c1:.6f} / {ap.c2:.4f})")


def test_criterion_7_curve():
    """The violation curve decreases to d=1000 with the right slope and
    reduced-mode deficit."""
    t0 = time.monotonic()
    grid = np.unique(np.round(np.logspace(math.log10(3), 3.0, 36)).astype(int))
    grid = np.union1d(grid, [500, 1000]).tolist()
    cfg = SimplexConfig(restarts=3, seed=0)
    full = violation_curve(grid, mode="full", cfg=cfg)
    vals = [v for _, v in full]
    assert all(vals[i] > vals[i + 1] > 0.0 for i in range(len(vals) - 1))

    tail = [(d, v) for d, v in full if d >= 500]
    logs_d = np.log([d for d, _ in tail])
    logs_v = np.log([v for _, v in tail])
    slope = np.polyfit(logs_d, logs_v, 1)[0]
    assert -2.1 <= slope <= -1.8

    reduced = violation_curve([1000], mode="reduced", cfg=cfg)[0][1]
    full_1000 = dict(full)[1000]
    deficit = 1.0 - reduced / full_1000
    assert 0.15 <= deficit <= 0.30
    elapsed = time.monotonic() - t0
    assert elapsed < 1800.0
    print(f"criterion 7: pass (strictly decreasing over {len(grid)} points, "
          f"slope {slope:.4f}, reduced deficit {100 * deficit:.1f}%, {elapsed:.0f}s)")


def test_criterion_8_structural_invariants():
    """Frames, bases, and tilted-setting overlaps meet their defining relations."""
    for d in range(3, 17):
        fr = theta_frame(d)
        expected = ((d - 1) * np.eye(d - 1) - np.ones((d - 1, d - 1))) / (d - 2)
        assert np.max(np.abs(fr.gram() - expected)) <= 1e-12

    rng = np.random.default_rng(2)
    worst = 0.0
    for d in (3, 5, 8, 12):
        base = random_directions(rng)
        mp = MeasurementParams(x0=base.x0, x1=base.x1, x2=base.x2,
                               y0=math.sqrt((d - 1) / d), y1=math.sqrt(1 / d))
        ms = build_measurements(d, mp)
        gram = ms.bob0_vectors @ ms.bob0_vectors.T
        assert np.max(np.abs(gram - np.eye(d))) <= 1e-11
        ms.validate(tol=1e-11)
        overlaps = np.abs(ms.bob0_vectors @ ms.bob1_vector)
        worst = max(worst, float(np.max(np.abs(overlaps - 1 / math.sqrt(d)))))
    assert worst <= 1e-11
    print(f"criterion 8: pass (frame residuals <= 1e-12 for d=3..16, "
          f"tilted overlap deviation {worst:.2e})")
