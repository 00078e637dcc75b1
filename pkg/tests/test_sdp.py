"""Tests for the barrier SDP solver and the fixed-measurement state step."""
from __future__ import annotations

import numpy as np
import pytest

from pptbell.bell import make_id
from pptbell.linalg import BipartiteShape, partial_transpose
from pptbell.model import MeasurementParams, build_measurements
from pptbell.sdp import (
    PsdBlock,
    SdpInfeasibleError,
    SdpNonConvergedError,
    SdpProblem,
    pt_svec_permutation,
    sdp_solve,
    smat,
    svec,
    sym_kron,
)
from pptbell.seesaw import optimal_ppt_state, povms_from_measurements

# Optimal measurement direction cosines for the d=3 inequality, found by
# polishing the chart together with the b01/b10 split ratio.  Bob's pair is
# the tilted form (sqrt(2/3), sqrt(1/3)) up to the polish tolerance.
D3_OPT_MP = MeasurementParams(
    x0=0.7489833299685761,
    x1=0.5599246038220418,
    x2=0.3542716605430253,
    y0=0.8164964854410441,
    y1=0.5773504042281625,
)


def trace_problem(c: np.ndarray) -> SdpProblem:
    """Maximize trace(c @ x) over unit-trace PSD x."""
    n = c.shape[0]
    return SdpProblem(block_dims=(n,), objective=(c,), psd=(PsdBlock(0),),
                      eq_rows=({0: np.eye(n)},), eq_rhs=(1.0,))


def test_svec_smat_roundtrip():
    """svec and smat invert each other and preserve the trace inner product."""
    rng = np.random.default_rng(2)
    for n in (1, 2, 5, 9):
        a = rng.standard_normal((n, n))
        a = a + a.T
        b = rng.standard_normal((n, n))
        b = b + b.T
        assert np.max(np.abs(smat(svec(a), n) - a)) <= 1e-14
        assert abs(svec(a) @ svec(b) - np.trace(a @ b)) <= 1e-11


def test_sym_kron_action():
    """sym_kron(w) realizes the congruence s -> w s w^T in svec coordinates."""
    rng = np.random.default_rng(3)
    w = rng.standard_normal((4, 4))
    s = rng.standard_normal((4, 4))
    s = s + s.T
    assert np.max(np.abs(smat(sym_kron(w) @ svec(s), 4) - w @ s @ w.T)) <= 1e-12


def test_pt_permutation_matches_direct():
    """The svec index permutation reproduces the partial transpose and is an involution."""
    rng = np.random.default_rng(5)
    shape = BipartiteShape(2, 3)
    perm = pt_svec_permutation(shape)
    assert np.array_equal(perm[perm], np.arange(perm.size))
    m = rng.standard_normal((6, 6))
    m = m + m.T
    assert np.max(np.abs(svec(m)[perm] - svec(partial_transpose(m, shape)))) <= 1e-14


def test_largest_eigenvalue_oracle():
    """Maximizing trace(c x) over unit-trace PSD x returns the top eigenvalue of c."""
    rng = np.random.default_rng(7)
    for n in (2, 4, 6):
        c = rng.standard_normal((n, n))
        c = c + c.T
        res = sdp_solve(trace_problem(c), (np.eye(n) / n,), tol=1e-8)
        top = np.linalg.eigvalsh(c)[-1]
        assert abs(res.value - top) <= 1e-7
        assert res.gap <= 1e-7


def test_dual_certificate_bounds_primal():
    """The dual value is an upper bound on the primal within the certified gap."""
    rng = np.random.default_rng(11)
    c = rng.standard_normal((5, 5))
    c = c + c.T
    res = sdp_solve(trace_problem(c), (np.eye(5) / 5,), tol=1e-9)
    assert res.dual_value >= res.value - 1e-12
    assert res.dual_value - res.value <= res.gap + 1e-12
    assert res.dual_residual <= 1e-4


def test_ppt_constraint_only_tightens():
    """Adding the transpose cone can only reduce the optimal Bell value."""
    f = make_id(3)
    povms = povms_from_measurements(build_measurements(3, D3_OPT_MP))
    from pptbell.seesaw import bell_matrix

    g = bell_matrix(f, 3, povms)
    free = sdp_solve(trace_problem(g), (np.eye(9) / 9,), tol=1e-8)
    ppt_rho, ppt_value, _ = optimal_ppt_state(f, 3, povms, sdp_tol=1e-8)
    assert ppt_value <= free.value + 1e-7
    assert abs(free.value - np.linalg.eigvalsh(g)[-1]) <= 1e-6
    pt_eigs = np.linalg.eigvalsh(partial_transpose(ppt_rho, BipartiteShape(3, 3)))
    assert pt_eigs[0] >= -1e-8


def test_state_step_reaches_table_value():
    """At the optimal d=3 measurements the PPT state step lands on 0.000265264."""
    rho, value, _ = optimal_ppt_state(
        make_id(3), 3, povms_from_measurements(build_measurements(3, D3_OPT_MP)),
        sdp_tol=1e-9)
    assert abs(value - 0.000265264) <= 1e-7
    assert abs(np.trace(rho) - 1.0) <= 1e-9
    assert np.linalg.eigvalsh(rho)[0] >= -1e-9


def test_infeasible_starts_rejected():
    """Starts off the constraint plane or outside the cone interior raise."""
    c = np.diag([1.0, -1.0])
    prob = trace_problem(c)
    with pytest.raises(SdpInfeasibleError):
        sdp_solve(prob, (np.eye(2),), tol=1e-8)
    with pytest.raises(SdpInfeasibleError):
        sdp_solve(prob, (np.diag([1.0, 0.0]),), tol=1e-8)


def test_non_convergence_carries_iterate():
    """An unreachable tolerance raises but still hands back the best feasible iterate."""
    rng = np.random.default_rng(13)
    c = rng.standard_normal((4, 4))
    c = c + c.T
    with pytest.raises(SdpNonConvergedError) as info:
        sdp_solve(trace_problem(c), (np.eye(4) / 4,), tol=1e-16, max_rounds=3)
    res = info.value.result
    assert np.isfinite(res.value)
    assert abs(np.trace(res.blocks[0]) - 1.0) <= 1e-8
    assert np.linalg.eigvalsh(res.blocks[0])[0] >= -1e-12
