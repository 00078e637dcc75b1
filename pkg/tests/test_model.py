"""Tests for the state family chart, measurement frames, and constraints."""
from __future__ import annotations

import math

import numpy as np
import pytest

from pptbell.linalg import BipartiteShape, eigh, partial_transpose, rank_with_tol
from pptbell.model import (
    FreeStateParams,
    InfeasibleParams,
    MeasurementParams,
    StateParams,
    apply_gauge,
    assemble_density,
    build_measurements,
    chi_vector,
    params_from_dict,
    params_to_dict,
    phi_vectors,
    solve_constraints,
    theta_frame,
)


def random_mp(rng):
    """Draw a normalized set of direction cosines."""
    theta, phi, psi = rng.uniform(0.1, math.pi / 2 - 0.1, size=3)
    return MeasurementParams(
        x0=math.cos(theta),
        x1=math.sin(theta) * math.cos(phi),
        x2=math.sin(theta) * math.sin(phi),
        y0=math.cos(psi),
        y1=math.sin(psi),
    )


def random_sp(d, rng, scale=0.3):
    """Draw a generic constraint-satisfying parameter set."""
    return solve_constraints(d, FreeStateParams(*(scale * rng.standard_normal(11))))


def test_theta_frame_simplex():
    """The d-1 frame vectors form a unit simplex with pairwise overlap -1/(d-2)."""
    for d in range(3, 17):
        fr = theta_frame(d)
        expected = ((d - 1) * np.eye(d - 1) - np.ones((d - 1, d - 1))) / (d - 2)
        assert np.max(np.abs(fr.gram() - expected)) <= 1e-12


def test_theta_frame_completeness():
    """The frame resolves (d-1)/(d-2) times the projector on coordinates 2..d-1."""
    for d in range(3, 17):
        fr = theta_frame(d)
        proj = np.zeros((d, d))
        proj[2:, 2:] = np.eye(d - 2)
        resolved = fr.vectors.T @ fr.vectors
        assert np.max(np.abs(resolved - (d - 1) / (d - 2) * proj)) <= 1e-12


def test_chi_phi_orthonormal():
    """chi together with the phi vectors is an orthonormal set of size d-1."""
    for d in range(4, 11):
        fr = theta_frame(d)
        basis = np.array([chi_vector(d)] + phi_vectors(fr))
        assert basis.shape[0] == d - 1
        assert np.max(np.abs(basis @ basis.T - np.eye(d - 1))) <= 1e-11


def test_phi_span_identity():
    """Every doubled frame vector |theta_p, theta_p> lies in span{chi, phi_k}."""
    for d in range(4, 11):
        fr = theta_frame(d)
        basis = np.array([chi_vector(d)] + phi_vectors(fr))
        proj = basis.T @ basis
        for p in range(d - 1):
            v = np.kron(fr.vectors[p], fr.vectors[p])
            assert np.linalg.norm(v - proj @ v) <= 1e-11


def test_phi_needs_d_four():
    """The orthogonal phi complement is empty at d=3."""
    with pytest.raises(ValueError):
        phi_vectors(theta_frame(3))


def test_measurement_set_valid():
    """Generic measurement sets pass their own completeness/orthonormality check."""
    rng = np.random.default_rng(11)
    for d in (3, 4, 7):
        ms = build_measurements(d, random_mp(rng))
        ms.validate()
        gram = ms.bob0_vectors @ ms.bob0_vectors.T
        assert np.max(np.abs(gram - np.eye(d))) <= 1e-11


def test_bob_overlap_at_tilted_settings():
    """With y0^2 = (d-1)/d each d-outcome vector overlaps the binary one by 1/sqrt(d)."""
    rng = np.random.default_rng(3)
    for d in (3, 4, 6, 9):
        base = random_mp(rng)
        mp = MeasurementParams(
            x0=base.x0, x1=base.x1, x2=base.x2,
            y0=math.sqrt((d - 1) / d), y1=math.sqrt(1 / d),
        )
        ms = build_measurements(d, mp)
        overlaps = np.abs(ms.bob0_vectors @ ms.bob1_vector)
        assert np.max(np.abs(overlaps - 1 / math.sqrt(d))) <= 1e-12


def test_solved_charts_satisfy_constraints():
    """Random free blocks produce normalized parameter sets with tiny residuals."""
    rng = np.random.default_rng(5)
    for d in (3, 4, 5, 7, 10):
        for _ in range(40):
            sp = random_sp(d, rng)
            assert abs(sp.normalization(d) - 1.0) <= 1e-12
            assert max(abs(r) for r in sp.constraint_residuals(d)) <= 1e-11


def test_density_is_ppt_and_isospectral():
    """Chart states are unit-trace, positive, and share their spectrum with the partial transpose."""
    rng = np.random.default_rng(8)
    for d in (3, 4, 6):
        sp = random_sp(d, rng)
        rho = assemble_density(d, sp)
        pt = partial_transpose(rho, BipartiteShape(d, d))
        assert abs(np.trace(rho) - 1.0) <= 1e-12
        assert np.max(np.abs(rho - rho.T)) <= 1e-13
        assert np.max(np.abs(pt - rho)) <= 1e-12
        ev_rho = eigh(rho).values
        ev_pt = eigh(pt).values
        assert ev_rho[-1] >= -1e-11
        assert ev_pt[-1] >= -1e-11
        assert np.max(np.abs(np.sort(ev_rho) - np.sort(ev_pt))) <= 1e-11


def test_generic_rank():
    """Generic chart states have rank 2d-2 (two singlet-like plus two (d-2)-fold blocks)."""
    rng = np.random.default_rng(13)
    for d in (3, 4, 5, 6):
        rho = assemble_density(d, random_sp(d, rng))
        assert rank_with_tol(rho, tol=1e-9) == 2 * d - 2


def test_broken_constraint_breaks_ppt():
    """Bumping one coefficient off the constraint surface shows up in the residuals and the transpose."""
    rng = np.random.default_rng(2)
    d = 5
    sp = random_sp(d, rng)
    bad = StateParams(**{**{k: getattr(sp, k) for k in (
        "a00", "a01", "a10", "a11", "A", "b00", "b01", "b10", "b11", "B",
        "u0", "u0p", "u1", "u1p", "U", "v0", "v0p", "v1", "v1p", "V")},
        "a00": sp.a00 + 1e-3})
    bad = bad.scaled(1.0 / math.sqrt(bad.normalization(d)))
    assert max(abs(r) for r in bad.constraint_residuals(d)) > 1e-5
    pt = partial_transpose(assemble_density(d, bad), BipartiteShape(d, d))
    ev_rho = eigh(assemble_density(d, bad)).values
    ev_pt = eigh(pt).values
    assert np.max(np.abs(np.sort(ev_rho) - np.sort(ev_pt))) > 1e-6


def test_gauge_rotation_preserves_state():
    """Orthogonally mixing the S pair and the D pair leaves the density matrix fixed."""
    rng = np.random.default_rng(21)
    d = 4
    sp = random_sp(d, rng)
    rho = assemble_density(d, sp)
    for _ in range(5):
        a, b = rng.uniform(0, 2 * math.pi, size=2)
        o_s = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
        o_d = np.array([[math.cos(b), -math.sin(b)], [math.sin(b), math.cos(b)]])
        rotated = apply_gauge(sp, o_s, o_d)
        assert np.max(np.abs(assemble_density(d, rotated) - rho)) <= 1e-12
        assert max(abs(r) for r in rotated.constraint_residuals(d)) <= 1e-11


def test_gauge_rejects_non_orthogonal():
    """apply_gauge refuses mixing matrices that are not orthogonal."""
    sp = StateParams(a00=1.0)
    with pytest.raises(ValueError):
        apply_gauge(sp, np.array([[1.0, 0.1], [0.0, 1.0]]), np.eye(2))


def test_params_dict_roundtrip():
    """Serializing parameters to a flat dict and back is exact."""
    rng = np.random.default_rng(17)
    d = 6
    sp = random_sp(d, rng)
    mp = random_mp(rng)
    d2, sp2, mp2 = params_from_dict(params_to_dict(d, sp, mp))
    assert d2 == d
    assert sp2 == sp
    assert mp2 == mp


def test_split_override_keeps_product():
    """A split template changes the b01/b10 ratio but never their constrained product."""
    rng = np.random.default_rng(4)
    d = 4
    free = FreeStateParams(*(0.3 * rng.standard_normal(11)))
    even = solve_constraints(d, free, normalize=False)
    skew = solve_constraints(d, free, normalize=False, split_like=(-0.3, 0.1))
    assert abs(even.b01 * even.b10 - skew.b01 * skew.b10) <= 1e-14
    assert skew.b01 < 0.0
    assert abs(abs(skew.b01) / abs(skew.b10) - 3.0) <= 1e-12
    assert even.b01 >= 0.0


def test_infeasible_free_blocks():
    """Vanishing A with active bilinear terms, or an all-zero block, is rejected."""
    with pytest.raises(InfeasibleParams):
        solve_constraints(5, FreeStateParams(u0=0.5, u0p=0.5, U=0.0))
    with pytest.raises(InfeasibleParams):
        solve_constraints(5, FreeStateParams())
    with pytest.raises(ValueError):
        solve_constraints(2, FreeStateParams(U=0.1))


def test_d3_u_slot_carries_a():
    """At d=3 the U slot of the free block sets A directly and U itself stays zero."""
    free = FreeStateParams(u0=0.2, u0p=-0.1, v1=0.3, v1p=0.2, U=-0.4, b00=0.1, b11=0.2)
    sp = solve_constraints(3, free, normalize=False)
    assert sp.A == pytest.approx(0.4)
    assert sp.U == 0.0
    assert sp.V == 0.0
    assert max(abs(r) for r in sp.constraint_residuals(3)) <= 1e-12
