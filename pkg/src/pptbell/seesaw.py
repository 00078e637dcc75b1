"""Alternating maximization of a Bell functional over PPT states and measurements.

For functionals with binary Alice outcomes the value is linear in the state,
in each Alice effect, and in each Bob setting's effects separately, so
coordinate ascent alternates exact substeps: a semidefinite program over
unit-trace states constrained to stay positive under partial transposition,
closed-form positive-eigenspace updates for Alice effects and binary Bob
settings, and a small block SDP for many-outcome Bob settings.  A substep is
accepted only when the exactly recomputed value improves, which keeps the
reported trajectory monotone even when a solver returns at reduced accuracy.

Plain alternation crawls along a narrow ridge here (the violation scale is
1e-4), so each cycle ends with a secant extrapolation: the full iterate is
pushed along its last displacement by a ladder of step factors, projected back
onto the feasible set, and kept only if the exactly recomputed value improves.
Restarts alternate between Haar-random measurement starts and starts drawn
from the frame-aligned measurement family at random direction cosines; the
latter give the ascent a geometry from which the violating region is
reachable, while the former keep the search honest about other basins.

The module can also fit the constraint-chart parameters (state coefficients
plus measurement direction cosines) to a converged run: it peels the frame
vectors out of the measurement projectors, rotates the state into canonical
coordinates, reads the free block off the two rank-two sector Grams, and
re-solves the invariance constraints exactly from that block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic import quantum_value_analytic
from .bell import BellFunctional, make_id
from .linalg import BipartiteShape, eigh, kron, partial_transpose, positive_eigenspace_projector
from .model import (
    FreeStateParams,
    MeasurementParams,
    MeasurementSet,
    StateParams,
    assemble_density,
    build_measurements,
    chi_vector,
    phi_vectors,
    solve_constraints,
    theta_frame,
)
from .sdp import PsdBlock, SdpInfeasibleError, SdpNonConvergedError, SdpProblem, sdp_solve

__all__ = [
    "SeesawConfig",
    "PovmSet",
    "SeesawState",
    "SeesawResult",
    "ChartFit",
    "random_povms",
    "frame_aligned_povms",
    "povms_from_measurements",
    "bell_matrix",
    "optimal_ppt_state",
    "seesaw_once",
    "seesaw",
    "restricted_dimension_search",
    "self_consistency_residual",
    "extract_chart",
]

# Eigenvalues this close to zero are excluded from positive-eigenspace
# projectors, so near-degenerate effective operators update deterministically.
EIGEN_TIE_TOL = 1e-10


@dataclass(frozen=True)
class SeesawConfig:
    """Knobs for the alternating optimization.

    A run stops once the per-cycle improvement stays below
    ``rel_tol * max(1, |value|)`` for ``stall_cycles`` consecutive cycles, or
    at ``max_cycles``.  ``sdp_tol`` is the certified-gap target handed to the
    inner solver; sub-steps falling short of it are still usable because their
    iterates are feasible, they just get flagged.
    """

    restarts: int = 20
    max_cycles: int = 2000
    rel_tol: float = 1e-10
    stall_cycles: int = 2
    sdp_tol: float = 1e-8
    seed: int = 0


@dataclass(frozen=True)
class PovmSet:
    """Measurement effects: one outcome-0 effect per Alice setting, full
    effect tuples per Bob setting."""

    alice: tuple[np.ndarray, ...]
    bob: tuple[tuple[np.ndarray, ...], ...]

    def validate(self, tol: float = 1e-8) -> None:
        for x, eff in enumerate(self.alice):
            spec = eigh(0.5 * (eff + eff.T))
            if spec.values[-1] < -tol or spec.values[0] > 1.0 + tol:
                raise ValueError(f"alice effect {x} is not between 0 and the identity")
        for y, effects in enumerate(self.bob):
            dim = effects[0].shape[0]
            total = np.zeros((dim, dim))
            for b, eff in enumerate(effects):
                spec = eigh(0.5 * (eff + eff.T))
                if spec.values[-1] < -tol:
                    raise ValueError(f"bob effect {b} of setting {y} is not positive")
                total += eff
            if np.max(np.abs(total - np.eye(dim))) > tol:
                raise ValueError(f"bob setting {y} effects do not sum to the identity")


@dataclass
class SeesawState:
    """One run's outcome: the state, the measurements, and the trajectory."""

    dim: int
    rho: np.ndarray
    povms: PovmSet
    value: float
    cycles: int
    history: tuple[float, ...]
    converged: bool
    dips: int
    sdp_flagged: bool


@dataclass
class SeesawResult:
    """Best run over all restarts, with the per-restart final values."""

    d_ineq: int
    d_state: int
    best: SeesawState
    restart_values: tuple[float, ...]
    restart_converged: tuple[bool, ...]

    @property
    def value(self) -> float:
        return self.best.value

    @property
    def any_converged(self) -> bool:
        return any(self.restart_converged)


# ---------------------------------------------------------------------------
# Coefficient tables and effective operators


def _coefficient_tables(f: BellFunctional) -> tuple[list[list[np.ndarray]], list[np.ndarray]]:
    """Weights on A_{0|x} (x) B_{b|y} and on I (x) B_{b|y} after eliminating
    Alice's outcome-1 effects via A_{1|x} = I - A_{0|x}."""
    sc = f.scenario
    if any(n != 2 for n in sc.alice_outcomes):
        raise ValueError("the seesaw needs binary Alice settings")
    wa = [[np.zeros(k) for k in sc.bob_outcomes] for _ in sc.alice_outcomes]
    wc = [np.zeros(k) for k in sc.bob_outcomes]
    for (x, y, a, b), w in f.coeffs.items():
        if a == 0:
            wa[x][y][b] += w
        else:
            wa[x][y][b] -= w
            wc[y][b] += w
    return wa, wc


def _bob_side(tables, povms: PovmSet) -> tuple[list[np.ndarray], np.ndarray]:
    """Bob-side operators W_x (paired with A_{0|x}) and W_const (paired with I)."""
    wa, wc = tables
    stacks = [np.stack(effects) for effects in povms.bob]
    w_alice = []
    for weights in wa:
        w = sum(np.tensordot(weights[y], stacks[y], axes=1) for y in range(len(stacks)))
        w_alice.append(w)
    w_const = sum(np.tensordot(wc[y], stacks[y], axes=1) for y in range(len(stacks)))
    return w_alice, w_const


def _eff_alice(rho4: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Alice-side matrix m with trace(m a) = trace(rho (a (x) w))."""
    m = np.einsum("abce,eb->ac", rho4, w)
    return 0.5 * (m + m.T)


def _eff_bob(rho4: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Bob-side matrix m with trace(m b) = trace(rho (n (x) b))."""
    m = np.einsum("abce,ca->be", rho4, n)
    return 0.5 * (m + m.T)


def _value(tables, rho4: np.ndarray, povms: PovmSet) -> float:
    w_alice, w_const = _bob_side(tables, povms)
    total = 0.0
    for a_eff, w in zip(povms.alice, w_alice):
        total += float(np.sum(_eff_alice(rho4, w) * a_eff))
    rho_b = np.einsum("abae->be", rho4)
    total += float(np.sum(rho_b * w_const))
    return total


def bell_matrix(f: BellFunctional, dim: int, povms: PovmSet) -> np.ndarray:
    """The operator whose expectation under the state equals the functional
    value at the given measurements."""
    tables = _coefficient_tables(f)
    w_alice, w_const = _bob_side(tables, povms)
    g = kron(np.eye(dim), w_const)
    for a_eff, w in zip(povms.alice, w_alice):
        g += kron(a_eff, w)
    return 0.5 * (g + g.T)


# ---------------------------------------------------------------------------
# Substeps


def _state_problem(dim: int, g: np.ndarray) -> SdpProblem:
    n = dim * dim
    return SdpProblem(
        block_dims=(n,),
        objective=(g,),
        psd=(PsdBlock(0), PsdBlock(0, pt_shape=BipartiteShape(dim, dim))),
        eq_rows=({0: np.eye(n)},),
        eq_rhs=(1.0,),
    )


def optimal_ppt_state(f: BellFunctional, dim: int, povms: PovmSet,
                      sdp_tol: float = 1e-9) -> tuple[np.ndarray, float, bool]:
    """Best PPT state for fixed measurements; returns (state, value, converged).

    The value is recomputed exactly from the returned feasible iterate, so it
    is a valid lower bound on the optimum even when the solver flag is False.
    """
    g = bell_matrix(f, dim, povms)
    n = dim * dim
    try:
        res = sdp_solve(_state_problem(dim, g), (np.eye(n) / n,), tol=sdp_tol)
        ok = True
    except SdpNonConvergedError as err:
        res = err.result
        ok = False
    rho = 0.5 * (res.blocks[0] + res.blocks[0].T)
    value = float(np.sum(rho * g))
    return rho, value, ok


def _povm_problem(dim: int, objectives: tuple[np.ndarray, ...]) -> SdpProblem:
    k = len(objectives)
    rows = []
    rhs = []
    for p in range(dim):
        for q in range(p, dim):
            coeff = np.zeros((dim, dim))
            coeff[p, q] = coeff[q, p] = 0.5 if p != q else 1.0
            rows.append({j: coeff for j in range(k)})
            rhs.append(1.0 if p == q else 0.0)
    return SdpProblem(
        block_dims=(dim,) * k,
        objective=objectives,
        psd=tuple(PsdBlock(j) for j in range(k)),
        eq_rows=tuple(rows),
        eq_rhs=tuple(rhs),
    )


def _bob_setting_candidate(tables, rho4: np.ndarray, povms: PovmSet, dim: int,
                           setting: int, sdp_tol: float) -> tuple[tuple[np.ndarray, ...], bool]:
    """Best effects for one Bob setting, others fixed; returns (effects, solver_ok)."""
    wa, wc = tables
    k = wa[0][setting].size
    eye = np.eye(dim)
    effectives = []
    for b in range(k):
        op = wc[setting][b] * eye
        for x, a_eff in enumerate(povms.alice):
            op = op + wa[x][setting][b] * a_eff
        effectives.append(_eff_bob(rho4, op))
    if k == 2:
        head = positive_eigenspace_projector(effectives[0] - effectives[1], EIGEN_TIE_TOL)
        return (head, eye - head), True
    start = tuple(eye / k for _ in range(k))
    try:
        res = sdp_solve(_povm_problem(dim, tuple(effectives)), start, tol=sdp_tol)
        ok = True
    except SdpNonConvergedError as err:
        res = err.result
        ok = False
    effects = tuple(0.5 * (blk + blk.T) for blk in res.blocks)
    return effects, ok


# ---------------------------------------------------------------------------
# The alternating loop


def _random_unit(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.normal(size=n)
    return v / np.linalg.norm(v)


def random_povms(f: BellFunctional, dim: int, rng: np.random.Generator) -> PovmSet:
    """Random projective start: rank-one Alice effects, Bob effects built by
    distributing a random orthonormal basis over the outcomes."""
    sc = f.scenario
    alice = []
    for _ in sc.alice_outcomes:
        v = _random_unit(rng, dim)
        alice.append(np.outer(v, v))
    bob = []
    for k in sc.bob_outcomes:
        basis, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
        effects = [np.zeros((dim, dim)) for _ in range(k)]
        for j in range(dim):
            v = basis[:, j]
            effects[j % k] += np.outer(v, v)
        bob.append(tuple(effects))
    return PovmSet(alice=tuple(alice), bob=tuple(bob))


def frame_aligned_povms(d: int, rng: np.random.Generator) -> PovmSet:
    """Projective start from the frame-aligned measurement family at random
    direction cosines; the state is left to the first state step."""
    x = _random_unit(rng, 3)
    y = _random_unit(rng, 2)
    mp = MeasurementParams(x0=x[0], x1=x[1], x2=x[2], y0=y[0], y1=y[1])
    return povms_from_measurements(build_measurements(d, mp))


def povms_from_measurements(ms: MeasurementSet) -> PovmSet:
    """Projector effects of a rank-one measurement set."""
    alice = tuple(ms.alice_projector(x, 0) for x in range(ms.d))
    bob0 = tuple(ms.bob_projector(0, j) for j in range(ms.d))
    bob1 = (ms.bob_projector(1, 0), ms.bob_projector(1, 1))
    return PovmSet(alice=alice, bob=(bob0, bob1))


# ---------------------------------------------------------------------------
# Feasibility projections for the extrapolation candidates


def _project_state(m: np.ndarray, dim: int) -> np.ndarray:
    """Nearest-ish unit-trace state that is PSD together with its partial
    transpose: alternate eigenvalue clipping, then shift by the identity to
    absorb any leftover negativity (the identity is its own partial
    transpose, so the shift fixes both cones at once)."""
    shape = BipartiteShape(dim, dim)
    s = 0.5 * (m + m.T)
    for _ in range(3):
        vals, vecs = np.linalg.eigh(s)
        if vals[0] < 0.0:
            s = (vecs * np.clip(vals, 0.0, None)) @ vecs.T
        pt = partial_transpose(s, shape)
        vals, vecs = np.linalg.eigh(pt)
        if vals[0] < 0.0:
            pt = (vecs * np.clip(vals, 0.0, None)) @ vecs.T
            s = partial_transpose(pt, shape)
        s = 0.5 * (s + s.T)
    worst = min(
        float(np.linalg.eigvalsh(s)[0]),
        float(np.linalg.eigvalsh(partial_transpose(s, shape))[0]),
    )
    if worst < 0.0:
        s = s - 1.0000001 * worst * np.eye(dim * dim)
    return s / np.trace(s)


def _project_projector(m: np.ndarray) -> np.ndarray:
    """Round a symmetric matrix to the projector onto its >1/2 eigenspace."""
    vals, vecs = np.linalg.eigh(0.5 * (m + m.T))
    cols = vecs[:, vals > 0.5]
    return cols @ cols.T


def _project_povm(effects: list[np.ndarray]) -> tuple[np.ndarray, ...]:
    """Clip each effect to the PSD cone, then renormalize the family by the
    symmetric inverse square root of its sum so it resolves the identity."""
    cleaned = []
    for e in effects:
        vals, vecs = np.linalg.eigh(0.5 * (e + e.T))
        cleaned.append((vecs * np.clip(vals, 0.0, None)) @ vecs.T)
    total = sum(cleaned)
    vals, vecs = np.linalg.eigh(total)
    inv_half = (vecs * (1.0 / np.sqrt(np.clip(vals, 1e-12, None)))) @ vecs.T
    return tuple(0.5 * (inv_half @ e @ inv_half + (inv_half @ e @ inv_half).T) for e in cleaned)


def _extrapolated(prev_rho: np.ndarray, prev_povms: PovmSet, rho: np.ndarray,
                  povms: PovmSet, kappa: float, dim: int) -> tuple[np.ndarray, PovmSet]:
    """Push the state and the many-outcome Bob effects along their last
    displacement and project back; the closed-form effects are left to the
    re-equilibration sweeps that follow."""
    rho_c = _project_state(rho + kappa * (rho - prev_rho), dim)
    bob = []
    for effects, prev_effects in zip(povms.bob, prev_povms.bob):
        if len(effects) == 2:
            bob.append(effects)
            continue
        moved = [e + kappa * (e - ep) for e, ep in zip(effects, prev_effects)]
        bob.append(_project_povm(moved))
    return rho_c, PovmSet(alice=povms.alice, bob=tuple(bob))


# ---------------------------------------------------------------------------
# The alternating loop

EXTRAPOLATION_FACTORS = (64.0, 32.0, 16.0, 8.0, 4.0, 2.0)


def _equilibrate_closed(tables, sc, rho4: np.ndarray, povms: PovmSet, value: float,
                        dim: int, sweeps: int) -> tuple[PovmSet, float]:
    """Sweep the closed-form updates (Alice, binary Bob) against a fixed
    state until they stop improving; returns the possibly improved pair."""
    n_bob = len(sc.bob_outcomes)
    for _ in range(sweeps):
        before = value
        w_alice, _ = _bob_side(tables, povms)
        new_alice = tuple(
            positive_eigenspace_projector(_eff_alice(rho4, w), EIGEN_TIE_TOL)
            for w in w_alice
        )
        cand = PovmSet(alice=new_alice, bob=povms.bob)
        cand_value = _value(tables, rho4, cand)
        if cand_value > value:
            povms, value = cand, cand_value
        for y, count in enumerate(sc.bob_outcomes):
            if count != 2:
                continue
            effects, _ = _bob_setting_candidate(tables, rho4, povms, dim, y, 0.0)
            new_bob = tuple(effects if yy == y else povms.bob[yy] for yy in range(n_bob))
            cand = PovmSet(alice=povms.alice, bob=new_bob)
            cand_value = _value(tables, rho4, cand)
            if cand_value > value:
                povms, value = cand, cand_value
        if value - before <= 1e-14 * max(1.0, abs(value)):
            break
    return povms, value


def seesaw_once(f: BellFunctional, dim: int, cfg: SeesawConfig,
                rng: np.random.Generator,
                start_povms: PovmSet | None = None) -> SeesawState:
    """One alternating run; measurements start at ``start_povms`` or at a
    Haar-random draw."""
    sc = f.scenario
    n_bob = len(sc.bob_outcomes)
    tables = _coefficient_tables(f)
    povms = start_povms if start_povms is not None else random_povms(f, dim, rng)
    n = dim * dim
    rho = np.eye(n) / n
    rho4 = rho.reshape(dim, dim, dim, dim)
    value = _value(tables, rho4, povms)
    history: list[float] = []
    dips = 0
    flagged = False
    converged = False
    aborted = False
    stall = 0
    cycles = 0
    drop_slack = 1e-13

    for cycles in range(1, cfg.max_cycles + 1):
        start_value = value
        prev_rho, prev_povms = rho, povms

        g = bell_matrix(f, dim, povms)
        try:
            res = sdp_solve(_state_problem(dim, g), (np.eye(n) / n,), tol=cfg.sdp_tol)
        except SdpNonConvergedError as err:
            res = err.result
            flagged = True
        except SdpInfeasibleError:
            aborted = True
            break
        cand = 0.5 * (res.blocks[0] + res.blocks[0].T)
        cand4 = cand.reshape(dim, dim, dim, dim)
        cand_value = _value(tables, cand4, povms)
        if cand_value > value:
            rho, rho4, value = cand, cand4, cand_value
        elif cand_value < value - drop_slack * max(1.0, abs(value)):
            dips += 1

        # One plain pass over the measurement substeps: Alice's closed form,
        # then each Bob setting (SDP for many outcomes, closed form for two).
        w_alice, _ = _bob_side(tables, povms)
        new_alice = tuple(
            positive_eigenspace_projector(_eff_alice(rho4, w), EIGEN_TIE_TOL)
            for w in w_alice
        )
        cand_povms = PovmSet(alice=new_alice, bob=povms.bob)
        cand_value = _value(tables, rho4, cand_povms)
        if cand_value > value:
            povms, value = cand_povms, cand_value
        elif cand_value < value - drop_slack * max(1.0, abs(value)):
            dips += 1
        for y in range(n_bob):
            effects, ok = _bob_setting_candidate(tables, rho4, povms, dim, y, cfg.sdp_tol)
            if not ok:
                flagged = True
            new_bob = tuple(effects if yy == y else povms.bob[yy] for yy in range(n_bob))
            cand_povms = PovmSet(alice=povms.alice, bob=new_bob)
            cand_value = _value(tables, rho4, cand_povms)
            if cand_value > value:
                povms, value = cand_povms, cand_value
            elif cand_value < value - drop_slack * max(1.0, abs(value)):
                dips += 1

        # Once the run has settled into a basin, polish the closed forms to
        # their mutual fixed point and try secant jumps: push the state and
        # the many-outcome effects along the cycle's displacement,
        # re-equilibrate the closed-form effects, keep the best improvement.
        if cycles > 3:
            povms, value = _equilibrate_closed(tables, sc, rho4, povms, value, dim, sweeps=30)
            best_cand = None
            for kappa in EXTRAPOLATION_FACTORS:
                rho_c, povms_c = _extrapolated(prev_rho, prev_povms, rho, povms, kappa, dim)
                rho4_c = rho_c.reshape(dim, dim, dim, dim)
                cand_value = _value(tables, rho4_c, povms_c)
                povms_c, cand_value = _equilibrate_closed(
                    tables, sc, rho4_c, povms_c, cand_value, dim, sweeps=4)
                if cand_value > value and (best_cand is None or cand_value > best_cand[0]):
                    best_cand = (cand_value, rho_c, povms_c)
            if best_cand is not None:
                value, rho, povms = best_cand
                rho4 = rho.reshape(dim, dim, dim, dim)

        history.append(value)
        if value - start_value <= cfg.rel_tol * max(1.0, abs(value)):
            stall += 1
            if stall >= cfg.stall_cycles:
                converged = True
                break
        else:
            stall = 0

    if aborted:
        converged = False
    return SeesawState(
        dim=dim,
        rho=rho,
        povms=povms,
        value=value,
        cycles=cycles,
        history=tuple(history),
        converged=converged,
        dips=dips,
        sdp_flagged=flagged,
    )


def _search(f: BellFunctional, dim: int, d_ineq: int, cfg: SeesawConfig) -> SeesawResult:
    best: SeesawState | None = None
    finals = []
    flags = []
    for restart in range(cfg.restarts):
        rng = np.random.default_rng((cfg.seed, d_ineq, dim, restart))
        start = None
        if restart % 2 == 1 and dim == d_ineq:
            start = frame_aligned_povms(dim, rng)
        state = seesaw_once(f, dim, cfg, rng, start_povms=start)
        finals.append(state.value)
        flags.append(state.converged)
        if best is None or state.value > best.value:
            best = state
    assert best is not None
    return SeesawResult(d_ineq=d_ineq, d_state=dim, best=best,
                        restart_values=tuple(finals), restart_converged=tuple(flags))


def seesaw(d: int, cfg: SeesawConfig | None = None) -> SeesawResult:
    """Best-of-restarts alternating optimization of the d-setting functional
    with local dimension d."""
    cfg = cfg or SeesawConfig()
    return _search(make_id(d), d, d, cfg)


def restricted_dimension_search(d_ineq: int, d_state: int,
                                cfg: SeesawConfig | None = None) -> SeesawResult:
    """The same loop with the functional for d_ineq settings but operators of
    local dimension d_state ≤ d_ineq; probes how much room a smaller
    dimension has (none is expected below d_ineq)."""
    if d_state > d_ineq:
        raise ValueError("restricted search expects d_state <= d_ineq")
    cfg = cfg or SeesawConfig()
    return _search(make_id(d_ineq), d_state, d_ineq, cfg)


def self_consistency_residual(f: BellFunctional, state: SeesawState) -> float:
    """Largest deviation of any eigen-updated effect from the positive
    eigenspace of its own effective operator; small at a fixed point."""
    tables = _coefficient_tables(f)
    rho4 = state.rho.reshape(state.dim, state.dim, state.dim, state.dim)
    w_alice, _ = _bob_side(tables, state.povms)
    worst = 0.0
    for a_eff, w in zip(state.povms.alice, w_alice):
        proj = positive_eigenspace_projector(_eff_alice(rho4, w), EIGEN_TIE_TOL)
        worst = max(worst, float(np.max(np.abs(a_eff - proj))))
    wa, wc = tables
    eye = np.eye(state.dim)
    for y, effects in enumerate(state.povms.bob):
        if len(effects) != 2:
            continue
        op = (wc[y][0] - wc[y][1]) * eye
        for x, a_eff in enumerate(state.povms.alice):
            op = op + (wa[x][y][0] - wa[x][y][1]) * a_eff
        proj = positive_eigenspace_projector(_eff_bob(rho4, op), EIGEN_TIE_TOL)
        worst = max(worst, float(np.max(np.abs(effects[0] - proj))))
    return worst


# ---------------------------------------------------------------------------
# Chart extraction


@dataclass
class ChartFit:
    """Chart parameters fitted to a seesaw run, with fit-quality diagnostics.

    ``value`` is the analytic value at the fitted parameters; comparing it to
    the run's own value (``diagnostics['value_gap']``) measures how exactly
    the run sits on the chart.
    """

    d: int
    state_params: StateParams
    meas_params: MeasurementParams
    value: float
    diagnostics: dict[str, float]


def _top_vector(mat: np.ndarray) -> np.ndarray:
    spec = eigh(0.5 * (mat + mat.T))
    return spec.vectors[:, 0]


def _complete_direction(rows: np.ndarray) -> np.ndarray:
    """Unit vector orthogonal to all rows (least-dominant right singular
    direction); used when the mean direction degenerates."""
    _, _, vt = np.linalg.svd(rows)
    return vt[-1]


def _peel_frame(vectors: np.ndarray, anchor: np.ndarray, scale: float) -> tuple[float, float, np.ndarray, np.ndarray]:
    """Split vectors v_p ~ c0*anchor + c1*e + s*t_p with sum_p t_p = 0.

    Returns (c0, c1, e, residual rows).  ``scale`` multiplies the vectors
    first (Bob's frame rows carry a sqrt(d-1) factor).
    """
    rows = scale * vectors
    c0 = float(np.mean(rows @ anchor))
    mean = rows.mean(axis=0) - c0 * anchor
    c1 = float(np.linalg.norm(mean))
    if c1 > 1e-8:
        e = mean / c1
    else:
        residuals = rows - c0 * anchor[None, :]
        e = _complete_direction(np.vstack([anchor[None, :], residuals]))
        c1 = float(np.mean(residuals @ e))
    res = rows - c0 * anchor[None, :] - c1 * e[None, :]
    return c0, c1, e, res


def _frame_rotation(d: int, anchor: np.ndarray, e: np.ndarray, thetas: np.ndarray,
                    frame_rows: np.ndarray) -> tuple[np.ndarray, float]:
    """Orthogonal map taking canonical coordinates to the extracted frame.

    Columns 2.. are the least-squares fit of the extracted theta directions
    against the canonical ones; the polar factor cleans residual drift and
    its singular-value spread is returned as a quality measure.
    """
    u = np.zeros((d, d))
    u[:, 0] = anchor
    u[:, 1] = e
    u[:, 2:] = ((d - 2) / (d - 1)) * thetas.T @ frame_rows[:, 2:]
    left, sing, right = np.linalg.svd(u)
    return left @ right, float(np.max(np.abs(sing - 1.0)))


def _rank_two_split(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Factor a 5x5 Gram into two vectors, rotated so the second one has no
    component in the last slot; returns (w0, w1, leak beyond rank two)."""
    spec = eigh(0.5 * (mat + mat.T))
    leak = float(max(np.max(np.abs(spec.values[2:]), initial=0.0), -min(spec.values[0], 0.0)))
    lam = np.clip(spec.values[:2], 0.0, None)
    f = spec.vectors[:, :2] * np.sqrt(lam)[None, :]
    g = f[4, :]
    norm = float(np.hypot(g[0], g[1]))
    if norm > 1e-14:
        rot = np.array([[g[0], -g[1]], [g[1], g[0]]]) / norm
        f = f @ rot
    return f[:, 0], f[:, 1], leak


def _fix_sign(w: np.ndarray) -> np.ndarray:
    lead = int(np.argmax(np.abs(w)))
    return -w if w[lead] < 0 else w


def extract_chart(state: SeesawState, d: int) -> ChartFit:
    """Fit chart parameters to a converged run with matching dimensions.

    The free block and the b01/b10 split are read off the rotated state, then
    the constraints are re-solved exactly, so the returned parameters satisfy
    them to machine precision; all approximation error shows up in the
    diagnostics instead.
    """
    if state.dim != d:
        raise ValueError("chart extraction needs the operator dimension to equal d")
    if len(state.povms.alice) != d or len(state.povms.bob[0]) != d:
        raise ValueError("chart extraction needs the d-setting functional's scenario")
    frame = theta_frame(d)
    diags: dict[str, float] = {}

    a0 = _top_vector(state.povms.alice[0])
    alice_rows = []
    for p in range(1, d):
        v = _top_vector(state.povms.alice[p])
        if v @ a0 < 0:
            v = -v
        alice_rows.append(v)
    x0, x1, one_a, res_a = _peel_frame(np.array(alice_rows), a0, 1.0)
    x2 = float(np.mean(np.linalg.norm(res_a, axis=1)))
    diags["alice_theta_spread"] = float(np.max(np.abs(np.linalg.norm(res_a, axis=1) - x2)))
    thetas_a = res_a / x2 if x2 > 1e-12 else res_a

    b0 = _top_vector(state.povms.bob[1][0])
    bob_rows = []
    for q in range(1, d):
        v = _top_vector(state.povms.bob[0][q])
        if v @ b0 < 0:
            v = -v
        bob_rows.append(v)
    y0, y1, one_b, res_b = _peel_frame(np.array(bob_rows), b0, math.sqrt(d - 1))
    scale_b = math.sqrt(d - 2)
    norms_b = np.linalg.norm(res_b, axis=1)
    diags["bob_theta_spread"] = float(np.max(np.abs(norms_b - scale_b)))
    thetas_b = res_b / scale_b

    u_a, drift_a = _frame_rotation(d, a0, one_a, thetas_a, frame.vectors)
    u_b, drift_b = _frame_rotation(d, b0, one_b, thetas_b, frame.vectors)
    diags["alice_frame_drift"] = drift_a
    diags["bob_frame_drift"] = drift_b

    w = kron(u_a, u_b)
    rho_c = w.T @ state.rho @ w

    def sector_columns(cols: list[int], tail: np.ndarray | None) -> np.ndarray:
        e = np.zeros((d * d, 5))
        for i, c in enumerate(cols):
            e[c, i] = 1.0
        if tail is not None:
            e[:, 4] = tail
        return e

    e_s = sector_columns([0, 1, d, d + 1], chi_vector(d))
    m_s = e_s.T @ rho_c @ e_s
    phis = phi_vectors(frame) if d >= 4 else None
    m_d = np.zeros((5, 5))
    for k in range(2, d):
        tail = phis[k - 2] if phis is not None else None
        e_k = sector_columns([k, k * d, d + k, k * d + 1], tail)
        m_d += e_k.T @ rho_c @ e_k
    m_d /= d - 2

    w0_s, w1_s, leak_s = _rank_two_split(m_s)
    w0_d, w1_d, leak_d = _rank_two_split(m_d)
    diags["s_sector_leak"] = leak_s
    diags["d_sector_leak"] = leak_d
    trace_captured = float(np.trace(m_s) + (d - 2) * np.trace(m_d))
    diags["sector_trace_deficit"] = abs(1.0 - trace_captured)

    if w0_s[4] < 1e-10:
        w0_s = _fix_sign(w0_s)
    w1_s = _fix_sign(w1_s)
    if w0_d[4] < 1e-10:
        w0_d = _fix_sign(w0_d)
    w1_d = _fix_sign(w1_d)

    big = float(w0_d[4]) if d >= 4 else float(w0_s[4])
    free = FreeStateParams(
        u0=float(w0_d[0]), u0p=float(w0_d[1]), u1=float(w0_d[2]), u1p=float(w0_d[3]),
        U=big,
        v0=float(w1_d[0]), v0p=float(w1_d[1]), v1=float(w1_d[2]), v1p=float(w1_d[3]),
        b00=float(w1_s[0]), b11=float(w1_s[3]),
    )
    sp = solve_constraints(d, free, normalize=True,
                           split_like=(float(w1_s[1]), float(w1_s[2])))

    nx = math.hypot(x0, math.hypot(x1, x2))
    ny = math.hypot(y0, y1)
    mp = MeasurementParams(x0=x0 / nx, x1=x1 / nx, x2=x2 / nx, y0=y0 / ny, y1=y1 / ny)
    diags["x_norm_drift"] = abs(nx - 1.0)
    diags["y_norm_drift"] = abs(ny - 1.0)

    rho_fit = assemble_density(d, sp, frame)
    diags["state_residual"] = float(np.max(np.abs(rho_c - rho_fit)))
    value_fit = quantum_value_analytic(d, sp, mp).total
    diags["value_gap"] = abs(value_fit - state.value)
    return ChartFit(d=d, state_params=sp, meas_params=mp, value=value_fit, diagnostics=diags)
