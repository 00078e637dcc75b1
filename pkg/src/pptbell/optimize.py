"""Uphill-simplex search over the free parameter chart.

The chart has fourteen coordinates: two spherical angles for Alice's
direction cosines (x0, x1, x2), one circular angle for Bob's binary pair
(y0, y1), and the eleven free state coefficients.  The dependent state
coefficients come from ``solve_constraints``, so every objective
evaluation sits exactly on the constraint manifold and the closed-form
violation applies.  A Nelder-Mead climber (reflection 1, expansion 2,
contraction 0.5, shrink 0.5) does the local work, re-seeded at the
incumbent with a shrinking simplex until a round stops paying.  Baked
starting points cover d = 3..8; larger dimensions are reached by
annealing the nearest smaller optimum upward.  Curve drivers reuse the
previous dimension's optimum as a warm start, hedged with the
closed-form reduced solution where it violates, which keeps the
large-d scan cheap and monotone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analytic import (
    quantum_value_analytic,
    reduced_seed,
    reduced_solution,
    reduced_solution_value,
)
from .model import (
    FreeStateParams,
    InfeasibleParams,
    MeasurementParams,
    StateParams,
    params_to_dict,
    solve_constraints,
)

__all__ = [
    "INFEASIBLE_SENTINEL",
    "OptResult",
    "SimplexConfig",
    "SimplexError",
    "curve_point_asymptotic",
    "free_from_params",
    "maximize_violation",
    "nelder_mead",
    "parameterize_free",
    "violation_curve",
    "violation_objective",
]

INFEASIBLE_SENTINEL = -1e6

FREE_FIELD_NAMES = ("u0", "u0p", "u1", "u1p", "U", "v0", "v0p", "v1", "v1p", "b00", "b11")

# Interior points on the violating branch of the chart, one per small
# dimension, found by alternating optimization over states and
# measurements and polished in-chart afterwards.  They make the default
# search deterministic: restart 0 climbs from here, the rest perturb.
# Dimensions beyond the table are reached by annealing upward from the
# last entry (the branch moves smoothly with d).
SEED_POINTS: dict[int, tuple[float, ...]] = {
    3: (0.72073558080256, 2.5689553309164657, 0.6240616065330093,
        -0.011118171014218577, 0.0014942596841580548, -0.09048731991235398,
        0.19745721727534243, -0.11695128785224529, -0.11579999440040889,
        -0.002615434436440994, -0.14721051242113958, -0.02071379630352337,
        0.011300085757116619, 0.025316070246084288),
    4: (0.7983102388457064, 0.6360484707650442, 0.5486507358304109,
        0.006623127134195125, 0.0016081954631305254, 0.10699721196918684,
        0.4184162291301995, 0.21848705258704482, -0.2864798729916429,
        -0.003953933820789939, 0.34682887771185456, 0.007242095939083272,
        0.022569994251107357, -0.04722788003954252),
    5: (0.8411809138457909, 0.6698515031993135, 0.4989541390388868,
        0.00590346621711813, 0.0008391413192850689, 0.07986352628587903,
        0.39320251247805577, 0.2657433970459566, -0.30110571307290623,
        -0.003022353699004691, 0.3433654598320045, 0.006055468696533766,
        0.020236855705664684, -0.04084720530927265),
    6: (0.8698547242036243, 0.6914225614259693, 0.4631996869428928,
        0.005489905013274397, 0.0005238528792847641, 0.065870044896922,
        0.3868187603931328, 0.29864067967265145, -0.32147641931811194,
        -0.0024900413303259985, 0.35210511027792657, 0.005358620679054599,
        0.018983780146272666, -0.03740462939427555),
    7: (0.8908539769439698, 0.7067796999091689, 0.4357536637370306,
        0.004951049033164186, 0.0003441919836907077, 0.054440608381681896,
        0.3689330984344337, 0.31053288102515486, -0.32653145744026246,
        -0.0020338549607387406, 0.3471443248114421, 0.0046450061080174875,
        0.01728856308645786, -0.03346260154289861),
    8: (0.9071515261123306, 0.7184745217007187, 0.41374807318075774,
        0.004374872607080221, 0.00023395497629348044, 0.0450049923942509,
        0.34413573239031847, 0.3083884160353134, -0.32037159665782683,
        -0.001653421550928925, 0.3327476108404409, 0.003972210851063602,
        0.015433393260304469, -0.029457183784234422),
}


class SimplexError(RuntimeError):
    """Raised when every simplex attempt hit a non-finite objective."""


@dataclass(frozen=True)
class SimplexConfig:
    restarts: int = 20
    max_iters: int = 4000
    tol_f: float = 1e-14
    tol_x: float = 1e-9
    seed: int = 0
    init_scale: float = 0.05

    def __post_init__(self) -> None:
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.tol_f <= 0.0 or self.tol_x <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass(frozen=True)
class OptResult:
    """Best point of a simplex search plus convergence diagnostics.

    For violation searches the chart parameters are filled in; for the
    generic ``nelder_mead`` entry point they stay None and only the raw
    point is meaningful.
    """

    value: float
    point: tuple[float, ...]
    iters: int
    restarts_used: int
    converged: bool
    d: int | None = None
    state_params: StateParams | None = None
    meas_params: MeasurementParams | None = None

    def to_json_dict(self) -> dict:
        if self.d is None or self.state_params is None or self.meas_params is None:
            raise ValueError("result does not carry chart parameters")
        return {
            "d": self.d,
            "value": self.value,
            "params": params_to_dict(self.d, self.state_params, self.meas_params),
            "diagnostics": {
                "iters": self.iters,
                "restarts": self.restarts_used,
                "converged": self.converged,
            },
        }


def parameterize_free(d: int, free: np.ndarray) -> tuple[StateParams, MeasurementParams]:
    """Map a 14-vector to a valid (StateParams, MeasurementParams) pair.

    Coordinates 0..2 are angles: (theta, phi) give Alice's direction
    cosines on the unit sphere and psi gives Bob's binary pair on the
    unit circle, so the measurement normalization holds by construction.
    Coordinates 3..13 are the free state block in field order; the
    dependent coefficients follow from ``solve_constraints``.  An
    all-zero (or vanishingly small) state block falls back to the pure
    product state a00 = 1, which is normalized and trivially invariant
    under partial transposition.

    Raises InfeasibleParams for a genuinely infeasible block (A = 0
    while a bilinear right-hand side is nonzero).
    """
    vec = np.asarray(free, dtype=float)
    if vec.shape != (14,):
        raise ValueError(f"free vector must have 14 entries, got shape {vec.shape}")
    theta, phi, psi = vec[0], vec[1], vec[2]
    sin_theta = math.sin(theta)
    mp = MeasurementParams(
        x0=math.cos(theta),
        x1=sin_theta * math.cos(phi),
        x2=sin_theta * math.sin(phi),
        y0=math.cos(psi),
        y1=math.sin(psi),
    )
    block = vec[3:]
    try:
        sp = solve_constraints(d, FreeStateParams(*block), normalize=True)
    except InfeasibleParams:
        if np.max(np.abs(block)) < 1e-8:
            sp = StateParams(a00=1.0)
        else:
            raise
    return sp, mp


def free_from_params(sp: StateParams, mp: MeasurementParams, d: int) -> np.ndarray:
    """Invert ``parameterize_free`` up to the angular branch.

    Used to warm-start a search from a known chart point, for example
    the reduced closed-form solution or the previous dimension's
    optimum.  At d = 3 the U slot carries A, matching the convention of
    FreeStateParams.
    """
    theta = math.atan2(math.hypot(mp.x1, mp.x2), mp.x0)
    phi = math.atan2(mp.x2, mp.x1)
    psi = math.atan2(mp.y1, mp.y0)
    big_u = sp.A if d == 3 else sp.U
    block = [getattr(sp, name) for name in FREE_FIELD_NAMES]
    block[4] = big_u
    if sp.b01 < 0.0:
        # the whole S1 row can be negated freely (B = 0, the constraints are
        # even in the row); align it with the nonnegative-b01 convention of
        # solve_constraints so the roundtrip lands on the same state
        block[9] = -block[9]
        block[10] = -block[10]
    return np.array([theta, phi, psi, *block], dtype=float)


def violation_objective(d: int):
    """Closed-form violation as a function of the 14 free coordinates."""

    def objective(free: np.ndarray) -> float:
        try:
            sp, mp = parameterize_free(d, free)
        except InfeasibleParams:
            return INFEASIBLE_SENTINEL
        return quantum_value_analytic(d, sp, mp).total

    return objective


def _climb(objective, start: np.ndarray, cfg: SimplexConfig) -> tuple[np.ndarray, float, int, bool]:
    """One Nelder-Mead ascent; returns (point, value, iterations, converged)."""
    n = start.size
    points = np.tile(start, (n + 1, 1))
    # Edges are relative to each coordinate's own magnitude so the simplex
    # respects the chart's scale spread (angles are O(1), state coordinates
    # shrink like 1/sqrt(d)); the floor keeps zero coordinates movable.
    edges = cfg.init_scale * np.maximum(np.abs(start), 0.02)
    for i in range(n):
        points[i + 1, i] += edges[i]
    values = np.array([objective(p) for p in points])
    if not np.all(np.isfinite(values)):
        raise _NonFinite("non-finite objective on the initial simplex")

    iters = 0
    converged = False
    while iters < cfg.max_iters:
        iters += 1
        order = np.argsort(values)[::-1]
        points = points[order]
        values = values[order]
        spread = values[0] - values[-1]
        diameter = np.max(np.linalg.norm(points[1:] - points[0], axis=1))
        if spread < cfg.tol_f or diameter < cfg.tol_x:
            converged = True
            break

        centroid = points[:-1].mean(axis=0)
        reflected = centroid + (centroid - points[-1])
        f_r = _finite(objective(reflected))
        if f_r > values[0]:
            expanded = centroid + 2.0 * (centroid - points[-1])
            f_e = _finite(objective(expanded))
            if f_e > f_r:
                points[-1], values[-1] = expanded, f_e
            else:
                points[-1], values[-1] = reflected, f_r
        elif f_r > values[-2]:
            points[-1], values[-1] = reflected, f_r
        else:
            if f_r > values[-1]:
                contracted = centroid + 0.5 * (reflected - centroid)
            else:
                contracted = centroid + 0.5 * (points[-1] - centroid)
            f_c = _finite(objective(contracted))
            if f_c > max(values[-1], f_r):
                points[-1], values[-1] = contracted, f_c
            else:
                points[1:] = points[0] + 0.5 * (points[1:] - points[0])
                values[1:] = [_finite(objective(p)) for p in points[1:]]
    return points[0], values[0], iters, converged


class _NonFinite(RuntimeError):
    pass


def _finite(value: float) -> float:
    if not math.isfinite(value):
        raise _NonFinite("non-finite objective value during the search")
    return value


def nelder_mead(objective, init: np.ndarray, cfg: SimplexConfig | None = None) -> OptResult:
    """Maximize a function of n reals from a given start.

    A non-finite objective value aborts the current climb and restarts
    from a perturbed copy of the init (up to cfg.restarts attempts); if
    every attempt fails a SimplexError is raised.
    """
    cfg = cfg if cfg is not None else SimplexConfig()
    start = np.asarray(init, dtype=float)
    rng = np.random.default_rng(cfg.seed)
    last = None
    for attempt in range(cfg.restarts):
        trial = start if attempt == 0 else start + cfg.init_scale * rng.standard_normal(start.size)
        try:
            point, value, iters, converged = _climb(objective, trial, cfg)
        except _NonFinite as err:
            last = err
            continue
        return OptResult(
            value=value,
            point=tuple(point),
            iters=iters,
            restarts_used=attempt + 1,
            converged=converged,
        )
    raise SimplexError(f"all {cfg.restarts} attempts hit non-finite objectives") from last


def _chained_climb(objective, start: np.ndarray, cfg: SimplexConfig,
                   rounds: int = 12) -> OptResult:
    """Repeated climbs with a fresh simplex at the running best point.

    A single Nelder-Mead run on fourteen coordinates routinely stalls
    with a collapsed simplex well short of the optimum; re-seeding the
    simplex at the incumbent with a shrinking edge restores progress.
    Stops when a whole round gains less than 1e-13 relative.
    """
    pt = np.asarray(start, dtype=float)
    best = objective(pt)
    if not math.isfinite(best):
        raise _NonFinite("non-finite objective at the climb start")
    scale = cfg.init_scale
    total = 0
    converged = False
    for _ in range(rounds):
        round_cfg = SimplexConfig(restarts=cfg.restarts, max_iters=cfg.max_iters,
                                  tol_f=cfg.tol_f, tol_x=cfg.tol_x, seed=cfg.seed,
                                  init_scale=scale)
        res = nelder_mead(objective, pt, round_cfg)
        total += res.iters
        gain = res.value - best
        if res.value > best:
            best = res.value
            pt = np.array(res.point)
        if gain < 1e-13 * max(1.0, abs(best)):
            converged = True
            break
        scale = max(scale / 4.0, 1e-6)
    return OptResult(value=best, point=tuple(pt), iters=total,
                     restarts_used=1, converged=converged)


def _random_start(rng: np.random.Generator) -> np.ndarray:
    """A wide random chart point, used to keep some restarts unbiased."""
    angles = rng.uniform(0.0, math.pi, size=3)
    block = 0.3 * rng.standard_normal(11)
    return np.concatenate([angles, block])


def _seed_point(d: int, cfg: SimplexConfig) -> np.ndarray:
    """Deterministic starting point on the violating branch.

    Small dimensions come straight from the baked table; larger ones are
    reached by climbing along a geometric ladder of intermediate
    dimensions, warm-starting each rung from the previous one.
    """
    if d in SEED_POINTS:
        return np.array(SEED_POINTS[d], dtype=float)
    top = max(SEED_POINTS)
    pt = np.array(SEED_POINTS[top], dtype=float)
    rung = top
    while rung < d:
        rung = min(d, max(rung + 1, int(rung * 1.3)))
        pt = np.array(_chained_climb(violation_objective(rung), pt, cfg).point)
    return pt


def maximize_violation(d: int, cfg: SimplexConfig | None = None) -> OptResult:
    """Best chart point over cfg.restarts chained simplex climbs.

    Restart 0 starts from the deterministic branch seed, most others
    from jittered copies of it, and every fourth from a wide random
    draw so the search keeps an unbiased component.
    """
    if d < 3:
        raise ValueError("the inequality family needs d >= 3")
    cfg = cfg if cfg is not None else SimplexConfig()
    objective = violation_objective(d)
    base = _seed_point(d, cfg)
    best: OptResult | None = None
    total_iters = 0
    for restart in range(cfg.restarts):
        rng = np.random.default_rng((cfg.seed, d, restart))
        if restart == 0:
            start = base
        elif restart % 4 == 3:
            start = _random_start(rng)
        else:
            start = base + cfg.init_scale * rng.standard_normal(14)
        try:
            res = _chained_climb(objective, start, cfg)
        except _NonFinite:
            continue
        total_iters += res.iters
        if best is None or res.value > best.value:
            best = res
    if best is None:
        raise SimplexError(f"no restart produced a finite optimum at d={d}")
    sp, mp = parameterize_free(d, np.array(best.point))
    return OptResult(
        value=best.value,
        point=best.point,
        iters=total_iters,
        restarts_used=cfg.restarts,
        converged=best.converged,
        d=d,
        state_params=sp,
        meas_params=mp,
    )


def _reduced_objective(d: int):
    def objective(v: np.ndarray) -> float:
        value = reduced_solution_value(d, v[0], v[1], v[2], v[3])
        return INFEASIBLE_SENTINEL if not math.isfinite(value) else value

    return objective


def violation_curve(d_values, mode: str = "full",
                    cfg: SimplexConfig | None = None) -> list[tuple[int, float]]:
    """Violation versus dimension for one of the three evaluation modes.

    full: chained simplex over all fourteen coordinates, warm-started
    from the previous dimension's optimum, hedged with the baked seed
    at small d (the better point carries over).
    reduced: the four-coordinate closed chain, warm-started the same
    way and hedged with the closed asymptotic seed.
    asymptotic: the closed approximation, no optimization at all.
    """
    cfg = cfg if cfg is not None else SimplexConfig()
    if mode == "asymptotic":
        return [(int(d), curve_point_asymptotic(int(d))) for d in d_values]
    if mode not in ("full", "reduced"):
        raise ValueError(f"unknown curve mode: {mode}")

    out: list[tuple[int, float]] = []
    if mode == "reduced":
        inner_cfg = SimplexConfig(restarts=cfg.restarts, max_iters=2000,
                                  tol_f=cfg.tol_f, tol_x=cfg.tol_x,
                                  seed=cfg.seed, init_scale=0.02)
        prev4: np.ndarray | None = None
        for d in d_values:
            d = int(d)
            if d < 4:
                raise ValueError("the reduced chain needs d >= 4")
            objective = _reduced_objective(d)
            candidates = [np.array(reduced_seed(d), dtype=float)]
            if prev4 is not None:
                candidates.append(prev4)
            best = max((_chained_climb(objective, c, inner_cfg) for c in candidates),
                       key=lambda r: r.value)
            prev4 = np.array(best.point)
            out.append((d, best.value))
        return out

    prev: np.ndarray | None = None
    for d in d_values:
        d = int(d)
        objective = violation_objective(d)
        candidates: list[np.ndarray] = []
        if prev is not None:
            candidates.append(prev)
        if d in SEED_POINTS or prev is None:
            candidates.append(_seed_point(d, cfg))
        hedge = _reduced_start(d, cfg)
        if hedge is not None:
            candidates.append(hedge)
        best = max((_chained_climb(objective, c, cfg) for c in candidates),
                   key=lambda r: r.value)
        prev = np.array(best.point)
        out.append((d, best.value))
    return out


def _reduced_start(d: int, cfg: SimplexConfig) -> np.ndarray | None:
    """Chart coordinates of the optimized reduced chain.

    Runs the cheap four-coordinate climb from the closed seed and lifts the
    result into the full chart, so a scan hedged with this start can never
    fall below the reduced curve.  Returns nothing when the chain does not
    violate (d below roughly 20).
    """
    if d < 4:
        return None
    objective = _reduced_objective(d)
    seed = np.array(reduced_seed(d), dtype=float)
    inner_cfg = SimplexConfig(restarts=cfg.restarts, max_iters=2000,
                              tol_f=cfg.tol_f, tol_x=cfg.tol_x,
                              seed=cfg.seed, init_scale=0.02)
    try:
        best = _chained_climb(objective, seed, inner_cfg)
        sp, mp, br = reduced_solution(d, *best.point)
    except (InfeasibleParams, SimplexError, ValueError, ZeroDivisionError):
        return None
    if br.total <= 0.0:
        return None
    return free_from_params(sp, mp, d)


def curve_point_asymptotic(d: int) -> float:
    from .analytic import asymptotic_params

    return asymptotic_params().q_approx(d)
