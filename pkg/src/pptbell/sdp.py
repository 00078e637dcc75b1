"""Dense log-barrier solver for small semidefinite programs.

The variable is a tuple of symmetric matrix blocks.  The solver maximizes a
trace objective subject to linear equality constraints and positive
semidefiniteness of selected linear images of the blocks (a block itself, or
the partial transpose of one).  Those two image kinds cover both problem
shapes used by the seesaw: the state step (rho and its partial transpose PSD,
unit trace) and the d-outcome measurement step (every effect PSD, effects
summing to the identity).

Everything runs in svec coordinates, the weighted upper-triangle vectorization
in which the Euclidean inner product of coordinate vectors equals the trace
inner product of the matrices.  Problem sizes stay below ~100x100, so the
Newton systems are assembled densely and solved directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import BipartiteShape, partial_transpose, require_symmetric

__all__ = [
    "PsdBlock",
    "SdpProblem",
    "SdpResult",
    "SdpInfeasibleError",
    "SdpNonConvergedError",
    "sdp_solve",
    "svec",
    "smat",
    "sym_kron",
    "pt_svec_permutation",
]

_SQRT2 = math.sqrt(2.0)


def svec(m: np.ndarray) -> np.ndarray:
    """Weighted upper-triangle vector of a symmetric matrix.

    Diagonal entries keep weight 1, off-diagonal entries get sqrt(2), so that
    ``svec(a) @ svec(b) == trace(a @ b)`` for symmetric a, b.
    """
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    rows, cols = np.triu_indices(n)
    w = np.where(rows == cols, 1.0, _SQRT2)
    return w * m[rows, cols]


def smat(v: np.ndarray, n: int) -> np.ndarray:
    """Inverse of ``svec`` for dimension n."""
    rows, cols = np.triu_indices(n)
    w = np.where(rows == cols, 1.0, 1.0 / _SQRT2)
    out = np.zeros((n, n))
    out[rows, cols] = w * np.asarray(v, dtype=float)
    out[cols, rows] = out[rows, cols]
    return out


def sym_kron(w: np.ndarray) -> np.ndarray:
    """Matrix of the map s -> w s w on symmetric matrices, in svec coordinates.

    For symmetric w the result k satisfies ``svec(w @ s @ w) = k @ svec(s)``
    and is itself symmetric.
    """
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    rows, cols = np.triu_indices(n)
    wt = np.where(rows == cols, 1.0, _SQRT2)
    a = w[rows[:, None], rows[None, :]] * w[cols[:, None], cols[None, :]]
    b = w[rows[:, None], cols[None, :]] * w[cols[:, None], rows[None, :]]
    return 0.5 * wt[:, None] * wt[None, :] * (a + b)


def pt_svec_permutation(shape: BipartiteShape) -> np.ndarray:
    """Index array p with ``svec(partial_transpose(x)) == svec(x)[p]``.

    Partial transposition permutes matrix entries without mixing diagonal and
    off-diagonal positions, so in svec coordinates it is a plain permutation;
    it is also an involution, p[p] == arange.
    """
    n = shape.total
    db = shape.dim_b
    rows, cols = np.triu_indices(n)
    m = rows.size
    pos = np.zeros((n, n), dtype=np.intp)
    pos[rows, cols] = np.arange(m)
    pos[cols, rows] = pos[rows, cols]
    a, b = np.divmod(rows, db)
    c, e = np.divmod(cols, db)
    return pos[a * db + e, c * db + b]


@dataclass(frozen=True)
class PsdBlock:
    """One PSD requirement: block ``index`` itself, or its partial transpose."""

    index: int
    pt_shape: BipartiteShape | None = None


@dataclass
class SdpProblem:
    """Maximize sum_k trace(objective[k] @ x[k]) over symmetric blocks x.

    ``psd`` lists the images that must stay positive semidefinite and
    ``eq_rows``/``eq_rhs`` the scalar equality constraints, each row mapping a
    block index to its symmetric coefficient matrix:
    sum over the row of trace(coeff @ x[k]) equals the rhs entry.
    """

    block_dims: tuple[int, ...]
    objective: tuple[np.ndarray, ...]
    psd: tuple[PsdBlock, ...]
    eq_rows: tuple[dict[int, np.ndarray], ...] = ()
    eq_rhs: tuple[float, ...] = ()

    def validate(self) -> None:
        if len(self.objective) != len(self.block_dims):
            raise ValueError("one objective matrix per block is required")
        for k, (dim, c) in enumerate(zip(self.block_dims, self.objective)):
            c = require_symmetric(c, name=f"objective[{k}]")
            if c.shape != (dim, dim):
                raise ValueError(f"objective[{k}] has shape {c.shape}, expected {(dim, dim)}")
        if not self.psd:
            raise ValueError("at least one PSD image is required")
        for blk in self.psd:
            if not 0 <= blk.index < len(self.block_dims):
                raise ValueError(f"PSD image refers to unknown block {blk.index}")
            if blk.pt_shape is not None and blk.pt_shape.total != self.block_dims[blk.index]:
                raise ValueError("partial-transpose shape does not match its block")
        if len(self.eq_rows) != len(self.eq_rhs):
            raise ValueError("equality rows and right-hand sides differ in length")
        for i, row in enumerate(self.eq_rows):
            for k, coeff in row.items():
                coeff = require_symmetric(coeff, name=f"eq_rows[{i}][{k}]")
                if coeff.shape[0] != self.block_dims[k]:
                    raise ValueError(f"equality row {i} coefficient for block {k} has wrong size")


@dataclass
class SdpResult:
    """Solution blocks with the primal value and a dual certificate.

    ``dual_value`` comes from an exactly dual-feasible certificate (the
    barrier slacks corrected by least-squares multipliers and an identity
    shift), so ``value <= dual_value`` bounds the true optimum from both
    sides; ``gap`` is their difference.  ``dual_residual`` records the
    pre-correction least-squares mismatch for diagnostics.
    """

    blocks: tuple[np.ndarray, ...]
    value: float
    dual_value: float
    gap: float
    dual_residual: float
    barrier_rounds: int
    newton_steps: int
    converged: bool


class SdpInfeasibleError(RuntimeError):
    """Start not strictly feasible, or the barrier diverged."""


class SdpNonConvergedError(RuntimeError):
    """Iteration budget exhausted; carries the best iterate found."""

    def __init__(self, message: str, result: SdpResult):
        super().__init__(message)
        self.result = result


@dataclass
class _Workspace:
    """Problem data flattened to concatenated svec coordinates."""

    dims: tuple[int, ...]
    offsets: tuple[int, ...]
    total: int
    c: np.ndarray
    eq: np.ndarray
    rhs: np.ndarray
    images: list[tuple[int, np.ndarray | None]] = field(default_factory=list)
    nu: float = 0.0


def _workspace(problem: SdpProblem) -> _Workspace:
    problem.validate()
    sizes = [n * (n + 1) // 2 for n in problem.block_dims]
    offsets = [0]
    for s in sizes:
        offsets.append(offsets[-1] + s)
    total = offsets[-1]
    c = np.concatenate([svec(m) for m in problem.objective]) if total else np.zeros(0)
    eq = np.zeros((len(problem.eq_rows), total))
    for i, row in enumerate(problem.eq_rows):
        for k, coeff in row.items():
            eq[i, offsets[k]:offsets[k + 1]] = svec(coeff)
    ws = _Workspace(
        dims=problem.block_dims,
        offsets=tuple(offsets),
        total=total,
        c=c,
        eq=eq,
        rhs=np.asarray(problem.eq_rhs, dtype=float),
    )
    for blk in problem.psd:
        perm = None if blk.pt_shape is None else pt_svec_permutation(blk.pt_shape)
        ws.images.append((blk.index, perm))
        ws.nu += problem.block_dims[blk.index]
    return ws


def _image_matrices(ws: _Workspace, v: np.ndarray) -> list[np.ndarray]:
    mats = []
    for k, perm in ws.images:
        part = v[ws.offsets[k]:ws.offsets[k + 1]]
        if perm is not None:
            part = part[perm]
        mats.append(smat(part, ws.dims[k]))
    return mats


def _barrier_value(ws: _Workspace, v: np.ndarray) -> float | None:
    """Sum of log-dets of the PSD images, or None if any fails Cholesky."""
    out = 0.0
    for m in _image_matrices(ws, v):
        try:
            chol = np.linalg.cholesky(m)
        except np.linalg.LinAlgError:
            return None
        diag = np.diag(chol)
        if np.any(diag <= 0.0):
            return None
        out += 2.0 * float(np.sum(np.log(diag)))
    return out


def _grad_hess(ws: _Workspace, v: np.ndarray, tau: float) -> tuple[np.ndarray, np.ndarray, list[np.ndarray]]:
    grad = tau * ws.c.copy()
    hess = np.zeros((ws.total, ws.total))
    inverses = []
    for (k, perm), m in zip(ws.images, _image_matrices(ws, v)):
        inv = np.linalg.inv(m)
        inv = 0.5 * (inv + inv.T)
        inverses.append(inv)
        g = svec(inv)
        kk = sym_kron(inv)
        if perm is not None:
            g = g[perm]
            kk = kk[np.ix_(perm, perm)]
        sl = slice(ws.offsets[k], ws.offsets[k + 1])
        grad[sl] += g
        hess[sl, sl] -= kk
    return grad, hess, inverses


def _newton_direction(ws: _Workspace, grad: np.ndarray, hess: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascent direction projected onto the equality tangent space.

    Solves the bordered stationarity system (with one pass of iterative
    refinement, the late-path Hessians are badly conditioned) so iterates
    stay exactly on the affine manifold; returns the step and multipliers.
    """
    p = ws.eq.shape[0]
    m = ws.total
    kkt = np.zeros((m + p, m + p))
    kkt[:m, :m] = hess
    kkt[:m, m:] = -ws.eq.T
    kkt[m:, :m] = ws.eq
    rhs = np.concatenate([-grad, np.zeros(p)])
    try:
        sol = np.linalg.solve(kkt, rhs)
        sol += np.linalg.solve(kkt, rhs - kkt @ sol)
    except np.linalg.LinAlgError:
        reg = 1e-13 * max(1.0, float(np.max(np.abs(hess))))
        kkt[:m, :m] = hess - reg * np.eye(m)
        sol = np.linalg.solve(kkt, rhs)
    return sol[:m], sol[m:]


def _center(ws: _Workspace, v: np.ndarray, tau: float, target: float,
            max_newton: int) -> tuple[np.ndarray, np.ndarray, int, bool]:
    """Damped Newton to the tau-center; returns (point, multipliers, steps, ok).

    Far from the center a backtracking line search with an Armijo condition
    guards the step; once the Newton decrement is small the objective gain is
    below float64 cancellation noise, so any strictly feasible full-direction
    step is accepted (pure Newton converges there).  A decrement that stops
    shrinking marks the numerical floor of the KKT solve.
    """
    lam = np.zeros(ws.eq.shape[0])
    steps = 0
    prev_decrement = math.inf
    for _ in range(max_newton):
        grad, hess, _ = _grad_hess(ws, v, tau)
        step, lam = _newton_direction(ws, grad, hess)
        decrement = abs(float(grad @ step))
        if not math.isfinite(decrement):
            return v, lam, steps, False
        if decrement <= target:
            return v, lam, steps, True
        if decrement <= 1e-6 and decrement > 0.5 * prev_decrement:
            return v, lam, steps, False
        prev_decrement = decrement
        quadratic_zone = decrement <= 1e-3
        base = None
        if not quadratic_zone:
            base = tau * float(ws.c @ v) + _must_barrier(ws, v)
        t = 1.0
        improved = False
        for _ in range(40):
            cand = v + t * step
            cand_barrier = _barrier_value(ws, cand)
            if cand_barrier is not None:
                if quadratic_zone:
                    v = cand
                    improved = True
                    break
                gain = tau * float(ws.c @ cand) + cand_barrier - base
                if gain >= 0.25 * t * decrement:
                    v = cand
                    improved = True
                    break
            t *= 0.5
        steps += 1
        if not improved:
            return v, lam, steps, False
    return v, lam, steps, False


def _must_barrier(ws: _Workspace, v: np.ndarray) -> float:
    barrier = _barrier_value(ws, v)
    if barrier is None:
        raise SdpInfeasibleError("iterate left the cone interior")
    return barrier


def _certificate(ws: _Workspace, v: np.ndarray, tau: float) -> tuple[float, float, float]:
    """Exactly dual-feasible bound from the barrier slacks.

    The raw slacks z = m^-1 / tau miss dual feasibility by the centering
    error.  A least-squares choice of equality multipliers absorbs most of
    it, the leftover is folded into the slacks, and a shift along the
    identity direction (present in both problem shapes solved here: the
    trace row, or the sum-to-identity rows) restores positive
    semidefiniteness.  Returns (dual value, certified gap, ls residual).
    """
    mats = _image_matrices(ws, v)
    value = float(ws.c @ v)
    slacks = []
    dual_vec = np.zeros(ws.total)
    for (k, perm), m in zip(ws.images, mats):
        z = np.linalg.inv(m) / tau
        z = 0.5 * (z + z.T)
        slacks.append(z)
        g = svec(z)
        if perm is not None:
            g = g[perm]
        dual_vec[ws.offsets[k]:ws.offsets[k + 1]] += g
    if ws.eq.shape[0] == 0:
        gap = sum(float(np.trace(z @ m)) for z, m in zip(slacks, mats))
        return value + gap, gap, float("nan")

    target = ws.c + dual_vec
    y, *_ = np.linalg.lstsq(ws.eq.T, target, rcond=None)
    residual = ws.eq.T @ y - target
    ls_residual = float(np.max(np.abs(residual)))

    # Fold the least-squares leftover into the slacks, split evenly over the
    # images of each block (transported through the partial-transpose
    # permutation where one applies).
    counts = np.zeros(len(ws.dims), dtype=int)
    for k, _ in ws.images:
        counts[k] += 1
    corrected = []
    for (k, perm), z in zip(ws.images, slacks):
        part = residual[ws.offsets[k]:ws.offsets[k + 1]] / counts[k]
        if perm is not None:
            part = part[perm]
        corrected.append(z + smat(part, ws.dims[k]))

    # Identity direction: multipliers whose transpose image is the stacked
    # identity, used to push the corrected slacks back into the cone.
    eye_vec = np.concatenate([svec(np.eye(n)) for n in ws.dims])
    w, *_ = np.linalg.lstsq(ws.eq.T, eye_vec, rcond=None)
    if float(np.max(np.abs(ws.eq.T @ w - eye_vec))) > 1e-10:
        gap = sum(float(np.trace(z @ m)) for z, m in zip(slacks, mats))
        return value + gap, gap, ls_residual

    shift = 0.0
    for (k, _), z in zip(ws.images, corrected):
        low = float(np.linalg.eigvalsh(z)[0])
        margin = 1e-14 * max(1.0, float(np.max(np.abs(z))))
        need = max(0.0, -low + margin) * counts[k]
        shift = max(shift, need)
    dual_value = float(ws.rhs @ (y + shift * w))
    return dual_value, dual_value - value, ls_residual


def sdp_solve(problem: SdpProblem, start: tuple[np.ndarray, ...], tol: float = 1e-9,
              mu: float = 5.0, max_rounds: int = 80, max_newton: int = 60) -> SdpResult:
    """Barrier path-following from a strictly feasible start.

    The caller supplies a start satisfying the equalities with all PSD images
    positive definite; the barrier parameter grows geometrically until the
    certified duality gap drops below ``tol * max(1, |value|)``.
    """
    ws = _workspace(problem)
    if len(start) != len(ws.dims):
        raise ValueError("one start matrix per block is required")
    v = np.concatenate([svec(m) for m in start])
    if ws.eq.shape[0] and np.max(np.abs(ws.eq @ v - ws.rhs)) > 1e-9:
        raise SdpInfeasibleError("start violates the equality constraints")
    if _barrier_value(ws, v) is None:
        raise SdpInfeasibleError("start is not strictly positive definite")

    scale = max(1.0, float(np.max(np.abs(ws.c))) if ws.c.size else 1.0)
    divergence_cap = 1e12 * scale
    tau = max(1.0, ws.nu / max(1.0, abs(float(ws.c @ v))))
    newton_total = 0
    rounds = 0
    converged = False
    best: tuple[float, float, np.ndarray, float, float] | None = None
    plateau = 0
    # The dual certificate inherits the centering error, so every round
    # centers to a tiny Newton decrement; quadratic convergence makes the
    # extra steps cheap at these sizes.
    target = 1e-16 * (1.0 + ws.nu)
    for rounds in range(1, max_rounds + 1):
        v, _, steps, _ = _center(ws, v, tau, target=target, max_newton=max_newton)
        newton_total += steps
        value = float(ws.c @ v)
        if abs(value) > divergence_cap:
            raise SdpInfeasibleError("objective diverging along the central path")
        dual_value, gap, ls_residual = _certificate(ws, v, tau)
        improved = best is None or gap < 0.5 * best[0]
        if best is None or gap < best[0]:
            best = (gap, value, v.copy(), dual_value, ls_residual)
        if gap <= tol * max(1.0, abs(value)):
            converged = True
            break
        # Each round multiplies tau, so the certified gap should shrink by
        # roughly the same factor; two rounds without even halving it means
        # the Newton systems have hit the float64 conditioning wall.
        plateau = 0 if improved else plateau + 1
        if plateau >= 2:
            break
        tau *= mu

    gap, value, v, dual_value, ls_residual = best
    converged = converged or gap <= tol * max(1.0, abs(value))
    blocks = tuple(
        smat(v[ws.offsets[k]:ws.offsets[k + 1]], n) for k, n in enumerate(ws.dims)
    )
    result = SdpResult(
        blocks=blocks,
        value=value,
        dual_value=dual_value,
        gap=gap,
        dual_residual=ls_residual,
        barrier_rounds=rounds,
        newton_steps=newton_total,
        converged=converged,
    )
    if not converged:
        raise SdpNonConvergedError(
            f"barrier reached certified gap {gap:.3e}, short of {tol:g}, "
            f"after {rounds} rounds", result
        )
    return result
