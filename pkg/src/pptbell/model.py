"""The d x d state family, tilted measurement bases, and the Bell operator.

Everything lives in real double precision.  Bipartite vectors use the
row-major convention |j,k> -> index j*d + k of linalg.  The state family is
parametrized by 20 reals (four vector blocks); partial-transpose invariance
holds iff six quadratic constraints on them do, and ``solve_constraints``
eliminates the dependent block so optimizers can roam an unconstrained chart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .bell import Behavior, Scenario
from .linalg import eigh, kron

__all__ = [
    "ThetaFrame",
    "MeasurementParams",
    "MeasurementSet",
    "StateParams",
    "FreeStateParams",
    "StateSpectrumInfo",
    "InfeasibleParams",
    "theta_frame",
    "phi_vectors",
    "chi_vector",
    "build_measurements",
    "build_state_vectors",
    "assemble_density",
    "state_spectrum",
    "solve_constraints",
    "apply_gauge",
    "bell_operator",
    "induced_behavior",
    "params_to_dict",
    "params_from_dict",
    "PARAM_KEYS",
]


class InfeasibleParams(ValueError):
    """Raised when the dependent parameters cannot satisfy the constraints."""


# ---------------------------------------------------------------------------
# The theta frame


@dataclass(frozen=True)
class ThetaFrame:
    """d-1 unit vectors forming a regular simplex inside span{|2>..|d-1>}.

    ``vectors`` has shape (d-1, d); row p is the full-space coordinate vector
    of theta_p (entries 0 and 1 vanish).  The rows sum to zero and have
    pairwise inner products (-1 + (d-1)*delta_pq)/(d-2).
    """

    d: int
    vectors: np.ndarray

    def gram(self) -> np.ndarray:
        return self.vectors @ self.vectors.T


def theta_frame(d: int) -> ThetaFrame:
    """Deterministic simplex frame for dimension d.

    Factorizes the target Gram matrix ((d-1)I - J)/(d-2) through its
    eigendecomposition; the d-2 nonzero eigenvalues all equal (d-1)/(d-2),
    and the corresponding eigenvector columns scaled by their square roots
    give one concrete realization, embedded into coordinates 2..d-1.
    """
    if d < 3:
        raise ValueError("the frame needs d >= 3")
    n = d - 1
    gram = (-np.ones((n, n)) + n * np.eye(n)) / (d - 2)
    spectrum = eigh(gram)
    # One zero eigenvalue (the all-ones direction), d-2 at (d-1)/(d-2).
    keep = spectrum.values > 0.5
    factors = spectrum.vectors[:, keep] * np.sqrt(spectrum.values[keep])
    vectors = np.zeros((n, d))
    vectors[:, 2:] = factors
    vectors.setflags(write=False)
    return ThetaFrame(d=d, vectors=vectors)


def chi_vector(d: int) -> np.ndarray:
    """The unit vector (1/sqrt(d-2)) sum_k |k,k> on the d x d product space."""
    vec = np.zeros(d * d)
    for k in range(2, d):
        vec[k * d + k] = 1.0
    return vec / math.sqrt(d - 2)


def phi_vectors(frame: ThetaFrame) -> list[np.ndarray]:
    """The d-2 orthonormal bipartite vectors spanned by |theta_p, theta_p>.

    phi_k = (d-2)^{3/2} / ((d-1) sqrt(d-3)) * sum_p |theta_p, theta_p> <theta_p|k>
    for k = 2..d-1.  Each is orthogonal to the chi vector.  Undefined at
    d = 3 where the span collapses onto chi alone.
    """
    d = frame.d
    if d < 4:
        raise ValueError("phi vectors need d >= 4 (the orthogonal complement is empty at d=3)")
    scale = (d - 2) ** 1.5 / ((d - 1) * math.sqrt(d - 3))
    pair = np.einsum("pi,pj->pij", frame.vectors, frame.vectors).reshape(d - 1, d * d)
    out = []
    for k in range(2, d):
        weights = frame.vectors[:, k]
        out.append(scale * (weights @ pair))
    return out


# ---------------------------------------------------------------------------
# Measurements


@dataclass(frozen=True)
class MeasurementParams:
    """Direction cosines of the tilted measurement vectors."""

    x0: float
    x1: float
    x2: float
    y0: float
    y1: float

    def validate(self, tol: float = 1e-12) -> None:
        x_norm = self.x0 ** 2 + self.x1 ** 2 + self.x2 ** 2
        y_norm = self.y0 ** 2 + self.y1 ** 2
        if abs(x_norm - 1.0) > tol:
            raise ValueError(f"x direction not normalized: |x|^2 = {x_norm}")
        if abs(y_norm - 1.0) > tol:
            raise ValueError(f"y direction not normalized: |y|^2 = {y_norm}")


@dataclass(frozen=True)
class MeasurementSet:
    """Rank-one measurement directions for both parties in dimension d.

    Alice's setting q projects onto row q of ``alice_vectors`` for outcome 0
    and its complement for outcome 1.  Bob's d-outcome setting uses the
    orthonormal rows of ``bob0_vectors``; his binary setting projects onto
    ``bob1_vector``.
    """

    d: int
    alice_vectors: np.ndarray
    bob0_vectors: np.ndarray
    bob1_vector: np.ndarray

    def alice_projector(self, x: int, outcome: int) -> np.ndarray:
        v = self.alice_vectors[x]
        proj = np.outer(v, v)
        return proj if outcome == 0 else np.eye(self.d) - proj

    def bob_projector(self, y: int, outcome: int) -> np.ndarray:
        if y == 0:
            v = self.bob0_vectors[outcome]
            return np.outer(v, v)
        proj = np.outer(self.bob1_vector, self.bob1_vector)
        return proj if outcome == 0 else np.eye(self.d) - proj

    def validate(self, tol: float = 1e-11) -> None:
        gram = self.bob0_vectors @ self.bob0_vectors.T
        if np.max(np.abs(gram - np.eye(self.d))) > tol:
            raise ValueError("bob d-outcome vectors are not orthonormal")
        for v in self.alice_vectors:
            if abs(v @ v - 1.0) > tol:
                raise ValueError("alice vector not normalized")
        if abs(self.bob1_vector @ self.bob1_vector - 1.0) > tol:
            raise ValueError("bob binary vector not normalized")


def build_measurements(d: int, mp: MeasurementParams, frame: ThetaFrame | None = None) -> MeasurementSet:
    """Measurement vectors from the three x and two y direction cosines.

    Alice's setting 0 is |0>; settings p = 1..d-1 point along
    x0|0> + x1|1> + x2|theta_p>.  Bob's d-outcome basis combines the y
    direction with the frame so that all d vectors come out orthonormal, and
    his binary setting is |0> against its complement.
    """
    mp.validate()
    if frame is None:
        frame = theta_frame(d)
    if frame.d != d:
        raise ValueError("frame dimension does not match d")

    alice = np.zeros((d, d))
    alice[0, 0] = 1.0
    alice[1:, 0] = mp.x0
    alice[1:, 1] = mp.x1
    alice[1:] += mp.x2 * frame.vectors

    bob0 = np.zeros((d, d))
    bob0[0, 0] = -mp.y1
    bob0[0, 1] = mp.y0
    bob0[1:, 0] = mp.y0
    bob0[1:, 1] = mp.y1
    bob0[1:] += math.sqrt(d - 2) * frame.vectors
    bob0[1:] /= math.sqrt(d - 1)

    bob1 = np.zeros(d)
    bob1[0] = 1.0

    for arr in (alice, bob0, bob1):
        arr.setflags(write=False)
    ms = MeasurementSet(d=d, alice_vectors=alice, bob0_vectors=bob0, bob1_vector=bob1)
    ms.validate()
    return ms


# ---------------------------------------------------------------------------
# State family


PARAM_KEYS = (
    "a00", "a01", "a10", "a11", "A",
    "b00", "b01", "b10", "b11", "B",
    "u0", "u0p", "u1", "u1p", "U",
    "v0", "v0p", "v1", "v1p", "V",
)


@dataclass(frozen=True)
class StateParams:
    """All 20 block coefficients of the state family."""

    a00: float = 0.0
    a01: float = 0.0
    a10: float = 0.0
    a11: float = 0.0
    A: float = 0.0
    b00: float = 0.0
    b01: float = 0.0
    b10: float = 0.0
    b11: float = 0.0
    B: float = 0.0
    u0: float = 0.0
    u0p: float = 0.0
    u1: float = 0.0
    u1p: float = 0.0
    U: float = 0.0
    v0: float = 0.0
    v0p: float = 0.0
    v1: float = 0.0
    v1p: float = 0.0
    V: float = 0.0

    def probabilities(self) -> "StateSpectrumInfo":
        return StateSpectrumInfo(
            p_s0=self.a00 ** 2 + self.a01 ** 2 + self.a10 ** 2 + self.a11 ** 2 + self.A ** 2,
            p_s1=self.b00 ** 2 + self.b01 ** 2 + self.b10 ** 2 + self.b11 ** 2 + self.B ** 2,
            p_d0=self.u0 ** 2 + self.u0p ** 2 + self.u1 ** 2 + self.u1p ** 2 + self.U ** 2,
            p_d1=self.v0 ** 2 + self.v0p ** 2 + self.v1 ** 2 + self.v1p ** 2 + self.V ** 2,
        )

    def normalization(self, d: int) -> float:
        p = self.probabilities()
        return p.p_s0 + p.p_s1 + (d - 2) * (p.p_d0 + p.p_d1)

    def constraint_residuals(self, d: int) -> tuple[float, ...]:
        """Residuals of the six partial-transpose invariance constraints.

        Order: the A/B vs U/V magnitude relation, the cross-product relation
        on the 2x2 blocks, then the four bilinear relations tying A,B to the
        u,v blocks.  At d=3 the first residual is replaced by U^2 + V^2
        (those parameters must vanish, the relation itself is vacuous).
        """
        if d == 3:
            first = self.U ** 2 + self.V ** 2
        else:
            first = self.A ** 2 + self.B ** 2 - (d - 2) / (d - 3) * (self.U ** 2 + self.V ** 2)
        s = math.sqrt(d - 2)
        return (
            first,
            self.a00 * self.a11 + self.b00 * self.b11
            - self.a01 * self.a10 - self.b01 * self.b10,
            self.A * self.a00 + self.B * self.b00 - s * (self.u0 * self.u0p + self.v0 * self.v0p),
            self.A * self.a01 + self.B * self.b01 - s * (self.u0 * self.u1p + self.v0 * self.v1p),
            self.A * self.a10 + self.B * self.b10 - s * (self.u1 * self.u0p + self.v1 * self.v0p),
            self.A * self.a11 + self.B * self.b11 - s * (self.u1 * self.u1p + self.v1 * self.v1p),
        )

    def scaled(self, factor: float) -> "StateParams":
        return StateParams(**{f.name: factor * getattr(self, f.name) for f in fields(self)})


@dataclass(frozen=True)
class StateSpectrumInfo:
    """Squared norms of the four vector blocks (eigenvalues after gauging)."""

    p_s0: float
    p_s1: float
    p_d0: float
    p_d1: float

    def total(self, d: int) -> float:
        return self.p_s0 + self.p_s1 + (d - 2) * (self.p_d0 + self.p_d1)


@dataclass(frozen=True)
class FreeStateParams:
    """The free block of the constraint chart (gauge B = V = 0).

    The dependent parameters A, a00..a11 and the b01*b10 product follow from
    these via ``solve_constraints``.  At d = 3 the U field is reinterpreted
    as A directly, since the magnitude relation degenerates there.
    """

    u0: float = 0.0
    u0p: float = 0.0
    u1: float = 0.0
    u1p: float = 0.0
    U: float = 0.0
    v0: float = 0.0
    v0p: float = 0.0
    v1: float = 0.0
    v1p: float = 0.0
    b00: float = 0.0
    b11: float = 0.0


def solve_constraints(d: int, free: FreeStateParams, normalize: bool = True,
                      split_like: tuple[float, float] | None = None) -> StateParams:
    """Complete a free block to a full constraint-satisfying parameter set.

    With the gauge B = V = 0 the six invariance constraints determine, in
    order: A (nonnegative) from U, the four a coefficients linearly once A
    is known, and the product b01*b10, which is split evenly with the sign
    carried by b10.  ``split_like`` overrides the even split: the pair is
    given the magnitude ratio and the b01 sign of the supplied values while
    keeping the constrained product exact (used when fitting externally
    found states, where the observed split carries information).  When
    ``normalize`` is set the whole vector block is rescaled so the block
    norms sum to one; the constraints are quadratic and homogeneous, so the
    rescale preserves them exactly.

    Raises InfeasibleParams when A = 0 while some bilinear right-hand side
    is nonzero, and when every block vanishes (nothing to normalize).
    """
    if d < 3:
        raise ValueError("the state family needs d >= 3")
    s = math.sqrt(d - 2)
    rhs = (
        s * (free.u0 * free.u0p + free.v0 * free.v0p),
        s * (free.u0 * free.u1p + free.v0 * free.v1p),
        s * (free.u1 * free.u0p + free.v1 * free.v0p),
        s * (free.u1 * free.u1p + free.v1 * free.v1p),
    )
    if d == 3:
        # The magnitude relation is vacuous at d=3 (no phi space); the U slot
        # of the free block carries A itself and the true U, V stay zero.
        big_a = abs(free.U)
        big_u = 0.0
    else:
        big_u = free.U
        big_a = math.sqrt((d - 2) / (d - 3)) * abs(big_u)
    if big_a == 0.0:
        if any(abs(r) > 0.0 for r in rhs):
            raise InfeasibleParams("A vanishes but the bilinear constraints have nonzero right-hand sides")
        a = (0.0, 0.0, 0.0, 0.0)
    else:
        a = tuple(r / big_a for r in rhs)
    a00, a01, a10, a11 = a

    product = a00 * a11 + free.b00 * free.b11 - a01 * a10
    if split_like is not None and max(abs(split_like[0]), abs(split_like[1])) > 0.0:
        t0, t1 = split_like
        ratio = abs(t0) / abs(t1) if abs(t1) > 0.0 else 1.0
        if ratio == 0.0:
            ratio = 1.0
        root = math.sqrt(abs(product) * ratio)
        b01 = math.copysign(root, t0) if t0 != 0.0 else root
        b10 = product / b01 if b01 != 0.0 else 0.0
    else:
        root = math.sqrt(abs(product))
        b01 = root
        b10 = math.copysign(root, product) if product != 0.0 else 0.0

    sp = StateParams(
        a00=a00, a01=a01, a10=a10, a11=a11, A=big_a,
        b00=free.b00, b01=b01, b10=b10, b11=free.b11, B=0.0,
        u0=free.u0, u0p=free.u0p, u1=free.u1, u1p=free.u1p, U=big_u,
        v0=free.v0, v0p=free.v0p, v1=free.v1, v1p=free.v1p, V=0.0,
    )
    if normalize:
        total = sp.normalization(d)
        if total <= 0.0:
            raise InfeasibleParams("all parameter blocks vanish, cannot normalize")
        sp = sp.scaled(1.0 / math.sqrt(total))
    return sp


def apply_gauge(sp: StateParams, o_s: np.ndarray, o_d: np.ndarray) -> StateParams:
    """Mix the S pair and the D pair by 2x2 orthogonal matrices.

    The density matrix is a sum of outer products over each pair, so an
    orthogonal mixing of the pair leaves it unchanged while reshuffling the
    coefficients; this is the freedom used to set B = V = 0.
    """
    for name, o in (("o_s", o_s), ("o_d", o_d)):
        o = np.asarray(o, dtype=float)
        if o.shape != (2, 2) or np.max(np.abs(o.T @ o - np.eye(2))) > 1e-12:
            raise ValueError(f"{name} is not a 2x2 orthogonal matrix")
    s_block = np.array([
        [sp.a00, sp.a01, sp.a10, sp.a11, sp.A],
        [sp.b00, sp.b01, sp.b10, sp.b11, sp.B],
    ])
    d_block = np.array([
        [sp.u0, sp.u0p, sp.u1, sp.u1p, sp.U],
        [sp.v0, sp.v0p, sp.v1, sp.v1p, sp.V],
    ])
    s_new = np.asarray(o_s, dtype=float) @ s_block
    d_new = np.asarray(o_d, dtype=float) @ d_block
    return StateParams(
        a00=s_new[0, 0], a01=s_new[0, 1], a10=s_new[0, 2], a11=s_new[0, 3], A=s_new[0, 4],
        b00=s_new[1, 0], b01=s_new[1, 1], b10=s_new[1, 2], b11=s_new[1, 3], B=s_new[1, 4],
        u0=d_new[0, 0], u0p=d_new[0, 1], u1=d_new[0, 2], u1p=d_new[0, 3], U=d_new[0, 4],
        v0=d_new[1, 0], v0p=d_new[1, 1], v1=d_new[1, 2], v1p=d_new[1, 3], V=d_new[1, 4],
    )


def build_state_vectors(
    d: int, sp: StateParams, frame: ThetaFrame | None = None
) -> tuple[np.ndarray, np.ndarray, list[np.ndarray], list[np.ndarray]]:
    """The two S vectors and the two families of d-2 D vectors (unnormalized).

    S vectors live on the 2x2 corner plus the chi direction; the D pair with
    index k mixes |0,k>, |k,0>, |1,k>, |k,1> and phi_k.  At d=3 there is a
    single D vector per family and no phi component, so U and V must vanish.
    """
    if frame is None:
        frame = theta_frame(d)
    if d == 3 and (sp.U != 0.0 or sp.V != 0.0):
        raise ValueError("U and V must be zero at d=3 (no phi space)")
    chi = chi_vector(d)
    s0 = np.zeros(d * d)
    s1 = np.zeros(d * d)
    for (i, j), a, b in (
        ((0, 0), sp.a00, sp.b00),
        ((0, 1), sp.a01, sp.b01),
        ((1, 0), sp.a10, sp.b10),
        ((1, 1), sp.a11, sp.b11),
    ):
        s0[i * d + j] = a
        s1[i * d + j] = b
    s0 += sp.A * chi
    s1 += sp.B * chi

    phis = phi_vectors(frame) if d >= 4 else [np.zeros(d * d)]
    d0, d1 = [], []
    for idx, k in enumerate(range(2, d)):
        vec0 = np.zeros(d * d)
        vec1 = np.zeros(d * d)
        vec0[0 * d + k] = sp.u0
        vec0[k * d + 0] = sp.u0p
        vec0[1 * d + k] = sp.u1
        vec0[k * d + 1] = sp.u1p
        vec1[0 * d + k] = sp.v0
        vec1[k * d + 0] = sp.v0p
        vec1[1 * d + k] = sp.v1
        vec1[k * d + 1] = sp.v1p
        d0.append(vec0 + sp.U * phis[idx])
        d1.append(vec1 + sp.V * phis[idx])
    return s0, s1, d0, d1


def assemble_density(d: int, sp: StateParams, frame: ThetaFrame | None = None) -> np.ndarray:
    """Sum of outer products of all block vectors; unit trace required.

    The result is symmetric PSD by construction.  It is additionally
    invariant under partial transposition exactly when the six constraint
    residuals vanish.
    """
    total = sp.normalization(d)
    if abs(total - 1.0) > 1e-8:
        raise ValueError(f"block norms sum to {total}, off by {total - 1.0}")
    s0, s1, d0, d1 = build_state_vectors(d, sp, frame)
    rho = np.outer(s0, s0) + np.outer(s1, s1)
    for vec in d0:
        rho += np.outer(vec, vec)
    for vec in d1:
        rho += np.outer(vec, vec)
    rho.setflags(write=False)
    return rho


def state_spectrum(d: int, sp: StateParams) -> StateSpectrumInfo:
    return sp.probabilities()


# ---------------------------------------------------------------------------
# Bell operator and induced behavior


def bell_operator(d: int, ms: MeasurementSet) -> np.ndarray:
    """The Bell expression as an operator on the d*d product space.

    Expectation against any unit-trace state reproduces the functional's
    value on the induced behavior.  The double sum over distinct setting
    pairs is assembled from the sums of the rank-one projectors minus the
    diagonal, keeping assembly linear in d.
    """
    if ms.d != d:
        raise ValueError("measurement set dimension does not match d")
    eye = np.eye(d)
    a_proj = [np.outer(v, v) for v in ms.alice_vectors]
    b_proj = [np.outer(v, v) for v in ms.bob0_vectors]
    b01 = np.outer(ms.bob1_vector, ms.bob1_vector)

    op = (d - 2) * kron(a_proj[0], b01 - b_proj[0])
    a_sum = sum(a_proj[1:])
    b_sum = sum(b_proj[1:])
    op -= kron(a_sum, b_sum)
    for i in range(1, d):
        op += kron(a_proj[i], b_proj[i])
    op -= kron((d - 1) * eye - a_sum, b01)
    op.setflags(write=False)
    return op


def induced_behavior(d: int, ms: MeasurementSet, rho: np.ndarray) -> Behavior:
    """Conditional probability tables p(ab|xy) = <A_a x B_b> in the state rho."""
    r4 = rho.reshape(d, d, d, d)
    rho_a = np.trace(r4, axis1=1, axis2=3)
    rho_b = np.trace(r4, axis1=0, axis2=2)

    scenario = Scenario(alice_outcomes=(2,) * d, bob_outcomes=(d, 2))
    tables: dict[tuple[int, int], list[list[float]]] = {}
    for x in range(d):
        va = ms.alice_vectors[x]
        pa0 = float(va @ rho_a @ va)
        # d-outcome setting first, then the binary one.
        cols = []
        for b in range(d):
            vb = ms.bob0_vectors[b]
            joint = np.kron(va, vb)
            p0b = float(joint @ rho @ joint)
            marg_b = float(vb @ rho_b @ vb)
            cols.append((p0b, marg_b - p0b))
        tables[(x, 0)] = [[c[0] for c in cols], [c[1] for c in cols]]
        # binary setting
        vb = ms.bob1_vector
        joint = np.kron(va, vb)
        p00 = float(joint @ rho @ joint)
        pb0 = float(vb @ rho_b @ vb)
        tables[(x, 1)] = [
            [p00, pa0 - p00],
            [pb0 - p00, 1.0 - pa0 - pb0 + p00],
        ]
    return Behavior(scenario, tables)


# ---------------------------------------------------------------------------
# Flat parameter serialization (shared by the CLI)


def params_to_dict(d: int, sp: StateParams, mp: MeasurementParams) -> dict[str, float]:
    out: dict[str, float] = {"d": d}
    for key in PARAM_KEYS:
        out[key] = getattr(sp, key)
    for key in ("x0", "x1", "x2", "y0", "y1"):
        out[key] = getattr(mp, key)
    return out


def params_from_dict(payload: dict[str, float]) -> tuple[int, StateParams, MeasurementParams]:
    d = int(payload["d"])
    sp = StateParams(**{key: float(payload[key]) for key in PARAM_KEYS})
    mp = MeasurementParams(
        x0=float(payload["x0"]), x1=float(payload["x1"]), x2=float(payload["x2"]),
        y0=float(payload["y0"]), y1=float(payload["y1"]),
    )
    return d, sp, mp
