"""Bell scenarios, the I_d inequality family, and exact classical bounds.

The scenario throughout has Alice holding ``d`` two-outcome settings and Bob
one ``d``-outcome plus one two-outcome setting.  Functionals are stored as
sparse coefficient maps on conditional probabilities p(ab|xy); deterministic
strategies are enumerated exactly (integer arithmetic on 0/1 indicators), so
classical bounds carry no numerical error.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

__all__ = [
    "Scenario",
    "BellFunctional",
    "DeterministicStrategy",
    "Behavior",
    "make_id",
    "make_yu_oh",
    "make_d4_first",
    "evaluate_strategy",
    "classical_bound",
    "evaluate_behavior",
    "canonical_key",
    "equivalent_under_relabeling",
    "degenerate_alice_setting",
    "drop_bob_outcome",
    "functional_to_json",
    "functional_from_json",
]

ENUMERATION_CAP = 2 ** 24

# Coefficient key: (alice setting x, bob setting y, alice outcome a, bob outcome b)
Coeffs = dict[tuple[int, int, int, int], float]


@dataclass(frozen=True)
class Scenario:
    """Outcome counts per setting for each party."""

    alice_outcomes: tuple[int, ...]
    bob_outcomes: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.alice_outcomes or not self.bob_outcomes:
            raise ValueError("each party needs at least one setting")
        if any(n < 1 for n in self.alice_outcomes + self.bob_outcomes):
            raise ValueError("outcome counts must be positive")

    def strategy_count(self) -> int:
        alice = 1
        for n in self.alice_outcomes:
            alice *= n
        bob = 1
        for n in self.bob_outcomes:
            bob *= n
        return alice * bob


def _id_scenario(d: int) -> Scenario:
    return Scenario(alice_outcomes=(2,) * d, bob_outcomes=(d, 2))


@dataclass(frozen=True)
class BellFunctional:
    """Sparse Bell expression sum_{xyab} w * p(ab|xy) with classical bound."""

    scenario: Scenario
    coeffs: Coeffs = field(default_factory=dict)
    bound: float = 0.0

    def __post_init__(self) -> None:
        for (x, y, a, b) in self.coeffs:
            if not (0 <= x < len(self.scenario.alice_outcomes)):
                raise ValueError(f"alice setting {x} out of range")
            if not (0 <= y < len(self.scenario.bob_outcomes)):
                raise ValueError(f"bob setting {y} out of range")
            if not (0 <= a < self.scenario.alice_outcomes[x]):
                raise ValueError(f"alice outcome {a} out of range for setting {x}")
            if not (0 <= b < self.scenario.bob_outcomes[y]):
                raise ValueError(f"bob outcome {b} out of range for setting {y}")


@dataclass(frozen=True)
class DeterministicStrategy:
    """One outcome per setting for each party."""

    alice: tuple[int, ...]
    bob: tuple[int, ...]


def make_id(d: int) -> BellFunctional:
    """The d-setting inequality I_d <= 0.

    Coefficients: +(d-2) on (x=0,y=1,a=0,b=0), -(d-2) on (0,0,0,0),
    -1 on (i,0,0,j) for distinct i,j in 1..d-1, and -1 on (i,1,1,0) for
    i in 1..d-1.  At d=4 this is, term for term, the second tight facet of
    the local polytope; at d=3 it is the three-setting inequality with
    Alice's settings 1 and 2 interchanged.
    """
    if d < 3:
        raise ValueError("the inequality family needs d >= 3")
    coeffs: Coeffs = {
        (0, 1, 0, 0): float(d - 2),
        (0, 0, 0, 0): -float(d - 2),
    }
    for i in range(1, d):
        for j in range(1, d):
            if i != j:
                coeffs[(i, 0, 0, j)] = -1.0
    for i in range(1, d):
        coeffs[(i, 1, 1, 0)] = -1.0
    return BellFunctional(scenario=_id_scenario(d), coeffs=coeffs, bound=0.0)


def make_yu_oh(d: int) -> BellFunctional:
    """The earlier d-setting inequality this family generalizes.

    p(00|01) - p(00|00) - sum_i p(0i|i0) - sum_i p(10|i1) <= 0 with i
    running over 1..d-1.
    """
    if d < 3:
        raise ValueError("the inequality family needs d >= 3")
    coeffs: Coeffs = {
        (0, 1, 0, 0): 1.0,
        (0, 0, 0, 0): -1.0,
    }
    for i in range(1, d):
        coeffs[(i, 0, 0, i)] = -1.0
        coeffs[(i, 1, 1, 0)] = -1.0
    return BellFunctional(scenario=_id_scenario(d), coeffs=coeffs, bound=0.0)


def make_d4_first() -> BellFunctional:
    """The first of the two tight four-setting facets (ten unit terms).

    Restricting Alice's setting 3 to a constant outcome-1 answer and Bob's
    fourth outcome of setting 0 to probability zero reduces it to the
    three-setting inequality of make_yu_oh(3).  The (3,0,0,3) term must
    carry -1: with +1 the strategy alice=(0,1,1,0), bob=(3,1) scores 1,
    which contradicts the zero bound (the restriction property holds either
    way, since the restriction deletes the term).
    """
    coeffs: Coeffs = {
        (0, 1, 0, 0): 1.0,
        (0, 0, 0, 0): -1.0,
        (1, 0, 0, 2): -1.0,
        (1, 0, 0, 3): -1.0,
        (1, 1, 1, 0): -1.0,
        (2, 0, 0, 1): -1.0,
        (2, 0, 0, 3): -1.0,
        (2, 1, 1, 0): -1.0,
        (3, 0, 0, 3): -1.0,
        (3, 1, 0, 0): -1.0,
    }
    return BellFunctional(scenario=_id_scenario(4), coeffs=coeffs, bound=0.0)


def evaluate_strategy(f: BellFunctional, strategy: DeterministicStrategy) -> float:
    """Value of the functional on a local deterministic strategy."""
    if len(strategy.alice) != len(f.scenario.alice_outcomes):
        raise ValueError("alice strategy length does not match scenario")
    if len(strategy.bob) != len(f.scenario.bob_outcomes):
        raise ValueError("bob strategy length does not match scenario")
    total = 0.0
    for (x, y, a, b), w in f.coeffs.items():
        if strategy.alice[x] == a and strategy.bob[y] == b:
            total += w
    return total


def classical_bound(f: BellFunctional) -> tuple[float, DeterministicStrategy]:
    """Exact local bound by exhaustive enumeration of deterministic strategies.

    Alice's assignments are enumerated outright; for each one Bob's settings
    decouple, so his best response is taken setting by setting (every local
    vertex value is still realized, the maximum is exact).  Raises when the
    full strategy count exceeds 2**24; for the I_d scenario that caps d at 18.
    Ties are broken by the first assignment found.
    """
    count = f.scenario.strategy_count()
    if count > ENUMERATION_CAP:
        raise ValueError(f"strategy count {count} exceeds enumeration cap {ENUMERATION_CAP}")

    n_bob = len(f.scenario.bob_outcomes)
    best_val = -float("inf")
    best: DeterministicStrategy | None = None
    items = list(f.coeffs.items())
    for alice in itertools.product(*(range(n) for n in f.scenario.alice_outcomes)):
        # Bob's settings contribute independently once Alice is fixed.
        gains = [[0.0] * n for n in f.scenario.bob_outcomes]
        for (x, y, a, b), w in items:
            if alice[x] == a:
                gains[y][b] += w
        val = 0.0
        bob = []
        for y in range(n_bob):
            g = gains[y]
            b_best = max(range(len(g)), key=g.__getitem__)
            bob.append(b_best)
            val += g[b_best]
        if val > best_val:
            best_val = val
            best = DeterministicStrategy(alice=alice, bob=tuple(bob))
    assert best is not None
    return best_val, best


class Behavior:
    """Conditional probability tables p(ab|xy), one (na x nb) block per (x, y).

    The table is stored as plain nested lists so callers may also evaluate
    non-normalized arrays; ``validate`` enforces normalization and
    nonnegativity for behaviors that claim to be physical.
    """

    def __init__(self, scenario: Scenario, tables: dict[tuple[int, int], list[list[float]]]):
        self.scenario = scenario
        self.tables = tables

    @classmethod
    def constant(cls, scenario: Scenario, value: float) -> "Behavior":
        tables = {}
        for x, na in enumerate(scenario.alice_outcomes):
            for y, nb in enumerate(scenario.bob_outcomes):
                tables[(x, y)] = [[value] * nb for _ in range(na)]
        return cls(scenario, tables)

    def prob(self, x: int, y: int, a: int, b: int) -> float:
        return self.tables[(x, y)][a][b]

    def validate(self, tol: float = 1e-10) -> None:
        for (x, y), block in self.tables.items():
            total = 0.0
            for row in block:
                for p in row:
                    if p < -tol:
                        raise ValueError(f"negative probability {p} at setting ({x},{y})")
                    total += p
            if abs(total - 1.0) > tol:
                raise ValueError(f"setting ({x},{y}) sums to {total}, not 1")


def evaluate_behavior(f: BellFunctional, behavior: Behavior) -> float:
    """sum of w * p(ab|xy) over the functional's coefficients."""
    return sum(w * behavior.prob(x, y, a, b) for (x, y, a, b), w in f.coeffs.items())


# ---------------------------------------------------------------------------
# Relabeling equivalence


def _outcome_classes(counts: tuple[int, ...]) -> list[list[int]]:
    """Settings grouped by outcome count; only these may be permuted."""
    classes: dict[int, list[int]] = {}
    for idx, n in enumerate(counts):
        classes.setdefault(n, []).append(idx)
    return list(classes.values())


def _setting_permutations(counts: tuple[int, ...]):
    """All permutations of settings that preserve per-setting outcome counts."""
    classes = _outcome_classes(counts)
    for per_class in itertools.product(*(itertools.permutations(c) for c in classes)):
        perm = list(range(len(counts)))
        for original, permuted in zip(classes, per_class):
            for src, dst in zip(original, permuted):
                perm[src] = dst
        yield tuple(perm)


def _relabelings(scenario: Scenario):
    """Every (setting permutation, per-setting outcome permutation) pair."""
    alice_outcome_perms = [
        list(itertools.permutations(range(n))) for n in scenario.alice_outcomes
    ]
    bob_outcome_perms = [
        list(itertools.permutations(range(n))) for n in scenario.bob_outcomes
    ]
    for a_perm in _setting_permutations(scenario.alice_outcomes):
        for b_perm in _setting_permutations(scenario.bob_outcomes):
            for a_out in itertools.product(*alice_outcome_perms):
                for b_out in itertools.product(*bob_outcome_perms):
                    yield a_perm, b_perm, a_out, b_out


def canonical_key(f: BellFunctional) -> tuple:
    """Lexicographically minimal coefficient map over all relabelings.

    Two functionals on the same scenario are equivalent under relabeling of
    settings and outcomes iff their keys match.  The relabeling group is
    enumerated outright, so this is only meant for small scenarios (the
    d = 3, 4 facet comparisons).
    """
    best = None
    for a_perm, b_perm, a_out, b_out in _relabelings(f.scenario):
        relabeled = []
        for (x, y, a, b), w in f.coeffs.items():
            # Outcome permutations are indexed by the original setting; the
            # term then moves to the permuted setting slot.
            relabeled.append((a_perm[x], b_perm[y], a_out[x][a], b_out[y][b], round(w, 12)))
        key = tuple(sorted(relabeled))
        if best is None or key < best:
            best = key
    assert best is not None
    return best


def equivalent_under_relabeling(f: BellFunctional, g: BellFunctional) -> bool:
    """Whether two functionals coincide after relabeling settings/outcomes."""
    if f.scenario != g.scenario:
        return False
    return canonical_key(f) == canonical_key(g)


# ---------------------------------------------------------------------------
# Scenario restrictions (used to compare facets across d)


def degenerate_alice_setting(f: BellFunctional, x: int, kept_outcome: int) -> BellFunctional | None:
    """Force Alice's setting ``x`` to answer ``kept_outcome`` always, then drop it.

    Terms on the other outcome get probability zero and are deleted.  Terms
    on the kept outcome would survive as Bob marginals, so the reduction is
    only clean when there are none; returns the functional on the scenario
    without setting ``x`` in that case, else None.
    """
    for (tx, _, a, _) in f.coeffs:
        if tx == x and a == kept_outcome:
            return None
    new_coeffs: Coeffs = {}
    for (tx, y, a, b), w in f.coeffs.items():
        if tx == x:
            continue  # a != kept_outcome here, so p(ab|xy) = 0
        nx = tx if tx < x else tx - 1
        new_coeffs[(nx, y, a, b)] = w
    alice = f.scenario.alice_outcomes[:x] + f.scenario.alice_outcomes[x + 1:]
    return BellFunctional(
        scenario=Scenario(alice_outcomes=alice, bob_outcomes=f.scenario.bob_outcomes),
        coeffs=new_coeffs,
        bound=f.bound,
    )


def drop_bob_outcome(f: BellFunctional, y: int, outcome: int) -> BellFunctional:
    """Restrict Bob's setting ``y`` to never produce ``outcome``.

    Terms on that outcome get probability zero and are deleted; remaining
    outcomes are renumbered downward.
    """
    new_coeffs: Coeffs = {}
    for (x, ty, a, b), w in f.coeffs.items():
        if ty == y:
            if b == outcome:
                continue
            b = b if b < outcome else b - 1
        new_coeffs[(x, ty, a, b)] = w
    bob = list(f.scenario.bob_outcomes)
    if bob[y] < 2:
        raise ValueError("cannot drop the only outcome of a setting")
    bob[y] -= 1
    return BellFunctional(
        scenario=Scenario(alice_outcomes=f.scenario.alice_outcomes, bob_outcomes=tuple(bob)),
        coeffs=new_coeffs,
        bound=f.bound,
    )


# ---------------------------------------------------------------------------
# Serialization


def functional_to_json(f: BellFunctional) -> str:
    payload = {
        "scenario": {
            "alice": list(f.scenario.alice_outcomes),
            "bob": list(f.scenario.bob_outcomes),
        },
        "coeffs": [
            {"x": x, "y": y, "a": a, "b": b, "w": w}
            for (x, y, a, b), w in sorted(f.coeffs.items())
        ],
        "bound": f.bound,
    }
    return json.dumps(payload, indent=2)


def functional_from_json(text: str) -> BellFunctional:
    payload = json.loads(text)
    scenario = Scenario(
        alice_outcomes=tuple(payload["scenario"]["alice"]),
        bob_outcomes=tuple(payload["scenario"]["bob"]),
    )
    coeffs = {
        (t["x"], t["y"], t["a"], t["b"]): float(t["w"]) for t in payload["coeffs"]
    }
    return BellFunctional(scenario=scenario, coeffs=coeffs, bound=float(payload["bound"]))
