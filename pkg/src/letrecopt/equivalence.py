"""Bounded operational-equivalence oracles.

`check_op_eq` compares depth-truncated head-normal-form trees after
alpha-canonicalization: equal trees mean the terms are convertible as far
as the cutoff can see, a differing node is a concrete counterexample, and
fuel starvation is reported as inconclusive rather than as equivalence.

`applicative_experiments` is a secondary oracle running rounds of the
classic experiment: test whether both sides reduce to an abstraction and,
if so, apply both to a common probe drawn pseudo-randomly from a fixed
pool.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .reduction import (
    DEFAULT_FUEL,
    Bottom,
    FiniteApprox,
    Node,
    ReductionStats,
    _whnf,
    boehm_approx,
)
from .terms import Abs, App, Term, Var, parse

__all__ = [
    "Verdict",
    "equivalent_to_depth",
    "distinct",
    "inconclusive",
    "check_op_eq",
    "applicative_experiments",
    "PROBE_POOL",
]


@dataclass(frozen=True)
class Verdict:
    kind: str  # "equivalent" | "distinct" | "inconclusive"
    depth: int = 0  # depth (or rounds) the verdict holds for
    witness: tuple | None = None  # child-index path to a differing node
    reason: str | None = None  # for inconclusive: "fuel" | "depth" | "stuck"

    @property
    def is_equivalent(self) -> bool:
        return self.kind == "equivalent"

    @property
    def is_distinct(self) -> bool:
        return self.kind == "distinct"


def equivalent_to_depth(d: int) -> Verdict:
    return Verdict("equivalent", depth=d)


def distinct(witness: tuple, depth: int = 0) -> Verdict:
    return Verdict("distinct", depth=depth, witness=witness)


def inconclusive(reason: str, depth: int = 0) -> Verdict:
    return Verdict("inconclusive", depth=depth, reason=reason)


def _first_difference(a: FiniteApprox, b: FiniteApprox, path: tuple) -> tuple | None:
    if isinstance(a, Bottom) and isinstance(b, Bottom):
        return None  # cutoff cause does not distinguish trees
    if isinstance(a, Bottom) or isinstance(b, Bottom):
        return path
    if a.prefix != b.prefix or a.head != b.head or len(a.children) != len(b.children):
        return path
    for i, (ca, cb) in enumerate(zip(a.children, b.children)):
        diff = _first_difference(ca, cb, path + (i,))
        if diff is not None:
            return diff
    return None


def _has_fuel_bottom(a: FiniteApprox) -> bool:
    if isinstance(a, Bottom):
        return a.cause == "fuel"
    return any(_has_fuel_bottom(c) for c in a.children)


def check_op_eq(t1: Term, t2: Term, depth: int, fuel: int = DEFAULT_FUEL) -> Verdict:
    """Compare finite approximations of two terms at the given depth.

    Bottom compares equal only to Bottom; when the trees agree but some
    Bottom was caused by fuel rather than by the depth cutoff, the verdict
    is downgraded to inconclusive.
    """
    a1 = boehm_approx(t1, depth, fuel)
    a2 = boehm_approx(t2, depth, fuel)
    diff = _first_difference(a1, a2, ())
    if diff is not None:
        return distinct(diff, depth)
    if _has_fuel_bottom(a1) or _has_fuel_bottom(a2):
        return inconclusive("fuel", depth)
    return equivalent_to_depth(depth)


# ---------------------------------------------------------------------------
# Applicative experiments

PROBE_POOL: tuple[Term, ...] = (
    Var("probe_c0"),
    Var("probe_c1"),
    parse("\\x. x"),
    parse("\\x. \\y. \\p. p x y"),
)


def _reduces_to_abstraction(t: Term, fuel: int) -> tuple[bool, Term, bool]:
    stats = ReductionStats()
    out, exhausted = _whnf(t, fuel, stats)
    return isinstance(out, Abs), out, exhausted


def applicative_experiments(
    t1: Term,
    t2: Term,
    rounds: int,
    seed: int = 0,
    fuel: int = DEFAULT_FUEL,
) -> Verdict:
    """Run rounds of reduces-to-abstraction experiments with common probes.

    Any disagreement on the abstraction test is distinct; when both sides
    stop being abstractions the experiments cannot continue and the result
    so far is reported as inconclusive ("stuck").
    """
    rng = random.Random(seed)
    m1, m2 = t1, t2
    for i in range(rounds):
        is_abs1, w1, ex1 = _reduces_to_abstraction(m1, fuel)
        is_abs2, w2, ex2 = _reduces_to_abstraction(m2, fuel)
        if ex1 or ex2:
            return inconclusive("fuel", i)
        if is_abs1 != is_abs2:
            return distinct((i,), i)
        if not is_abs1:
            return inconclusive("stuck", i)
        probe = rng.choice(PROBE_POOL)
        m1 = App(w1, probe)
        m2 = App(w2, probe)
    return equivalent_to_depth(rounds)
