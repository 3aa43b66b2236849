"""Optimizing transformations over lambda-letrec terms.

Two rewrites do the work: lifting a recurrent parameter out of a recursive
definition (introducing an inner letrec under an eta-expansion header) and
substituting a strongly dominated variable by its dominating source, with
vacuous binders eliminated afterwards.  `optimize` assembles them into a
verified pipeline: every applied step must pass the bounded equivalence
oracle, otherwise the whole run rolls back to the original term.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .binding import (
    BLACKHOLE,
    BindingGraph,
    ExprNode,
    GraphNode,
    VarNode,
    binding_graph,
    decorate,
    parameter_cycles,
)
from .dominators import strong_dominators_of
from .equivalence import Verdict, check_op_eq
from .infer import BareType, infer_types
from .reduction import DEFAULT_FUEL, ReductionStats, count_steps_to_depth
from .terms import (
    Abs,
    App,
    Letrec,
    Path,
    Term,
    Var,
    abs_chain,
    all_names,
    alpha_eq,
    binders,
    ensure_distinctly_bound,
    free_vars,
    fresh_name,
    make_app,
    path_key,
    pretty,
    replace_at,
    spine,
    strip_abs,
    substitute,
    substitute_parallel,
    subterm_at,
    subterms,
)

__all__ = [
    "NotApplicableError",
    "Candidate",
    "AppliedStep",
    "OptReport",
    "lift_recurrent_parameter",
    "substitute_dominated",
    "eliminate_vacuous_binders",
    "unfold_once",
    "cleanup",
    "find_candidates",
    "optimize",
]

_MAX_PIPELINE_STEPS = 50


class NotApplicableError(ValueError):
    """The transformation's side conditions do not hold."""

    def __init__(self, message: str, at: Path | None = None):
        super().__init__(message)
        self.at = at


# ---------------------------------------------------------------------------
# Recurrent-parameter lifting

def _locate_definition(t: Term, f: str) -> tuple[Path, Letrec, int]:
    for path, sub in subterms(t):
        if isinstance(sub, Letrec):
            for i, (name, _) in enumerate(sub.defs):
                if name == f:
                    return path, sub, i
    raise NotApplicableError(f"{f} is not letrec-defined")


def lift_recurrent_parameter(t: Term, f: str, k: int) -> Term:
    """Lift the k-th parameter of f out of its recursion.

    Requires every occurrence of f inside its own definition body to be a
    call passing that parameter unchanged at position k (and not using it
    in the other arguments).  Calls of f elsewhere keep their shape: the
    new definition rebinds all parameters in an eta-expansion header and
    delegates to an inner recursive definition without the lifted one.
    """
    term, _, _ = _lift(t, f, k)
    return term


def _lift(t: Term, f: str, k: int) -> tuple[Term, str, list[str]]:
    path, letrec_node, def_index = _locate_definition(t, f)
    def_term = letrec_node.defs[def_index][1]
    params, body = strip_abs(def_term)
    if len(params) < k or k < 1:
        raise NotApplicableError(f"{f} does not bind a parameter at position {k}")
    y = params[k - 1]
    non_y = [p for i, p in enumerate(params) if i != k - 1]

    taken = set(all_names(t))
    inner_name = fresh_name(f, taken)
    taken.add(inner_name)
    primed = {}
    for p in non_y:
        primed[p] = fresh_name(p, taken)
        taken.add(primed[p])

    def rewrite(u: Term, at: Path) -> Term:
        if isinstance(u, Var):
            if u.name == f:
                raise NotApplicableError(
                    f"occurrence of {f} is not a call with at least {k} arguments", at
                )
            return u
        if isinstance(u, App):
            head, args = spine(u)
            if head == Var(f):
                if len(args) < k:
                    raise NotApplicableError(
                        f"recursive call of {f} supplies fewer than {k} arguments", at
                    )
                if args[k - 1] != Var(y):
                    raise NotApplicableError(
                        f"recursive call of {f} does not pass {y} unchanged at position {k}",
                        at,
                    )
                for j, a in enumerate(args):
                    if j != k - 1 and y in free_vars(a):
                        raise NotApplicableError(
                            f"lifted parameter {y} occurs inside another argument", at
                        )
                new_args = [
                    rewrite(a, at + ("arg",) * (len(args) - j))
                    for j, a in enumerate(args)
                    if j != k - 1
                ]
                return make_app(Var(inner_name), new_args)
            return App(rewrite(u.fun, at + ("fun",)), rewrite(u.arg, at + ("arg",)))
        if isinstance(u, Abs):
            return Abs(u.binder, rewrite(u.body, at + ("body",)))
        if isinstance(u, Letrec):
            defs = tuple(
                (n, rewrite(d, at + (("def", i),))) for i, (n, d) in enumerate(u.defs)
            )
            return Letrec(defs, rewrite(u.body, at + ("body",)))
        raise TypeError(f"not a term: {u!r}")

    body2 = rewrite(body, ())
    body3 = substitute_parallel(body2, {p: Var(primed[p]) for p in non_y})
    inner_def = abs_chain([primed[p] for p in non_y], body3)
    header_body = Letrec(
        ((inner_name, inner_def),),
        make_app(Var(inner_name), [Var(p) for p in non_y]),
    )
    new_def = abs_chain(params, header_body)
    defs = list(letrec_node.defs)
    defs[def_index] = (f, new_def)
    return (
        replace_at(t, path, Letrec(tuple(defs), letrec_node.body)),
        inner_name,
        non_y,
    )


# ---------------------------------------------------------------------------
# Dominated-variable substitution

def _scopes_of_occurrences(t: Term, x: str) -> list[frozenset[str]]:
    """Binder sets in scope at each free occurrence of x beneath its binder."""
    out: list[frozenset[str]] = []

    def walk(u: Term, scope: frozenset[str]) -> None:
        if isinstance(u, Var):
            if u.name == x and x in scope:
                out.append(scope)
        elif isinstance(u, Abs):
            walk(u.body, scope | {u.binder})
        elif isinstance(u, App):
            walk(u.fun, scope)
            walk(u.arg, scope)
        elif isinstance(u, Letrec):
            inner = scope | set(u.names())
            for _, d in u.defs:
                walk(d, inner)
            walk(u.body, inner)

    walk(t, frozenset())
    return out


def substitute_dominated(t: Term, x: str, dominator: GraphNode) -> Term:
    """Replace every occurrence of x by its dominating source term.

    The binder of x stays in place (now vacuous) for the follow-up binder
    elimination.  The source must be concrete (never the blackhole) and
    all its free variables must be in scope at every occurrence of x.
    """
    if dominator is BLACKHOLE:
        raise NotApplicableError("the blackhole is not a substitutable source")
    if isinstance(dominator, VarNode):
        d: Term = Var(dominator.name)
    else:
        try:
            d = subterm_at(t, dominator.path)
        except KeyError:
            raise NotApplicableError("stale dominator node") from None
        if pretty(d) != dominator.label:
            raise NotApplicableError("stale dominator node")
    if x in free_vars(d):
        raise NotApplicableError(f"source term mentions {x} itself")

    binder_path = None
    for path, sub in subterms(t):
        if isinstance(sub, Abs) and sub.binder == x:
            binder_path = path
            break
    if binder_path is None:
        raise NotApplicableError(f"no abstraction binds {x}")

    needed = free_vars(d) & binders(t)
    for scope in _scopes_of_occurrences(t, x):
        missing = needed - scope
        if missing:
            raise NotApplicableError(
                f"source variables {sorted(missing)} are out of scope at an occurrence of {x}"
            )
    abs_node = subterm_at(t, binder_path)
    assert isinstance(abs_node, Abs)
    return replace_at(t, binder_path, Abs(x, substitute(abs_node.body, x, d)))


# ---------------------------------------------------------------------------
# Vacuous-binder elimination

def _spine_arity_at(parent_steps: list[tuple[Term, object]]) -> int:
    """Number of arguments applied to an occurrence, given its ancestors."""
    arity = 0
    for node, step in reversed(parent_steps):
        if isinstance(node, App) and step == "fun":
            arity += 1
        else:
            break
    return arity


def _occurrence_arities(t: Term, fname: str) -> list[int]:
    """Spine arities of every occurrence of a letrec-defined name.

    Distinct binding makes every occurrence of the name refer to the one
    definition, so no scope tracking is needed.
    """
    out: list[int] = []

    def walk(u: Term, ancestors: list[tuple[Term, object]]) -> None:
        if isinstance(u, Var):
            if u.name == fname:
                out.append(_spine_arity_at(ancestors))
        elif isinstance(u, Abs):
            walk(u.body, ancestors + [(u, "body")])
        elif isinstance(u, App):
            walk(u.fun, ancestors + [(u, "fun")])
            walk(u.arg, ancestors + [(u, "arg")])
        elif isinstance(u, Letrec):
            for i, (_, d) in enumerate(u.defs):
                walk(d, ancestors + [(u, ("def", i))])
            walk(u.body, ancestors + [(u, "body")])

    walk(t, [])
    return out


def _drop_argument(t: Term, fname: str, index: int) -> Term:
    """Remove the (index+1)-th argument at every call of fname."""

    def walk(u: Term) -> Term:
        if isinstance(u, Var):
            return u
        if isinstance(u, App):
            head, args = spine(u)
            if isinstance(head, Var) and head.name == fname:
                args = [walk(a) for a in args]
                del args[index]
                return make_app(head, args)
            return App(walk(u.fun), walk(u.arg))
        if isinstance(u, Abs):
            return Abs(u.binder, walk(u.body))
        if isinstance(u, Letrec):
            defs = tuple((n, walk(d)) for n, d in u.defs)
            return Letrec(defs, walk(u.body))
        raise TypeError(f"not a term: {u!r}")

    return walk(t)


def eliminate_vacuous_binders(t: Term) -> Term:
    """Delete unused binders together with their arguments, to a fixpoint.

    Covers letrec-defined functions whose every occurrence is applied far
    enough, and directly applied abstractions (also through a letrec
    body).  Functions that escape (occur bare or under-applied) keep their
    binders.  Assumes distinctly bound input for name-based call matching.
    """
    term, _ = _eliminate_logged(t)
    return term


def _eliminate_logged(t: Term) -> tuple[Term, list[str]]:
    removed: list[str] = []
    while True:
        step = _eliminate_once(t)
        if step is None:
            return t, removed
        t, binder = step
        removed.append(binder)


def _eliminate_once(t: Term) -> tuple[Term, str] | None:
    # directly applied vacuous abstractions, letrec bodies included
    for path, sub in sorted(subterms(t), key=lambda p: path_key(p[0])):
        if not isinstance(sub, App):
            continue
        fun = sub.fun
        if isinstance(fun, Abs) and fun.binder not in free_vars(fun.body):
            return replace_at(t, path, fun.body), fun.binder
        if (
            isinstance(fun, Letrec)
            and isinstance(fun.body, Abs)
            and fun.body.binder not in free_vars(fun.body.body)
        ):
            new = Letrec(fun.defs, fun.body.body)
            return replace_at(t, path, new), fun.body.binder

    # letrec-defined functions with an unused parameter
    for path, sub in sorted(subterms(t), key=lambda p: path_key(p[0])):
        if not isinstance(sub, Letrec):
            continue
        for i, (fname, d) in enumerate(sub.defs):
            params, body = strip_abs(d)
            for j, p in enumerate(params):
                rest = abs_chain(params[j + 1 :], body)
                if p in free_vars(rest):
                    continue
                arities = _occurrence_arities(t, fname)
                if not arities or any(a < j + 1 for a in arities):
                    continue  # escaping or under-applied somewhere
                defs = list(sub.defs)
                defs[i] = (fname, abs_chain(params[:j] + params[j + 1 :], body))
                shrunk = replace_at(t, path, Letrec(tuple(defs), sub.body))
                return _drop_argument(shrunk, fname, j), p
    return None


# ---------------------------------------------------------------------------
# Single unfolding

def unfold_once(t: Term, f: str) -> Term:
    """Unfold f's occurrences in its letrec body (definitions untouched)."""
    path, letrec_node, def_index = _locate_definition(t, f)
    wrapped = Letrec(letrec_node.defs, letrec_node.defs[def_index][1])
    new_body = substitute(letrec_node.body, f, wrapped)
    return ensure_distinctly_bound(
        replace_at(t, path, Letrec(letrec_node.defs, new_body))
    )


# ---------------------------------------------------------------------------
# Compile-time cleanup between pipeline steps

def _cleanup_once(t: Term) -> Term | None:
    for path, sub in sorted(subterms(t), key=lambda p: path_key(p[0])):
        if isinstance(sub, Letrec):
            body_free = free_vars(sub.body)
            if not any(n in body_free for n in sub.names()):
                return replace_at(t, path, sub.body)
    return None


def cleanup(t: Term) -> Term:
    """Drop letrecs none of whose definitions the body uses (garbage rule)."""
    while True:
        out = _cleanup_once(t)
        if out is None:
            return t
        t = out


# ---------------------------------------------------------------------------
# Candidates

@dataclass(frozen=True)
class Candidate:
    kind: str  # "dominated-var" | "recurrent-param"
    variable: str
    dominator: GraphNode | None = None
    function: str | None = None
    param_index: int = 0

    def describe(self) -> str:
        if self.kind == "dominated-var":
            label = (
                self.dominator.label
                if isinstance(self.dominator, ExprNode)
                else getattr(self.dominator, "name", "?")
            )
            return f"substitute {self.variable} := {label}"
        return f"lift parameter {self.variable} (position {self.param_index} of {self.function})"


def _binder_positions(t: Term) -> dict[str, Path]:
    out: dict[str, Path] = {}
    for path, sub in subterms(t):
        if isinstance(sub, Abs) and sub.binder not in out:
            out[sub.binder] = path
    return out


def _leading_param_index(t: Term, x: str) -> tuple[str, int] | None:
    """(definition name, 1-based index) when x is a leading parameter."""
    for _, sub in subterms(t):
        if isinstance(sub, Letrec):
            for name, d in sub.defs:
                params, _ = strip_abs(d)
                if x in params:
                    return name, params.index(x) + 1
    return None


def find_candidates(term: Term, graph: BindingGraph) -> list[Candidate]:
    """Applicable transformation candidates, deterministically ordered.

    Dominated variables come before recurrent parameters; within a kind,
    candidates follow the textual position of the binder.
    """
    positions = _binder_positions(term)
    order = lambda name: path_key(positions.get(name, ()))

    dominated: list[Candidate] = []
    for x in sorted(positions, key=order):
        doms = [
            dnode
            for dnode in strong_dominators_of(graph, x)
            if dnode is not BLACKHOLE
        ]
        exprs = sorted(
            (d for d in doms if isinstance(d, ExprNode)), key=lambda e: path_key(e.path)
        )
        variables = sorted((d for d in doms if isinstance(d, VarNode)), key=lambda v: v.name)
        for dnode in exprs + variables:
            source = (
                Var(dnode.name)
                if isinstance(dnode, VarNode)
                else subterm_at(term, dnode.path)
            )
            if x in free_vars(source):
                continue
            dominated.append(Candidate("dominated-var", x, dominator=dnode))
            break

    recurrent: list[Candidate] = []
    for cycle in parameter_cycles(graph):
        if len(cycle) != 1:
            continue
        x = cycle[0]
        sources = graph.in_sources(x)
        if not sources <= {VarNode(x), BLACKHOLE}:
            continue
        found = _leading_param_index(term, x)
        if found is None:
            continue
        fname, k = found
        recurrent.append(
            Candidate("recurrent-param", x, function=fname, param_index=k)
        )
    recurrent.sort(key=lambda c: order(c.variable))
    return dominated + recurrent


# ---------------------------------------------------------------------------
# The pipeline

@dataclass
class AppliedStep:
    description: str
    verdict: Verdict
    binders_eliminated: list[str] = field(default_factory=list)


@dataclass
class OptReport:
    applied_steps: list[AppliedStep] = field(default_factory=list)
    binders_eliminated: list[str] = field(default_factory=list)
    unfolds: int = 0
    verification_failure: str | None = None
    savings_depth: int = 8
    beta_before: int = 0
    beta_after: int = 0

    @property
    def beta_saved(self) -> int:
        return self.beta_before - self.beta_after

    def as_dict(self) -> dict:
        return {
            "applied_steps": [
                {
                    "description": s.description,
                    "verified_to_depth": s.verdict.depth,
                    "binders_eliminated": s.binders_eliminated,
                }
                for s in self.applied_steps
            ],
            "binders_eliminated": self.binders_eliminated,
            "unfolds": self.unfolds,
            "verification_failure": self.verification_failure,
            "savings_depth": self.savings_depth,
            "beta_before": self.beta_before,
            "beta_after": self.beta_after,
            "beta_saved": self.beta_saved,
        }


def _analyze(term: Term, sig: dict[str, BareType] | None) -> BindingGraph:
    return binding_graph(decorate(infer_types(term, sig)))


def _next_candidate_step(
    term: Term, sig: dict[str, BareType] | None
) -> tuple[Term, str, list[str]] | None:
    """Apply the first applicable candidate; None when the term is stable."""
    graph = _analyze(term, sig)
    for cand in find_candidates(term, graph):
        try:
            if cand.kind == "dominated-var":
                t2 = substitute_dominated(term, cand.variable, cand.dominator)
                t2, removed = _eliminate_logged(t2)
            else:
                t2 = lift_recurrent_parameter(term, cand.function, cand.param_index)
                removed = []
        except NotApplicableError:
            continue
        t2 = ensure_distinctly_bound(cleanup(t2))
        if alpha_eq(t2, term):
            continue
        return t2, cand.describe(), removed
    return None


# Per-level cost: the marginal beta count of exploring one more depth unit
# in the approximation tree.  Unfoldings are only kept when they lower it
# (first-iteration peeling leaves it unchanged and is reverted).
_RATE_LO, _RATE_HI = 9, 10


def _marginal_rate(term: Term, fuel: int) -> int:
    hi = count_steps_to_depth(term, _RATE_HI, fuel).beta_steps
    lo = count_steps_to_depth(term, _RATE_LO, fuel).beta_steps
    return hi - lo


def optimize(
    t: Term,
    max_unfolds: int = 1,
    verify_depth: int = 8,
    fuel: int = DEFAULT_FUEL,
    sig: dict[str, BareType] | None = None,
) -> tuple[Term, OptReport]:
    """Run the analysis/transformation loop until no candidate applies.

    Prefers dominated-variable substitution (plus vacuous-binder
    elimination), then recurrent-parameter lifting.  When nothing applies
    and the unfolding budget remains, each letrec name is unfolded once on
    trial: the unfolding is kept only if the transformations it enables
    lower the per-level beta cost (otherwise it is reverted).  Every
    applied step is verified against the bounded equivalence oracle; a
    failed verification on the applied path aborts the run and returns the
    original term with the failure recorded.
    """
    report = OptReport()
    original = ensure_distinctly_bound(t)
    infer_types(original, sig)  # untypable input is refused up front
    term = original
    unfolds_used = 0

    for _ in range(_MAX_PIPELINE_STEPS):
        found = _next_candidate_step(term, sig)
        if found is not None:
            t2, description, removed = found
            verdict = check_op_eq(term, t2, verify_depth, fuel)
            if not verdict.is_equivalent:
                report.verification_failure = (
                    f"{description}: oracle verdict {verdict.kind}"
                )
                return original, report
            report.applied_steps.append(AppliedStep(description, verdict, removed))
            report.binders_eliminated.extend(removed)
            term = t2
            continue

        if unfolds_used < max_unfolds:
            committed = False
            for fname in _letrec_names_in_order(term):
                t2 = ensure_distinctly_bound(cleanup(unfold_once(term, fname)))
                if alpha_eq(t2, term):
                    continue
                # speculative drain: what do the enabled candidates achieve?
                drained = t2
                spec_steps: list[AppliedStep] = []
                ok = True
                for _ in range(_MAX_PIPELINE_STEPS):
                    nxt = _next_candidate_step(drained, sig)
                    if nxt is None:
                        break
                    t3, desc, removed = nxt
                    verdict = check_op_eq(drained, t3, verify_depth, fuel)
                    if not verdict.is_equivalent:
                        ok = False  # discard the branch, keep the term safe
                        break
                    spec_steps.append(AppliedStep(desc, verdict, removed))
                    drained = t3
                if not ok or not spec_steps:
                    continue
                if _marginal_rate(drained, fuel) >= _marginal_rate(term, fuel):
                    continue  # only first-iteration peeling: revert
                verdict = check_op_eq(term, t2, verify_depth, fuel)
                if not verdict.is_equivalent:
                    report.verification_failure = (
                        f"unfold {fname}: oracle verdict {verdict.kind}"
                    )
                    return original, report
                report.applied_steps.append(AppliedStep(f"unfold {fname} once", verdict))
                report.unfolds += 1
                unfolds_used += 1
                for s in spec_steps:
                    report.applied_steps.append(s)
                    report.binders_eliminated.extend(s.binders_eliminated)
                term = drained
                committed = True
                break
            if committed:
                continue
        break

    report.beta_before = count_steps_to_depth(original, report.savings_depth, fuel).beta_steps
    report.beta_after = count_steps_to_depth(term, report.savings_depth, fuel).beta_steps
    return term, report


def _letrec_names_in_order(t: Term) -> list[str]:
    out: list[str] = []
    for _, sub in sorted(subterms(t), key=lambda p: path_key(p[0])):
        if isinstance(sub, Letrec):
            out.extend(n for n in sub.names() if n not in out)
    return out
