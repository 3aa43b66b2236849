import pytest

from letrecopt.binding import BLACKHOLE, ExprNode, VarNode, binding_graph, decorate, parameter_cycles
from letrecopt.equivalence import check_op_eq
from letrecopt.infer import UntypableError, infer_types
from letrecopt.reduction import count_steps_to_depth
from letrecopt.terms import (
    App,
    Var,
    alpha_eq,
    ensure_distinctly_bound,
    make_app,
    parse,
    pretty,
    strip_abs,
)
from letrecopt.transform import (
    NotApplicableError,
    cleanup,
    eliminate_vacuous_binders,
    find_candidates,
    lift_recurrent_parameter,
    optimize,
    substitute_dominated,
    unfold_once,
)

REPEAT = "letrec repeat = \\x. cons x (repeat x) in repeat"
REPEAT_OPT = "letrec repeat = \\x. letrec xs = cons x xs in xs in repeat"
REPLICATE = "letrec replicate = \\n. \\x. cons x (replicate (pred n) x) in replicate"
MUTUAL = "letrec f = \\x. cons x (g x); g = \\y. cons y (f y) in f a"
FXFY = "\\x. \\y. letrec f = \\z. cons z (f y) in f x"


def analyze(t):
    return binding_graph(decorate(infer_types(t)))


# -- lift_recurrent_parameter -----------------------------------------------------

def test_lift_repeat_matches_library_form():
    out = lift_recurrent_parameter(parse(REPEAT), "repeat", 1)
    assert alpha_eq(out, parse(REPEAT_OPT))


def test_lift_replicate_equivalent_to_depth8():
    t = parse(REPLICATE)
    out = lift_recurrent_parameter(t, "replicate", 2)
    assert check_op_eq(t, out, depth=8).is_equivalent
    # the lifted parameter is rebound by the header only
    _, d = out.defs[0]
    params, body = strip_abs(d)
    assert params == ["n", "x"]


def test_lift_rejects_changed_argument():
    t = parse("letrec f = \\x. cons x (f (g x)) in f")
    with pytest.raises(NotApplicableError, match="unchanged"):
        lift_recurrent_parameter(t, "f", 1)


def test_lift_rejects_parameter_inside_other_argument():
    t = parse("letrec f = \\x. \\y. cons y (f x (g x)) in f")
    with pytest.raises(NotApplicableError, match="occurs inside"):
        lift_recurrent_parameter(t, "f", 1)


def test_lift_rejects_underapplied_recursive_call():
    t = parse("letrec f = \\x. cons x (h f) in f")
    with pytest.raises(NotApplicableError):
        lift_recurrent_parameter(t, "f", 1)


def test_lift_requires_definition_and_arity():
    with pytest.raises(NotApplicableError, match="not letrec-defined"):
        lift_recurrent_parameter(parse("\\x. x"), "f", 1)
    with pytest.raises(NotApplicableError, match="position"):
        lift_recurrent_parameter(parse(REPEAT), "repeat", 3)


def test_lift_keeps_external_calls_unchanged():
    t = parse("letrec f = \\x. cons x (f x); g = \\q. f q in g b")
    out = lift_recurrent_parameter(t, "f", 1)
    assert "f q" in pretty(out)
    assert check_op_eq(t, out, depth=8).is_equivalent


# -- substitute_dominated -----------------------------------------------------------

def test_substitute_dominated_mutual_chain():
    t = ensure_distinctly_bound(parse(MUTUAL))
    g = analyze(t)
    (a_node,) = [s for s, tgt in g.edges if isinstance(s, ExprNode) and tgt == "x"]
    out = substitute_dominated(t, "x", a_node)
    assert check_op_eq(t, out, depth=8).is_equivalent
    # the binder stays in place, now vacuous
    assert "\\x. cons a (g a)" in pretty(out)


def test_substitute_dominated_rejects_blackhole():
    t = parse(REPEAT)
    with pytest.raises(NotApplicableError, match="blackhole"):
        substitute_dominated(t, "x", BLACKHOLE)


def test_substitute_dominated_scope_violation():
    # the source mentions a binder from a sibling subterm: out of scope
    t = parse("pair (\\q. q) (\\x. use x)")
    with pytest.raises(NotApplicableError, match="out of scope"):
        substitute_dominated(t, "x", VarNode("q"))


def test_substitute_dominated_stale_node():
    t = parse(MUTUAL)
    with pytest.raises(NotApplicableError, match="stale"):
        substitute_dominated(t, "x", ExprNode(("body",), "nonsense"))


def test_substitute_variable_source():
    t = ensure_distinctly_bound(parse("\\y. (\\z. cons z z) y"))
    out = substitute_dominated(t, "z", VarNode("y"))
    assert alpha_eq(out, parse("\\y. (\\z. cons y y) y"))


# -- eliminate_vacuous_binders ---------------------------------------------------------

def test_eliminate_unused_letrec_parameter():
    t = parse("letrec f = \\x. \\y. y in f a b")
    out = eliminate_vacuous_binders(t)
    assert alpha_eq(out, parse("letrec f = \\y. y in f b"))


def test_eliminate_escaping_function_untouched():
    t = parse("letrec f = \\x. \\y. y in pair (f a b) f")
    assert eliminate_vacuous_binders(t) == t


def test_eliminate_underapplied_untouched():
    t = parse("letrec f = \\x. \\y. y in f a")
    # y's index is 2 but f is applied to one argument only
    out = eliminate_vacuous_binders(t)
    assert alpha_eq(out, parse("letrec f = \\y. y in f"))


def test_eliminate_applied_abstraction():
    t = parse("(\\x. cons a b) q")
    assert eliminate_vacuous_binders(t) == parse("cons a b")


def test_eliminate_applied_letrec_body_abstraction():
    t = parse("(letrec f = cons a f in \\z. cons b f) q")
    out = eliminate_vacuous_binders(t)
    assert alpha_eq(out, parse("letrec f = cons a f in cons b f"))


def test_eliminate_runs_to_fixpoint():
    t = parse("letrec f = \\x. \\y. k in f a b")
    out = eliminate_vacuous_binders(t)
    assert alpha_eq(out, parse("letrec f = k in f"))


# -- unfold_once -------------------------------------------------------------------

def test_unfold_once_stream():
    t = parse("letrec r = cons x r in r")
    out = cleanup(unfold_once(t, "r"))
    assert alpha_eq(out, parse("letrec r = cons x r in cons x r"))
    for d in range(1, 9):
        assert check_op_eq(t, out, d).is_equivalent


def test_unfold_once_unused_name():
    t = parse("letrec f = \\x. f x in c")
    assert alpha_eq(unfold_once(t, "f"), t)


def test_unfold_once_missing_name():
    with pytest.raises(NotApplicableError):
        unfold_once(parse("\\x. x"), "f")


def test_unfold_once_exposes_dominator_in_fxfy():
    t = ensure_distinctly_bound(parse(FXFY))
    assert find_candidates(t, analyze(t)) == []
    out = ensure_distinctly_bound(cleanup(unfold_once(t, "f")))
    cands = find_candidates(out, analyze(out))
    assert cands and cands[0].kind == "dominated-var"


# -- candidates ---------------------------------------------------------------------

def test_candidates_repeat_is_recurrent_only():
    t = ensure_distinctly_bound(parse(REPEAT))
    cands = find_candidates(t, analyze(t))
    assert [c.kind for c in cands] == ["recurrent-param"]
    assert cands[0].function == "repeat" and cands[0].param_index == 1


def test_candidates_mutual_prefers_dominated():
    t = ensure_distinctly_bound(parse(MUTUAL))
    cands = find_candidates(t, analyze(t))
    assert cands[0].kind == "dominated-var"
    assert cands[0].variable == "x"


def test_candidates_blocked_by_blackhole_only_dominator():
    # repeat's x has only the blackhole as strong dominator: no substitution
    t = ensure_distinctly_bound(parse(REPEAT))
    cands = find_candidates(t, analyze(t))
    assert all(c.kind != "dominated-var" for c in cands)


# -- optimize -----------------------------------------------------------------------

def test_optimize_repeat_golden():
    out, report = optimize(parse(REPEAT))
    assert alpha_eq(out, parse(REPEAT_OPT))
    assert len(report.applied_steps) == 1
    assert report.verification_failure is None


def test_optimize_repeat_savings_scale_with_depth():
    out, _ = optimize(parse(REPEAT))
    for n in (3, 6, 9):
        orig = count_steps_to_depth(App(parse(REPEAT), Var("c")), n).beta_steps
        opt = count_steps_to_depth(App(out, Var("c")), n).beta_steps
        assert orig == n and opt == 1


def test_optimize_already_optimal_is_noop():
    t = parse(REPEAT_OPT)
    out, report = optimize(t)
    assert alpha_eq(out, ensure_distinctly_bound(t))
    assert report.applied_steps == []


def test_optimize_mutual_eliminates_both_binders():
    out, report = optimize(parse(MUTUAL))
    assert sorted(report.binders_eliminated) == ["x", "y"]
    for _, d in out.defs:
        assert strip_abs(d)[0] == []
    assert check_op_eq(parse(MUTUAL), out, depth=8).is_equivalent


def test_optimize_fxfy_needs_one_unfold():
    out, report = optimize(parse(FXFY), max_unfolds=1)
    assert report.unfolds == 1
    assert check_op_eq(parse(FXFY), out, depth=8).is_equivalent
    # the cure removes the per-iteration rebinding entirely
    probe_orig = make_app(parse(FXFY), [Var("c"), Var("d")])
    probe_opt = make_app(out, [Var("c"), Var("d")])
    d10 = count_steps_to_depth(probe_opt, 10).beta_steps
    d4 = count_steps_to_depth(probe_opt, 4).beta_steps
    assert d10 == d4  # constant beta cost
    assert count_steps_to_depth(probe_orig, 10).beta_steps > d10


def test_optimize_fxfy_without_budget_is_noop():
    out, report = optimize(parse(FXFY), max_unfolds=0)
    assert report.applied_steps == []
    assert alpha_eq(out, ensure_distinctly_bound(parse(FXFY)))


def test_optimize_refuses_untypable_input():
    with pytest.raises(UntypableError):
        optimize(parse("\\x. x x"))


def test_optimize_rolls_back_on_verification_failure(monkeypatch):
    import letrecopt.transform as tr

    real = tr.check_op_eq

    def sabotaged(t1, t2, depth, fuel=0):
        v = real(t1, t2, depth, fuel)
        return tr.Verdict("distinct", depth=v.depth, witness=()) if v.is_equivalent else v

    monkeypatch.setattr(tr, "check_op_eq", sabotaged)
    original = parse(REPEAT)
    out, report = optimize(original)
    assert alpha_eq(out, ensure_distinctly_bound(original))
    assert report.verification_failure is not None
    assert report.applied_steps == []


def test_optimize_idempotent_on_corpus_outputs():
    for src in (REPEAT, REPLICATE, MUTUAL, FXFY):
        out, _ = optimize(parse(src))
        again, report = optimize(out)
        assert alpha_eq(again, out)
        assert report.applied_steps == []


def test_optimize_preserves_semantics_at_all_depths():
    for src in (REPEAT, REPLICATE, MUTUAL, FXFY):
        t = parse(src)
        out, _ = optimize(t)
        for d in range(1, 9):
            assert check_op_eq(t, out, d).is_equivalent, (src, d)


def test_optimize_monotone_step_counts():
    # The eta-expansion header rebinds the non-recurrent parameters once,
    # so the crossover sits at depth 2; from there on the optimized
    # variant never costs more.
    for src in (REPEAT, REPLICATE, MUTUAL, FXFY):
        t = parse(src)
        out, _ = optimize(t)
        for d in range(2, 9):
            assert (
                count_steps_to_depth(out, d).beta_steps
                <= count_steps_to_depth(t, d).beta_steps
            )


def test_lift_removes_parameter_from_cycles():
    t = ensure_distinctly_bound(parse(REPLICATE))
    before = parameter_cycles(analyze(t))
    assert ["x"] in before
    out = lift_recurrent_parameter(t, "replicate", 2)
    after = parameter_cycles(analyze(ensure_distinctly_bound(out)))
    assert all("x" not in cycle for cycle in after)
