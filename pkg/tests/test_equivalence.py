import random

from hypothesis import given, settings, strategies as st

from letrecopt.equivalence import (
    applicative_experiments,
    check_op_eq,
)
from letrecopt.reduction import (
    BETA,
    GBETA,
    UNFOLD_BODY,
    UNFOLD_GARBAGE,
    contract,
    find_redexes,
)
from letrecopt.terms import abs_chain, make_app, parse, Var

REPEAT = parse("letrec repeat = \\x. cons x (repeat x) in repeat")
REPEAT_OPT = parse("letrec repeat = \\x. letrec xs = cons x xs in xs in repeat")
OMEGA = parse("letrec w = w in w")


def test_repeat_variants_equivalent():
    v = check_op_eq(REPEAT, REPEAT_OPT, depth=6)
    assert v.is_equivalent and v.depth == 6


def test_prefix_length_difference_is_distinct():
    v = check_op_eq(parse("\\x. x"), parse("\\x. \\y. x"), depth=2)
    assert v.is_distinct
    assert v.witness == ()


def test_divergent_pair_is_inconclusive_by_fuel():
    v = check_op_eq(OMEGA, OMEGA, depth=3, fuel=100)
    assert v.kind == "inconclusive"
    assert v.reason == "fuel"


def test_distinct_heads_report_witness_path():
    v = check_op_eq(parse("cons a b"), parse("cons a c"), depth=3)
    assert v.is_distinct
    assert v.witness == (1,)


def test_eta_pair_distinguished():
    # the eta counterexample: an abstraction vs a bare free variable
    v = check_op_eq(parse("\\x. y x"), parse("y"), depth=3)
    assert v.is_distinct


def test_alpha_variants_equivalent():
    v = check_op_eq(parse("\\x. f x x"), parse("\\q. f q q"), depth=4)
    assert v.is_equivalent


def test_distinct_is_stable_under_reduction():
    # approximation trees are reduction invariants: reducing one side
    # before comparison must not change a distinct verdict
    t1 = parse("(\\x. cons x b) a")
    t2 = parse("cons a c")
    assert check_op_eq(t1, t2, depth=3).is_distinct
    t1_red = contract(t1, find_redexes(t1, frozenset({BETA}))[0])
    assert check_op_eq(t1_red, t2, depth=3).is_distinct


def test_reduction_preserves_equivalence_verdict():
    rng = random.Random(42)
    t = parse("letrec f = \\x. cons x (g x); g = \\y. cons y (f y) in f a")
    reduced = t
    for _ in range(3):
        rs = find_redexes(
            reduced, frozenset({BETA, GBETA, UNFOLD_BODY, UNFOLD_GARBAGE})
        )
        if not rs:
            break
        reduced = contract(reduced, rng.choice(rs))
    for d in range(1, 9):
        assert check_op_eq(t, reduced, d).is_equivalent


# -- applicative experiments ------------------------------------------------------

def test_experiments_identity_variants_agree():
    v = applicative_experiments(parse("\\x. x"), parse("\\y. y"), rounds=4, seed=1)
    assert not v.is_distinct


def test_experiments_abstraction_vs_constant_distinct_at_round_zero():
    v = applicative_experiments(parse("\\x. x"), parse("a"), rounds=3, seed=1)
    assert v.is_distinct
    assert v.witness == (0,)


def test_experiments_stuck_pair_is_not_distinct():
    v = applicative_experiments(parse("cons a b"), parse("cons a b"), rounds=3, seed=1)
    assert v.kind == "inconclusive"
    assert v.reason == "stuck"


def test_experiments_deterministic_in_seed():
    a = applicative_experiments(REPEAT, REPEAT_OPT, rounds=5, seed=42)
    b = applicative_experiments(REPEAT, REPEAT_OPT, rounds=5, seed=42)
    assert a == b


def test_cross_oracle_consistency():
    pairs = [
        (REPEAT, REPEAT_OPT),
        (parse("\\x. x"), parse("\\x. \\y. x")),
        (parse("\\x. y x"), parse("y")),
    ]
    for t1, t2 in pairs:
        tree = check_op_eq(t1, t2, depth=5)
        experiments = applicative_experiments(t1, t2, rounds=5, seed=7)
        if experiments.is_distinct:
            assert not tree.is_equivalent


# -- generated vector-eta instances -----------------------------------------------

_pool = st.sampled_from(["a", "b", "cons", "f"])


@st.composite
def _vec_eta_instances(draw):
    n = draw(st.integers(min_value=1, max_value=3))
    names = [f"v{i}" for i in range(n)]
    body_head = draw(_pool)
    arity = draw(st.integers(min_value=0, max_value=2))
    body = make_app(Var(body_head), [Var(draw(_pool)) for _ in range(arity)])
    perm = draw(st.permutations(names))
    inner = abs_chain(list(perm), body)
    lhs = abs_chain(names, make_app(inner, [Var(p) for p in perm]))
    rhs = abs_chain(names, body)
    return lhs, rhs


@given(_vec_eta_instances())
@settings(max_examples=40, deadline=None)
def test_vec_eta_instances_equivalent_to_depth6(pair):
    lhs, rhs = pair
    for d in range(1, 7):
        assert check_op_eq(lhs, rhs, d).is_equivalent
