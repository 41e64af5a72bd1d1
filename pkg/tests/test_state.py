import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from conftest import int_universe, predicates, rel_predicates, relations
from rgverify import checks
from rgverify.expr import (
    FALSE, TRUE, Const, EvalError, Var, and_, concat, eq, hd, ID, id_all, implies, index_of,
    listlit, member, not_, or_, prime, value,
)
from rgverify.state import Domain, State, UndeclaredVariable, Universe
from rgverify.subst import substitute

x, y = Var("x"), Var("y")


def test_universe_orders_variables_by_name():
    u = int_universe(("y", "x"))
    assert u.names == ("x", "y")
    assert u.size() == 9


def test_state_must_be_total():
    u = int_universe()
    with pytest.raises(ValueError):
        u.state({"x": 0})
    with pytest.raises(UndeclaredVariable):
        u.state({"x": 0, "y": 0, "z": 1})


def test_state_update_and_json():
    u = int_universe()
    s = u.state({"x": 1, "y": 2})
    assert s.update({"x": 0})["x"] == 0 and s["x"] == 1
    assert s.to_json() == {"x": 1, "y": 2}
    assert s.well_typed()


def test_universe_json_round_trip():
    u = int_universe(extra={"b": Domain("bool", (False, True))})
    assert Universe.from_json(u.to_json()) == u


def test_empty_domain_rejected():
    with pytest.raises(ValueError):
        Domain("int", ())


# eval examples

def test_eval_identity_relation():
    u = int_universe(("x",), hi=5)
    s = u.state({"x": 5})
    assert value(eq(prime(x), x), s, s) is True


def test_eval_list_head_and_index():
    u = int_universe()
    s = u.state({"x": 0, "y": 0})
    assert value(hd(listlit("t1", "t2")), s) == "t1"
    assert value(index_of(listlit("t1", "t2"), Const("t2")), s) == 1


def test_eval_unguarded_index_is_an_error():
    u = int_universe()
    s = u.state({"x": 0, "y": 0})
    from rgverify.expr import evaluate
    with pytest.raises(EvalError) as info:
        evaluate(index_of(listlit("t1"), Const("t2")), s)
    assert info.value.kind == "UnguardedIndex"


def test_eval_missing_post_state():
    u = int_universe()
    s = u.state({"x": 0, "y": 0})
    from rgverify.expr import MissingPostState, evaluate
    with pytest.raises(MissingPostState):
        evaluate(eq(prime(x), x), s)


# enumeration

def test_enumerate_counts():
    u = int_universe(("x",), hi=1)
    assert len(list(checks.enumerate_states(u))) == 2
    u2 = int_universe(("x", "y"), hi=1)
    assert [s.as_dict() for s in checks.enumerate_states(u2, eq(x, y))] == [
        {"x": 0, "y": 0}, {"x": 1, "y": 1}]


def test_enumeration_is_lexicographic(mixed):
    states = list(checks.enumerate_states(mixed))
    assert len(states) == mixed.size() == 1512
    assert states == sorted(states)
    assert states == oracles.all_states(mixed)


@given(predicates())
def test_filtered_enumeration_matches_brute_force(p):
    u = oracles_mixed()
    expect = [s for s in oracles.all_states(u) if value(p, s) is True]
    assert list(checks.enumerate_states(u, p)) == expect


def oracles_mixed():
    from conftest import mixed_universe
    global _MIXED
    try:
        return _MIXED
    except NameError:
        _MIXED = mixed_universe()
        return _MIXED


# implication, stability, restriction

def test_implies_pred_examples():
    u = int_universe(("x",), hi=3)
    assert checks.implies_pred(FALSE, eq(x, 3), u)
    assert checks.implies_pred(eq(x, 1), or_(eq(x, 1), eq(x, 2)), u)
    v = checks.implies_pred(TRUE, eq(x, 2), u)
    assert not v and v.pre["x"] == 0


def test_implies_rel_examples(rel_u):
    assert checks.implies_rel(FALSE, eq(prime(x), 7), rel_u)
    assert checks.implies_rel(ID(x), eq(prime(x), x), rel_u)


def test_stable_examples():
    u = int_universe(("x",), hi=5)
    assert checks.stable(eq(x, 5), eq(prime(x), x), u)
    v = checks.stable(eq(x, 5), TRUE, u)
    assert not v and v.pre["x"] == 5 and v.post["x"] != 5


def test_restrict_examples(rel_u):
    r = eq(prime(x), Const(1))
    assert checks.equivalent_rel(checks.restrict(TRUE, r), r, rel_u)
    assert checks.implies_rel(checks.restrict(FALSE, r), FALSE, rel_u)
    g = or_(and_(eq(prime(x), 1), ID(y, Var("b"))), id_all(rel_u))
    assert checks.implies_rel(checks.restrict(TRUE, and_(r, ID(y, Var("b")))), g, rel_u)


def test_filtered_mode_is_recorded():
    u = int_universe(("x",), hi=3)
    assert checks.implies_pred(TRUE, TRUE, u).mode == checks.FULL
    assert checks.implies_pred(TRUE, TRUE, u, filter=eq(x, 1)).mode == checks.FILTERED


def _first_bad(bad, states, rel=False):
    for s in states:
        v = value(bad, *s) if rel else value(bad, s)
        if v is not False:
            return s, v
    return None


@given(predicates(risky=True), predicates(risky=True))
def test_implies_pred_agrees_with_brute_force(p, q):
    u = oracles_mixed()
    hit = _first_bad(and_(p, not_(q)), oracles.all_states(u))
    if hit is None:
        assert checks.implies_pred(p, q, u)
    elif not isinstance(hit[1], bool):
        with pytest.raises(EvalError):
            checks.implies_pred(p, q, u)
    else:
        v = checks.implies_pred(p, q, u)
        assert not v and v.pre == hit[0]


@given(relations(), relations())
def test_implies_rel_agrees_with_brute_force(r1, r2):
    from conftest import rel_universe
    u = rel_universe()
    pairs = list(itertools.product(oracles.all_states(u), repeat=2))
    hit = _first_bad(and_(r1, not_(r2)), pairs, rel=True)
    v = checks.implies_rel(r1, r2, u)
    assert v.holds == (hit is None)
    if hit is not None:
        assert (v.pre, v.post) == hit[0]


@given(rel_predicates(), relations())
def test_stable_agrees_with_brute_force(p, r):
    from conftest import rel_universe
    u = rel_universe()
    expect = oracles.first_unstable(p, r, u)
    v = checks.stable(p, r, u)
    assert v.holds == (expect is None)
    if expect is not None:
        assert (v.pre, v.post) == expect


@given(predicates())
def test_implication_is_reflexive_and_identity_stabilises(p):
    u = oracles_mixed()
    assert checks.implies_pred(p, p, u)


@given(rel_predicates())
def test_identity_preserves_every_predicate(p):
    from conftest import rel_universe
    u = rel_universe()
    assert checks.stable(p, id_all(u), u)


@given(relations())
def test_restrict_true_is_equivalent(r):
    from conftest import rel_universe
    u = rel_universe()
    assert checks.equivalent_rel(checks.restrict(TRUE, r), r, u)


# substitution

def test_substitute_examples():
    u = int_universe(("x", "y"), hi=5)
    assert checks.equivalent_rel(substitute(eq(x, 5), "x", Const(5), u), TRUE, u)
    assert substitute(eq(x, 5), "x", y, u) is eq(y, 5)
    with pytest.raises(UndeclaredVariable):
        substitute(eq(x, 5), "z", y, u)


def test_substitute_queue_append():
    from rgverify.clh import ClhConfig, universe
    u = universe(ClhConfig(2, 1))
    q = Var("q")
    p = member(Const("t1"), q)
    # q is bounded by N, so appending is only defined when t1 is not yet queued
    pre = and_(not_(member(Const("t1"), q)), eq(q, listlit()))
    sub = substitute(p, "q", concat(q, listlit("t1")), u)
    assert checks.implies_pred(pre, sub, u)


@given(predicates(), st.sampled_from(["x", "y"]), st.integers(0, 2), st.booleans())
def test_substitution_is_coherent_with_evaluation(p, name, c, use_var):
    u = oracles_mixed()
    e = Var("y" if name == "x" else "x") if use_var else Const(c)
    sub = substitute(p, name, e, u)
    for s in oracles.all_states(u)[::7]:
        assert value(sub, s) == value(p, s.update({name: value(e, s)}))


def test_evaluation_is_deterministic(mixed):
    e = implies(member(Const("t1"), Var("q")), eq(hd(Var("q")), Const("t1")))
    s = next(checks.enumerate_states(mixed, member(Const("t1"), Var("q"))))
    assert value(e, s) == value(e, s)
    assert isinstance(s, State)
