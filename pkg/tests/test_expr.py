import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from conftest import mixed_universe, predicates, relations, rel_universe
from rgverify.expr import (
    Const, Err, Var, and_, cons, distinct, eq, fmap, forall, forall_in, hd, ID, injective,
    in_range, index_of, listlit, may_err, member, nnf, partial, prime, status, unprime, value,
    Bound, butlast, last,
)
from rgverify.sexpr import ParseError, dump_expr, load_expr, parse_one
from rgverify.state import BOT, GRANTED, PENDING

U = mixed_universe()
STATES = oracles.all_states(U)
R = rel_universe()
PAIRS = [(a, b) for a in oracles.all_states(R) for b in oracles.all_states(R)]


def test_interning_gives_identity():
    assert eq(Var("x"), 1) is eq(Var("x"), Const(1))
    assert and_(eq(Var("x"), 1), eq(Var("x"), 1)) is eq(Var("x"), 1)


def test_id_shorthand():
    assert ID(Var("x"), Var("y")) is and_(eq(Var("x", True), Var("x")), eq(Var("y", True), Var("y")))


def test_prime_and_unprime():
    e = eq(Var("x"), hd(Var("q")))
    assert unprime(prime(e)) is e


def test_list_helpers():
    s = STATES[0]
    assert value(last(listlit("t1", "t2")), s) == "t2"
    assert value(butlast(listlit("t1", "t2")), s) == ("t1",)
    assert value(distinct(listlit("t1", "t1")), s) is False
    assert value(cons(Const("t1"), listlit("t2")), s) == ("t1", "t2")


def test_map_helpers():
    from rgverify.clh import ClhConfig, initial, universe
    from rgverify.checks import enumerate_states
    cfg = ClhConfig(2, 1)
    s = next(enumerate_states(universe(cfg), initial(cfg)))
    ts = cfg.threads
    assert value(injective("reserved", ts), s) is True
    assert value(in_range(Const("n0"), "reserved", ts), s) is False
    assert value(fmap("reserved", listlit("t2", "t1"), ts), s) == ("n2", "n1")


def test_quantifiers():
    s = STATES[0]
    assert value(forall("i", "thread", member(Bound("i"), listlit("t1", "t2"))), s) is True
    assert value(forall_in("i", listlit(), eq(Bound("i"), "t9")), s) is True


def test_dereferencing_bot_is_an_error():
    s = next(x for x in STATES if x["p"] == BOT)
    assert value(eq(status(Var("p")), GRANTED), s) == Err("DereferenceUninitialised")


@given(predicates(risky=True), st.sets(st.sampled_from(U.names)), st.integers(0, len(STATES) - 1))
def test_partial_evaluation_agrees_with_evaluation(e, names, k):
    s = STATES[k]
    res = partial(e, {(n, False): s[n] for n in names}, U)
    assert value(res, s) == value(e, s)
    full = partial(e, {(n, False): s[n] for n in U.names}, U)
    assert isinstance(full, Const) and full.value == value(e, s)


@given(relations(), st.integers(0, len(PAIRS) - 1))
def test_partial_evaluation_of_relations(e, k):
    a, b = PAIRS[k]
    assign = {(n, False): a[n] for n in R.names}
    assign.update({(n, True): b[n] for n in R.names})
    full = partial(e, assign, R)
    assert isinstance(full, Const) and full.value == value(e, a, b)


@given(predicates(risky=True))
def test_nnf_preserves_meaning(e):
    n = nnf(e)
    for s in STATES[::5]:
        assert value(n, s) == value(e, s)


@given(predicates(risky=True))
def test_may_err_is_conservative(e):
    if not may_err(e, U):
        assert not any(isinstance(value(e, s), Err) for s in STATES)


@given(predicates(risky=True))
def test_sexpr_round_trip_predicates(e):
    assert load_expr(dump_expr(e)) is e


@given(relations())
def test_sexpr_round_trip_relations(e):
    assert load_expr(dump_expr(e)) is e


def test_sexpr_round_trip_clh_formulas():
    from rgverify import clh
    spec = clh.make_spec(clh.ClhConfig(2, 1))
    for e in [spec.invariant, spec.cinv, *spec.relies.values(), *spec.guars.values()]:
        assert load_expr(dump_expr(e)) is e


def test_sexpr_parse_errors():
    with pytest.raises(ParseError):
        parse_one("(eq x")
    with pytest.raises(ParseError):
        load_expr("(frobnicate x)")


def test_index_of_is_zero_based():
    s = STATES[0]
    assert value(index_of(listlit("t1", "t2"), Const("t1")), s) == 0
    assert value(eq(status(Const("n1")), PENDING), s) == (s["status[n1]"] == PENDING)
