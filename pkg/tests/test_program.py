import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from conftest import mixed_universe
from rgverify import clh
from rgverify.expr import Const, Deref, Var, concat, eq, listlit
from rgverify.program import (
    HEAP_CLASS, Assert, Fence, Marker, Par, ProgramError, Seq, Skip, SpinLoop, assign, atomic,
    conflicts, execute, footprint, parn, ppseq, seq, strip_asserts, validate,
)
from rgverify.sexpr import dump_command, load_command
from rgverify.state import GRANTED, PENDING

U = mixed_universe()
STATES = oracles.all_states(U)


def test_footprint_register_load():
    fp = footprint(assign(clh.reg("t1"), clh.cur("t1")))
    assert fp.reads == {"cur[t1]"} and fp.writes == {"r[t1]"}


def test_footprint_dereferencing_store():
    fp = footprint(assign(Deref(clh.reg("t1")), Const(PENDING)))
    assert fp.reads == {"r[t1]"} and fp.writes == {HEAP_CLASS}


def test_footprint_of_fence_is_empty():
    fp = footprint(Fence())
    assert not fp.reads and not fp.writes


def test_footprint_of_swap_block():
    swap = clh._swap("t1", clh.cur("t1"))
    fp = footprint(swap)
    assert fp.reads >= {"tail", "cur[t1]", "q"}
    assert fp.writes >= {"prev[t1]", "tail", "q"}


def test_atomic_footprint_is_union():
    a, b = assign(Var("x"), Var("y")), assign(Var("q"), concat(Var("q"), listlit("t1")))
    assert footprint(atomic(a, b)) == footprint(a) | footprint(b)


def test_instruction_invariants():
    with pytest.raises(ProgramError):
        atomic()
    with pytest.raises(ProgramError):
        assign(Var("x", True), 1)
    with pytest.raises(ProgramError):
        assign(Var("x"), 1, ordering="acquire")


def test_validate():
    assert validate(Skip(), U) == []
    bad = validate(assign(Var("zz"), 1, label="oops"), U)
    assert bad and bad[0].label == "oops" and "UndeclaredVariable" in bad[0].message
    dup = parn([("t1", Skip()), ("t1", Skip())])
    assert validate(dup, U)
    mixed_tags = Seq(ppseq("arm-like", Marker("a"), Marker("b")), ppseq("sc", Marker("c"), Marker("d")))
    assert validate(mixed_tags, U)


@pytest.mark.parametrize("variant", ["annotated", "hw", "buggy", "fenced-usage"])
def test_clh_programs_validate(variant):
    prog, u, _, _ = clh.build(clh.ClhConfig(2, 2, variant))
    assert validate(prog, u) == []


def test_execute_assign_and_errors():
    s = next(x for x in STATES if x["p"] == "bot" and x["x"] == 0)
    assert execute(assign(Var("x"), 2), s)["x"] == 2
    assert execute(assign(Deref(Var("p")), GRANTED), s).kind == "DereferenceUninitialised"
    assert execute(assign(Var("x"), 7), s).kind == "TypeMismatch"


def test_atomic_members_run_in_order():
    s = next(x for x in STATES if x["x"] == 0 and x["y"] == 0)
    t = execute(atomic(assign(Var("x"), 1), assign(Var("y"), Var("x"))), s)
    assert t["x"] == 1 and t["y"] == 1


def test_simultaneous_assign_reads_pre_state():
    from rgverify.program import simultaneous
    s = next(x for x in STATES if x["x"] == 0 and x["y"] == 1)
    t = execute(simultaneous([(Var("x"), Var("y")), (Var("y"), Var("x"))]), s)
    assert (t["x"], t["y"]) == (1, 0)


def test_strip_asserts():
    c = seq(Assert(eq(Var("x"), 0)), assign(Var("x"), 1), Assert(eq(Var("x"), 1)))
    assert strip_asserts(c) == assign(Var("x"), 1)


@pytest.mark.parametrize("variant", ["annotated", "hw", "buggy", "fenced-usage"])
def test_command_round_trip(variant):
    prog = clh.program(clh.ClhConfig(2, 2, variant))
    assert load_command(dump_command(prog)) == prog


def test_round_trip_small_forms():
    for c in [Skip(), Fence(), Marker("cs"), Par(assign(Var("x"), 1), SpinLoop(eq(Var("y"), 1))),
              assign(Deref(Var("p")), PENDING, label="st", ordering="release")]:
        assert load_command(dump_command(c)) == c


# random single-step instructions over the mixed universe

_targets = st.sampled_from([Var("x"), Var("y"), Var("b"), Var("p"), Deref(Var("p")),
                            Var("status[n0]")])


def _rhs_for(t):
    if t in (Var("x"), Var("y")):
        return st.one_of(st.builds(Const, st.integers(0, 2)), st.sampled_from([Var("x"), Var("y")]))
    if t == Var("b"):
        return st.builds(Const, st.booleans())
    if t == Var("p"):
        return st.builds(Const, st.sampled_from(["n0", "n1"]))
    return st.one_of(st.builds(Const, st.sampled_from([GRANTED, PENDING])),
                     st.just(Var("status[n1]")))


instrs = _targets.flatmap(lambda t: _rhs_for(t).map(lambda v: assign(t, v)))


@given(instrs, instrs)
def test_disjoint_footprints_commute(a, b):
    if conflicts(footprint(a), footprint(b)):
        return
    for s in STATES:
        ab, ba = execute(a, s), execute(b, s)
        ab = execute(b, ab) if not hasattr(ab, "kind") else ab
        ba = execute(a, ba) if not hasattr(ba, "kind") else ba
        assert ab == ba


@given(instrs)
def test_execution_respects_footprint(a):
    fp = footprint(a)
    for s in STATES[::3]:
        t = execute(a, s)
        if hasattr(t, "kind"):
            continue
        for n in U.names:
            if t[n] != s[n]:
                assert n in fp.writes or (n.startswith("status[") and HEAP_CLASS in fp.writes)
