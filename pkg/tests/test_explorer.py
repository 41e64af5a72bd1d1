import dataclasses

import pytest
from hypothesis import given

import oracles
from conftest import int_universe, rel_universe, relations
from rgverify import clh, explorer
from rgverify.checks import enumerate_states
from rgverify.expr import TRUE, Var, and_, compile_expr, eq, id_all, or_, prime, status
from rgverify.explorer import (
    BrokenTrace, Bounds, CeilingExceeded, Trace, check_quintuple_semantic,
    env_closure, explore, replay,
)
from rgverify.program import Assert, Deref, SpinLoop, assign, footprint, iter_nodes, label_of, seq
from rgverify.rg import Quintuple
from rgverify.state import GRANTED, PENDING

x = Var("x")


def _clh(variant="annotated", n=2, rounds=2):
    cfg = clh.ClhConfig(n, rounds, variant)
    prog, u, init, spec = clh.build(cfg)
    return cfg, explore(clh.executable(prog), init, u), spec


def test_two_assignments_reach_three_states():
    u = int_universe(("x",), hi=2)
    res = explore(seq(assign(x, 1), assign(x, 2)), eq(x, 0), u)
    assert sorted(s["x"] for s in res.reachable_states) == [0, 1, 2]
    assert len(res.terminals) == 1 and res.complete


def test_spin_loop_on_pending_is_a_self_loop():
    cfg = clh.ClhConfig(1, 1)
    u = clh.universe(cfg)
    init = next(enumerate_states(u, clh.initial(cfg))).update({"prev[t1]": "n1"})
    res = explore(SpinLoop(eq(status(Var("prev[t1]")), GRANTED)), [init], u)
    assert res.terminals == []
    assert any(src == dst for src, _, _, dst in res.transitions)


def test_swap_block_single_successor():
    cfg = clh.ClhConfig(2, 1)
    u = clh.universe(cfg)
    res = explore(clh._swap("t1", clh.cur("t1")), clh.initial(cfg), u)
    assert len(res.transitions) == 1
    post = res.states[res.configs[res.transitions[0][3]][0]]
    assert post["prev[t1]"] == "n0" and post["tail"] == "n1" and post["q"] == ("t1",)


def test_failed_assertion_is_reported():
    u = int_universe(("x",), hi=2)
    res = explore(seq(assign(x, 1), Assert(eq(x, 2), "x-is-2")), eq(x, 0), u)
    v = explorer.check_violations(res)
    assert not v and v.violation.kind == "assertion" and len(v.violation.trace) == 1


def test_dereferencing_bot_is_an_error_violation():
    cfg = clh.ClhConfig(1, 1)
    u = clh.universe(cfg)
    res = explore(assign(Deref(Var("prev[t1]")), PENDING), clh.initial(cfg), u)
    assert res.violations and "DereferenceUninitialised" in res.violations[0].message


@pytest.mark.parametrize("variant", ["annotated", "hw", "fenced-usage"])
def test_reachable_states_match_naive_interpreter(variant):
    cfg = clh.ClhConfig(2, 1, variant)
    prog, u, init, _ = clh.build(cfg)
    runnable = clh.executable(prog)
    res = explore(runnable, init, u)
    inits = list(enumerate_states(u, init))
    assert set(res.reachable_states) == oracles.reachable_states(runnable, inits)


def test_exploration_is_deterministic():
    _, a, spec = _clh("buggy")
    _, b, _ = _clh("buggy")
    assert a.transitions == b.transitions and a.states == b.states
    va = explorer.check_global_invariant(a, spec.invariant)
    vb = explorer.check_global_invariant(b, spec.invariant)
    assert va.violation.trace.to_json() == vb.violation.trace.to_json()


def test_rounds_are_monotone():
    _, one, _ = _clh(rounds=1)
    _, two, _ = _clh(rounds=2)
    assert set(one.reachable_states) <= set(two.reachable_states)


def test_frame_property_on_clh_hw():
    cfg, res, _ = _clh("hw")
    prog = clh.executable(clh.program(cfg))
    fps = {}
    for t, body in prog.children:
        for node in iter_nodes(body):
            try:
                fp = footprint(node)
            except Exception:
                continue
            fps.setdefault((t, label_of(node)), set()).update(fp.writes)
    for src, actor, label, dst in res.transitions:
        a, b = res.states[res.configs[src][0]], res.states[res.configs[dst][0]]
        writes = fps[(actor, label)]
        for n in res.universe.names:
            if a[n] != b[n]:
                family = n.split("[")[0] + "[*]"
                assert n in writes or family in writes, (actor, label, n)


def test_ceiling():
    cfg = clh.ClhConfig(2, 1)
    prog, u, init, spec = clh.build(cfg)
    res = explore(prog, init, u, Bounds(5))
    assert not res.complete
    assert explorer.check_global_invariant(res, spec.invariant).qualified
    with pytest.raises(CeilingExceeded) as info:
        explore(prog, init, u, Bounds(5), raise_on_ceiling=True)
    assert not info.value.result.complete
    with pytest.raises(ValueError):
        Bounds(0)


# replay

def test_empty_trace_replays_to_initial():
    _, res, _ = _clh(rounds=1)
    t = res.trace_to(res.initial[0])
    assert len(t) == 0 and replay(t) == t.initial


def test_violation_trace_replays():
    _, res, spec = _clh("buggy")
    v = explorer.check_global_invariant(res, spec.invariant)
    final = replay(v.violation.trace)
    assert final.state == v.violation.trace.final_state


def test_tampered_trace_is_rejected():
    _, res, spec = _clh("buggy")
    tr = explorer.check_global_invariant(res, spec.invariant).violation.trace
    last = tr.steps[-1]
    other = last.post.update({"auxhead": "n2" if last.post["auxhead"] != "n2" else "n1"})
    bad = Trace(tr.initial, tr.steps[:-1] + [dataclasses.replace(last, post=other)])
    with pytest.raises(BrokenTrace):
        replay(bad)
    wrong_actor = Trace(tr.initial, [dataclasses.replace(tr.steps[0], actor="t9")])
    with pytest.raises(BrokenTrace):
        replay(wrong_actor)


def test_trace_json_shape():
    _, res, spec = _clh("buggy")
    j = explorer.check_global_invariant(res, spec.invariant).violation.trace.to_json()
    assert set(j) == {"initial", "steps", "states"}
    for actor, label, a, b in j["steps"]:
        assert isinstance(actor, str) and 0 <= a < len(j["states"]) and 0 <= b < len(j["states"])


# semantic quintuple checks

def test_semantic_textbook_example():
    u = int_universe(("x",), hi=5)
    g = or_(eq(prime(x), 5), id_all(u))
    assert check_quintuple_semantic(Quintuple(TRUE, eq(prime(x), x), assign(x, 5), g, eq(x, 5)), u)
    bad = check_quintuple_semantic(Quintuple(TRUE, TRUE, assign(x, 5), g, eq(x, 5)), u)
    assert not bad and bad.violation.kind == "postcondition"
    assert any(s.actor == explorer.ENV for s in bad.violation.trace.steps)


def test_semantic_guarantee_violation():
    u = int_universe(("x",), hi=5)
    Q = Quintuple(TRUE, eq(prime(x), x), assign(x, 5), or_(eq(prime(x), 4), id_all(u)), TRUE)
    r = check_quintuple_semantic(Q, u)
    assert not r and r.violation.kind == "guarantee"


def test_env_closure_is_idempotent():
    u = int_universe(("x", "y"), hi=2)
    rely = and_(eq(prime(Var("y")), Var("y")), eq(prime(x), Var("y")))
    start = [next(enumerate_states(u, and_(eq(x, 0), eq(Var("y"), 1))))]
    once = env_closure(start, rely, u)
    assert {s["x"] for s in once} == {0, 1}
    assert env_closure(once, rely, u) == once


def test_env_closure_idempotent_on_clh_rely():
    cfg = clh.ClhConfig(2, 1)
    u = clh.universe(cfg)
    spec = clh.make_spec(cfg)
    start = list(enumerate_states(u, clh.initial(cfg)))
    once = env_closure(start, spec.relies["t1"], u)
    assert len(once) > 1
    assert env_closure(once, spec.relies["t1"], u) == once


@given(relations(), relations())
def test_env_successors_match_brute_force(a, b):
    u = rel_universe()
    states = oracles.all_states(u)
    for rely in (a, or_(a, b), and_(a, or_(b, id_all(u)))):
        env = explorer.EnvSteps(rely, u)
        rel = compile_expr(rely, u)
        for s in states[::3]:
            try:
                want = {t for t in states if rel(s.values, t.values) is True}
            except Exception:
                continue
            assert set(env.successors(env.residual(s))) == want
