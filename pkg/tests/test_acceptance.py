"""One test per acceptance criterion; the terminal summary prints a PASS/FAIL line for each."""

import dataclasses
import json
import time
from functools import lru_cache
from pathlib import Path

import pytest

from rgverify import checks, clh, explorer, wmm
from rgverify.expr import FALSE, TRUE, Bound, Var, and_, eq, forall_in, id_all, implies, or_, prime, status, value
from rgverify.program import Par, SpinLoop, assign, parn, seq
from rgverify.rg import (
    AsgnNode, ConseqNode, ParGenNode, Quintuple, SpinLoopNode, check_derivation, quintuples,
)
from rgverify.sexpr import dump_command, load_command
from test_rg import UX, UXY, _par_int, _par_u, _seq_example, textbook

GOLDEN = Path(__file__).parent / "golden"
x, y = Var("x"), Var("y")
xp = prime(x)
N, ROUNDS = 2, 2


def criterion(n, text):
    return pytest.mark.criterion(n, text)


@lru_cache(maxsize=None)
def explored(variant):
    cfg = clh.ClhConfig(N, ROUNDS, variant)
    prog, u, init, spec = clh.build(cfg)
    return explorer.explore(clh.executable(prog), init, u), u, spec


@lru_cache(maxsize=None)
def theorems():
    return clh.build_theorem_derivations(clh.ClhConfig(N, ROUNDS))


def _par_gen(broken):
    ida = id_all(UXY)
    sp = SpinLoop(TRUE)
    if not broken:
        leaf = SpinLoopNode(Quintuple(TRUE, TRUE, sp, ida, TRUE))
        return ParGenNode(Quintuple(TRUE, TRUE, parn([("t1", sp), ("t2", sp)]), ida, TRUE), (leaf, leaf))
    g1 = or_(eq(xp, 1), ida)
    a = AsgnNode(Quintuple(TRUE, TRUE, assign(x, 1), g1, TRUE))
    b = SpinLoopNode(Quintuple(TRUE, eq(xp, x), sp, ida, TRUE))
    concl = Quintuple(TRUE, and_(TRUE, eq(xp, x)), parn([("t1", a.concl.c), ("t2", sp)]), or_(g1, ida), TRUE)
    return ParGenNode(concl, (a, b))


def _spin(broken):
    if broken:
        return SpinLoopNode(Quintuple(TRUE, TRUE, SpinLoop(eq(x, 1)), id_all(UX), eq(x, 1))), UX
    return SpinLoopNode(Quintuple(TRUE, TRUE, SpinLoop(TRUE), id_all(UX), TRUE)), UX


# (rule, passing derivation and universe, failing derivation and universe, expected failed condition)
RULE_SUITE = [
    ("asgn", (textbook(), UX), (textbook(TRUE), UX), "stable-post"),
    ("seq", (_seq_example(eq(x, 1)), UXY), (_seq_example(TRUE), UXY), "establishes-mid"),
    ("conseq", (ConseqNode(textbook().concl.replace(p=eq(x, 5)), textbook()), UX),
     (ConseqNode(textbook().concl.replace(q=FALSE), textbook()), UX), "post"),
    ("par-u", (_par_u(), UXY), (_par_u(swap=True), UXY), "shape"),
    ("par-int", (_par_int(), UXY), (_par_int(or_(eq(prime(y), 1), id_all(UXY))), UXY),
     "right-guar-implies-left-rely"),
    ("par-gen", (_par_gen(False), UXY), (_par_gen(True), UXY), "guar[t1]-implies-rely[t2]"),
    ("spin-loop", _spin(False), _spin(True), "stable-post"),
]


@criterion(1, "textbook assignment derivation")
def test_criterion_1_textbook():
    t0 = time.perf_counter()
    assert check_derivation(textbook(), UX).holds is True
    assert time.perf_counter() - t0 < 1.0


@criterion(2, "rule suite: one passing and one failing derivation per rule")
def test_criterion_2_rule_suite():
    t0 = time.perf_counter()
    for rule, (good, gu), (bad, bu), expected in RULE_SUITE:
        assert good.rule == rule and bad.rule == rule
        assert check_derivation(good, gu), rule
        rep = check_derivation(bad, bu)
        assert not rep, rule
        names = {c.name for _, c in rep.failures()}
        assert expected in names or (rule == "seq" and any("MidMismatch" in c.detail
                                                           for _, c in rep.failures())), (rule, names)
    assert time.perf_counter() - t0 < 10.0


@criterion(3, "CLH safety at N=2, rounds=2 (invariant, guarantees, assertions, terminals)")
def test_criterion_3_clh_safety():
    t0 = time.perf_counter()
    res, u, spec = explored("annotated")
    assert res.complete and res.terminals
    assert explorer.check_global_invariant(res, spec.invariant)
    assert explorer.check_guarantees(res, spec.guars)
    assert explorer.check_violations(res)
    assert explorer.check_terminals(res, spec.post)
    for name, der in theorems().items():
        assert check_derivation(der, u), name
    assert time.perf_counter() - t0 < 300


@criterion(4, "mutual exclusion and FIFO")
def test_criterion_4_mutex_fifo():
    res, _, _ = explored("annotated")
    assert clh.check_mutual_exclusion(res)
    assert clh.check_fifo(res)


@criterion(5, "status of predecessor node is Granted exactly for the queue head")
def test_criterion_5_status_prev():
    res, u, spec = explored("annotated")
    for name, v in clh.check_status_prev(spec, u):
        assert v.holds and v.mode == checks.FILTERED, name
    for t in spec.threads:
        prop = implies(clh.member(t, clh.Q), clh.status_prev(t))
        assert explorer.check_global_invariant(res, prop), t


@criterion(6, "pairwise reordering verdicts for acquire, release and release-then-acquire")
def test_criterion_6_reorder_verdicts():
    expected = {"acquire": ["ordered", "reorderable", "ordered", "reorderable"],
                "release": ["ordered"], "release-acquire": ["ordered"]}
    for name, verdicts in expected.items():
        rep = wmm.pairwise_report(load_command((GOLDEN / f"{name}.program.sexp").read_text()))
        assert rep.verdicts == verdicts
        assert rep.to_json() == json.loads((GOLDEN / f"reorder-{name}.json").read_text())


@criterion(7, "release-annotated acquire transforms to the parallel-wait shape")
def test_criterion_7_acquire_transform():
    got = wmm.transform(clh.hw_acquire("t1", ordered=True))
    assert dump_command(got) + "\n" == (GOLDEN / "transform-acquire.sexp").read_text()
    load, pending, swap, nxt, wait = clh.hw_acquire_steps("t1", ordered=True)
    # the ordering annotation has done its job once the swap is sequenced
    expected = seq(load, pending, dataclasses.replace(swap, ordering="none"), Par(nxt, wait))
    assert got == expected


@criterion(8, "parallel next/await satisfies its quintuple, as does the sequential form")
def test_criterion_8_par_sel4():
    t0 = time.perf_counter()
    _, u, _ = explored("annotated")
    Q = theorems()["par-sel4"].concl
    assert explorer.check_quintuple_semantic(Q, u)
    sequential = Q.replace(c=seq(Q.c.left, Q.c.right))
    eqv = wmm.check_transform_equiv(sequential, Q.c, u)
    assert eqv.reference and eqv.transformed
    assert time.perf_counter() - t0 < 60


@criterion(9, "unordered swap breaks the Pending conjunct; release ordering does not")
def test_criterion_9_bug_reproduction():
    res, _, spec = explored("buggy")
    v = explorer.check_global_invariant(res, spec.invariant)
    assert not v
    final = v.violation.trace.final_state
    pending = forall_in("i", clh.Q, eq(status(clh.reserved(Bound("i"))), clh.PENDING))
    assert value(pending, final) is False
    assert explorer.replay(v.violation.trace).state == final
    # BFS order: no shorter trace reaches a state outside the invariant
    depth = len(v.violation.trace)
    for ci, (si, _) in enumerate(res.configs):
        if value(spec.invariant, res.states[si]) is not True:
            assert len(res.trace_to(ci)) >= depth
    hw, _, hspec = explored("hw")
    assert explorer.check_global_invariant(hw, hspec.invariant)
    assert explorer.check_violations(hw)


@criterion(10, "every quintuple proved by a passing derivation also holds semantically")
@pytest.mark.slow
def test_criterion_10_cross_validation():
    _, cu, _ = explored("annotated")
    jobs = {}
    for _, (good, gu), _, _ in RULE_SUITE:
        for q in quintuples(good):
            jobs.setdefault((q, id(gu)), (q, gu))
    for der in theorems().values():
        for q in quintuples(der):
            jobs.setdefault((q, id(cu)), (q, cu))
    failures = []
    for q, u in jobs.values():
        r = explorer.check_quintuple_semantic(q, u)
        if not r:
            failures.append((dump_command(q.c)[:60], r.to_json()))
    assert not failures, failures
