import sys
from pathlib import Path

import pytest
from hypothesis import settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from rgverify.expr import (  # noqa: E402
    Const, Var, and_, eq, hd, iff, implies, index_of, le, member, not_, or_, status,
)
from rgverify.state import BOT, GRANTED, PENDING, Domain, Universe, sequences  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def int_universe(names=("x", "y"), hi=2, extra=None) -> Universe:
    doms = {n: Domain("int", tuple(range(hi + 1))) for n in names}
    doms.update(extra or {})
    return Universe(("t1", "t2"), ("n0", "n1"), doms)


def mixed_universe() -> Universe:
    """Ints, a bool, a queue, a nullable pointer and a two-cell heap: 1512 states."""
    return Universe(("t1", "t2"), ("n0", "n1"), {
        "x": Domain("int", (0, 1, 2)),
        "y": Domain("int", (0, 1, 2)),
        "b": Domain("bool", (False, True)),
        "q": Domain("seq", sequences(("t1", "t2"), 2)),
        "p": Domain("node?", ("n0", "n1", BOT)),
        "status[n0]": Domain("status", (GRANTED, PENDING)),
        "status[n1]": Domain("status", (GRANTED, PENDING)),
    })


def rel_universe() -> Universe:
    """Small enough that all state pairs can be enumerated (324 pairs)."""
    return Universe(("t1",), ("n0",), {
        "x": Domain("int", (0, 1, 2)),
        "y": Domain("int", (0, 1, 2)),
        "b": Domain("bool", (False, True)),
    })


@pytest.fixture
def mixed():
    return mixed_universe()


@pytest.fixture
def rel_u():
    return rel_universe()


# ---------------------------------------------------------------------------
# random expressions

X, Y, B, Q, P = Var("x"), Var("y"), Var("b"), Var("q"), Var("p")


def _safe_atoms():
    return st.one_of(
        st.builds(lambda c: eq(X, Const(c)), st.integers(0, 2)),
        st.builds(lambda c: eq(Y, Const(c)), st.integers(0, 2)),
        st.just(le(X, Y)),
        st.just(eq(B, Const(True))),
        st.builds(lambda t: member(Const(t), Q), st.sampled_from(["t1", "t2"])),
        st.builds(lambda n, v: eq(Var(f"status[{n}]"), Const(v)),
                  st.sampled_from(["n0", "n1"]), st.sampled_from([GRANTED, PENDING])),
        st.just(eq(P, Const(BOT))),
    )


def _risky_atoms():
    """Atoms that fail to evaluate in some states."""
    return st.one_of(
        st.builds(lambda t: eq(hd(Q), Const(t)), st.sampled_from(["t1", "t2"])),
        st.just(eq(status(P), Const(GRANTED))),
        st.builds(lambda t: eq(index_of(Q, Const(t)), Const(0)), st.sampled_from(["t1", "t2"])),
    )


def _combine(children):
    return st.one_of(
        st.builds(lambda a, b: and_(a, b), children, children),
        st.builds(lambda a, b: or_(a, b), children, children),
        st.builds(not_, children),
        st.builds(implies, children, children),
        st.builds(iff, children, children),
    )


def predicates(risky: bool = False):
    leaves = st.one_of(_safe_atoms(), _risky_atoms()) if risky else _safe_atoms()
    return st.recursive(leaves, _combine, max_leaves=6)


def _rel_atoms():
    xp, yp, bp = Var("x", True), Var("y", True), Var("b", True)
    return st.one_of(
        st.builds(lambda v, c: eq(v, Const(c)), st.sampled_from([X, Y, xp, yp]), st.integers(0, 2)),
        st.just(eq(xp, X)), st.just(eq(yp, Y)), st.just(eq(bp, B)),
        st.just(le(xp, X)), st.just(le(X, yp)),
        st.just(eq(B, Const(True))), st.just(eq(bp, Const(True))),
    )


def relations():
    return st.recursive(_rel_atoms(), _combine, max_leaves=5)


def rel_predicates():
    """Unprimed predicates over the relational universe."""
    return st.recursive(st.one_of(
        st.builds(lambda v, c: eq(v, Const(c)), st.sampled_from([X, Y]), st.integers(0, 2)),
        st.just(le(X, Y)), st.just(eq(B, Const(True)))), _combine, max_leaves=4)


# one PASS/FAIL line per acceptance criterion in the terminal summary

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion number and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    n, text = mark.args
    if rep.failed or rep.when == "call":
        prev = _CRITERIA.get(n, ("PASS", text))[0]
        _CRITERIA[n] = ("FAIL" if rep.failed or prev == "FAIL" else "PASS", text)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        status_, text = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {status_}  {text}")
