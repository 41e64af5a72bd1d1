"""Semantic checks over a finite universe: implication, stability, enumeration.

Every check asks for a counterexample.  The search engine decides whether one
exists; if so, the lexicographically first one in enumeration order (pre-state
variables by name, then post-state variables) is reported, after being
confirmed by plain evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterator

from .expr import (
    TRUE, Err, Expr, and_, has_primes, not_, prime, value,
)
from .solver import Search
from .state import State, Universe, value_to_json
from .subst import substitute  # noqa: F401  (re-exported)

FULL = "full"
FILTERED = "filtered"


@dataclass
class Verdict:
    holds: bool
    check: str = ""
    mode: str = FULL
    pre: State | None = None
    post: State | None = None
    detail: str = ""
    extra: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.holds

    @property
    def counterexample(self):
        if self.holds:
            return None
        return self.pre if self.post is None else (self.pre, self.post)

    def to_json(self) -> dict:
        out: dict[str, Any] = {"check": self.check, "holds": self.holds, "mode": self.mode}
        if not self.holds:
            cex: dict[str, Any] = {}
            if self.pre is not None:
                cex["pre"] = self.pre.to_json()
            if self.post is not None:
                cex["post"] = self.post.to_json()
            out["counterexample"] = cex
        if self.detail:
            out["detail"] = self.detail
        if self.extra:
            out.update({k: _jsonable(v) for k, v in self.extra.items()})
        return out


def _jsonable(v: Any) -> Any:
    if isinstance(v, State):
        return v.to_json()
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return value_to_json(v)


def _keys(u: Universe, relational: bool) -> list[tuple[str, bool]]:
    pre = [(n, False) for n in u.names]
    return pre + [(n, True) for n in u.names] if relational else pre


def _search(u: Universe, relational: bool) -> Search:
    doms = {k: u.domains[k[0]].values for k in _keys(u, relational)}
    return Search(u, doms)


def _states(u: Universe, sol: dict, relational: bool) -> tuple[State, State | None]:
    pre = State(u, tuple(sol[(n, False)] for n in u.names))
    post = State(u, tuple(sol[(n, True)] for n in u.names)) if relational else None
    return pre, post


def find_counterexample(bad: Expr, u: Universe, relational: bool,
                        filter: Expr | None = None) -> tuple[State, State | None] | None:
    """First (pre[, post]) in enumeration order where ``bad`` is not false.

    ``bad`` evaluating to an error value also counts as a hit, so evaluation
    errors surface with the offending state.
    """
    goal = bad
    if filter is not None:
        goal = and_(filter, prime(filter), bad) if relational else and_(filter, bad)
    s = _search(u, relational)
    if s.find(goal) is None:
        return None
    sol = s.first(goal, _keys(u, relational))
    pre, post = _states(u, sol, relational)
    v = value(goal, pre, post)
    if v is False:  # pragma: no cover - guards against search bugs
        raise AssertionError("search returned a non-solution")
    return pre, post


def _verdict(name: str, bad: Expr, u: Universe, relational: bool,
             filter: Expr | None, check_expr: Expr) -> Verdict:
    mode = FULL if filter is None else FILTERED
    hit = find_counterexample(bad, u, relational, filter)
    if hit is None:
        return Verdict(True, name, mode)
    pre, post = hit
    v = value(check_expr, pre, post)
    if isinstance(v, Err):
        raise v.exception((pre, post) if post is not None else pre)
    return Verdict(False, name, mode, pre, post)


def implies_pred(p: Expr, q: Expr, u: Universe, filter: Expr | None = None,
                 name: str = "implies") -> Verdict:
    if has_primes(p) or has_primes(q):
        raise ValueError("implies_pred takes predicates without primed variables")
    return _verdict(name, and_(p, not_(q)), u, False, filter, and_(p, not_(q)))


def implies_rel(r1: Expr, r2: Expr, u: Universe, filter: Expr | None = None,
                name: str = "implies") -> Verdict:
    return _verdict(name, and_(r1, not_(r2)), u, True, filter, and_(r1, not_(r2)))


def equivalent_rel(r1: Expr, r2: Expr, u: Universe, filter: Expr | None = None) -> Verdict:
    v = implies_rel(r1, r2, u, filter, "equivalent")
    return v if not v else implies_rel(r2, r1, u, filter, "equivalent")


def stable(p: Expr, r: Expr, u: Universe, filter: Expr | None = None,
           name: str = "stable") -> Verdict:
    if has_primes(p):
        raise ValueError("stability is defined for predicates")
    bad = and_(p, r, not_(prime(p)))
    return _verdict(name, bad, u, True, filter, bad)


def restrict(p: Expr, r: Expr) -> Expr:
    """The relation r restricted to pre-states satisfying p."""
    if has_primes(p):
        raise ValueError("restrict takes a predicate")
    return and_(p, r)


def satisfiable(p: Expr, u: Universe) -> bool:
    return _search(u, has_primes(p)).find(p) is not None


def enumerate_states(u: Universe, filter: Expr | None = None) -> Iterator[State]:
    """States of ``u`` satisfying ``filter`` in enumeration order."""
    if filter is None or filter is TRUE:
        yield from u.all_states()
        return
    if has_primes(filter):
        raise ValueError("enumeration filters are predicates")
    s = _search(u, False)
    order = _keys(u, False)
    rank = [{v: i for i, v in enumerate(u.domains[n].values)} for n in u.names]
    rows = sorted((tuple(sol[k] for k in order) for sol in s.solutions(filter)),
                  key=lambda vals: tuple(r[v] for r, v in zip(rank, vals)))
    for vals in rows:
        st = State(u, vals)
        v = value(filter, st)
        if isinstance(v, Err):
            raise v.exception(st)
        if v is True:
            yield st


def count_states(u: Universe, filter: Expr | None = None) -> int:
    return sum(1 for _ in enumerate_states(u, filter))
