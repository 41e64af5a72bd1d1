"""Rely/guarantee quintuples, derivation trees, and a checker for each rule.

A derivation is checked node by node: structural premises (commands, shared
relations, mid-states) are compared syntactically with a semantic
equivalence fallback, and the remaining side conditions are discharged by
the finite-universe checks in :mod:`rgverify.checks`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from . import checks
from .checks import FILTERED, FULL, Verdict
from .expr import (
    TRUE, App, EvalError, Expr, Var, and_, id_all, implies, or_, prime,
)
from .program import (
    Assign, AtomicBlock, Command, Fence, Marker, Par, ParN, Seq, SpinLoop, strip_asserts,
)
from .state import Universe
from .subst import run as run_symbolic


class ShapeMismatch(ValueError):
    """The conclusion or premises do not have the form the rule requires."""


class MidMismatch(ShapeMismatch):
    pass


# ---------------------------------------------------------------------------
# quintuples

@dataclass(frozen=True)
class Quintuple:
    p: Expr
    r: Expr
    c: Command
    g: Expr
    q: Expr

    def replace(self, **kw) -> Quintuple:
        d = dict(p=self.p, r=self.r, c=self.c, g=self.g, q=self.q)
        d.update(kw)
        return Quintuple(**d)


@dataclass(frozen=True)
class InvariantQuintuple:
    quintuple: Quintuple
    inv: Expr


def preserves(inv: Expr) -> Expr:
    """The relation inv => inv'."""
    return implies(inv, prime(inv))


def expand_invariant(iq: InvariantQuintuple) -> Quintuple:
    q, inv = iq.quintuple, iq.inv
    keep = preserves(inv)
    return Quintuple(and_(q.p, inv), and_(q.r, keep), q.c, and_(q.g, keep), and_(q.q, inv))


# ---------------------------------------------------------------------------
# derivations

@dataclass(frozen=True)
class Derivation:
    concl: Quintuple

    rule = "?"

    @property
    def premises(self) -> tuple[Derivation, ...]:
        return ()


@dataclass(frozen=True)
class AsgnNode(Derivation):
    rule = "asgn"


@dataclass(frozen=True)
class SpinLoopNode(Derivation):
    rule = "spin-loop"


@dataclass(frozen=True)
class SeqNode(Derivation):
    mid: Expr = TRUE
    left: Derivation | None = None
    right: Derivation | None = None
    rule = "seq"

    @property
    def premises(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class ConseqNode(Derivation):
    inner: Derivation | None = None
    rule = "conseq"

    @property
    def premises(self):
        return (self.inner,)


@dataclass(frozen=True)
class ParUNode(Derivation):
    left: Derivation | None = None
    right: Derivation | None = None
    rule = "par-u"

    @property
    def premises(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class ParIntNode(Derivation):
    left: Derivation | None = None
    right: Derivation | None = None
    rule = "par-int"

    @property
    def premises(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class ParGenNode(Derivation):
    children: tuple[Derivation, ...] = ()
    rule = "par-gen"

    @property
    def premises(self):
        return self.children


def seq_chain(p: Expr, r: Expr, g: Expr, steps: Sequence[tuple[Derivation, Expr]]) -> Derivation:
    """Join leaf derivations with right-nested seq nodes.

    ``steps`` lists (derivation, postcondition) in program order; each
    derivation's precondition must be the previous postcondition.
    """
    if len(steps) == 1:
        return steps[0][0]
    (d, mid), rest = steps[0], steps[1:]
    right = seq_chain(mid, r, g, rest)
    concl = Quintuple(p, r, Seq(d.concl.c, right.concl.c), g, right.concl.q)
    return SeqNode(concl, mid, d, right)


# ---------------------------------------------------------------------------
# reports

@dataclass
class Condition:
    name: str
    holds: bool
    verdict: Verdict | None = None
    detail: str = ""

    def to_json(self) -> dict:
        out: dict[str, Any] = {"name": self.name, "holds": self.holds}
        if self.verdict is not None:
            out["mode"] = self.verdict.mode
            if not self.verdict.holds:
                out["counterexample"] = self.verdict.to_json().get("counterexample")
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass
class CheckReport:
    rule: str
    path: str = ""
    conditions: list[Condition] = field(default_factory=list)
    children: list[CheckReport] = field(default_factory=list)
    mode: str = FULL

    @property
    def holds(self) -> bool:
        return all(c.holds for c in self.conditions) and all(ch.holds for ch in self.children)

    def __bool__(self) -> bool:
        return self.holds

    def failures(self) -> list[tuple[str, Condition]]:
        out = [(self.path or self.rule, c) for c in self.conditions if not c.holds]
        for ch in self.children:
            out.extend(ch.failures())
        return out

    def to_json(self) -> dict:
        return {
            "rule": self.rule,
            "path": self.path,
            "holds": self.holds,
            "mode": self.mode,
            "conditions": [c.to_json() for c in self.conditions],
            "children": [c.to_json() for c in self.children],
        }


class _Checker:
    def __init__(self, rule: str, universe: Universe, filter: Expr | None):
        self.u = universe
        self.filter = filter
        self.report = CheckReport(rule, mode=FULL if filter is None else FILTERED)

    def add(self, name: str, fn: Callable[[], Verdict | bool], detail: str = "") -> bool:
        try:
            v = fn()
        except EvalError as err:
            self.report.conditions.append(
                Condition(name, False, None, f"{err.kind}: evaluation failed in {err.state!r}"))
            return False
        if isinstance(v, Verdict):
            self.report.conditions.append(Condition(name, v.holds, v, detail))
            return v.holds
        self.report.conditions.append(Condition(name, bool(v), None, detail))
        return bool(v)

    # semantic helpers honouring the filter
    def implies_pred(self, a: Expr, b: Expr) -> Verdict:
        return checks.implies_pred(a, b, self.u, self.filter)

    def implies_rel(self, a: Expr, b: Expr) -> Verdict:
        return checks.implies_rel(a, b, self.u, self.filter)

    def stable(self, p: Expr, r: Expr) -> Verdict:
        return checks.stable(p, r, self.u, self.filter)

    def same_pred(self, a: Expr, b: Expr) -> bool:
        if a is b:
            return True
        return bool(self.implies_pred(a, b)) and bool(self.implies_pred(b, a))

    def same_rel(self, a: Expr, b: Expr) -> bool:
        if a is b:
            return True
        return bool(self.implies_rel(a, b)) and bool(self.implies_rel(b, a))

    def expect_same(self, name: str, a: Expr, b: Expr, relational: bool,
                    error: type = ShapeMismatch) -> None:
        try:
            ok = self.same_rel(a, b) if relational else self.same_pred(a, b)
        except EvalError as err:
            raise error(f"{name}: {err.kind}") from None
        if not ok:
            raise error(f"{name} does not match the rule's premise")
        self.report.conditions.append(Condition(name, True, None, "matches"))


def _is_identity(d: Expr, u: Universe) -> bool:
    if d is id_all(u):
        return True
    parts = d.args if isinstance(d, App) and d.op == "and" else (d,)
    seen = set()
    for x in parts:
        if not (isinstance(x, App) and x.op == "eq"):
            return False
        a, b = x.args
        if isinstance(a, Var) and isinstance(b, Var) and a.name == b.name and a.primed != b.primed:
            seen.add(a.name)
        else:
            return False
    return seen == set(u.names)


def split_identity(g: Expr, u: Universe) -> Expr:
    """For g = g0 \\/ ID(all variables) return g0; otherwise ShapeMismatch."""
    if isinstance(g, App) and g.op == "or":
        rest = [d for d in g.args if not _is_identity(d, u)]
        if len(rest) < len(g.args):
            return or_(*rest)
    if _is_identity(g, u):
        return or_()
    raise ShapeMismatch("the guarantee of an assignment must have the form g \\/ ID(all)")


# ---------------------------------------------------------------------------
# rules

def check_asgn(concl: Quintuple, u: Universe, filter: Expr | None = None) -> CheckReport:
    ck = _Checker("asgn", u, filter)
    c = concl.c
    if not isinstance(c, (Assign, AtomicBlock, Fence, Marker)):
        raise ShapeMismatch(f"asgn applies to a single assignment, got {type(c).__name__}")
    g0 = split_identity(concl.g, u)
    upd = run_symbolic(c, u)
    p = concl.p
    ck.add("stable-pre", lambda: ck.stable(p, concl.r))
    ck.add("stable-post", lambda: ck.stable(concl.q, concl.r))
    ck.add("defined", lambda: ck.implies_pred(p, upd.definedness()))
    ck.add("establishes-post", lambda: ck.implies_pred(p, upd.current(concl.q)))
    ck.add("guarantee", lambda: ck.implies_pred(p, upd.image(g0)))
    return ck.report


def check_spin_loop(concl: Quintuple, u: Universe, filter: Expr | None = None) -> CheckReport:
    ck = _Checker("spin-loop", u, filter)
    c = concl.c
    if not isinstance(c, SpinLoop):
        raise ShapeMismatch(f"spin-loop applies to a spin loop, got {type(c).__name__}")
    ck.add("stable-pre", lambda: ck.stable(concl.p, concl.r))
    ck.add("stable-post", lambda: ck.stable(concl.q, concl.r))
    ck.add("defined", lambda: ck.implies_pred(concl.p, App("eq", (c.guard, c.guard))))
    ck.add("identity-guarantee", lambda: ck.implies_rel(id_all(u), concl.g))
    ck.add("exit", lambda: ck.implies_pred(and_(concl.p, c.guard), concl.q))
    return ck.report


def check_seq(concl: Quintuple, mid: Expr, left: Quintuple, right: Quintuple,
              u: Universe, filter: Expr | None = None) -> CheckReport:
    ck = _Checker("seq", u, filter)
    if concl.c != Seq(left.c, right.c):
        raise ShapeMismatch("seq: conclusion command is not the sequence of the premises")
    ck.expect_same("left-pre", left.p, concl.p, False)
    ck.expect_same("left-post=mid", left.q, mid, False, MidMismatch)
    ck.expect_same("right-pre=mid", right.p, mid, False, MidMismatch)
    ck.expect_same("right-post", right.q, concl.q, False)
    for side, prem in (("left", left), ("right", right)):
        ck.expect_same(f"{side}-rely", prem.r, concl.r, True)
        ck.expect_same(f"{side}-guarantee", prem.g, concl.g, True)
    return ck.report


def check_conseq(concl: Quintuple, inner: Quintuple, u: Universe,
                 filter: Expr | None = None) -> CheckReport:
    ck = _Checker("conseq", u, filter)
    if concl.c != inner.c:
        raise ShapeMismatch("conseq: commands differ")
    ck.add("pre", lambda: ck.implies_pred(concl.p, inner.p))
    ck.add("rely", lambda: ck.implies_rel(concl.r, inner.r))
    ck.add("guarantee", lambda: ck.implies_rel(inner.g, concl.g))
    ck.add("post", lambda: ck.implies_pred(inner.q, concl.q))
    return ck.report


def check_par_u(concl: Quintuple, left: Quintuple, right: Quintuple, u: Universe,
                filter: Expr | None = None) -> CheckReport:
    ck = _Checker("par-u", u, filter)
    if concl.c != Par(left.c, right.c):
        raise ShapeMismatch("par-u: conclusion command is not the parallel composition")
    ck.expect_same("left-pre", left.p, concl.p, False)
    ck.expect_same("right-pre", right.p, concl.p, False)
    ck.expect_same("left-rely", left.r, or_(concl.r, right.g), True)
    ck.expect_same("right-rely", right.r, or_(concl.r, left.g), True)
    ck.expect_same("guarantee", concl.g, or_(left.g, right.g), True)
    ck.expect_same("post", concl.q, and_(left.q, right.q), False)
    return ck.report


def check_par_int(concl: Quintuple, left: Quintuple, right: Quintuple, u: Universe,
                  filter: Expr | None = None) -> CheckReport:
    ck = _Checker("par-int", u, filter)
    if concl.c != Par(left.c, right.c):
        raise ShapeMismatch("par-int: conclusion command is not the parallel composition")
    ck.expect_same("pre", concl.p, and_(left.p, right.p), False)
    ck.expect_same("rely", concl.r, and_(left.r, right.r), True)
    ck.expect_same("guarantee", concl.g, or_(left.g, right.g), True)
    ck.expect_same("post", concl.q, and_(left.q, right.q), False)
    ck.add("left-guar-implies-right-rely", lambda: ck.implies_rel(left.g, right.r))
    ck.add("right-guar-implies-left-rely", lambda: ck.implies_rel(right.g, left.r))
    return ck.report


def check_par_gen(concl: Quintuple, children: Sequence[Quintuple], u: Universe,
                  filter: Expr | None = None, threads: Sequence[str] | None = None) -> CheckReport:
    ck = _Checker("par-gen", u, filter)
    c = concl.c
    if not isinstance(c, ParN) or tuple(x for _, x in c.children) != tuple(k.c for k in children):
        raise ShapeMismatch("par-gen: conclusion command is not the n-ary parallel composition")
    names = threads or c.threads
    ck.expect_same("pre", concl.p, and_(*(k.p for k in children)), False)
    ck.expect_same("rely", concl.r, and_(*(k.r for k in children)), True)
    ck.expect_same("guarantee", concl.g, or_(*(k.g for k in children)), True)
    ck.expect_same("post", concl.q, and_(*(k.q for k in children)), False)
    for i, ki in enumerate(children):
        for j, kj in enumerate(children):
            if i != j:
                ck.add(f"guar[{names[i]}]-implies-rely[{names[j]}]",
                       lambda ki=ki, kj=kj: ck.implies_rel(ki.g, kj.r))
    return ck.report


def check_derivation(d: Derivation, u: Universe, filter: Expr | None = None,
                     path: str = "") -> CheckReport:
    path = f"{path}/{d.rule}" if path else d.rule
    try:
        if isinstance(d, AsgnNode):
            rep = check_asgn(d.concl, u, filter)
        elif isinstance(d, SpinLoopNode):
            rep = check_spin_loop(d.concl, u, filter)
        elif isinstance(d, SeqNode):
            rep = check_seq(d.concl, d.mid, d.left.concl, d.right.concl, u, filter)
        elif isinstance(d, ConseqNode):
            rep = check_conseq(d.concl, d.inner.concl, u, filter)
        elif isinstance(d, ParUNode):
            rep = check_par_u(d.concl, d.left.concl, d.right.concl, u, filter)
        elif isinstance(d, ParIntNode):
            rep = check_par_int(d.concl, d.left.concl, d.right.concl, u, filter)
        elif isinstance(d, ParGenNode):
            rep = check_par_gen(d.concl, [k.concl for k in d.children], u, filter)
        else:
            raise ShapeMismatch(f"unknown rule {type(d).__name__}")
    except ShapeMismatch as err:
        rep = CheckReport(d.rule, mode=FULL if filter is None else FILTERED)
        rep.conditions.append(Condition("shape", False, None, f"{type(err).__name__}: {err}"))
    rep.path = path
    for i, prem in enumerate(d.premises):
        rep.children.append(check_derivation(prem, u, filter, f"{path}[{i}]"))
    return rep


def quintuples(d: Derivation) -> list[Quintuple]:
    """Every quintuple concluded anywhere in the derivation (root first)."""
    out = [d.concl]
    for p in d.premises:
        out.extend(quintuples(p))
    return out


def stripped(q: Quintuple) -> Quintuple:
    return q.replace(c=strip_asserts(q.c))


# ---------------------------------------------------------------------------
# s-expression form

def _sx():
    from . import sexpr
    return sexpr


def quintuple_to_sx(q: Quintuple) -> list:
    S = _sx()
    return [S.Sym("quintuple"), S.expr_to_sx(q.p), S.expr_to_sx(q.r),
            S.command_to_sx(q.c), S.expr_to_sx(q.g), S.expr_to_sx(q.q)]


def quintuple_from_sx(sx: Any) -> Quintuple:
    S = _sx()
    if S._head(sx) != "quintuple" or len(sx) != 6:
        raise S.ParseError("expected (quintuple P R C G Q)")
    _, p, r, c, g, q = sx
    return Quintuple(S.expr_from_sx(p), S.expr_from_sx(r), S.command_from_sx(c),
                     S.expr_from_sx(g), S.expr_from_sx(q))


def derivation_to_sx(d: Derivation) -> list:
    S = _sx()
    head = [S.Sym(d.rule), quintuple_to_sx(d.concl)]
    if isinstance(d, SeqNode):
        head.append(S.expr_to_sx(d.mid))
    return head + [derivation_to_sx(p) for p in d.premises]


_NODES = {"asgn": AsgnNode, "spin-loop": SpinLoopNode, "seq": SeqNode, "conseq": ConseqNode,
          "par-u": ParUNode, "par-int": ParIntNode, "par-gen": ParGenNode}


def derivation_from_sx(sx: Any) -> Derivation:
    S = _sx()
    head = S._head(sx)
    if head not in _NODES or len(sx) < 2:
        raise S.ParseError(f"unknown derivation rule {head!r}")
    concl = quintuple_from_sx(sx[1])
    rest = sx[2:]
    if head in ("asgn", "spin-loop"):
        if rest:
            raise S.ParseError(f"{head} takes no premises")
        return _NODES[head](concl)
    if head == "seq":
        if len(rest) != 3:
            raise S.ParseError("seq takes a mid-state and two premises")
        return SeqNode(concl, S.expr_from_sx(rest[0]),
                       derivation_from_sx(rest[1]), derivation_from_sx(rest[2]))
    prem = [derivation_from_sx(x) for x in rest]
    if head == "conseq":
        if len(prem) != 1:
            raise S.ParseError("conseq takes one premise")
        return ConseqNode(concl, prem[0])
    if head in ("par-u", "par-int"):
        if len(prem) != 2:
            raise S.ParseError(f"{head} takes two premises")
        return _NODES[head](concl, prem[0], prem[1])
    return ParGenNode(concl, tuple(prem))


def dump_derivation(d: Derivation, width: int = 100) -> str:
    return _sx().dumps(derivation_to_sx(d), width) + "\n"


def load_derivation(text: str) -> Derivation:
    return derivation_from_sx(_sx().parse_one(text))
