"""Program trees: atomic instructions, compositions, loops, assertions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Union

from .expr import (
    ERR_DEREF, ERR_TYPE, HEAP, TRUE, Const, Deref, Err, Expr, Idx, Var, cell,
    compile_expr, walk,
)
from .state import BOT, State, Universe

ORDERINGS = ("none", "release")


class ProgramError(ValueError):
    pass


# ---------------------------------------------------------------------------
# instructions

@dataclass(frozen=True)
class Assign:
    """Simultaneous assignment of one or more targets, as a single step."""

    updates: tuple[tuple[Expr, Expr], ...]
    label: str = ""
    ordering: str = "none"

    def __post_init__(self):
        if not self.updates:
            raise ProgramError("assignment without targets")
        for target, _ in self.updates:
            if not isinstance(target, (Var, Idx, Deref)) or target.primed:
                raise ProgramError(f"not an assignable target: {target!r}")
        if self.ordering not in ORDERINGS:
            raise ProgramError(f"unknown ordering {self.ordering!r}")


@dataclass(frozen=True)
class AtomicBlock:
    """Member assignments executed in order as one indivisible step."""

    members: tuple[Assign, ...]
    label: str = ""
    ordering: str = "none"

    def __post_init__(self):
        if not self.members:
            raise ProgramError("empty atomic block")
        if not all(isinstance(m, Assign) for m in self.members):
            raise ProgramError("atomic blocks contain only assignments")


@dataclass(frozen=True)
class Fence:
    label: str = "fence"
    kind: str = "full"


@dataclass(frozen=True)
class Marker:
    """A labelled no-op step with an empty footprint (e.g. the critical section)."""

    label: str


# ---------------------------------------------------------------------------
# commands

@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Seq:
    first: Command
    second: Command


@dataclass(frozen=True)
class PPSeq:
    """Parallelized sequential composition under a memory model."""

    model: str
    first: Command
    second: Command


@dataclass(frozen=True)
class Par:
    left: Command
    right: Command


@dataclass(frozen=True)
class ParN:
    children: tuple[tuple[str, Command], ...]

    @property
    def threads(self) -> tuple[str, ...]:
        return tuple(t for t, _ in self.children)


@dataclass(frozen=True)
class While:
    guard: Expr
    body: Command
    label: str = "while"


@dataclass(frozen=True)
class SpinLoop:
    """Busy-wait until ``guard`` holds; each test is one step."""

    guard: Expr
    label: str = "await"


@dataclass(frozen=True)
class Assert:
    """Checkable annotation; takes no step."""

    pred: Expr
    label: str = "assert"


Instr = Union[Assign, AtomicBlock, Fence, Marker]
Command = Union[Instr, Skip, Seq, PPSeq, Par, ParN, While, SpinLoop, Assert]
SKIP = Skip()
INSTR_TYPES = (Assign, AtomicBlock, Fence, Marker)


# ---------------------------------------------------------------------------
# builders

def assign(target: Expr, value: Any, label: str = "", ordering: str = "none") -> Assign:
    value = value if isinstance(value, Expr) else Const(value)
    return Assign(((target, value),), label, ordering)


def simultaneous(pairs: Iterable[tuple[Expr, Any]], label: str = "") -> Assign:
    return Assign(tuple((t, v if isinstance(v, Expr) else Const(v)) for t, v in pairs), label)


def atomic(*members: Assign, label: str = "", ordering: str = "none") -> AtomicBlock:
    return AtomicBlock(tuple(members), label, ordering)


def seq(*cmds: Command) -> Command:
    cmds = [c for c in cmds if not isinstance(c, Skip)]
    if not cmds:
        return SKIP
    out = cmds[-1]
    for c in reversed(cmds[:-1]):
        out = Seq(c, out)
    return out


def ppseq(model: str, *cmds: Command) -> Command:
    cmds = [c for c in cmds if not isinstance(c, Skip)]
    if not cmds:
        return SKIP
    out = cmds[-1]
    for c in reversed(cmds[:-1]):
        out = PPSeq(model, c, out)
    return out


def parn(children: Iterable[tuple[str, Command]]) -> ParN:
    return ParN(tuple(children))


def label_of(c: Command) -> str:
    return getattr(c, "label", "") or type(c).__name__.lower()


# ---------------------------------------------------------------------------
# traversal helpers

def subcommands(c: Command) -> tuple[Command, ...]:
    if isinstance(c, (Seq, PPSeq)):
        return (c.first, c.second)
    if isinstance(c, Par):
        return (c.left, c.right)
    if isinstance(c, ParN):
        return tuple(x for _, x in c.children)
    if isinstance(c, While):
        return (c.body,)
    return ()


def iter_nodes(c: Command) -> Iterator[Command]:
    stack = [c]
    while stack:
        x = stack.pop()
        yield x
        stack.extend(reversed(subcommands(x)))


def instructions(c: Command) -> list[Command]:
    """Leaves that take steps, in program order (spin loops included)."""
    return [x for x in iter_nodes(c) if isinstance(x, INSTR_TYPES + (SpinLoop,))]


def expressions(c: Command) -> Iterator[Expr]:
    for x in iter_nodes(c):
        if isinstance(x, Assign):
            for t, e in x.updates:
                yield t
                yield e
        elif isinstance(x, AtomicBlock):
            for m in x.members:
                for t, e in m.updates:
                    yield t
                    yield e
        elif isinstance(x, (While, SpinLoop)):
            yield x.guard
        elif isinstance(x, Assert):
            yield x.pred


def strip_asserts(c: Command) -> Command:
    if isinstance(c, Assert):
        return SKIP
    if isinstance(c, Seq):
        a, b = strip_asserts(c.first), strip_asserts(c.second)
        return seq(a, b)
    if isinstance(c, PPSeq):
        a, b = strip_asserts(c.first), strip_asserts(c.second)
        if isinstance(a, Skip):
            return b
        if isinstance(b, Skip):
            return a
        return PPSeq(c.model, a, b)
    if isinstance(c, Par):
        return Par(strip_asserts(c.left), strip_asserts(c.right))
    if isinstance(c, ParN):
        return ParN(tuple((t, strip_asserts(x)) for t, x in c.children))
    if isinstance(c, While):
        return While(c.guard, strip_asserts(c.body), c.label)
    return c


# ---------------------------------------------------------------------------
# footprints

HEAP_CLASS = f"{HEAP}[*]"


@dataclass(frozen=True)
class Footprint:
    reads: frozenset[str] = field(default_factory=frozenset)
    writes: frozenset[str] = field(default_factory=frozenset)

    def __or__(self, other: Footprint) -> Footprint:
        return Footprint(self.reads | other.reads, self.writes | other.writes)

    def to_json(self) -> dict:
        return {"reads": sorted(self.reads), "writes": sorted(self.writes)}


def _loc_class(name: str) -> str:
    return HEAP_CLASS if name.startswith(HEAP + "[") else name


def read_classes(e: Expr) -> frozenset[str]:
    """Location classes read by evaluating ``e``."""
    out: set[str] = set()
    for x in walk(e):
        if isinstance(x, Var):
            out.add(_loc_class(x.name))
        elif isinstance(x, Idx):
            out.add(f"{x.family}[*]")
        elif isinstance(x, Deref):
            out.add(HEAP_CLASS)
    return frozenset(out)


def _target_fp(target: Expr) -> Footprint:
    if isinstance(target, Var):
        return Footprint(frozenset(), frozenset({_loc_class(target.name)}))
    if isinstance(target, Idx):
        return Footprint(read_classes(target.index), frozenset({f"{target.family}[*]"}))
    return Footprint(read_classes(target.ptr), frozenset({HEAP_CLASS}))


def footprint(i: Command) -> Footprint:
    if isinstance(i, Assign):
        fp = Footprint()
        for t, e in i.updates:
            fp = fp | _target_fp(t) | Footprint(read_classes(e), frozenset())
        return fp
    if isinstance(i, AtomicBlock):
        fp = Footprint()
        for m in i.members:
            fp = fp | footprint(m)
        return fp
    if isinstance(i, SpinLoop):
        return Footprint(read_classes(i.guard), frozenset())
    if isinstance(i, (Fence, Marker, Skip, Assert)):
        return Footprint()
    raise ProgramError(f"no footprint for {type(i).__name__}")


def _overlap(xs: frozenset[str], ys: frozenset[str]) -> set[str]:
    hits = set(xs & ys)
    for x in xs:
        if x.endswith("[*]"):
            fam = x[:-2]
            hits |= {y for y in ys if y.startswith(fam)}
    for y in ys:
        if y.endswith("[*]"):
            fam = y[:-2]
            hits |= {x for x in xs if x.startswith(fam)}
    return hits


def conflicts(a: Footprint, b: Footprint) -> set[str]:
    """Locations on which the two footprints conflict (write/read or write/write)."""
    return (_overlap(a.writes, b.reads | b.writes)
            | _overlap(b.writes, a.reads | a.writes))


# ---------------------------------------------------------------------------
# execution of atomic steps

def _location(target: Expr, universe: Universe, pre: tuple) -> Any:
    if isinstance(target, Var):
        return target.name
    if isinstance(target, Idx):
        k = compile_expr(target.index, universe)(pre, None)
        if isinstance(k, Err):
            return k
        name = cell(target.family, k)
    else:
        k = compile_expr(target.ptr, universe)(pre, None)
        if isinstance(k, Err):
            return k
        if k == BOT:
            return ERR_DEREF
        name = cell(HEAP, k)
    return name if name in universe.index else ERR_TYPE


def execute(i: Command, s: State) -> State | Err:
    """Apply one atomic instruction; returns an :class:`Err` on evaluation failure."""
    u = s.universe
    if isinstance(i, (Fence, Marker)):
        return s
    members = i.members if isinstance(i, AtomicBlock) else (i,)
    vals = s.values
    for m in members:
        changes = []
        for target, e in m.updates:
            loc = _location(target, u, vals)
            if isinstance(loc, Err):
                return loc
            v = compile_expr(e, u)(vals, None)
            if isinstance(v, Err):
                return v
            if v not in u.domains[loc]:
                return ERR_TYPE
            changes.append((u.index[loc], v))
        lst = list(vals)
        for j, v in changes:
            lst[j] = v
        vals = tuple(lst)
    return State(u, vals)


# ---------------------------------------------------------------------------
# validation

@dataclass
class Defect:
    label: str
    message: str

    def to_json(self) -> dict:
        return {"label": self.label, "message": self.message}


def validate(c: Command, universe: Universe) -> list[Defect]:
    """Structural defects of ``c`` against ``universe`` (empty list when valid)."""
    defects: list[Defect] = []
    models: set[str] = set()
    names = set(universe.names)
    for x in iter_nodes(c):
        lbl = label_of(x)
        if isinstance(x, ParN):
            ts = x.threads
            if len(set(ts)) != len(ts):
                defects.append(Defect(lbl, f"duplicate thread indices {list(ts)}"))
        elif isinstance(x, PPSeq):
            models.add(x.model)
        exprs: list[Expr] = []
        if isinstance(x, Assign):
            exprs = [e for pair in x.updates for e in pair]
        elif isinstance(x, AtomicBlock):
            exprs = [e for m in x.members for pair in m.updates for e in pair]
        elif isinstance(x, (While, SpinLoop)):
            exprs = [x.guard]
        elif isinstance(x, Assert):
            exprs = [x.pred]
        for e in exprs:
            for n in sorted({v.name for v in walk(e) if isinstance(v, Var)} - names):
                defects.append(Defect(lbl, f"UndeclaredVariable: {n}"))
            if any(getattr(v, "primed", False) for v in walk(e)):
                defects.append(Defect(lbl, "primed variable in program text"))
    if len(models) > 1:
        defects.append(Defect("ppseq", f"inconsistent memory-model tags {sorted(models)}"))
    return defects


def is_terminated(c: Command) -> bool:
    if isinstance(c, Skip):
        return True
    if isinstance(c, Assert):
        return True
    if isinstance(c, (Seq, PPSeq)):
        return is_terminated(c.first) and is_terminated(c.second)
    if isinstance(c, Par):
        return is_terminated(c.left) and is_terminated(c.right)
    if isinstance(c, ParN):
        return all(is_terminated(x) for _, x in c.children)
    return False


__all__ = [
    "Assign", "AtomicBlock", "Fence", "Marker", "Skip", "Seq", "PPSeq", "Par", "ParN",
    "While", "SpinLoop", "Assert", "SKIP", "Footprint", "footprint", "conflicts",
    "execute", "validate", "assign", "simultaneous", "atomic", "seq", "ppseq", "parn",
    "strip_asserts", "instructions", "iter_nodes", "expressions", "is_terminated", "TRUE",
]
