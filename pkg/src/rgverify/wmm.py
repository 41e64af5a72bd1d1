"""Instruction reordering under a memory model and resolution of ``;M``.

``a ;M b`` behaves like ``a ; b`` when b may not be reordered before a, and
like ``a || b`` when it may.  A model is plain data: which constraints keep
a pair in program order.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Iterable, Sequence

from .program import (
    SKIP, Assert, AtomicBlock, Assign, Command, Fence, Marker, Par, ParN, PPSeq, Seq, Skip,
    SpinLoop, While, conflicts, footprint, label_of,
)
from .expr import Err
from .state import State

ORDERED = "ordered"
REORDERABLE = "reorderable"


class NotLinear(ValueError):
    pass


class NotTransformable(ValueError):
    pass


@dataclass(frozen=True)
class MemoryModel:
    name: str
    reorder_independent: bool = True     # False gives sequential consistency
    fence_kinds: tuple[str, ...] = ("full",)
    release_orders_earlier: bool = True

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


ARM_LIKE = MemoryModel("arm-like")
SC = MemoryModel("sc", reorder_independent=False)
MODELS = {m.name: m for m in (ARM_LIKE, SC)}


def get_model(name: str) -> MemoryModel:
    try:
        return MODELS[name]
    except KeyError:
        raise ValueError(f"unknown memory model {name!r}; known: {sorted(MODELS)}") from None


_STEP_TYPES = (Assign, AtomicBlock, Fence, Marker, SpinLoop)


@dataclass(frozen=True)
class Reordering:
    allowed: bool
    reason: str

    @property
    def verdict(self) -> str:
        return REORDERABLE if self.allowed else ORDERED

    def __bool__(self) -> bool:
        return self.allowed


def reorders(a: Command, b: Command, m: MemoryModel = ARM_LIKE) -> Reordering:
    """May ``b`` be executed before the program-order-earlier ``a``?"""
    for x in (a, b):
        if not isinstance(x, _STEP_TYPES):
            raise TypeError(f"reordering is defined on instructions, got {type(x).__name__}")
    if a is b:
        return Reordering(False, "same instruction")
    for x in (a, b):
        if isinstance(x, Fence) and x.kind in m.fence_kinds:
            return Reordering(False, f"{x.kind} fence")
    if m.release_orders_earlier and getattr(b, "ordering", "none") == "release":
        return Reordering(False, "release")
    shared = conflicts(footprint(a), footprint(b))
    if shared:
        return Reordering(False, "shared " + ", ".join(sorted(shared)))
    if not m.reorder_independent:
        return Reordering(False, "program order")
    return Reordering(True, "independent")


# ---------------------------------------------------------------------------
# reports

def linear_steps(c: Command) -> list[Command]:
    """The instructions of a ``;M`` chain in program order."""
    if isinstance(c, PPSeq):
        return linear_steps(c.first) + linear_steps(c.second)
    if isinstance(c, _STEP_TYPES):
        return [c]
    raise NotLinear(f"not a linear chain of instructions: {type(c).__name__}")


@dataclass(frozen=True)
class PairVerdict:
    first: str
    second: str
    verdict: str
    reason: str

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class ReorderReport:
    model: str
    pairs: list[PairVerdict]

    @property
    def verdicts(self) -> list[str]:
        return [p.verdict for p in self.pairs]

    def to_json(self) -> dict:
        return {"model": self.model, "verdicts": self.verdicts,
                "pairs": [p.to_json() for p in self.pairs]}

    def table(self) -> str:
        rows = [("first", "second", "verdict", "reason")]
        rows += [(p.first, p.second, p.verdict, p.reason) for p in self.pairs]
        widths = [max(len(r[k]) for r in rows) for k in range(4)]
        return "\n".join("  ".join(x.ljust(w) for x, w in zip(r, widths)).rstrip() for r in rows)


def pairwise_report(c: Command, m: MemoryModel = ARM_LIKE) -> ReorderReport:
    steps = linear_steps(c)
    pairs = []
    for a, b in zip(steps, steps[1:]):
        r = reorders(a, b, m)
        pairs.append(PairVerdict(label_of(a), label_of(b), r.verdict, r.reason))
    return ReorderReport(m.name, pairs)


# ---------------------------------------------------------------------------
# transformation

def _plain(x: Command) -> Command:
    """Drop ordering annotations once they have been turned into structure."""
    if isinstance(x, (Assign, AtomicBlock)) and x.ordering != "none":
        return dataclasses.replace(x, ordering="none")
    return x


def _par_all(cs: Sequence[Command]) -> Command:
    out = cs[-1]
    for c in reversed(cs[:-1]):
        out = Par(c, out)
    return out


def _seq_all(cs: Sequence[Command]) -> Command:
    cs = [c for c in cs if not isinstance(c, Skip)]
    if not cs:
        return SKIP
    out = cs[-1]
    for c in reversed(cs[:-1]):
        out = Seq(c, out)
    return out


def _chain(c: Command) -> list[Command]:
    if isinstance(c, PPSeq):
        return _chain(c.first) + _chain(c.second)
    return [c]


def group(steps: Sequence[Command], m: MemoryModel) -> list[list[Command]]:
    """Split a chain into runs whose members may all be reordered with each other.

    Fences close the current run and are dropped.
    """
    groups: list[list[Command]] = []
    cur: list[Command] = []
    for s in steps:
        if isinstance(s, Fence) and s.kind in m.fence_kinds:
            if cur:
                groups.append(cur)
            cur = []
            continue
        if cur and all(reorders(g, s, m) for g in cur):
            cur.append(s)
        else:
            if cur:
                groups.append(cur)
            cur = [s]
    if cur:
        groups.append(cur)
    return groups


def transform(c: Command, m: MemoryModel = ARM_LIKE) -> Command:
    """Replace every ``;M`` chain by sequential and parallel composition."""
    if isinstance(c, PPSeq):
        steps = []
        for x in _chain(c):
            if isinstance(x, (Skip, Assert)):
                continue
            if not isinstance(x, _STEP_TYPES):
                raise NotTransformable(
                    f"{type(x).__name__} {label_of(x)!r} under ;M has no reordering rule")
            steps.append(x)
        if not steps:
            return SKIP
        return _seq_all([_plain(g[0]) if len(g) == 1 else _par_all([_plain(x) for x in g])
                         for g in group(steps, m)])
    if isinstance(c, Seq):
        return Seq(transform(c.first, m), transform(c.second, m))
    if isinstance(c, Par):
        return Par(transform(c.left, m), transform(c.right, m))
    if isinstance(c, ParN):
        return ParN(tuple((t, transform(x, m)) for t, x in c.children))
    if isinstance(c, While):
        return While(c.guard, transform(c.body, m), c.label)
    return c


def par_pairs(c: Command, m: MemoryModel = ARM_LIKE) -> list[tuple[Command, Command]]:
    """Instruction pairs that the transformation places in parallel."""
    out = []
    if isinstance(c, PPSeq):
        steps = [x for x in _chain(c) if isinstance(x, _STEP_TYPES)]
        for g in group(steps, m):
            out += [(a, b) for k, a in enumerate(g) for b in g[k + 1:]]
        return out
    for attr in ("first", "second", "left", "right", "body"):
        if hasattr(c, attr):
            out += par_pairs(getattr(c, attr), m)
    if isinstance(c, ParN):
        for _, x in c.children:
            out += par_pairs(x, m)
    return out


def commute(a: Command, b: Command, states: Iterable[State]) -> State | None:
    """First state where running a then b differs from b then a (None if they commute).

    Two runs that both fail count as agreeing, whichever error each hits.
    """
    from .program import execute

    def run(x, s):
        if isinstance(x, SpinLoop):
            return s
        return execute(x, s)

    for s in states:
        ab = run(a, s)
        ab = ab if not isinstance(ab, State) else run(b, ab)
        ba = run(b, s)
        ba = ba if not isinstance(ba, State) else run(a, ba)
        if ab != ba and not (isinstance(ab, Err) and isinstance(ba, Err)):
            return s
    return None


# ---------------------------------------------------------------------------
# semantic comparison

@dataclass
class TransformEquivalence:
    reference: object
    transformed: object

    @property
    def holds(self) -> bool:
        return bool(self.reference) and bool(self.transformed)

    def __bool__(self) -> bool:
        return self.holds

    def to_json(self) -> dict:
        return {"holds": self.holds, "reference": self.reference.to_json(),
                "transformed": self.transformed.to_json()}


def check_transform_equiv(quintuple, transformed: Command, universe, bounds=None) -> TransformEquivalence:
    """Check the reference command and its transformed form against the same quintuple."""
    from .explorer import Bounds, check_quintuple_semantic
    b = bounds or Bounds()
    ref = check_quintuple_semantic(quintuple, universe, b)
    new = check_quintuple_semantic(quintuple.replace(c=transformed), universe, b)
    return TransformEquivalence(ref, new)


__all__ = [
    "MemoryModel", "ARM_LIKE", "SC", "MODELS", "get_model", "Reordering", "reorders",
    "PairVerdict", "ReorderReport", "pairwise_report", "linear_steps", "transform", "group",
    "par_pairs", "commute", "check_transform_equiv", "TransformEquivalence", "NotLinear",
    "NotTransformable", "ORDERED", "REORDERABLE",
]
