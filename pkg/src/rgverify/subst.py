"""Symbolic post-values of atomic instructions.

Running an assignment (or atomic block) symbolically yields, for every
location, an expression over the pre-state giving its value afterwards.
Reads through a symbolic pointer or thread index become if-then-else chains
over the writes that might alias them.  This gives both substitution
(``p<x <- e>``) and the "post-state image" of relations used by the
assignment rule.
"""

from __future__ import annotations

from typing import Any

from .expr import (
    HEAP, Const, Deref, Expr, Idx, MapList, Var, and_, cell, eq, ite, ne, transform,
)
from .program import Assign, AtomicBlock, Fence, Marker, ProgramError
from .state import BOT, UndeclaredVariable, Universe


def _heap_node(name: str) -> str | None:
    if name.startswith(HEAP + "[") and name.endswith("]"):
        return name[len(HEAP) + 1:-1]
    return None


class SymbolicUpdate:
    def __init__(self, universe: Universe):
        self.u = universe
        self.vars: dict[str, Expr] = {}
        self.heap: list[tuple[Expr, Expr]] = []
        self.obligations: list[Expr] = []

    # reads in the current (post-so-far) state, given pre-state expressions
    def read_var(self, name: str) -> Expr:
        node = _heap_node(name)
        if node is not None:
            return self.heap_read(Const(node))
        return self.vars.get(name, Var(name))

    def read_idx(self, family: str, index: Expr) -> Expr:
        if isinstance(index, Const):
            return self.read_var(cell(family, index.value))
        written = [t for t in self.u.threads if cell(family, t) in self.vars]
        out: Expr = Idx(family, index)
        for t in reversed(written):
            out = ite(eq(index, t), self.vars[cell(family, t)], out)
        return out

    def heap_read(self, ptr: Expr) -> Expr:
        out: Expr = Deref(ptr)
        for wp, wv in self.heap:
            if isinstance(ptr, Const) and isinstance(wp, Const):
                if ptr.value == wp.value:
                    out = wv
                continue
            out = ite(eq(ptr, wp), wv, out)
        return out

    def current(self, e: Expr) -> Expr:
        """``e`` (a predicate) read in the current state, as a pre-state expression."""
        def fn(x: Expr):
            if isinstance(x, Var):
                if x.primed:
                    raise ProgramError("primed variable in program text")
                return self.read_var(x.name)
            if isinstance(x, Idx):
                return self.read_idx(x.family, self.current(x.index))
            if isinstance(x, Deref):
                return self.heap_read(self.current(x.ptr))
            return None
        return transform(e, fn)

    def image(self, g: Expr) -> Expr:
        """Relation ``g`` with primed leaves read in the current state."""
        def fn(x: Expr):
            if isinstance(x, Var):
                return self.read_var(x.name) if x.primed else x
            if isinstance(x, Idx):
                i = self.image(x.index)
                return self.read_idx(x.family, i) if x.primed else Idx(x.family, i)
            if isinstance(x, Deref):
                p = self.image(x.ptr)
                return self.heap_read(p) if x.primed else Deref(p)
            return None
        return transform(g, fn)

    # writes
    def apply(self, instr: Any) -> SymbolicUpdate:
        if isinstance(instr, (Fence, Marker)):
            return self
        members = instr.members if isinstance(instr, AtomicBlock) else (instr,)
        for m in members:
            if not isinstance(m, Assign):
                raise ProgramError(f"cannot run {type(m).__name__} symbolically")
            self._apply_assign(m)
        return self

    def _apply_assign(self, a: Assign) -> None:
        var_writes: list[tuple[str, Expr]] = []
        heap_writes: list[tuple[Expr, Expr]] = []
        for target, rhs in a.updates:
            val = self.current(rhs)
            self.obligations.append(eq(val, val))
            if isinstance(target, Var):
                if target.name not in self.u:
                    raise UndeclaredVariable(target.name)
                node = _heap_node(target.name)
                if node is not None:
                    heap_writes.append((Const(node), val))
                else:
                    var_writes.append((target.name, val))
            elif isinstance(target, Idx):
                i = self.current(target.index)
                if not isinstance(i, Const):
                    raise ProgramError(f"symbolic thread index in assignment target {target!r}")
                var_writes.append((cell(target.family, i.value), val))
            else:
                p = self.current(target.ptr)
                self.obligations.append(ne(p, BOT))
                heap_writes.append((p, val))
        for name, val in var_writes:
            self.vars[name] = val
        self.heap.extend(heap_writes)

    def definedness(self) -> Expr:
        """Holds in pre-states where every executed expression is defined."""
        return and_(*self.obligations)


def run(instr: Any, universe: Universe) -> SymbolicUpdate:
    return SymbolicUpdate(universe).apply(instr)


def substitute(p: Expr, x: str | Var, e: Expr, universe: Universe) -> Expr:
    """``p`` with ``x`` replaced by ``e``: holds in s iff p holds in s[x := e(s)]."""
    name = x.name if isinstance(x, Var) else x
    if name not in universe:
        raise UndeclaredVariable(name)
    upd = SymbolicUpdate(universe)
    upd._apply_assign(Assign(((Var(name), e),)))
    return upd.current(p)


def weakest_pre(q: Expr, instr: Any, universe: Universe) -> Expr:
    return run(instr, universe).current(q)


__all__ = ["SymbolicUpdate", "run", "substitute", "weakest_pre", "MapList"]
