"""Canonical s-expression text for expressions and commands.

Symbols are bare words; string constants (thread ids, node ids, status
values) are double-quoted; a trailing ``'`` on a variable name reads the
post-state.  ``dump_*`` output parses back to an identical object.
"""

from __future__ import annotations

import re
from typing import Any, Iterable

from . import expr as E
from . import program as P
from .state import Held


class ParseError(ValueError):
    pass


class Sym(str):
    """A bare symbol (as opposed to a quoted string)."""


_TOKEN = re.compile(r'\s*(?:(;[^\n]*)|(\()|(\))|"((?:[^"\\]|\\.)*)"|([^\s()";]+))')
_INT = re.compile(r"-?\d+$")


def parse(text: str) -> list:
    """Parse every top-level form in ``text``."""
    forms: list = []
    stack: list[list] = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character at offset {pos}: {text[pos:pos + 20]!r}")
        pos = m.end()
        comment, lp, rp, string, atom = m.groups()
        if comment is not None:
            continue
        if lp:
            stack.append([])
            continue
        if rp:
            if not stack:
                raise ParseError(f"unbalanced ')' at offset {pos}")
            item: Any = stack.pop()
        elif string is not None:
            item = string.replace('\\"', '"').replace("\\\\", "\\")
        elif atom is not None:
            item = int(atom) if _INT.match(atom) else Sym(atom)
        else:
            continue
        (stack[-1] if stack else forms).append(item)
    if stack:
        raise ParseError("unbalanced '(' at end of input")
    return forms


def parse_one(text: str) -> Any:
    forms = parse(text)
    if len(forms) != 1:
        raise ParseError(f"expected exactly one form, found {len(forms)}")
    return forms[0]


def _atom(x: Any) -> str:
    if isinstance(x, Sym):
        return str(x)
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, str):
        return '"' + x.replace("\\", "\\\\").replace('"', '\\"') + '"'
    raise TypeError(f"cannot print {x!r}")


def dumps(sx: Any, width: int = 88, indent: int = 0) -> str:
    flat = _flat(sx)
    if not isinstance(sx, list) or len(flat) + indent <= width or len(sx) < 2:
        return flat
    pad = " " * (indent + 2)
    head = _flat(sx[0])
    # keep short leading atoms (labels, model tags) on the first line
    first = [head]
    rest = list(sx[1:])
    while rest and not isinstance(rest[0], list) and len(first) < 3:
        first.append(_flat(rest.pop(0)))
    lines = ["(" + " ".join(first)]
    for x in rest:
        lines.append(pad + dumps(x, width, indent + 2))
    return "\n".join(lines) + ")"


def _flat(sx: Any) -> str:
    if isinstance(sx, list):
        return "(" + " ".join(_flat(x) for x in sx) + ")"
    return _atom(sx)


def _head(sx: Any) -> str | None:
    if isinstance(sx, list) and sx and isinstance(sx[0], Sym):
        return str(sx[0])
    return None


# ---------------------------------------------------------------------------
# expressions

def expr_to_sx(e: E.Expr) -> Any:
    if isinstance(e, E.Const):
        v = e.value
        if isinstance(v, Held):
            return [Sym("held"), v.thread]
        if isinstance(v, tuple):
            return [Sym("list")] + [expr_to_sx(E.Const(x)) for x in v]
        if isinstance(v, E.Err):
            return [Sym("error"), Sym(v.kind)]
        if isinstance(v, bool):
            return Sym("true" if v else "false")
        return v
    if isinstance(e, E.Var):
        return Sym(e.name + ("'" if e.primed else ""))
    if isinstance(e, E.Bound):
        return Sym(e.name)
    if isinstance(e, E.Idx):
        return [Sym("at'" if e.primed else "at"), Sym(e.family), expr_to_sx(e.index)]
    if isinstance(e, E.Deref):
        return [Sym("status'" if e.primed else "status"), expr_to_sx(e.ptr)]
    if isinstance(e, E.ListLit):
        return [Sym("list")] + [expr_to_sx(x) for x in e.items]
    if isinstance(e, E.MapList):
        return [Sym("maplist"), expr_to_sx(e.lst)] + [[k, expr_to_sx(v)] for k, v in e.table]
    if isinstance(e, E.App):
        return [Sym(e.op)] + [expr_to_sx(a) for a in e.args]
    if isinstance(e, E.Quant):
        return [Sym(e.kind), Sym(e.var), Sym(e.sort), expr_to_sx(e.body)]
    raise TypeError(e)


def dump_expr(e: E.Expr, width: int = 10_000) -> str:
    return dumps(expr_to_sx(e), width)


def expr_from_sx(sx: Any, bound: frozenset = frozenset()) -> E.Expr:
    if isinstance(sx, bool):
        return E.Const(sx)
    if isinstance(sx, int):
        return E.Const(sx)
    if isinstance(sx, Sym):
        name = str(sx)
        if name == "true":
            return E.TRUE
        if name == "false":
            return E.FALSE
        if name in bound:
            return E.Bound(name)
        if name.endswith("'"):
            return E.Var(name[:-1], True)
        return E.Var(name)
    if isinstance(sx, str):
        return E.Const(sx)
    if not isinstance(sx, list) or not sx:
        raise ParseError(f"malformed expression {sx!r}")
    head = _head(sx)
    if head is None:
        raise ParseError(f"expression form must start with a symbol: {_flat(sx)}")
    args = sx[1:]
    sub = lambda x: expr_from_sx(x, bound)  # noqa: E731
    if head in ("forall", "exists"):
        _arity(sx, 4)
        v, sort = str(args[0]), str(args[1])
        return E.Quant(head, v, sort, expr_from_sx(args[2], bound | {v}))
    if head in ("forall-in",):
        _arity(sx, 4)
        v = str(args[0])
        return E.forall_in(v, sub(args[1]), expr_from_sx(args[2], bound | {v}))
    if head in ("at", "at'"):
        _arity(sx, 3)
        return E.Idx(str(args[0]), sub(args[1]), head == "at'")
    if head in ("status", "status'"):
        _arity(sx, 2)
        return E.Deref(sub(args[0]), head == "status'")
    if head == "list":
        return E.ListLit([sub(a) for a in args])
    if head == "maplist":
        table = []
        for pair in args[1:]:
            if not (isinstance(pair, list) and len(pair) == 2 and isinstance(pair[0], str)):
                raise ParseError(f"bad maplist entry {_flat(pair)}")
            table.append((str(pair[0]), sub(pair[1])))
        return E.MapList(sub(args[0]), table)
    if head == "held" and len(args) == 1 and isinstance(args[0], str) and not isinstance(args[0], Sym):
        return E.Const(Held(args[0]))
    if head == "error":
        return E.Const(E.Err(str(args[0])))
    if head == "ID":
        return E.ID(*(sub(a) for a in args))
    if head not in E.OPS and head not in E.BOOL_OPS:
        raise ParseError(f"unknown operator {head!r}")
    xs = [sub(a) for a in args]
    if head == "and":
        return E.and_(*xs) if xs else E.TRUE
    if head == "or":
        return E.or_(*xs) if xs else E.FALSE
    return E.App(head, xs)


def _arity(sx: list, n: int) -> None:
    if len(sx) != n:
        raise ParseError(f"{sx[0]} expects {n - 1} arguments: {_flat(sx)}")


def load_expr(text: str) -> E.Expr:
    return expr_from_sx(parse_one(text))


# ---------------------------------------------------------------------------
# commands

def _assign_sx(a: P.Assign, head: str = "assign") -> list:
    out: list = [Sym(head), a.label]
    if a.ordering != "none":
        out.append(Sym(":" + a.ordering))
    out.extend([expr_to_sx(t), expr_to_sx(e)] for t, e in a.updates)
    return out


def _chain(c: Any, cls: type, model: str | None = None) -> list:
    out = []
    while isinstance(c, cls) and (model is None or c.model == model):
        out.append(c.first)
        c = c.second
    out.append(c)
    return out


def command_to_sx(c: P.Command) -> Any:
    if isinstance(c, P.Skip):
        return [Sym("skip")]
    if isinstance(c, P.Assign):
        return _assign_sx(c)
    if isinstance(c, P.AtomicBlock):
        out: list = [Sym("atomic"), c.label]
        if c.ordering != "none":
            out.append(Sym(":" + c.ordering))
        out.extend(_assign_sx(m) for m in c.members)
        return out
    if isinstance(c, P.Fence):
        return [Sym("fence"), c.label]
    if isinstance(c, P.Marker):
        return [Sym("marker"), c.label]
    if isinstance(c, P.Seq):
        return [Sym("seq")] + [command_to_sx(x) for x in _chain(c, P.Seq)]
    if isinstance(c, P.PPSeq):
        return [Sym("ppseq"), Sym(c.model)] + [command_to_sx(x) for x in _chain(c, P.PPSeq, c.model)]
    if isinstance(c, P.Par):
        return [Sym("par"), command_to_sx(c.left), command_to_sx(c.right)]
    if isinstance(c, P.ParN):
        return [Sym("parn")] + [[t, command_to_sx(x)] for t, x in c.children]
    if isinstance(c, P.While):
        return [Sym("while"), c.label, expr_to_sx(c.guard), command_to_sx(c.body)]
    if isinstance(c, P.SpinLoop):
        return [Sym("spin"), c.label, expr_to_sx(c.guard)]
    if isinstance(c, P.Assert):
        return [Sym("assert"), c.label, expr_to_sx(c.pred)]
    raise TypeError(c)


def dump_command(c: P.Command, width: int = 88) -> str:
    return dumps(command_to_sx(c), width)


def _label(x: Any) -> str:
    if isinstance(x, str):
        return str(x)
    raise ParseError(f"expected a label, got {_flat(x)}")


def _assign_from_sx(sx: list) -> P.Assign:
    args = sx[1:]
    if not args:
        raise ParseError("assign needs a label")
    label = _label(args[0])
    rest = args[1:]
    ordering = "none"
    if rest and isinstance(rest[0], Sym) and rest[0].startswith(":"):
        ordering = rest[0][1:]
        rest = rest[1:]
    pairs = []
    for pair in rest:
        if not (isinstance(pair, list) and len(pair) == 2):
            raise ParseError(f"assignment pair expected, got {_flat(pair)}")
        pairs.append((expr_from_sx(pair[0]), expr_from_sx(pair[1])))
    try:
        return P.Assign(tuple(pairs), label, ordering)
    except P.ProgramError as err:
        raise ParseError(str(err)) from None


def command_from_sx(sx: Any) -> P.Command:
    head = _head(sx)
    if head is None:
        raise ParseError(f"malformed command {sx!r}")
    args = sx[1:]
    if head == "skip":
        return P.SKIP
    if head == "assign":
        return _assign_from_sx(sx)
    if head == "atomic":
        label = _label(args[0])
        rest = args[1:]
        ordering = "none"
        if rest and isinstance(rest[0], Sym) and rest[0].startswith(":"):
            ordering = rest[0][1:]
            rest = rest[1:]
        members = []
        for m in rest:
            if _head(m) != "assign":
                raise ParseError("atomic blocks contain only assignments")
            members.append(_assign_from_sx(m))
        try:
            return P.AtomicBlock(tuple(members), label, ordering)
        except P.ProgramError as err:
            raise ParseError(str(err)) from None
    if head == "fence":
        return P.Fence(_label(args[0]) if args else "fence")
    if head == "marker":
        return P.Marker(_label(args[0]))
    if head == "seq":
        if not args:
            return P.SKIP
        cmds = [command_from_sx(a) for a in args]
        out = cmds[-1]
        for c in reversed(cmds[:-1]):
            out = P.Seq(c, out)
        return out
    if head == "ppseq":
        model = str(args[0])
        cmds = [command_from_sx(a) for a in args[1:]]
        if not cmds:
            raise ParseError("ppseq needs at least one command")
        out = cmds[-1]
        for c in reversed(cmds[:-1]):
            out = P.PPSeq(model, c, out)
        return out
    if head == "par":
        _arity(sx, 3)
        return P.Par(command_from_sx(args[0]), command_from_sx(args[1]))
    if head == "parn":
        children = []
        for pair in args:
            if not (isinstance(pair, list) and len(pair) == 2):
                raise ParseError(f"parn child must be (thread command): {_flat(pair)}")
            children.append((str(pair[0]), command_from_sx(pair[1])))
        return P.ParN(tuple(children))
    if head == "while":
        _arity(sx, 4)
        return P.While(expr_from_sx(args[1]), command_from_sx(args[2]), _label(args[0]))
    if head == "spin":
        _arity(sx, 3)
        return P.SpinLoop(expr_from_sx(args[1]), _label(args[0]))
    if head == "assert":
        _arity(sx, 3)
        return P.Assert(expr_from_sx(args[1]), _label(args[0]))
    raise ParseError(f"unknown command form {head!r}")


def load_command(text: str) -> P.Command:
    return command_from_sx(parse_one(text))


def dump_all(forms: Iterable[Any], width: int = 88) -> str:
    return "\n".join(dumps(f, width) for f in forms) + "\n"
