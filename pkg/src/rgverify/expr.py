"""Expression trees for predicates (one state) and relations (pre/post pair).

Nodes are interned: structurally equal expressions are the same object, so
equality is identity and hashing is cheap.  Two evaluators share one operator
table: :func:`compile_expr` turns an expression into a closure over full
states, and :func:`partial` folds an expression under a partial assignment,
which is what the search engine in :mod:`rgverify.solver` runs on.

Evaluation errors (indexing an absent element, dereferencing an
uninitialised pointer, ill-typed operands) are values of type :class:`Err`.
Boolean connectives absorb them symmetrically: ``false and err`` is false,
``true or err`` is true.  The public :func:`evaluate` raises on an
error-valued result.
"""

from __future__ import annotations

import weakref
from typing import Any, Callable, Iterable, Mapping, Sequence

from .state import BOT, Held, State, Universe

HEAP = "status"


class EvalError(Exception):
    kind = "EvalError"

    def __init__(self, msg: str = "", state: Any = None):
        super().__init__(msg)
        self.state = state


class UnguardedIndex(EvalError):
    kind = "UnguardedIndex"


class TypeMismatch(EvalError):
    kind = "TypeMismatch"


class MissingPostState(EvalError):
    kind = "MissingPostState"


class DereferenceUninitialised(EvalError):
    kind = "DereferenceUninitialised"


_ERROR_CLASSES = {c.kind: c for c in (UnguardedIndex, TypeMismatch, DereferenceUninitialised)}


class Err:
    __slots__ = ("kind",)
    _cache: dict = {}

    def __new__(cls, kind: str):
        e = cls._cache.get(kind)
        if e is None:
            e = object.__new__(cls)
            e.kind = kind
            cls._cache[kind] = e
        return e

    def __repr__(self) -> str:
        return f"<{self.kind}>"

    def exception(self, state: Any = None) -> EvalError:
        return _ERROR_CLASSES[self.kind](self.kind, state)


ERR_INDEX = Err("UnguardedIndex")
ERR_TYPE = Err("TypeMismatch")
ERR_DEREF = Err("DereferenceUninitialised")


# ---------------------------------------------------------------------------
# nodes

_INTERN: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()


class Expr:
    __slots__ = ("_key", "_hash", "__weakref__")

    @classmethod
    def _make(cls, *fields):
        key = (cls,) + fields
        obj = _INTERN.get(key)
        if obj is None:
            obj = object.__new__(cls)
            obj._set(*fields)
            obj._key = key
            obj._hash = hash(key)
            _INTERN[key] = obj
        return obj

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        return self is other

    def __ne__(self, other: object) -> bool:
        return self is not other

    def __reduce__(self):
        return (type(self)._make, self._key[1:])

    def __repr__(self) -> str:
        from .sexpr import dump_expr
        return dump_expr(self)

    # operator sugar for building formulas
    def __and__(self, other: Expr) -> Expr:
        return and_(self, other)

    def __or__(self, other: Expr) -> Expr:
        return or_(self, other)

    def __invert__(self) -> Expr:
        return not_(self)

    def __rshift__(self, other: Expr) -> Expr:
        return implies(self, other)


class Const(Expr):
    __slots__ = ("value",)

    def __new__(cls, value: Any):
        return cls._make(type(value), value)

    def _set(self, _t, value):
        self.value = value


class Var(Expr):
    """A concrete state variable; ``primed`` reads the post-state."""

    __slots__ = ("name", "primed")

    def __new__(cls, name: str, primed: bool = False):
        return cls._make(name, bool(primed))

    def _set(self, name, primed):
        self.name = name
        self.primed = primed

    @property
    def key(self) -> tuple[str, bool]:
        return (self.name, self.primed)


class Bound(Expr):
    __slots__ = ("name",)

    def __new__(cls, name: str):
        return cls._make(name)

    def _set(self, name):
        self.name = name


def cell(family: str, index: Any) -> str:
    return f"{family}[{index}]"


class Idx(Expr):
    """Per-thread variable ``family[index]``; folds to :class:`Var` on a constant index."""

    __slots__ = ("family", "index", "primed")

    def __new__(cls, family: str, index: Expr, primed: bool = False):
        if isinstance(index, Const) and not isinstance(index.value, Err):
            return Var(cell(family, index.value), primed)
        return cls._make(family, index, bool(primed))

    def _set(self, family, index, primed):
        self.family = family
        self.index = index
        self.primed = primed


class Deref(Expr):
    """Heap status read ``status(ptr)``."""

    __slots__ = ("ptr", "primed")

    def __new__(cls, ptr: Expr, primed: bool = False):
        if isinstance(ptr, Const) and not isinstance(ptr.value, Err) and ptr.value != BOT:
            return Var(cell(HEAP, ptr.value), primed)
        return cls._make(ptr, bool(primed))

    def _set(self, ptr, primed):
        self.ptr = ptr
        self.primed = primed


class ListLit(Expr):
    __slots__ = ("items",)

    def __new__(cls, items: Iterable[Expr]):
        items = tuple(items)
        if all(isinstance(i, Const) and not isinstance(i.value, Err) for i in items):
            return Const(tuple(i.value for i in items))
        return cls._make(items)

    def _set(self, items):
        self.items = items


class MapList(Expr):
    """``[table[x] for x in lst]`` for a finite thread-indexed table."""

    __slots__ = ("lst", "table")

    def __new__(cls, lst: Expr, table: Iterable[tuple[str, Expr]]):
        table = tuple(table)
        return cls._make(lst, table)

    def _set(self, lst, table):
        self.lst = lst
        self.table = table

    def lookup(self) -> dict:
        return dict(self.table)


class App(Expr):
    __slots__ = ("op", "args")

    def __new__(cls, op: str, args: Sequence[Expr]):
        if op not in OPS and op not in BOOL_OPS:
            raise ValueError(f"unknown operator {op!r}")
        return cls._make(op, tuple(args))

    def _set(self, op, args):
        self.op = op
        self.args = args


class Quant(Expr):
    __slots__ = ("kind", "var", "sort", "body")

    def __new__(cls, kind: str, var: str, sort: str, body: Expr):
        if kind not in ("forall", "exists"):
            raise ValueError(kind)
        return cls._make(kind, var, sort, body)

    def _set(self, kind, var, sort, body):
        self.kind = kind
        self.var = var
        self.sort = sort
        self.body = body


TRUE = Const(True)
FALSE = Const(False)


# ---------------------------------------------------------------------------
# operator table (non-boolean operators on plain values)

def _seq(x):
    if not isinstance(x, tuple):
        raise TypeError
    return x


def _hd(x):
    x = _seq(x)
    return x[0] if x else ERR_INDEX


def _tl(x):
    x = _seq(x)
    return x[1:] if x else ERR_INDEX


def _last(x):
    x = _seq(x)
    return x[-1] if x else ERR_INDEX


def _butlast(x):
    x = _seq(x)
    return x[:-1] if x else ERR_INDEX


def _index(xs, x):
    xs = _seq(xs)
    try:
        return xs.index(x)
    except ValueError:
        return ERR_INDEX


def _distinct(x):
    x = _seq(x)
    return len(x) == len(set(x))


def _num(x):
    if isinstance(x, bool) or not isinstance(x, int):
        raise TypeError
    return x


OPS: dict[str, Callable] = {
    "eq": lambda a, b: a == b,
    "ne": lambda a, b: a != b,
    "le": lambda a, b: _num(a) <= _num(b),
    "lt": lambda a, b: _num(a) < _num(b),
    "add": lambda a, b: _num(a) + _num(b),
    "sub": lambda a, b: _num(a) - _num(b),
    "hd": _hd,
    "tl": _tl,
    "last": _last,
    "butlast": _butlast,
    "concat": lambda a, b: _seq(a) + _seq(b),
    "cons": lambda a, b: (a,) + _seq(b),
    "member": lambda a, b: a in _seq(b),
    "index": _index,
    "distinct": _distinct,
    "len": lambda a: len(_seq(a)),
    "held": lambda t: Held(t),
}

BOOL_OPS = ("and", "or", "not", "implies", "iff", "ite")


def apply_op(op: str, vals: Sequence[Any]) -> Any:
    for v in vals:
        if isinstance(v, Err):
            return v
    try:
        return OPS[op](*vals)
    except (TypeError, AttributeError):
        return ERR_TYPE


def _as_bool(v: Any) -> Any:
    if isinstance(v, bool) or isinstance(v, Err):
        return v
    return ERR_TYPE


def _and_vals(vals: Iterable[Any]) -> Any:
    err = None
    for v in vals:
        v = _as_bool(v)
        if v is False:
            return False
        if v is not True:
            err = err or v
    return err if err is not None else True


def _or_vals(vals: Iterable[Any]) -> Any:
    err = None
    for v in vals:
        v = _as_bool(v)
        if v is True:
            return True
        if v is not False:
            err = err or v
    return err if err is not None else False


def _not_val(v: Any) -> Any:
    v = _as_bool(v)
    return (not v) if isinstance(v, bool) else v


# ---------------------------------------------------------------------------
# builders

def const(v: Any) -> Const:
    return Const(v)


def var(name: str) -> Var:
    return Var(name)


def idx(family: str, index: Any, primed: bool = False) -> Expr:
    return Idx(family, _lift(index), primed)


def status(ptr: Any, primed: bool = False) -> Expr:
    return Deref(_lift(ptr), primed)


def _lift(x: Any) -> Expr:
    return x if isinstance(x, Expr) else Const(x)


def _flatten(op: str, args: Iterable[Expr]) -> list[Expr]:
    out: list[Expr] = []
    for a in args:
        a = _lift(a)
        for x in (a.args if isinstance(a, App) and a.op == op else (a,)):
            # nodes are interned, so repeated operands are the same object
            if not any(x is y for y in out):
                out.append(x)
    return out


def and_(*args: Expr) -> Expr:
    xs = [a for a in _flatten("and", args) if a is not TRUE]
    if not xs:
        return TRUE
    if len(xs) == 1:
        return xs[0]
    return App("and", xs)


def or_(*args: Expr) -> Expr:
    xs = [a for a in _flatten("or", args) if a is not FALSE]
    if not xs:
        return FALSE
    if len(xs) == 1:
        return xs[0]
    return App("or", xs)


def not_(a: Expr) -> Expr:
    return App("not", (_lift(a),))


def implies(a: Expr, b: Expr) -> Expr:
    return App("implies", (_lift(a), _lift(b)))


def iff(a: Expr, b: Expr) -> Expr:
    return App("iff", (_lift(a), _lift(b)))


def ite(c: Expr, a: Any, b: Any) -> Expr:
    return App("ite", (_lift(c), _lift(a), _lift(b)))


def op(name: str, *args: Any) -> Expr:
    return App(name, [_lift(a) for a in args])


def eq(a: Any, b: Any) -> Expr:
    return op("eq", a, b)


def ne(a: Any, b: Any) -> Expr:
    return op("ne", a, b)


def le(a: Any, b: Any) -> Expr:
    return op("le", a, b)


def hd(a: Any) -> Expr:
    return op("hd", a)


def tl(a: Any) -> Expr:
    return op("tl", a)


def last(a: Any) -> Expr:
    return op("last", a)


def butlast(a: Any) -> Expr:
    return op("butlast", a)


def concat(a: Any, b: Any) -> Expr:
    return op("concat", a, b)


def cons(a: Any, b: Any) -> Expr:
    return op("cons", a, b)


def member(x: Any, xs: Any) -> Expr:
    return op("member", x, xs)


def index_of(xs: Any, x: Any) -> Expr:
    return op("index", xs, x)


def distinct(xs: Any) -> Expr:
    return op("distinct", xs)


def held(t: Any) -> Expr:
    return op("held", t)


def listlit(*items: Any) -> Expr:
    return ListLit([_lift(i) for i in items])


def forall(v: str, sort: str, body: Expr) -> Expr:
    return Quant("forall", v, sort, body)


def exists(v: str, sort: str, body: Expr) -> Expr:
    return Quant("exists", v, sort, body)


def forall_in(v: str, lst: Expr, body: Expr) -> Expr:
    """Bounded quantifier over the threads of a list: ``forall v in lst. body``."""
    return forall(v, "thread", implies(member(Bound(v), lst), body))


def fmap(family: str, lst: Expr, threads: Iterable[str], primed: bool = False) -> Expr:
    return MapList(lst, [(t, Idx(family, Const(t), primed)) for t in threads])


def injective(family: str, threads: Sequence[str]) -> Expr:
    """Pairwise-distinct values of a thread-indexed family."""
    return and_(*(ne(idx(family, a), idx(family, b))
                  for i, a in enumerate(threads) for b in threads[i + 1:]))


def in_range(x: Any, family: str, threads: Iterable[str]) -> Expr:
    return or_(*(eq(x, idx(family, t)) for t in threads))


def ID(*exprs: Expr) -> Expr:
    """Identity relation on the given locations: each is unchanged by the step."""
    return and_(*(eq(prime(e), e) for e in exprs))


def id_all(universe: Universe) -> Expr:
    return ID(*(Var(n) for n in universe.names))


# ---------------------------------------------------------------------------
# generic traversal

def transform(e: Expr, fn: Callable[[Expr], Expr | None], memo: dict | None = None) -> Expr:
    """Bottom-up rebuild; ``fn`` may return a replacement for a node (or None)."""
    if memo is None:
        memo = {}
    hit = memo.get(e)
    if hit is not None:
        return hit
    r = fn(e)
    if r is None:
        if isinstance(e, (Const, Var, Bound)):
            r = e
        elif isinstance(e, Idx):
            r = Idx(e.family, transform(e.index, fn, memo), e.primed)
        elif isinstance(e, Deref):
            r = Deref(transform(e.ptr, fn, memo), e.primed)
        elif isinstance(e, ListLit):
            r = ListLit([transform(i, fn, memo) for i in e.items])
        elif isinstance(e, MapList):
            r = MapList(transform(e.lst, fn, memo), [(k, transform(v, fn, memo)) for k, v in e.table])
        elif isinstance(e, App):
            r = App(e.op, [transform(a, fn, memo) for a in e.args])
        elif isinstance(e, Quant):
            r = Quant(e.kind, e.var, e.sort, transform(e.body, fn, memo))
        else:
            raise TypeError(e)
    memo[e] = r
    return r


def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, Idx):
        return (e.index,)
    if isinstance(e, Deref):
        return (e.ptr,)
    if isinstance(e, ListLit):
        return e.items
    if isinstance(e, MapList):
        return (e.lst,) + tuple(v for _, v in e.table)
    if isinstance(e, App):
        return e.args
    if isinstance(e, Quant):
        return (e.body,)
    return ()


def walk(e: Expr):
    seen = set()
    stack = [e]
    while stack:
        x = stack.pop()
        if x in seen:
            continue
        seen.add(x)
        yield x
        stack.extend(children(x))


def has_primes(e: Expr) -> bool:
    return any(getattr(x, "primed", False) for x in walk(e))


def prime(e: Expr) -> Expr:
    """Read every state leaf of a predicate in the post-state."""
    def fn(x: Expr):
        if isinstance(x, Var):
            if x.primed:
                raise ValueError(f"cannot prime a relation: {x.name}' already primed")
            return Var(x.name, True)
        if isinstance(x, Idx):
            return Idx(x.family, prime(x.index), True)
        if isinstance(x, Deref):
            return Deref(prime(x.ptr), True)
        return None
    return transform(e, fn)


def unprime(e: Expr) -> Expr:
    def fn(x: Expr):
        if isinstance(x, Var):
            return Var(x.name)
        if isinstance(x, Idx):
            return Idx(x.family, unprime(x.index))
        if isinstance(x, Deref):
            return Deref(unprime(x.ptr))
        return None
    return transform(e, fn)


def subst_bound(e: Expr, name: str, value: Any) -> Expr:
    c = _lift(value)

    def fn(x: Expr):
        if isinstance(x, Bound) and x.name == name:
            return c
        if isinstance(x, Quant) and x.var == name:
            return x
        return None
    return transform(e, fn)


def expand_quantifiers(e: Expr, universe: Universe) -> Expr:
    def fn(x: Expr):
        if isinstance(x, Quant):
            parts = [expand_quantifiers(subst_bound(x.body, x.var, v), universe)
                     for v in universe.sort(x.sort)]
            return and_(*parts) if x.kind == "forall" else or_(*parts)
        return None
    return transform(e, fn)


def state_vars(e: Expr, universe: Universe) -> frozenset[tuple[str, bool]]:
    """Every (variable, primed) the expression may read, families expanded."""
    return _vars_cached(e, universe)


_VARS_CACHE: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def _vars_cached(e: Expr, universe: Universe) -> frozenset:
    per = _VARS_CACHE.get(e)
    if per is None:
        per = {}
        _VARS_CACHE[e] = per
    key = id(universe)
    hit = per.get(key)
    if hit is not None:
        return hit
    out: set = set()
    if isinstance(e, Var):
        out.add(e.key)
    elif isinstance(e, Idx):
        out |= _vars_cached(e.index, universe)
        out |= {(cell(e.family, t), e.primed) for t in universe.threads}
    elif isinstance(e, Deref):
        out |= _vars_cached(e.ptr, universe)
        out |= {(cell(HEAP, n), e.primed) for n in universe.nodes}
    else:
        for c in children(e):
            out |= _vars_cached(c, universe)
    res = frozenset(out)
    per[key] = res
    return res


_MAY_ERR: dict[tuple[Expr, Universe], bool] = {}


def may_err(e: Expr, universe: Universe) -> bool:
    """Conservative: False only if evaluation can never produce an error."""
    key = (e, universe)
    hit = _MAY_ERR.get(key)
    if hit is None:
        hit = _MAY_ERR[key] = _may_err(e, universe)
    return hit


def _may_err(e: Expr, universe: Universe) -> bool:
    if isinstance(e, Const):
        return isinstance(e.value, Err)
    if isinstance(e, Var):
        return False
    if isinstance(e, Bound):
        return False
    if isinstance(e, Deref):
        if may_err(e.ptr, universe):
            return True
        if isinstance(e.ptr, Var) and e.ptr.name in universe:
            return BOT in universe.domain(e.ptr.name)
        if isinstance(e.ptr, Idx):
            cells = [cell(e.ptr.family, t) for t in universe.threads]
            return not all(c in universe and BOT not in universe.domain(c) for c in cells)
        return True
    if isinstance(e, App) and e.op in ("hd", "tl", "last", "butlast", "index", "le", "lt", "add", "sub"):
        return True
    return any(may_err(c, universe) for c in children(e))


# ---------------------------------------------------------------------------
# compilation to closures over (pre, post) value tuples

def compile_expr(e: Expr, universe: Universe) -> Callable[[tuple, tuple | None], Any]:
    per = _COMPILED.get(e)
    if per is None:
        per = {}
        _COMPILED[e] = per
    fn = per.get(id(universe))
    if fn is None:
        fn = _compile(e, universe, {})
        per[id(universe)] = fn
    return fn


_COMPILED: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


class _NoPost(Exception):
    pass


def _cell_index(universe: Universe, family: str) -> dict:
    out = {}
    for t in set(universe.threads) | set(universe.nodes):
        n = cell(family, t)
        if n in universe.index:
            out[t] = universe.index[n]
    return out


def _compile(e: Expr, u: Universe, env: dict) -> Callable:
    if isinstance(e, Const):
        v = e.value
        return lambda pre, post: v
    if isinstance(e, Var):
        i = u.index.get(e.name)
        if i is None:
            from .state import UndeclaredVariable
            raise UndeclaredVariable(e.name)
        if e.primed:
            def f(pre, post, i=i):
                if post is None:
                    raise _NoPost
                return post[i]
            return f
        return lambda pre, post, i=i: pre[i]
    if isinstance(e, Bound):
        if e.name not in env:
            raise ValueError(f"unbound variable {e.name}")
        v = env[e.name]
        return lambda pre, post: v
    if isinstance(e, (Idx, Deref)):
        family = e.family if isinstance(e, Idx) else HEAP
        sub = _compile(e.index if isinstance(e, Idx) else e.ptr, u, env)
        table = _cell_index(u, family)
        primed = e.primed
        is_heap = isinstance(e, Deref)

        def f(pre, post):
            k = sub(pre, post)
            if isinstance(k, Err):
                return k
            if is_heap and k == BOT:
                return ERR_DEREF
            j = table.get(k)
            if j is None:
                return ERR_TYPE
            if primed:
                if post is None:
                    raise _NoPost
                return post[j]
            return pre[j]
        return f
    if isinstance(e, ListLit):
        subs = [_compile(i, u, env) for i in e.items]

        def f(pre, post):
            vals = tuple(s(pre, post) for s in subs)
            for v in vals:
                if isinstance(v, Err):
                    return v
            return vals
        return f
    if isinstance(e, MapList):
        lst = _compile(e.lst, u, env)
        table = {k: _compile(v, u, env) for k, v in e.table}

        def f(pre, post):
            xs = lst(pre, post)
            if isinstance(xs, Err):
                return xs
            if not isinstance(xs, tuple):
                return ERR_TYPE
            out = []
            for x in xs:
                g = table.get(x)
                if g is None:
                    return ERR_TYPE
                v = g(pre, post)
                if isinstance(v, Err):
                    return v
                out.append(v)
            return tuple(out)
        return f
    if isinstance(e, Quant):
        parts = []
        for v in u.sort(e.sort):
            env2 = dict(env)
            env2[e.var] = v
            parts.append(_compile(e.body, u, env2))
        if e.kind == "forall":
            return lambda pre, post: _and_vals(p(pre, post) for p in parts)
        return lambda pre, post: _or_vals(p(pre, post) for p in parts)
    if isinstance(e, App):
        subs = [_compile(a, u, env) for a in e.args]
        o = e.op
        if o == "and":
            return lambda pre, post: _and_vals(s(pre, post) for s in subs)
        if o == "or":
            return lambda pre, post: _or_vals(s(pre, post) for s in subs)
        if o == "not":
            a = subs[0]
            return lambda pre, post: _not_val(a(pre, post))
        if o == "implies":
            a, b = subs
            return lambda pre, post: _or_vals((_not_val(a(pre, post)), b(pre, post))) \
                if a(pre, post) is not False else True
        if o == "iff":
            a, b = subs

            def f(pre, post):
                x, y = _as_bool(a(pre, post)), _as_bool(b(pre, post))
                if isinstance(x, Err):
                    return x
                if isinstance(y, Err):
                    return y
                return x == y
            return f
        if o == "ite":
            c, a, b = subs

            def f(pre, post):
                x = _as_bool(c(pre, post))
                if isinstance(x, Err):
                    return x
                return a(pre, post) if x else b(pre, post)
            return f
        OPS[o]  # unknown operators fail here, not at evaluation
        if len(subs) == 1:
            a = subs[0]
            return lambda pre, post: apply_op(o, (a(pre, post),))
        if len(subs) == 2:
            a, b = subs
            return lambda pre, post: apply_op(o, (a(pre, post), b(pre, post)))
        return lambda pre, post: apply_op(o, [s(pre, post) for s in subs])
    raise TypeError(e)


def value(e: Expr, pre: State, post: State | None = None) -> Any:
    """Evaluate; may return an :class:`Err` value instead of raising."""
    f = compile_expr(e, pre.universe)
    try:
        return f(pre.values, None if post is None else post.values)
    except _NoPost:
        raise MissingPostState(f"expression reads the post-state: {e!r}", pre) from None


def evaluate(e: Expr, pre: State, post: State | None = None) -> Any:
    """Evaluate ``e`` in ``pre`` (and ``post`` for primed leaves); raise on errors."""
    v = value(e, pre, post)
    if isinstance(v, Err):
        raise v.exception((pre, post) if post is not None else pre)
    return v


def holds(e: Expr, pre: State, post: State | None = None) -> bool:
    v = evaluate(e, pre, post)
    if not isinstance(v, bool):
        raise TypeMismatch(f"not a formula: {e!r}", pre)
    return v


# ---------------------------------------------------------------------------
# partial evaluation

Assignment = Mapping[tuple[str, bool], Any]


def partial(e: Expr, assign: Assignment, universe: Universe, memo: dict | None = None) -> Expr:
    """Fold ``e`` under a partial assignment of (name, primed) keys."""
    if memo is None:
        memo = {}
    hit = memo.get(e)
    if hit is not None:
        return hit
    r = _pe(e, assign, universe, memo)
    memo[e] = r
    return r


def _pe(e: Expr, a: Assignment, u: Universe, memo: dict) -> Expr:
    if isinstance(e, Const):
        return e
    if isinstance(e, Var):
        k = (e.name, e.primed)
        if k in a:
            return Const(a[k])
        return e
    if isinstance(e, Bound):
        raise ValueError(f"unbound variable {e.name}")
    if isinstance(e, Idx):
        i = partial(e.index, a, u, memo)
        if isinstance(i, Const):
            if isinstance(i.value, Err):
                return i
            if cell(e.family, i.value) not in u.index:
                return Const(ERR_TYPE)
            return partial(Var(cell(e.family, i.value), e.primed), a, u, memo)
        return Idx(e.family, i, e.primed)
    if isinstance(e, Deref):
        p = partial(e.ptr, a, u, memo)
        if isinstance(p, Const):
            if isinstance(p.value, Err):
                return p
            if p.value == BOT:
                return Const(ERR_DEREF)
            if cell(HEAP, p.value) not in u.index:
                return Const(ERR_TYPE)
            return partial(Var(cell(HEAP, p.value), e.primed), a, u, memo)
        return Deref(p, e.primed)
    if isinstance(e, ListLit):
        items = [partial(i, a, u, memo) for i in e.items]
        for i in items:
            if isinstance(i, Const) and isinstance(i.value, Err):
                return i
        return ListLit(items)
    if isinstance(e, MapList):
        lst = partial(e.lst, a, u, memo)
        shape = _list_shape(lst)
        if shape is not None:
            table = e.lookup()
            out = []
            for x in shape:
                if not isinstance(x, Const):
                    break
                if isinstance(x.value, Err):
                    return x
                if x.value not in table:
                    return Const(ERR_TYPE)
                out.append(partial(table[x.value], a, u, memo))
            else:
                return partial(ListLit(out), a, u, memo)
        return MapList(lst, [(k, partial(v, a, u, memo)) for k, v in e.table])
    if isinstance(e, Quant):
        return partial(expand_quantifiers(e, u), a, u, memo)
    if isinstance(e, App):
        return _pe_app(e, a, u, memo)
    raise TypeError(e)


def _list_shape(x: Expr) -> tuple[Expr, ...] | None:
    if isinstance(x, Const) and isinstance(x.value, tuple):
        return tuple(Const(v) for v in x.value)
    if isinstance(x, ListLit):
        return x.items
    return None


def _err(x: Expr) -> bool:
    return isinstance(x, Const) and isinstance(x.value, Err)


def _pe_app(e: App, a: Assignment, u: Universe, memo: dict) -> Expr:
    o = e.op
    if o in ("and", "or"):
        unit, zero = (TRUE, FALSE) if o == "and" else (FALSE, TRUE)
        out: list[Expr] = []
        seen: set = set()
        errs: list[Expr] = []
        for arg in e.args:
            x = partial(arg, a, u, memo)
            parts = x.args if isinstance(x, App) and x.op == o else (x,)
            for p in parts:
                if p is zero:
                    return zero
                if p is unit:
                    continue
                if isinstance(p, Const):
                    if isinstance(p.value, Err):
                        errs.append(p)
                        continue
                    if not isinstance(p.value, bool):
                        errs.append(Const(ERR_TYPE))
                        continue
                if p not in seen:
                    seen.add(p)
                    out.append(p)
        if errs:
            if not out:
                return errs[0]
            out.append(errs[0])
        if not out:
            return unit
        if len(out) == 1:
            return out[0]
        return App(o, out)
    if o == "not":
        x = partial(e.args[0], a, u, memo)
        if isinstance(x, Const):
            return Const(_not_val(x.value))
        if isinstance(x, App) and x.op == "not":
            return x.args[0]
        return App("not", (x,))
    if o == "implies":
        x = partial(e.args[0], a, u, memo)
        if x is FALSE:
            return TRUE
        y = partial(e.args[1], a, u, memo)
        if y is TRUE:
            return TRUE
        if x is TRUE:
            return y
        if _err(x) and _err(y):
            return x
        if y is FALSE:
            return partial(not_(x), a, u, memo)
        if x is y and not may_err(x, u):
            return TRUE
        return App("implies", (x, y))
    if o == "iff":
        x = partial(e.args[0], a, u, memo)
        y = partial(e.args[1], a, u, memo)
        if _err(x):
            return x
        if _err(y):
            return y
        if isinstance(x, Const) and isinstance(y, Const):
            return Const(_as_bool(x.value) == _as_bool(y.value)) if \
                isinstance(x.value, bool) and isinstance(y.value, bool) else Const(ERR_TYPE)
        if x is TRUE:
            return y
        if y is TRUE:
            return x
        if x is FALSE:
            return partial(not_(y), a, u, memo)
        if y is FALSE:
            return partial(not_(x), a, u, memo)
        if x is y and not may_err(x, u):
            return TRUE
        return App("iff", (x, y))
    if o == "ite":
        c = partial(e.args[0], a, u, memo)
        if c is TRUE:
            return partial(e.args[1], a, u, memo)
        if c is FALSE:
            return partial(e.args[2], a, u, memo)
        if isinstance(c, Const):
            return Const(ERR_TYPE) if not _err(c) else c
        x = partial(e.args[1], a, u, memo)
        y = partial(e.args[2], a, u, memo)
        if x is y and not may_err(c, u):
            return x
        return App("ite", (c, x, y))

    args = [partial(x, a, u, memo) for x in e.args]
    for x in args:
        if _err(x):
            return x
    if all(isinstance(x, Const) for x in args):
        return Const(apply_op(o, [x.value for x in args]))
    # structural rules on partially known lists
    if o == "eq":
        x, y = args
        if x is y and not may_err(x, u):
            return TRUE
        sx, sy = _list_shape(x), _list_shape(y)
        if sx is not None and sy is not None:
            if len(sx) != len(sy):
                return FALSE
            return partial(and_(*(eq(p, q) for p, q in zip(sx, sy))), a, u, memo)
        return App("eq", args)
    if o == "ne":
        return partial(not_(eq(*args)), a, u, memo)
    if o in ("concat", "cons"):
        x, y = args
        sy = _list_shape(y)
        if o == "cons" and sy is not None:
            return ListLit((x,) + sy)
        sx = _list_shape(x)
        if o == "concat" and sx is not None and sy is not None:
            return ListLit(sx + sy)
        return App(o, args)
    if o in ("hd", "last", "tl", "butlast", "len", "distinct"):
        s = _list_shape(args[0])
        if s is not None:
            if o == "len":
                return Const(len(s))
            if not s and o != "distinct":
                return Const(ERR_INDEX)
            if o == "hd":
                return s[0]
            if o == "last":
                return s[-1]
            if o == "tl":
                return ListLit(s[1:])
            if o == "butlast":
                return ListLit(s[:-1])
            if o == "distinct":
                return partial(and_(*(ne(p, q) for i, p in enumerate(s) for q in s[i + 1:])),
                               a, u, memo)
        return App(o, args)
    if o == "member":
        s = _list_shape(args[1])
        if s is not None:
            return partial(or_(*(eq(args[0], p) for p in s)), a, u, memo)
        return App(o, args)
    return App(o, args)


def free_keys(e: Expr, universe: Universe) -> frozenset:
    return state_vars(e, universe)


# ---------------------------------------------------------------------------
# negation normal form (quantifier-free input)

def nnf(e: Expr, negate: bool = False) -> Expr:
    if isinstance(e, App):
        o = e.op
        if o == "not":
            return nnf(e.args[0], not negate)
        if o == "and":
            parts = [nnf(x, negate) for x in e.args]
            return or_(*parts) if negate else and_(*parts)
        if o == "or":
            parts = [nnf(x, negate) for x in e.args]
            return and_(*parts) if negate else or_(*parts)
        if o == "implies":
            x, y = e.args
            if negate:
                return and_(nnf(x), nnf(y, True))
            return or_(nnf(x, True), nnf(y))
        if o == "iff":
            x, y = e.args
            if negate:
                return or_(and_(nnf(x), nnf(y, True)), and_(nnf(x, True), nnf(y)))
            return or_(and_(nnf(x), nnf(y)), and_(nnf(x, True), nnf(y, True)))
    if isinstance(e, Const) and isinstance(e.value, bool):
        return Const(e.value != negate)
    if isinstance(e, Quant):
        raise ValueError("expand quantifiers before nnf")
    return App("not", (e,)) if negate else e
