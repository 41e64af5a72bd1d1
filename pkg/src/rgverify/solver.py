"""Search for satisfying assignments of finite-domain formulas.

The engine is a small DPLL-style search over partially evaluated residuals:
unit constraints (``x = c``, ``x != c``, ``x = y``) are propagated, each
top-level conjunct is assumed while simplifying its siblings, disjunctions
are split, and variables that drop out of the residual are left as
don't-cares.  Results are always re-checked by full evaluation in
:mod:`rgverify.checks`, so the search only has to be complete, and its
completeness is exercised against brute-force enumeration in the tests.
"""

from __future__ import annotations

from typing import Any, Iterator, Mapping

from .expr import (
    FALSE, HEAP, TRUE, App, Const, Deref, Err, Expr, Idx, Var, cell, may_err, nnf, partial,
    state_vars, transform,
)
from .state import Universe

Key = tuple[str, bool]


def _is_done(f: Expr) -> bool:
    return f is TRUE or (isinstance(f, Const) and isinstance(f.value, Err))


def _conjuncts(f: Expr) -> tuple[Expr, ...]:
    return f.args if isinstance(f, App) and f.op == "and" else (f,)


def _neg(x: Expr) -> Expr:
    return nnf(x, True)


class Search:
    """Satisfiability search for one formula over a fixed set of keys.

    ``domains`` maps every (variable, primed) key that may be assigned to its
    ordered value tuple.  Keys that the formula reads but that are missing
    from ``domains`` must be supplied in ``fixed``.
    """

    def __init__(self, universe: Universe, domains: Mapping[Key, tuple]):
        self.universe = universe
        self.domains = dict(domains)
        self.nodes = 0

    # -- public -----------------------------------------------------------
    def find(self, formula: Expr, fixed: Mapping[Key, Any] | None = None) -> dict | None:
        """Some total assignment (over ``domains``) making ``formula`` true, or None."""
        assign = dict(fixed or {})
        doms = {k: v for k, v in self.domains.items() if k not in assign}
        res = self._solve(formula, assign, doms, {})
        if res is None:
            return None
        return self._complete(res)

    def first(self, formula: Expr, order: list[Key],
              fixed: Mapping[Key, Any] | None = None) -> dict | None:
        """Lexicographically least solution with respect to ``order``."""
        assign = dict(fixed or {})
        if self.find(formula, assign) is None:
            return None
        for k in order:
            if k in assign:
                continue
            for v in self.domains[k]:
                assign[k] = v
                if self.find(formula, assign) is not None:
                    break
            else:  # pragma: no cover - the parent subtree had a solution
                raise AssertionError("search lost a solution")
        return assign

    def count(self, formula: Expr, order: list[Key]) -> int:
        return sum(1 for _ in self.iterate(formula, order))

    def iterate(self, formula: Expr, order: list[Key]) -> Iterator[dict]:
        """All solutions in lexicographic order of ``order`` (each key of ``order`` assigned)."""
        u = self.universe
        doms = self.domains

        def rec(f: Expr, i: int, assign: dict):
            if f is FALSE:
                return
            if i == len(order):
                if _is_done(f):
                    yield dict(assign)
                return
            k = order[i]
            live = k in state_vars(f, u)
            if not live and _is_done(f):
                # remaining keys are don't-cares: enumerate them directly
                yield from _product(order[i:], doms, assign)
                return
            for v in doms[k]:
                assign[k] = v
                g = partial(f, {k: v}, u) if live else f
                if g is not FALSE and (i + 1 == len(order) or i % 4 != 3
                                       or self._satisfiable(g)):
                    yield from rec(g, i + 1, assign)
                del assign[k]

        yield from rec(partial(formula, {}, u), 0, {})

    def solutions(self, formula: Expr, fixed: Mapping[Key, Any] | None = None) -> Iterator[dict]:
        """Every total solution over ``domains``, in a deterministic but unsorted order.

        Branches only on variable values (never on disjuncts), so each
        solution is produced exactly once.
        """
        assign = dict(fixed or {})
        doms = {k: v for k, v in self.domains.items() if k not in assign}
        yield from self._all(formula, assign, doms, {}, 0)

    def _all(self, f: Expr, assign: dict, doms: dict, alias: dict, depth: int) -> Iterator[dict]:
        u = self.universe
        f = self._simplify(f, assign, alias)
        for _ in range(64):
            if f is FALSE or _is_done(f):
                break
            changed, ok = self._propagate(f, assign, doms, alias)
            if not ok:
                return
            g = self._assume(self._simplify(f, assign, alias), assign, alias)
            if not changed and g is f:
                break
            f = g
        if f is FALSE:
            return
        if _is_done(f):
            yield from self._expand(assign, doms, alias)
            return
        if depth % 3 == 2 and self._solve(f, dict(assign), dict(doms), dict(alias)) is None:
            return
        live = [k for k in state_vars(f, u) if k not in assign and k in doms]
        if not live:
            raise KeyError("formula reads unassignable keys")
        k = min(live, key=lambda k: (len(doms[k]), k))
        for v in doms[k]:
            a2 = dict(assign)
            a2[k] = v
            d2 = dict(doms)
            del d2[k]
            yield from self._all(f, a2, d2, dict(alias), depth + 1)

    def _expand(self, assign: dict, doms: dict, alias: dict) -> Iterator[dict]:
        free = [k for k in self.domains if k not in assign and k not in alias]
        aliased = [k for k in self.domains if k in alias and k not in assign]
        for combo in _product(free, {k: doms.get(k, self.domains[k]) for k in free}, {}):
            out = dict(assign)
            out.update(combo)
            for k in aliased:
                out[k] = out[_root(alias, k)]
            yield out

    # -- internals --------------------------------------------------------
    def _satisfiable(self, f: Expr) -> bool:
        doms = {k: self.domains[k] for k in state_vars(f, self.universe) if k in self.domains}
        return self._solve(f, {}, doms, {}) is not None

    def _complete(self, res: tuple[dict, dict, dict]) -> dict:
        assign, doms, alias = res
        out = dict(assign)
        for k, vs in doms.items():
            if k not in out and k not in alias:
                out[k] = vs[0]
        for k in self.domains:
            if k not in out and k not in alias:
                out[k] = self.domains[k][0]
        for k in alias:
            out[k] = out[_root(alias, k)]
        return out

    def _solve(self, f: Expr, assign: dict, doms: dict, alias: dict):
        self.nodes += 1
        u = self.universe
        f = self._simplify(f, assign, alias)
        for _ in range(64):
            if f is FALSE:
                return None
            if _is_done(f):
                return assign, doms, alias
            changed, ok = self._propagate(f, assign, doms, alias)
            if not ok:
                return None
            g = self._simplify(f, assign, alias)
            g = self._assume(g, assign, alias)
            if not changed and g is f:
                break
            f = g
        if f is FALSE:
            return None
        if _is_done(f):
            return assign, doms, alias

        conj = _conjuncts(f)
        live = {k for k in state_vars(f, u) if k not in assign}
        best, best_n = None, None
        for c in conj:
            n = len(state_vars(c, u) & live)
            if best is None or n < best_n:
                best, best_n = c, n
        ors = [c for c in conj if isinstance(c, App) and c.op == "or" and len(c.args) <= 4]
        if ors:
            best = min(ors, key=lambda c: (len(c.args), len(state_vars(c, u) & live)))
        if isinstance(best, App) and best.op == "or" and len(best.args) <= 8:
            rest = [c for c in conj if c is not best]
            for d in best.args:
                r = self._solve(App("and", rest + [d]) if rest else d,
                                dict(assign), dict(doms), dict(alias))
                if r is not None:
                    return r
            return None
        cands = [k for k in state_vars(best, u) if k in live] or sorted(live)
        cands = [k for k in cands if k in doms]
        if not cands:
            raise KeyError(f"formula reads unassignable keys: {sorted(live)}")
        k = min(cands, key=lambda k: (len(doms[k]), k))
        for v in doms[k]:
            a2 = dict(assign)
            a2[k] = v
            r = self._solve(f, a2, dict(doms), dict(alias))
            if r is not None:
                return r
        return None

    def _simplify(self, f: Expr, assign: dict, alias: dict) -> Expr:
        f = partial(f, assign, self.universe)
        if alias:
            f = _rename(f, alias, self.universe)
            f = partial(f, assign, self.universe)
        return nnf(f)

    def _assume(self, f: Expr, assign: dict, alias: dict) -> Expr:
        """Simplify each conjunct assuming all the others hold."""
        conj = _conjuncts(f)
        if len(conj) < 2:
            return f
        # a conjunct that may fail to evaluate is not known to be true, so
        # only error-free conjuncts can be assumed
        sure = [c for c in conj if not may_err(c, self.universe)]
        if not sure:
            return f
        pos = set(sure)
        neg = {_neg(c): c for c in sure}
        out = []
        changed = False
        for c in conj:
            if isinstance(c, (Var, Const)) or (isinstance(c, App) and c.op not in ("and", "or")):
                out.append(c)
                continue

            def fn(x: Expr, c=c):
                if x is c:
                    return None
                if x in pos:
                    return TRUE
                if x in neg and neg[x] is not c:
                    return FALSE
                return None
            d = transform(c, fn)
            if d is not c:
                changed = True
            out.append(d)
        if not changed:
            return f
        return nnf(partial(App("and", out), assign, self.universe))

    def _propagate(self, f: Expr, assign: dict, doms: dict, alias: dict) -> tuple[bool, bool]:
        changed = False
        for c in _conjuncts(f):
            negated = isinstance(c, App) and c.op == "not"
            atom = c.args[0] if negated else c
            if isinstance(atom, Var):
                k = atom.key
                if k not in doms:
                    continue
                want = not negated
                if want not in doms[k]:
                    return changed, False
                assign[k] = want
                changed = True
                continue
            if not (isinstance(atom, App) and atom.op == "eq"):
                continue
            a, b = atom.args
            if isinstance(b, Var) and not isinstance(a, Var):
                a, b = b, a
            if not isinstance(a, Var) or a.key not in doms:
                continue
            k = a.key
            if isinstance(b, Const):
                if negated:
                    vs = tuple(v for v in doms[k] if v != b.value)
                    if not vs:
                        return changed, False
                    if len(vs) < len(doms[k]):
                        doms[k] = vs
                        changed = True
                        if len(vs) == 1:
                            assign[k] = vs[0]
                    continue
                if b.value not in doms[k]:
                    return changed, False
                assign[k] = b.value
                changed = True
            elif isinstance(b, Var) and not negated and b.key in doms and b.key != k:
                both = tuple(v for v in doms[b.key] if v in doms[k])
                if not both:
                    return changed, False
                alias[k] = b.key
                doms[b.key] = both
                del doms[k]
                changed = True
        return changed, True


def _root(alias: dict, k: Key) -> Key:
    while k in alias:
        k = alias[k]
    return k


def _rename(f: Expr, alias: dict, u: Universe) -> Expr:
    """Replace aliased keys by their representative.

    A primed family or heap read whose every cell equals its pre-state cell
    becomes the corresponding unprimed read.
    """
    same: dict[str, bool] = {}

    def unchanged(family: str, cells: list[str]) -> bool:
        hit = same.get(family)
        if hit is None:
            hit = same[family] = all(
                _root(alias, (c, True)) == _root(alias, (c, False)) for c in cells)
        return hit

    memo: dict = {}

    def fn(x: Expr):
        if isinstance(x, Var) and x.key in alias:
            name, primed = _root(alias, x.key)
            return Var(name, primed)
        if isinstance(x, Idx) and x.primed and unchanged(
                x.family, [cell(x.family, t) for t in u.threads]):
            return Idx(x.family, transform(x.index, fn, memo), False)
        if isinstance(x, Deref) and x.primed and unchanged(
                HEAP, [cell(HEAP, n) for n in u.nodes]):
            return Deref(transform(x.ptr, fn, memo), False)
        return None
    return transform(f, fn, memo)


def _product(keys: list[Key], doms: Mapping[Key, tuple], base: dict) -> Iterator[dict]:
    if not keys:
        yield dict(base)
        return
    k, rest = keys[0], keys[1:]
    for v in doms[k]:
        base[k] = v
        yield from _product(rest, doms, base)
    del base[k]
