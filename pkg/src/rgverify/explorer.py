"""Small-step semantics and exhaustive interleaving exploration.

A configuration is a state plus one remaining command per thread; the
remaining command is the control state.  Continuations are compiled lazily
into integer ids with cached move lists, so exploring a configuration only
touches the state-dependent parts (guards, assignments).
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping

from .expr import (
    FALSE, TRUE, App, Err, Expr, and_, compile_expr, has_primes, or_, partial, state_vars,
)
from .program import (
    SKIP, Assert, AtomicBlock, Assign, Command, Fence, Marker, Par, ParN, PPSeq, Seq,
    Skip, SpinLoop, While, execute, is_terminated, label_of,
)
from .solver import Search
from .state import State, Universe

ENV = "env"

_ERROR_KINDS = {
    "UnguardedIndex": "unguarded-index",
    "DereferenceUninitialised": "uninitialised-dereference",
    "TypeMismatch": "type-mismatch",
}


class CeilingExceeded(RuntimeError):
    def __init__(self, result: "ExploreResult"):
        super().__init__(f"state ceiling of {result.bounds.max_configs} configurations reached")
        self.result = result


class BrokenTrace(ValueError):
    pass


@dataclass(frozen=True)
class Bounds:
    max_configs: int = 10_000_000
    stop_at_first_violation: bool = False

    def __post_init__(self):
        if self.max_configs <= 0:
            raise ValueError("ceilings must be positive")


@dataclass(frozen=True)
class Config:
    state: State
    continuations: tuple[tuple[str, Command], ...]

    def to_json(self) -> dict:
        from .sexpr import dump_command
        return {"state": self.state.to_json(),
                "continuations": {t: dump_command(c, 10_000) for t, c in self.continuations}}


@dataclass(frozen=True)
class Transition:
    actor: str
    label: str
    pre: State
    post: State

    def to_json(self) -> dict:
        return {"actor": self.actor, "label": self.label,
                "pre": self.pre.to_json(), "post": self.post.to_json()}


@dataclass
class Trace:
    initial: Config
    steps: list[Transition] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def final_state(self) -> State:
        return self.steps[-1].post if self.steps else self.initial.state

    def to_json(self) -> dict:
        states: list[dict] = []
        refs: dict[State, int] = {}

        def ref(s: State) -> int:
            if s not in refs:
                refs[s] = len(states)
                states.append(s.to_json())
            return refs[s]
        init = ref(self.initial.state)
        steps = [[t.actor, t.label, ref(t.pre), ref(t.post)] for t in self.steps]
        from .sexpr import dump_command
        return {"initial": {"state": init,
                            "continuations": {t: dump_command(c, 10_000)
                                              for t, c in self.initial.continuations}},
                "steps": steps, "states": states}


@dataclass
class Violation:
    kind: str
    message: str
    trace: Trace
    actor: str = ""
    label: str = ""

    def to_json(self) -> dict:
        return {"kind": self.kind, "message": self.message, "actor": self.actor,
                "label": self.label, "trace": self.trace.to_json()}


# ---------------------------------------------------------------------------
# continuation compilation

@dataclass(frozen=True)
class Move:
    kind: str            # "exec" | "spin" | "while"
    label: str
    instr: Any           # instruction, or guard expression for spin/while
    next: int
    alt: int = -1        # successor when the guard is false


class Program:
    """Interns continuations and caches their moves."""

    def __init__(self):
        self.conts: list[Command] = []
        self.ids: dict[Command, int] = {}
        self._moves: dict[int, tuple[Move, ...]] = {}
        self._front: dict[int, tuple[Assert, ...]] = {}
        self._done: dict[int, bool] = {}
        self.skip = self.intern(SKIP)

    def intern(self, c: Command) -> int:
        c = _norm(c)
        i = self.ids.get(c)
        if i is None:
            i = len(self.conts)
            self.conts.append(c)
            self.ids[c] = i
        return i

    def terminated(self, k: int) -> bool:
        d = self._done.get(k)
        if d is None:
            d = self._done[k] = is_terminated(self.conts[k])
        return d

    def front(self, k: int) -> tuple[Assert, ...]:
        f = self._front.get(k)
        if f is None:
            f = self._front[k] = tuple(_front(self.conts[k]))
        return f

    def moves(self, k: int) -> tuple[Move, ...]:
        m = self._moves.get(k)
        if m is None:
            m = self._moves[k] = tuple(
                Move(kind, lbl, ins, self.intern(nxt), -1 if alt is None else self.intern(alt))
                for kind, lbl, ins, nxt, alt in _moves(self.conts[k]))
        return m


def _norm(c: Command) -> Command:
    if isinstance(c, Seq):
        a, b = _norm(c.first), _norm(c.second)
        if isinstance(a, Skip):
            return b
        if isinstance(b, Skip):
            return a
        return Seq(a, b)
    if isinstance(c, Par):
        a, b = _norm(c.left), _norm(c.right)
        if isinstance(a, Skip):
            return b
        if isinstance(b, Skip):
            return a
        return Par(a, b)
    if isinstance(c, ParN):
        return ParN(tuple((t, _norm(x)) for t, x in c.children))
    return c


def _front(c: Command) -> list[Assert]:
    if isinstance(c, Assert):
        return [c]
    if isinstance(c, Seq):
        out = _front(c.first)
        if is_terminated(c.first):
            out += _front(c.second)
        return out
    if isinstance(c, Par):
        return _front(c.left) + _front(c.right)
    if isinstance(c, ParN):
        return [a for _, x in c.children for a in _front(x)]
    return []


def _moves(c: Command) -> list[tuple]:
    """(kind, label, instr, next, alt) for each possible next step of ``c``."""
    if isinstance(c, (Skip, Assert)):
        return []
    if isinstance(c, (Assign, AtomicBlock, Fence, Marker)):
        return [("exec", label_of(c), c, SKIP, None)]
    if isinstance(c, SpinLoop):
        return [("spin", c.label, c.guard, SKIP, c)]
    if isinstance(c, While):
        return [("while", c.label, c.guard, Seq(c.body, c), SKIP)]
    if isinstance(c, Seq):
        if is_terminated(c.first):
            return _moves(c.second)
        return [(k, lbl, ins, Seq(n, c.second), None if a is None else Seq(a, c.second))
                for k, lbl, ins, n, a in _moves(c.first)]
    if isinstance(c, Par):
        out = [(k, lbl, ins, Par(n, c.right), None if a is None else Par(a, c.right))
               for k, lbl, ins, n, a in _moves(c.left)]
        out += [(k, lbl, ins, Par(c.left, n), None if a is None else Par(c.left, a))
                for k, lbl, ins, n, a in _moves(c.right)]
        return out
    if isinstance(c, PPSeq):
        raise ValueError("resolve parallelized sequential composition (wmm.transform) "
                         "before exploring")
    if isinstance(c, ParN):
        out = []
        for n, (t, child) in enumerate(c.children):
            def put(x, n=n, t=t):
                return ParN(c.children[:n] + ((t, x),) + c.children[n + 1:])
            out += [(k, lbl, ins, put(nx), None if a is None else put(a))
                    for k, lbl, ins, nx, a in _moves(child)]
        return out
    raise TypeError(c)


def _apply(move: Move, s: State) -> tuple[State | Err, int]:
    if move.kind == "exec":
        return execute(move.instr, s), move.next
    v = compile_expr(move.instr, s.universe)(s.values, None)
    if isinstance(v, Err):
        return v, move.next
    if v is True:
        return s, move.next
    if v is False:
        return s, move.alt
    return Err("TypeMismatch"), move.next


# ---------------------------------------------------------------------------
# exploration

@dataclass
class ExploreResult:
    universe: Universe
    threads: tuple[str, ...]
    program: Program
    bounds: Bounds
    states: list[State] = field(default_factory=list)
    configs: list[tuple[int, tuple[int, ...]]] = field(default_factory=list)
    parent: list[tuple[int, int] | None] = field(default_factory=list)
    transitions: list[tuple[int, str, str, int]] = field(default_factory=list)
    initial: list[int] = field(default_factory=list)
    terminals: list[int] = field(default_factory=list)
    violations: list[Violation] = field(default_factory=list)
    complete: bool = True
    seconds: float = 0.0

    @property
    def reachable_states(self) -> list[State]:
        seen = {}
        for si, _ in self.configs:
            seen.setdefault(si, None)
        return [self.states[i] for i in seen]

    def config(self, idx: int) -> Config:
        si, ks = self.configs[idx]
        return Config(self.states[si],
                      tuple((t, self.program.conts[k]) for t, k in zip(self.threads, ks)))

    def trace_to(self, idx: int) -> Trace:
        parent_steps: list[tuple[int, int]] = []
        cur = idx
        while self.parent[cur] is not None:
            p, tr = self.parent[cur]
            parent_steps.append((p, tr))
            cur = p
        steps = []
        for p, tr in reversed(parent_steps):
            src, actor, label, dst = self.transitions[tr]
            steps.append(Transition(actor, label, self.states[self.configs[src][0]],
                                    self.states[self.configs[dst][0]]))
        return Trace(self.config(cur), steps)

    def trace_through(self, tr: int) -> Trace:
        src, actor, label, dst = self.transitions[tr]
        t = self.trace_to(src)
        t.steps.append(Transition(actor, label, self.states[self.configs[src][0]],
                                  self.states[self.configs[dst][0]]))
        return t

    def summary(self) -> dict:
        return {"configs": len(self.configs), "states": len(set(c[0] for c in self.configs)),
                "transitions": len(self.transitions), "terminals": len(self.terminals),
                "complete": self.complete, "violations": len(self.violations)}


def _split(program: Command) -> tuple[tuple[str, ...], tuple[Command, ...]]:
    if isinstance(program, ParN):
        return program.threads, tuple(c for _, c in program.children)
    return ("main",), (program,)


def explore(program: Command, init: Expr | Iterable[State], u: Universe,
            bounds: Bounds = Bounds(), raise_on_ceiling: bool = False) -> ExploreResult:
    """Breadth-first closure of all interleavings from every initial state."""
    from .checks import enumerate_states
    t0 = time.perf_counter()
    threads, cmds = _split(program)
    prog = Program()
    res = ExploreResult(u, threads, prog, bounds)
    start = tuple(prog.intern(c) for c in cmds)
    inits = enumerate_states(u, init) if isinstance(init, Expr) else init
    sidx: dict[State, int] = {}
    cidx: dict[tuple[int, tuple[int, ...]], int] = {}

    def state_id(s: State) -> int:
        i = sidx.get(s)
        if i is None:
            i = sidx[s] = len(res.states)
            res.states.append(s)
        return i

    def add(si: int, ks: tuple[int, ...], parent) -> tuple[int, bool]:
        key = (si, ks)
        i = cidx.get(key)
        if i is not None:
            return i, False
        i = cidx[key] = len(res.configs)
        res.configs.append(key)
        res.parent.append(parent)
        return i, True

    queue: deque[int] = deque()
    for s in inits:
        i, new = add(state_id(s), start, None)
        if new:
            res.initial.append(i)
            queue.append(i)
    assert_cache: dict[tuple[int, Assert], Any] = {}

    while queue:
        ci = queue.popleft()
        si, ks = res.configs[ci]
        s = res.states[si]
        # annotations at the front of each thread
        for t, k in zip(threads, ks):
            for a in prog.front(k):
                v = assert_cache.get((si, a))
                if v is None:
                    v = assert_cache[(si, a)] = compile_expr(a.pred, u)(s.values, None)
                if v is not True:
                    kind = "assertion" if v is False else _ERROR_KINDS.get(
                        getattr(v, "kind", ""), "assertion")
                    res.violations.append(Violation(kind, f"{t}: assertion {a.label} fails",
                                                    res.trace_to(ci), t, a.label))
        if all(prog.terminated(k) for k in ks):
            res.terminals.append(ci)
            continue
        for ti, (t, k) in enumerate(zip(threads, ks)):
            for mv in prog.moves(k):
                post, nk = _apply(mv, s)
                if isinstance(post, Err):
                    kind = _ERROR_KINDS.get(post.kind, post.kind)
                    res.violations.append(Violation(kind, f"{t}: {mv.label}: {post.kind}",
                                                    res.trace_to(ci), t, mv.label))
                    continue
                nks = ks[:ti] + (nk,) + ks[ti + 1:]
                tr = len(res.transitions)
                nsi = si if post is s else state_id(post)
                j, new = add(nsi, nks, (ci, tr))
                res.transitions.append((ci, t, mv.label, j))
                if new:
                    queue.append(j)
        if bounds.stop_at_first_violation and res.violations:
            res.complete = False
            break
        if len(res.configs) >= bounds.max_configs:
            res.complete = False
            if raise_on_ceiling:
                res.seconds = time.perf_counter() - t0
                raise CeilingExceeded(res)
            break
    res.seconds = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------------------
# verdicts over results

@dataclass
class ExploreVerdict:
    holds: bool
    check: str
    violation: Violation | None = None
    qualified: bool = False     # exploration was truncated
    checked: int = 0

    def __bool__(self) -> bool:
        return self.holds

    def to_json(self) -> dict:
        out = {"check": self.check, "holds": self.holds, "qualified": self.qualified,
               "checked": self.checked}
        if self.violation is not None:
            out["violation"] = self.violation.to_json()
        return out


def check_global_invariant(res: ExploreResult, inv: Expr, name: str = "invariant") -> ExploreVerdict:
    f = compile_expr(inv, res.universe)
    cache: dict[int, Any] = {}
    for ci, (si, _) in enumerate(res.configs):
        v = cache.get(si)
        if v is None:
            v = cache[si] = f(res.states[si].values, None)
        if v is not True:
            msg = f"{name} fails" if v is False else f"{name}: {v.kind}"
            return ExploreVerdict(False, name, Violation("invariant", msg, res.trace_to(ci)),
                                  not res.complete, len(cache))
    return ExploreVerdict(True, name, None, not res.complete, len(cache))


def check_guarantees(res: ExploreResult, g: Mapping[str, Expr], name: str = "guarantees") -> ExploreVerdict:
    comp = {t: compile_expr(r, res.universe) for t, r in g.items()}
    cache: dict[tuple, Any] = {}
    for tr, (src, actor, label, dst) in enumerate(res.transitions):
        f = comp.get(actor)
        if f is None:
            continue
        a, b = res.configs[src][0], res.configs[dst][0]
        key = (actor, a, b)
        v = cache.get(key)
        if v is None:
            v = cache[key] = f(res.states[a].values, res.states[b].values)
        if v is not True:
            return ExploreVerdict(False, name, Violation(
                "guarantee", f"{actor}: step {label} violates its guarantee",
                res.trace_through(tr), actor, label), not res.complete, len(cache))
    return ExploreVerdict(True, name, None, not res.complete, len(cache))


def check_terminals(res: ExploreResult, post: Expr, name: str = "postcondition") -> ExploreVerdict:
    f = compile_expr(post, res.universe)
    for ci in res.terminals:
        s = res.states[res.configs[ci][0]]
        v = f(s.values, None)
        if v is not True:
            return ExploreVerdict(False, name, Violation("postcondition", f"{name} fails at a "
                                                         "terminal configuration", res.trace_to(ci)),
                                  not res.complete, len(res.terminals))
    return ExploreVerdict(True, name, None, not res.complete, len(res.terminals))


def check_violations(res: ExploreResult, name: str = "assertions") -> ExploreVerdict:
    if res.violations:
        return ExploreVerdict(False, name, res.violations[0], not res.complete)
    return ExploreVerdict(True, name, None, not res.complete)


def check_configs(res: ExploreResult, pred: Callable[[Config], bool | str], name: str) -> ExploreVerdict:
    """Check a property of whole configurations (state and control)."""
    for ci in range(len(res.configs)):
        ok = pred(res.config(ci))
        if ok is not True:
            msg = ok if isinstance(ok, str) else f"{name} fails"
            return ExploreVerdict(False, name, Violation(name, msg, res.trace_to(ci)),
                                  not res.complete, ci + 1)
    return ExploreVerdict(True, name, None, not res.complete, len(res.configs))


def check_transitions(res: ExploreResult, pred: Callable[[str, str, Config, Config], bool | str],
                      name: str) -> ExploreVerdict:
    for tr, (src, actor, label, dst) in enumerate(res.transitions):
        ok = pred(actor, label, res.config(src), res.config(dst))
        if ok is not True:
            msg = ok if isinstance(ok, str) else f"{name} fails"
            return ExploreVerdict(False, name, Violation(name, msg, res.trace_through(tr),
                                                         actor, label), not res.complete, tr + 1)
    return ExploreVerdict(True, name, None, not res.complete, len(res.transitions))


# ---------------------------------------------------------------------------
# replay

def _thread_moves(c: Command, s: State) -> list[tuple[str, State | Err, Command]]:
    prog = Program()
    k = prog.intern(c)
    out = []
    for mv in prog.moves(k):
        post, nk = _apply(mv, s)
        out.append((mv.label, post, prog.conts[nk]))
    return out


def replay(trace: Trace, rely: Expr | None = None) -> Config:
    """Re-execute a trace step by step; raise :class:`BrokenTrace` on any mismatch."""
    state = trace.initial.state
    conts = dict(trace.initial.continuations)
    for n, step in enumerate(trace.steps):
        if step.pre != state:
            raise BrokenTrace(f"step {n}: pre-state does not match the previous post-state")
        if step.actor == ENV:
            if rely is not None:
                v = compile_expr(rely, state.universe)(step.pre.values, step.post.values)
                if v is not True:
                    raise BrokenTrace(f"step {n}: environment step violates the rely")
            state = step.post
            continue
        if step.actor not in conts:
            raise BrokenTrace(f"step {n}: unknown actor {step.actor!r}")
        for label, post, nxt in _thread_moves(conts[step.actor], state):
            if label == step.label and not isinstance(post, Err) and post == step.post:
                conts[step.actor] = _norm(nxt)
                state = post
                break
        else:
            raise BrokenTrace(f"step {n}: {step.actor} cannot take {step.label!r} to the "
                              "recorded post-state")
    return Config(state, tuple((t, conts[t]) for t, _ in trace.initial.continuations))


# ---------------------------------------------------------------------------
# semantic quintuple check

@dataclass
class SemanticResult:
    holds: bool
    violation: Violation | None
    configs: int
    env_classes: int
    complete: bool = True
    seconds: float = 0.0

    def __bool__(self) -> bool:
        return self.holds

    def to_json(self) -> dict:
        out = {"holds": self.holds, "configs": self.configs, "env_classes": self.env_classes,
               "complete": self.complete}
        if self.violation is not None:
            out["violation"] = self.violation.to_json()
        return out


class EnvSteps:
    """Successor sets of a rely, shared between pre-states with the same residual."""

    def __init__(self, rely: Expr, u: Universe):
        self.u = u
        self.rely = rely
        self.post_keys = [(n, True) for n in u.names]
        self.pre_keys = [(n, False) for n in u.names]
        self.search = Search(u, {k: u.domains[k[0]].values for k in self.post_keys})
        self.cache: dict[Expr, tuple[State, ...]] = {}
        self.parts = [self._part(c) for c in
                      (rely.args if isinstance(rely, App) and rely.op == "and" else (rely,))]

    def _part(self, c: Expr) -> Callable[[tuple], Expr]:
        """Residual of one conjunct, memoised on the pre-state variables it reads."""
        if isinstance(c, App) and c.op == "implies" and not has_primes(c.args[0]):
            test = compile_expr(c.args[0], self.u)
            rest = self._part(c.args[1])

            def guarded(vals: tuple) -> Expr:
                v = test(vals, None)
                if v is True:
                    return rest(vals)
                return TRUE if v is False else partial(c, dict(zip(self.pre_keys, vals)), self.u)
            return guarded
        if isinstance(c, App) and c.op in ("and", "or"):
            subs = [self._part(d) for d in c.args]
            join = and_ if c.op == "and" else or_
            return lambda vals: join(*(f(vals) for f in subs))
        pos = [self.u.index[n] for n, primed in sorted(state_vars(c, self.u)) if not primed]
        keys = [(self.u.names[i], False) for i in pos]
        memo: dict[tuple, Expr] = {}

        def part(vals: tuple) -> Expr:
            k = tuple(vals[i] for i in pos)
            r = memo.get(k)
            if r is None:
                r = memo[k] = partial(c, dict(zip(keys, k)), self.u)
            return r
        return part

    def residual(self, s: State) -> Expr:
        out = []
        for part in self.parts:
            r = part(s.values)
            if r is FALSE:
                return FALSE
            out.append(r)
        return and_(*out)

    def successors(self, residual: Expr) -> tuple[State, ...]:
        hit = self.cache.get(residual)
        if hit is None and isinstance(residual, App) and residual.op == "or":
            # each disjunct gets its own cache entry, so branches shared by
            # many pre-states are solved once
            out = {}
            for d in residual.args:
                out.update(dict.fromkeys(self.successors(d)))
            hit = self.cache[residual] = tuple(out)
        elif hit is None:
            out = []
            if residual is not False:
                for sol in self.search.solutions(residual):
                    out.append(State(self.u, tuple(sol[k] for k in self.post_keys)))
            hit = self.cache[residual] = tuple(out)
        return hit

    def closure(self, states: Iterable[State]) -> set[State]:
        seen = set(states)
        queue = deque(seen)
        done: set[Expr] = set()
        while queue:
            s = queue.popleft()
            r = self.residual(s)
            if r in done:
                continue
            done.add(r)
            for n in self.successors(r):
                if n not in seen:
                    seen.add(n)
                    queue.append(n)
        return seen


def env_closure(states: Iterable[State], rely: Expr, u: Universe) -> set[State]:
    """Reflexive-transitive closure of a state set under environment steps."""
    return EnvSteps(rely, u).closure(states)


def check_quintuple_semantic(Q, u: Universe, bounds: Bounds = Bounds(),
                             init: Iterable[State] | None = None) -> SemanticResult:
    """Run ``Q.c`` from every p-state, interleaved with arbitrary rely steps."""
    from .checks import enumerate_states
    t0 = time.perf_counter()
    prog = Program()
    env = EnvSteps(Q.r, u)
    g = compile_expr(Q.g, u)
    q = compile_expr(Q.q, u)
    start = prog.intern(Q.c)
    seen: dict[tuple[State, int], tuple | None] = {}
    queue: deque[tuple[State, int]] = deque()
    env_done: set[tuple[int, Expr]] = set()
    for s in (init if init is not None else enumerate_states(u, Q.p)):
        key = (s, start)
        if key not in seen:
            seen[key] = None
            queue.append(key)

    def trace(key, last: Transition | None = None) -> Trace:
        steps = []
        cur = key
        while seen[cur] is not None:
            prev, actor, label = seen[cur]
            steps.append(Transition(actor, label, prev[0], cur[0]))
            cur = prev
        steps.reverse()
        if last is not None:
            steps.append(last)
        return Trace(Config(cur[0], (("self", prog.conts[cur[1]]),)), steps)

    def fail(kind, msg, key, last=None, label=""):
        return SemanticResult(False, Violation(kind, msg, trace(key, last), "self", label),
                              len(seen), len(env.cache), True, time.perf_counter() - t0)

    while queue:
        key = queue.popleft()
        s, k = key
        for a in prog.front(k):
            if compile_expr(a.pred, u)(s.values, None) is not True:
                return fail("assertion", f"assertion {a.label} fails", key, label=a.label)
        if prog.terminated(k):
            v = q(s.values, None)
            if v is not True:
                return fail("postcondition", "postcondition fails at termination", key)
        for mv in prog.moves(k):
            post, nk = _apply(mv, s)
            if isinstance(post, Err):
                return fail(_ERROR_KINDS.get(post.kind, post.kind), f"{mv.label}: {post.kind}",
                            key, label=mv.label)
            if g(s.values, post.values) is not True:
                return fail("guarantee", f"step {mv.label} violates the guarantee", key,
                            Transition("self", mv.label, s, post), mv.label)
            nkey = (post, nk)
            if nkey not in seen:
                seen[nkey] = (key, "self", mv.label)
                queue.append(nkey)
        r = env.residual(s)
        if (k, r) not in env_done:
            env_done.add((k, r))
            for n in env.successors(r):
                nkey = (n, k)
                if nkey not in seen:
                    seen[nkey] = (key, ENV, ENV)
                    queue.append(nkey)
        if len(seen) >= bounds.max_configs:
            return SemanticResult(False, None, len(seen), len(env.cache), False,
                                  time.perf_counter() - t0)
    return SemanticResult(True, None, len(seen), len(env.cache), True, time.perf_counter() - t0)


__all__ = [
    "Bounds", "Config", "Transition", "Trace", "Violation", "ExploreResult", "ExploreVerdict",
    "explore", "check_global_invariant", "check_guarantees", "check_terminals",
    "check_violations", "check_configs", "check_transitions", "replay", "BrokenTrace",
    "CeilingExceeded", "check_quintuple_semantic", "env_closure", "SemanticResult",
]
