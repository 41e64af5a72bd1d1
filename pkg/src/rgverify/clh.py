"""The CLH queue lock: program variants, specification objects and checks.

Threads are ``t1..tN`` and nodes ``n0..nN``.  Per-thread variables live in
families ``cur``, ``reserved``, ``next``, ``prev`` (and the register ``r``
for the hardware-level variants); node statuses are the heap cells
``status[n]``.  ``q`` (the queue of threads), ``auxhead`` and ``reserved``
are auxiliary: they are updated inside the atomic steps but never read by
the lock code itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

from . import checks
from .checks import Verdict
from .expr import (
    Bound, Const, Expr, ID, Var, and_, concat, cons, distinct, eq, fmap, forall_in, hd,
    held, idx, iff, implies, in_range, index_of, injective, ite, le, listlit, member, not_,
    or_, prime, id_all, status, tl,
)
from .program import (
    Assert, Command, Fence, Marker, SpinLoop, assign, atomic, parn, ppseq, seq, simultaneous,
)
from .rg import (
    AsgnNode, ConseqNode, Derivation, ParGenNode, ParUNode, Quintuple, SpinLoopNode,
    preserves, seq_chain,
)
from .state import (
    BOT, FREE, GRANTED, PENDING, Domain, Universe, node_ids, sequences, thread_ids,
)

VARIANTS = ("annotated", "hw", "buggy", "fenced-usage")
MODEL = "arm-like"

Q = Var("q")
TAIL = Var("tail")
AUX = Var("auxhead")
EMPTY = Const(())
CS = "cs"


class InvalidConfig(ValueError):
    pass


@dataclass(frozen=True)
class ClhConfig:
    n: int = 2
    rounds: int = 2
    variant: str = "annotated"

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 1:
            raise InvalidConfig(f"thread count must be a positive integer, got {self.n!r}")
        if isinstance(self.rounds, bool) or not isinstance(self.rounds, int) or self.rounds < 1:
            raise InvalidConfig(f"rounds must be a positive integer, got {self.rounds!r}")
        if self.variant not in VARIANTS:
            raise InvalidConfig(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")

    @property
    def threads(self) -> tuple[str, ...]:
        return thread_ids(self.n)

    @property
    def nodes(self) -> tuple[str, ...]:
        return node_ids(self.n + 1)

    @property
    def registers(self) -> bool:
        return self.variant != "annotated"

    def to_json(self) -> dict:
        return {"n": self.n, "rounds": self.rounds, "variant": self.variant}

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> ClhConfig:
        if not isinstance(data, Mapping):
            raise InvalidConfig("configuration must be a JSON object")
        extra = set(data) - {"n", "N", "rounds", "variant"}
        if extra:
            raise InvalidConfig(f"unknown configuration keys {sorted(extra)}")
        return cls(data.get("n", data.get("N", 2)), data.get("rounds", 2),
                   data.get("variant", "annotated"))


# ---------------------------------------------------------------------------
# locations

def cur(i) -> Expr:
    return idx("cur", i)


def reserved(i) -> Expr:
    return idx("reserved", i)


def nxt(i) -> Expr:
    return idx("next", i)


def prev(i) -> Expr:
    return idx("prev", i)


def reg(i) -> Expr:
    return idx("r", i)


def universe(cfg: ClhConfig) -> Universe:
    threads, nodes = cfg.threads, cfg.nodes
    node = Domain("node", nodes)
    opt = Domain("node?", nodes + (BOT,))
    variables: dict[str, Domain] = {
        "tail": node,
        "auxhead": node,
        "q": Domain("seq", sequences(threads, len(threads))),
    }
    for n in nodes:
        variables[f"status[{n}]"] = Domain("status", (GRANTED, PENDING))
    for t in threads:
        variables[f"cur[{t}]"] = node
        variables[f"reserved[{t}]"] = node
        variables[f"next[{t}]"] = opt
        variables[f"prev[{t}]"] = opt
        if cfg.registers:
            variables[f"r[{t}]"] = opt
    return Universe(threads, nodes, variables)


def initial(cfg: ClhConfig) -> Expr:
    """Empty queue, every node but n0 reserved by its thread, n0 the granted dummy."""
    nodes = cfg.nodes
    parts = [eq(Q, EMPTY), eq(AUX, nodes[0]), eq(TAIL, nodes[0]),
             eq(status(nodes[0]), GRANTED)]
    for k, t in enumerate(cfg.threads, start=1):
        parts += [eq(cur(t), nodes[k]), eq(reserved(t), nodes[k]), eq(status(nodes[k]), PENDING),
                  eq(nxt(t), BOT), eq(prev(t), BOT)]
        if cfg.registers:
            parts.append(eq(reg(t), BOT))
    return and_(*parts)


# ---------------------------------------------------------------------------
# specification

def aux_relation(threads) -> Expr:
    """Reading from auxhead through the reserved nodes of the queue ends at tail."""
    return eq(cons(AUX, fmap("reserved", Q, threads)),
              concat(fmap("prev", Q, threads), listlit(TAIL)))


def invariant(threads) -> Expr:
    i = Bound("i")
    return and_(
        distinct(Q),
        injective("reserved", threads),
        not_(in_range(AUX, "reserved", threads)),
        eq(status(AUX), GRANTED),
        forall_in("i", Q, eq(status(reserved(i)), PENDING)),
        aux_relation(threads),
    )


def queue_contract(i) -> Expr:
    """Nobody else adds or removes i, and i only moves towards the head."""
    return and_(iff(member(i, Q), member(i, prime(Q))),
                implies(member(i, Q), le(index_of(prime(Q), i), index_of(Q, i))))


def contract(i) -> Expr:
    return and_(ID(cur(i), nxt(i), reserved(i), status(reserved(i))), queue_contract(i))


def frame(i, registers: bool = False) -> Expr:
    """Thread-local variables of i that no other thread writes."""
    return ID(prev(i), reg(i)) if registers else ID(prev(i))


def rely_core(i, threads, registers: bool = False) -> Expr:
    return and_(contract(i), frame(i, registers))


def guar_core(i, threads, registers: bool = False) -> Expr:
    return and_(*(rely_core(j, threads, registers) for j in threads if j != i))


def lock_expr() -> Expr:
    """Lock value derived from the queue: free when empty, else held by the head."""
    return ite(eq(Q, EMPTY), Const(FREE), held(hd(Q)))


def coupling(lock: Expr = Var("lock")) -> Expr:
    return eq(lock, lock_expr())


def status_prev(i) -> Expr:
    """For a queued thread: its predecessor node is granted exactly when it heads the queue."""
    return iff(eq(status(prev(i)), GRANTED), eq(i, hd(Q)))


def ladder(i) -> dict[str, Expr]:
    """Assertions at each program point of acquire and release for thread i."""
    out_q, in_q = not_(member(i, Q)), member(i, Q)
    owned = eq(cur(i), reserved(i))
    return {
        "acquire.pre": and_(out_q, owned),
        "after-pending": and_(out_q, owned, eq(status(cur(i)), PENDING)),
        "after-swap": and_(in_q, owned),
        "after-next": and_(in_q, owned, eq(nxt(i), prev(i))),
        "acquire.post": and_(in_q, owned, eq(nxt(i), AUX), eq(i, hd(Q))),
        "after-release-block": and_(out_q, eq(nxt(i), reserved(i))),
        "release.post": and_(out_q, owned),
    }


def terminal_post(threads) -> Expr:
    return and_(eq(Q, EMPTY), *(eq(cur(t), reserved(t)) for t in threads))


@dataclass
class ClhSpec:
    threads: tuple[str, ...]
    registers: bool
    invariant: Expr
    contracts: dict[str, Expr]
    relies: dict[str, Expr]
    guars: dict[str, Expr]
    ladders: dict[str, dict[str, Expr]]
    lock: Expr
    cinv: Expr
    post: Expr
    queued_lock: dict[str, Any] = field(default_factory=dict)

    def rely(self, i: str) -> Expr:
        return self.relies[i]

    def guar(self, i: str) -> Expr:
        return self.guars[i]


def make_spec(cfg: ClhConfig) -> ClhSpec:
    ts, regs = cfg.threads, cfg.registers
    inv = invariant(ts)
    keep = preserves(inv)
    qinv = distinct(Q)
    queued = {
        "invariant": qinv,
        "contract": {t: queue_contract(t) for t in ts},
        "rely": {t: and_(queue_contract(t), preserves(qinv)) for t in ts},
        "guar": {t: and_(preserves(qinv), *(queue_contract(j) for j in ts if j != t)) for t in ts},
        "pre": {t: not_(member(t, Q)) for t in ts},
        "mid": {t: eq(t, hd(Q)) for t in ts},
    }
    return ClhSpec(
        threads=ts, registers=regs, invariant=inv,
        contracts={t: contract(t) for t in ts},
        relies={t: and_(rely_core(t, ts, regs), keep) for t in ts},
        guars={t: and_(guar_core(t, ts, regs), keep) for t in ts},
        ladders={t: ladder(t) for t in ts},
        lock=lock_expr(), cinv=coupling(), post=terminal_post(ts), queued_lock=queued,
    )


# ---------------------------------------------------------------------------
# programs

def _swap(i, src: Expr, ordering: str = "none"):
    return atomic(assign(prev(i), TAIL), assign(TAIL, src), assign(Q, concat(Q, listlit(i))),
                  label="acq.swap", ordering=ordering)


def _release_block(i):
    return atomic(assign(status(cur(i)), GRANTED),
                  simultaneous([(AUX, reserved(i)), (reserved(i), AUX)]),
                  assign(Q, tl(Q)), label="rel.grant")


def _await(i) -> SpinLoop:
    return SpinLoop(eq(status(prev(i)), GRANTED), "acq.await")


def reset(i, registers: bool = False):
    pairs = [(prev(i), BOT)] + ([(reg(i), BOT)] if registers else [])
    return simultaneous(pairs, label="reset")


def acquire_steps(i) -> list:
    return [assign(status(cur(i)), PENDING, "acq.pending"), _swap(i, cur(i)),
            assign(nxt(i), prev(i), "acq.next"), _await(i)]


def release_steps(i) -> list:
    return [_release_block(i), assign(cur(i), nxt(i), "rel.cur")]


def annotated_acquire(i) -> Command:
    a = ladder(i)
    s = acquire_steps(i)
    return seq(Assert(a["acquire.pre"], "acquire.pre"), s[0],
               Assert(a["after-pending"], "after-pending"), s[1],
               Assert(a["after-swap"], "after-swap"), s[2],
               Assert(a["after-next"], "after-next"), s[3],
               Assert(a["acquire.post"], "acquire.post"))


def annotated_release(i) -> Command:
    a = ladder(i)
    s = release_steps(i)
    return seq(s[0], Assert(a["after-release-block"], "after-release-block"),
               s[1], Assert(a["release.post"], "release.post"))


def hw_acquire_steps(i, ordered: bool = True) -> list:
    """Lock code with the node pointer loaded into a register first."""
    return [assign(reg(i), cur(i), "acq.load"),
            assign(status(reg(i)), PENDING, "acq.pending"),
            _swap(i, reg(i), "release" if ordered else "none"),
            assign(nxt(i), prev(i), "acq.next"),
            _await(i)]


def hw_acquire(i, ordered: bool = True) -> Command:
    return ppseq(MODEL, *hw_acquire_steps(i, ordered))


def hw_release(i) -> Command:
    return ppseq(MODEL, *release_steps(i))


def thread_body(cfg: ClhConfig, i: str) -> Command:
    regs = cfg.registers
    if cfg.variant == "annotated":
        rnd = seq(reset(i), annotated_acquire(i), Marker(CS), annotated_release(i))
        return seq(*([rnd] * cfg.rounds))
    if cfg.variant == "fenced-usage":
        chain: list = []
        for _ in range(cfg.rounds):
            chain += [reset(i, regs), *hw_acquire_steps(i), Fence("fence.acquire"), Marker(CS),
                      Fence("fence.release"), *release_steps(i)]
        return ppseq(MODEL, *chain)
    rnd = seq(reset(i, regs), hw_acquire(i, cfg.variant == "hw"), Marker(CS), hw_release(i))
    return seq(*([rnd] * cfg.rounds))


def program(cfg: ClhConfig) -> Command:
    return parn((t, thread_body(cfg, t)) for t in cfg.threads)


def build(cfg: ClhConfig) -> tuple[Command, Universe, Expr, ClhSpec]:
    if not isinstance(cfg, ClhConfig):
        raise InvalidConfig("expected a ClhConfig")
    return program(cfg), universe(cfg), initial(cfg), make_spec(cfg)


def executable(prog: Command) -> Command:
    """Resolve memory-model sequencing so the explorer can run the program."""
    from .wmm import ARM_LIKE, transform
    return transform(prog, ARM_LIKE)


# ---------------------------------------------------------------------------
# lock-level properties

def check_generic_lock_properties(spec: ClhSpec, u: Universe,
                                  filter: Expr | None = None) -> list[tuple[str, Verdict]]:
    """Acquire yields the lock, a held lock is never taken, and others' locks are respected."""
    out = []
    L = spec.lock
    for i in spec.threads:
        mine = eq(L, held(i))
        out.append((f"acquire-holds[{i}]", checks.implies_pred(
            and_(spec.invariant, spec.ladders[i]["acquire.post"]), mine, u, filter,
            f"acquire-holds[{i}]")))
        out.append((f"rely-keeps[{i}]", checks.implies_rel(
            spec.contracts[i], implies(mine, prime(mine)), u, filter, f"rely-keeps[{i}]")))
        for j in spec.threads:
            if j != i:
                theirs = eq(L, held(j))
                name = f"guar-respects[{i},{j}]"
                out.append((name, checks.implies_rel(
                    spec.guars[i], implies(theirs, prime(theirs)), u, filter, name)))
    return out


def check_status_prev(spec: ClhSpec, u: Universe) -> list[tuple[str, Verdict]]:
    out = []
    for i in spec.threads:
        name = f"status-prev[{i}]"
        out.append((name, checks.implies_pred(
            and_(spec.invariant, member(i, Q)), status_prev(i), u, spec.invariant, name)))
    return out


# ---------------------------------------------------------------------------
# checks over explored state spaces

def _at_cs(res, k: int) -> bool:
    return any(mv.label == CS for mv in res.program.moves(k))


def check_mutual_exclusion(res):
    """At most one thread can enter the critical section, and it is the queue head."""
    from .explorer import ExploreVerdict, Violation
    qi = res.universe.index["q"]
    for ci, (si, ks) in enumerate(res.configs):
        inside = [t for t, k in zip(res.threads, ks) if _at_cs(res, k)]
        if not inside:
            continue
        qv = res.states[si].values[qi]
        if len(inside) > 1 or not qv or qv[0] != inside[0]:
            msg = f"threads {inside} at the critical section with queue {list(qv)}"
            return ExploreVerdict(False, "mutual-exclusion",
                                  Violation("mutual-exclusion", msg, res.trace_to(ci)),
                                  not res.complete, ci + 1)
    return ExploreVerdict(True, "mutual-exclusion", None, not res.complete, len(res.configs))


def check_fifo(res):
    """Along every step, a thread that stays queued never moves away from the head."""
    from .explorer import ExploreVerdict, Violation
    qi = res.universe.index["q"]
    for tr, (src, actor, label, dst) in enumerate(res.transitions):
        a = res.states[res.configs[src][0]].values[qi]
        b = res.states[res.configs[dst][0]].values[qi]
        if a == b:
            continue
        for t in a:
            if t in b and b.index(t) > a.index(t):
                msg = f"{t} moved from position {a.index(t)} to {b.index(t)}"
                return ExploreVerdict(False, "fifo", Violation("fifo", msg, res.trace_through(tr),
                                                               actor, label),
                                      not res.complete, tr + 1)
    return ExploreVerdict(True, "fifo", None, not res.complete, len(res.transitions))


# ---------------------------------------------------------------------------
# proof outlines

class _Outline:
    def __init__(self, cfg: ClhConfig, u: Universe, i: str):
        self.i = i
        self.u = u
        self.inv = invariant(cfg.threads)
        keep = preserves(self.inv)
        self.R = and_(rely_core(i, cfg.threads), keep)
        self.G = and_(guar_core(i, cfg.threads), keep)
        self.GL = or_(self.G, id_all(u))
        self.a = ladder(i)

    def pt(self, name: str) -> Expr:
        return and_(self.a[name], self.inv)

    def leaf(self, pre: str, c, post: str, r: Expr | None = None,
             g: Expr | None = None) -> tuple[Derivation, Expr]:
        node = SpinLoopNode if isinstance(c, SpinLoop) else AsgnNode
        return (node(Quintuple(self.pt(pre), r if r is not None else self.R, c,
                               g if g is not None else self.GL, self.pt(post))),
                self.pt(post))

    def acquire_leaves(self) -> list:
        s = acquire_steps(self.i)
        return [self.leaf("acquire.pre", s[0], "after-pending"),
                self.leaf("after-pending", s[1], "after-swap"),
                self.leaf("after-swap", s[2], "after-next"),
                self.leaf("after-next", s[3], "acquire.post")]

    def release_leaves(self) -> list:
        s = release_steps(self.i)
        return [self.leaf("acquire.post", s[0], "after-release-block"),
                self.leaf("after-release-block", s[1], "release.post")]

    def round_leaves(self) -> list:
        return ([self.leaf("acquire.pre", reset(self.i), "acquire.pre")] + self.acquire_leaves()
                + [self.leaf("acquire.post", Marker(CS), "acquire.post")] + self.release_leaves())

    def theorem(self, pre: str, leaves: list) -> Derivation:
        chain = seq_chain(self.pt(pre), self.R, self.GL, leaves)
        c = chain.concl
        return ConseqNode(Quintuple(c.p, self.R, c.c, self.G, c.q), chain)

    def par_sel4(self) -> Derivation:
        i, u = self.i, self.u
        s = acquire_steps(i)
        own = ID(*(Var(n) for n in u.names if n != f"next[{i}]"))
        gl = or_(and_(self.G, own), id_all(u))
        gr = id_all(u)
        waited = and_(member(i, Q), eq(cur(i), reserved(i)), eq(i, hd(Q)), eq(prev(i), AUX), self.inv)
        left = AsgnNode(Quintuple(self.pt("after-swap"), or_(self.R, gr), s[2], gl,
                                  self.pt("after-next")))
        right = SpinLoopNode(Quintuple(self.pt("after-swap"), or_(self.R, gl), s[3], gr, waited))
        from .program import Par
        concl = Quintuple(self.pt("after-swap"), self.R, Par(s[2], s[3]), or_(gl, gr),
                          and_(left.concl.q, right.concl.q))
        par = ParUNode(concl, left, right)
        return ConseqNode(Quintuple(concl.p, self.R, concl.c, self.G, self.pt("acquire.post")), par)


def build_theorem_derivations(cfg: ClhConfig, thread: str | None = None) -> dict[str, Derivation]:
    """Proof outlines for acquire, release, the whole system and the parallelized wait."""
    if cfg.variant != "annotated":
        raise InvalidConfig("proof outlines are built for the annotated variant")
    u = universe(cfg)
    i = thread or cfg.threads[0]
    if i not in cfg.threads:
        raise InvalidConfig(f"unknown thread {i!r}")
    o = _Outline(cfg, u, i)
    out = {
        "acquire": o.theorem("acquire.pre", o.acquire_leaves()),
        "release": o.theorem("acquire.post", o.release_leaves()),
        "par-sel4": o.par_sel4(),
    }
    kids = []
    for t in cfg.threads:
        ot = _Outline(cfg, u, t)
        kids.append(seq_chain(ot.pt("acquire.pre"), ot.R, ot.GL, ot.round_leaves() * cfg.rounds))
    concl = Quintuple(and_(*(k.concl.p for k in kids)), and_(*(k.concl.r for k in kids)),
                      parn((t, k.concl.c) for t, k in zip(cfg.threads, kids)),
                      or_(*(k.concl.g for k in kids)), and_(*(k.concl.q for k in kids)))
    system = ParGenNode(concl, tuple(kids))
    inv = invariant(cfg.threads)
    goal = Quintuple(concl.p, concl.r, concl.c,
                     or_(*(_Outline(cfg, u, t).G for t in cfg.threads)),
                     and_(terminal_post(cfg.threads), inv))
    out["locking-system"] = ConseqNode(goal, system)
    return out


__all__ = [
    "ClhConfig", "ClhSpec", "InvalidConfig", "VARIANTS", "MODEL", "build", "universe", "initial",
    "invariant", "aux_relation", "contract", "queue_contract", "frame", "lock_expr", "coupling",
    "ladder", "status_prev", "terminal_post", "program", "executable", "make_spec",
    "check_generic_lock_properties", "check_status_prev", "check_mutual_exclusion", "check_fifo",
    "build_theorem_derivations",
]
