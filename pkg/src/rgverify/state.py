"""Finite-domain values, universes and total states."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Iterable, Iterator, Mapping

BOT = "bot"
GRANTED = "Granted"
PENDING = "Pending"
FREE = "Free"


@dataclass(frozen=True, slots=True)
class Held:
    thread: str

    def __str__(self) -> str:
        return f"Held({self.thread})"


def thread_ids(n: int) -> tuple[str, ...]:
    return tuple(f"t{i}" for i in range(1, n + 1))


def node_ids(n: int) -> tuple[str, ...]:
    return tuple(f"n{i}" for i in range(n))


def sequences(items: Iterable[str], max_len: int) -> tuple[tuple[str, ...], ...]:
    """All sequences over ``items`` of length 0..max_len, shortest first."""
    items = tuple(items)
    out: list[tuple[str, ...]] = []
    for k in range(max_len + 1):
        out.extend(itertools.product(items, repeat=k))
    return tuple(out)


@dataclass(frozen=True)
class Domain:
    """A finite, ordered set of values.  ``kind`` is only used for serialisation."""

    kind: str
    values: tuple

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError(f"empty domain of kind {self.kind!r}")

    def __contains__(self, v: Any) -> bool:
        return v in self.values

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


def value_to_json(v: Any) -> Any:
    if isinstance(v, Held):
        return str(v)
    if isinstance(v, tuple):
        return [value_to_json(x) for x in v]
    return v


def value_from_json(v: Any) -> Any:
    if isinstance(v, list):
        return tuple(value_from_json(x) for x in v)
    if isinstance(v, str) and v.startswith("Held(") and v.endswith(")"):
        return Held(v[5:-1])
    return v


class Universe:
    """Variable declarations over a fixed set of threads and nodes.

    Variables are ordered by name; that order (and each domain's value order)
    fixes the enumeration order of states.
    """

    def __init__(self, threads: Iterable[str], nodes: Iterable[str],
                 variables: Mapping[str, Domain]):
        self.threads = tuple(threads)
        self.nodes = tuple(nodes)
        if not self.threads:
            raise ValueError("a universe needs at least one thread")
        self.domains: dict[str, Domain] = {k: variables[k] for k in sorted(variables)}
        self.names: tuple[str, ...] = tuple(self.domains)
        self.index = {n: i for i, n in enumerate(self.names)}

    def __contains__(self, name: str) -> bool:
        return name in self.domains

    def __repr__(self) -> str:
        return f"Universe({len(self.threads)} threads, {len(self.names)} variables)"

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, Universe) and self.threads == other.threads
                and self.nodes == other.nodes and self.domains == other.domains)

    def __hash__(self) -> int:
        return hash((self.threads, self.nodes, self.names))

    def domain(self, name: str) -> Domain:
        try:
            return self.domains[name]
        except KeyError:
            raise UndeclaredVariable(name) from None

    def sort(self, sort: str) -> tuple:
        if sort == "thread":
            return self.threads
        if sort == "node":
            return self.nodes
        raise ValueError(f"unknown sort {sort!r}")

    def size(self) -> int:
        n = 1
        for d in self.domains.values():
            n *= len(d)
        return n

    def state(self, assignment: Mapping[str, Any]) -> State:
        missing = [n for n in self.names if n not in assignment]
        if missing:
            raise ValueError(f"state is not total, missing {missing}")
        extra = [n for n in assignment if n not in self.domains]
        if extra:
            raise UndeclaredVariable(", ".join(sorted(extra)))
        return State(self, tuple(assignment[n] for n in self.names))

    def all_states(self) -> Iterator[State]:
        for vals in itertools.product(*(d.values for d in self.domains.values())):
            yield State(self, vals)

    def restricted(self, names: Iterable[str]) -> Universe:
        keep = set(names)
        return Universe(self.threads, self.nodes,
                        {k: d for k, d in self.domains.items() if k in keep})

    def to_json(self) -> dict:
        return {
            "threads": list(self.threads),
            "nodes": list(self.nodes),
            "variables": {k: {"kind": d.kind, "values": [value_to_json(v) for v in d.values]}
                          for k, d in self.domains.items()},
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> Universe:
        threads = tuple(data["threads"])
        nodes = tuple(data.get("nodes", ()))
        variables: dict[str, Domain] = {}
        for name, spec in data["variables"].items():
            variables[name] = _domain_from_json(spec, threads, nodes)
        return cls(threads, nodes, variables)


def _domain_from_json(spec: Any, threads: tuple, nodes: tuple) -> Domain:
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec["kind"]
    if "values" in spec:
        return Domain(kind, tuple(value_from_json(v) for v in spec["values"]))
    if kind == "bool":
        return Domain(kind, (False, True))
    if kind == "int":
        lo, hi = spec["range"]
        return Domain(kind, tuple(range(lo, hi + 1)))
    if kind == "node":
        return Domain(kind, nodes)
    if kind == "node?":
        return Domain(kind, nodes + (BOT,))
    if kind == "thread":
        return Domain(kind, threads)
    if kind == "status":
        return Domain(kind, (GRANTED, PENDING))
    if kind == "lock":
        return Domain(kind, (FREE,) + tuple(Held(t) for t in threads))
    if kind == "seq":
        return Domain(kind, sequences(threads, spec.get("max_len", len(threads))))
    raise ValueError(f"unknown domain kind {kind!r}")


class UndeclaredVariable(KeyError):
    pass


class State:
    """Total, immutable assignment of values to a universe's variables."""

    __slots__ = ("universe", "values", "_hash")

    def __init__(self, universe: Universe, values: tuple):
        self.universe = universe
        self.values = values
        self._hash = hash(values)

    def __getitem__(self, name: str) -> Any:
        try:
            return self.values[self.universe.index[name]]
        except KeyError:
            raise UndeclaredVariable(name) from None

    def get(self, name: str, default: Any = None) -> Any:
        i = self.universe.index.get(name)
        return default if i is None else self.values[i]

    def __contains__(self, name: str) -> bool:
        return name in self.universe.index

    def __eq__(self, other: object) -> bool:
        return isinstance(other, State) and self.values == other.values \
            and self.universe.names == other.universe.names

    def __lt__(self, other: State) -> bool:
        return self.key() < other.key()

    def __hash__(self) -> int:
        return self._hash

    def key(self) -> tuple:
        """Sort key following domain order (not Python value order)."""
        u = self.universe
        return tuple(u.domains[n].values.index(v) for n, v in zip(u.names, self.values))

    def items(self):
        return zip(self.universe.names, self.values)

    def as_dict(self) -> dict[str, Any]:
        return dict(self.items())

    def update(self, changes: Mapping[str, Any]) -> State:
        if not changes:
            return self
        vals = list(self.values)
        idx = self.universe.index
        for k, v in changes.items():
            try:
                vals[idx[k]] = v
            except KeyError:
                raise UndeclaredVariable(k) from None
        return State(self.universe, tuple(vals))

    def well_typed(self) -> bool:
        return all(v in self.universe.domains[n] for n, v in self.items())

    def to_json(self) -> dict[str, Any]:
        return {k: value_to_json(v) for k, v in self.items()}

    def __repr__(self) -> str:
        body = ", ".join(f"{k}={_fmt(v)}" for k, v in self.items())
        return f"State({body})"


def _fmt(v: Any) -> str:
    if isinstance(v, tuple):
        return "[" + ",".join(_fmt(x) for x in v) + "]"
    return str(v)
