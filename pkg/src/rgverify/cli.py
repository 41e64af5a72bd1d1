"""Command-line front end.

Exit status: 0 when every verdict holds, 1 when some property is violated
(or exploration was truncated), 2 on invalid input.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Callable

from . import clh, explorer, rg, wmm
from .expr import EvalError
from .program import ProgramError, validate
from .sexpr import ParseError, dump_command, load_command
from .state import UndeclaredVariable, Universe

log = logging.getLogger("rgverify")

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2
SCHEMA_PATH = Path(__file__).with_name("schema") / "report.schema.json"


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# reports

def _canonical(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


class RunReport:
    def __init__(self, command: list[str], config: dict):
        self.command = command
        self.config = config
        self.verdicts: list[dict] = []
        self.counts: dict[str, Any] = {}
        self.artifacts: dict[str, Any] = {}
        self.started = time.perf_counter()

    def add(self, name: str, holds: bool, **extra) -> bool:
        entry = {"name": name, "holds": bool(holds)}
        entry.update(extra)
        self.verdicts.append(entry)
        return bool(holds)

    @property
    def holds(self) -> bool:
        return all(v["holds"] for v in self.verdicts)

    def body(self) -> dict:
        return {"command": self.command, "config": self.config, "holds": self.holds,
                "verdicts": self.verdicts, "counts": self.counts, "artifacts": self.artifacts}

    def to_json(self) -> dict:
        body = self.body()
        out = dict(body)
        out["digest"] = hashlib.sha256(_canonical(body).encode()).hexdigest()
        out["timing"] = {"seconds": round(time.perf_counter() - self.started, 3)}
        return out


def _write(report: RunReport, out: str | None) -> None:
    if not out:
        return
    text = json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n"
    if out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _say(args, msg: str) -> None:
    if args.out != "-":
        print(msg)


# ---------------------------------------------------------------------------
# clh

def _clh_config(args) -> clh.ClhConfig:
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as err:
            raise InputError(f"cannot read configuration: {err}") from None
        return clh.ClhConfig.from_json(data)
    return clh.ClhConfig(args.n, args.rounds, args.variant)


def _record(report: RunReport, args, v) -> None:
    extra: dict[str, Any] = {}
    if getattr(v, "qualified", False):
        extra["qualified"] = True
    if getattr(v, "violation", None) is not None:
        extra["violation"] = v.violation.to_json()
    elif hasattr(v, "counterexample") and not v.holds and v.counterexample is not None:
        extra["counterexample"] = v.to_json().get("counterexample")
    name = getattr(v, "check", "") or "check"
    holds = bool(v.holds) and not extra.get("qualified", False)
    report.add(name, holds, **extra)
    _say(args, f"{'PASS' if holds else 'FAIL'}  {name}"
         + (f"  ({v.violation.message}; trace of {len(v.violation.trace)} steps)"
            if getattr(v, "violation", None) is not None else ""))


def _explore(cfg: clh.ClhConfig, args, report: RunReport):
    prog, u, init, spec = clh.build(cfg)
    runnable = clh.executable(prog)
    res = explorer.explore(runnable, init, u, explorer.Bounds(args.max_configs))
    report.counts.update(res.summary())
    return res, u, spec


def clh_explore(args, report: RunReport) -> None:
    cfg = _clh_config(args)
    res, u, spec = _explore(cfg, args, report)
    _record(report, args, explorer.check_violations(res, "assertions"))
    _record(report, args, explorer.check_terminals(res, spec.post, "terminal-postcondition"))
    _record(report, args, clh.check_mutual_exclusion(res))
    _record(report, args, clh.check_fifo(res))


def clh_invariants(args, report: RunReport) -> None:
    cfg = _clh_config(args)
    res, u, spec = _explore(cfg, args, report)
    _record(report, args, explorer.check_global_invariant(res, spec.invariant, "invariant"))
    _record(report, args, explorer.check_global_invariant(
        res, clh.aux_relation(cfg.threads), "aux-relation"))
    for t in cfg.threads:
        prop = clh.implies(clh.member(t, clh.Q), clh.status_prev(t))
        _record(report, args, explorer.check_global_invariant(res, prop, f"status-prev[{t}]"))
    _record(report, args, explorer.check_violations(res, "assertions"))


def clh_guarantees(args, report: RunReport) -> None:
    cfg = _clh_config(args)
    res, u, spec = _explore(cfg, args, report)
    _record(report, args, explorer.check_guarantees(res, spec.guars, "guarantees"))


def clh_lock_props(args, report: RunReport) -> None:
    cfg = _clh_config(args)
    _, u, _, spec = clh.build(cfg)
    # beyond two threads the full universe is too large to enumerate
    filt = spec.invariant if cfg.n > 2 else None
    for name, v in clh.check_generic_lock_properties(spec, u, filt):
        _record(report, args, v)
    for name, v in clh.check_status_prev(spec, u):
        _record(report, args, v)


def clh_theorems(args, report: RunReport) -> None:
    cfg = _clh_config(args)
    if cfg.variant != "annotated":
        raise InputError("theorems are stated for the annotated variant")
    u = clh.universe(cfg)
    ders = clh.build_theorem_derivations(cfg)
    if args.emit:
        d = Path(args.emit)
        d.mkdir(parents=True, exist_ok=True)
        (d / "universe.json").write_text(json.dumps(u.to_json(), indent=1, sort_keys=True) + "\n")
        for name, der in ders.items():
            (d / f"{name}.sexp").write_text(rg.dump_derivation(der) + "\n")
        report.artifacts["emitted"] = sorted(f"{n}.sexp" for n in ders) + ["universe.json"]
    for name, der in ders.items():
        rep = rg.check_derivation(der, u)
        extra = {}
        if not rep.holds:
            extra["failures"] = [{"path": p, **c.to_json()} for p, c in rep.failures()]
        report.add(f"theorem:{name}", rep.holds, **extra)
        _say(args, f"{'PASS' if rep.holds else 'FAIL'}  theorem:{name}")


CLH_VERBS: dict[str, Callable] = {
    "explore": clh_explore,
    "invariants": clh_invariants,
    "guarantees": clh_guarantees,
    "lock-props": clh_lock_props,
    "theorems": clh_theorems,
}


# ---------------------------------------------------------------------------
# rg-check, reorder, transform

def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as err:
        raise InputError(str(err)) from None


def rg_check(args, report: RunReport) -> None:
    try:
        u = Universe.from_json(json.loads(_read(args.universe)))
    except (json.JSONDecodeError, KeyError, ValueError, TypeError) as err:
        raise InputError(f"bad universe file: {err}") from None
    d = rg.load_derivation(_read(args.derivation))
    for q in rg.quintuples(d):
        defects = validate(q.c, u)
        if defects:
            raise InputError("; ".join(f"{x.label}: {x.message}" for x in defects))
    rep = rg.check_derivation(d, u)
    report.artifacts["check"] = rep.to_json()
    report.add("derivation", rep.holds)
    for path, c in rep.failures():
        _say(args, f"FAIL  {path}: {c.name}" + (f" ({c.detail})" if c.detail else ""))
    _say(args, f"{'PASS' if rep.holds else 'FAIL'}  derivation")


def reorder(args, report: RunReport) -> None:
    c = load_command(_read(args.program))
    rep = wmm.pairwise_report(c, wmm.get_model(args.model))
    report.artifacts["report"] = rep.to_json()
    report.add("reorder-report", True)
    _say(args, rep.table())


def transform(args, report: RunReport) -> None:
    c = load_command(_read(args.program))
    out = wmm.transform(c, wmm.get_model(args.model))
    text = dump_command(out)
    report.artifacts["program"] = text
    report.add("transform", True)
    _say(args, text)


# ---------------------------------------------------------------------------
# entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rgverify", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp):
        sp.add_argument("--out", help="write the JSON report here ('-' for stdout)")

    c = sub.add_parser("clh", help="check the CLH lock")
    c.add_argument("what", choices=sorted(CLH_VERBS))
    c.add_argument("--n", type=int, default=2, help="number of threads")
    c.add_argument("--rounds", type=int, default=2, help="acquire/release rounds per thread")
    c.add_argument("--variant", default="annotated", help=f"one of {', '.join(clh.VARIANTS)}")
    c.add_argument("--config", help="JSON file with n, rounds and variant")
    c.add_argument("--max-configs", type=int, default=10_000_000)
    c.add_argument("--emit", help="directory for derivation files (theorems only)")
    common(c)

    r = sub.add_parser("rg-check", help="check a rely/guarantee derivation")
    r.add_argument("derivation")
    r.add_argument("--universe", required=True)
    common(r)

    for name, fn in (("reorder", "pairwise reordering report"),
                     ("transform", "resolve ;M into ; and ||")):
        s = sub.add_parser(name, help=fn)
        s.add_argument("program")
        s.add_argument("--model", default="arm-like")
        common(s)
    return p


_INPUT_ERRORS = (InputError, ParseError, clh.InvalidConfig, wmm.NotLinear, wmm.NotTransformable,
                 rg.ShapeMismatch, ProgramError, UndeclaredVariable, ValueError)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    config = {k: v for k, v in sorted(vars(args).items())
              if k not in ("out", "verbose", "emit") and v is not None}
    report = RunReport([a for a in argv if a not in ("-v", "--verbose")], config)
    handler = {"clh": lambda a, rp: CLH_VERBS[a.what](a, rp), "rg-check": rg_check,
               "reorder": reorder, "transform": transform}[args.verb]
    try:
        handler(args, report)
    except _INPUT_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except EvalError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    _write(report, args.out)
    return EXIT_OK if report.holds else EXIT_VIOLATION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
