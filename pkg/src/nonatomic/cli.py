"""Command-line entry point.

Every subcommand builds a one-task scenario and runs it through the same
engine as ``run``, so ad-hoc and batch reports share one schema.

Exit codes: 0 all tasks pass, 1 a verification failed, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import re
import sys
from typing import Any

import tomli

from . import __version__
from .scenario import ScenarioError, _from_dict, _World, emit, load_scenario, run

SET_SHORTCUTS = {
    "evens": {"kind": "periodic", "period": 2, "residues": [0]},
    "odds": {"kind": "periodic", "period": 2, "residues": [1]},
    "full": {"kind": "full"},
    "empty": {"kind": "empty"},
}

# keys whose values are lists even when a single item is given in the short form
LIST_KEYS = {"residues", "head", "elements", "a"}


def parse_spec(text: str, shortcuts: dict | None = None) -> dict:
    """``kind:key=value,...`` or an inline TOML table ``{kind = "...", ...}``.

    In the short form ``a+b+c`` is an integer list and digit strings are integers;
    list-valued keys such as ``residues`` also accept a single item.
    """
    text = text.strip()
    if shortcuts and text in shortcuts:
        return dict(shortcuts[text])
    if text.startswith("{"):
        try:
            return tomli.loads("v = " + text)["v"]
        except tomli.TOMLDecodeError as e:
            raise ValueError(f"bad inline table {text!r}: {e}") from None
    kind, _, rest = text.partition(":")
    d: dict[str, Any] = {"kind": kind}
    for item in filter(None, rest.split(",")):
        key, eq, val = item.partition("=")
        if not eq:
            raise ValueError(f"expected key=value in {item!r}")
        key, value = key.strip(), _scalar(val.strip())
        if key in LIST_KEYS and not isinstance(value, list):
            value = [value]
        d[key] = value
    return d


def _scalar(v: str) -> Any:
    if "+" in v:
        return [int(p) for p in v.split("+") if p]
    if re.fullmatch(r"-?\d+", v):
        return int(v)
    return v


def _ground_of(family: dict) -> int:
    sc = _from_dict({"families": {"x": family}})
    return _World(sc).family("x").ground


def _partition_spec(text: str | None, family: dict) -> dict:
    d = parse_spec(text or "trivial")
    if d.get("kind") in ("residues", "trivial") and "ground" not in d:
        d["ground"] = _ground_of(family)
    return d


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nonatomic", description="Windowed limsup submeasures, fine-partition certificates, and operator transfer.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, default=None, help="scenario seed (u64)")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", parents=[common], help="run a scenario file")
    r.add_argument("scenario")
    r.add_argument("--echo", action="store_true", help="print the normalized scenario instead of running it")

    e = sub.add_parser("eval", parents=[common], help="windowed submeasure of sets")
    e.add_argument("--family", required=True)
    e.add_argument("--set", action="append", required=True, dest="sets")
    e.add_argument("--window", required=True, help="n0:N")

    c = sub.add_parser("certify", parents=[common], help="check or search for an epsilon-fine partition")
    c.add_argument("--family", required=True)
    c.add_argument("--epsilon", required=True, help="p/q")
    c.add_argument("--window", required=True)
    c.add_argument("--partition", help="e.g. residues:k=4 (default: search with --strategy)")
    c.add_argument("--strategy", choices=("exhaustive", "greedy", "random"))
    c.add_argument("--blocks", type=int, default=2)
    c.add_argument("--trials", type=int, default=100)

    t = sub.add_parser("transfer", parents=[common], help="transfer a column certificate to T^x")
    t.add_argument("--operator", required=True, help="e.g. cesaro:J=200")
    t.add_argument("--family", required=True)
    t.add_argument("--partition", required=True, help="partition of the columns, e.g. residues:k=3,ground=200")
    t.add_argument("--z-window", required=True)
    t.add_argument("--delta")
    t.add_argument("--m", type=int)
    t.add_argument("--window", required=True)

    g = sub.add_parser("generate", parents=[common], help="random T_lambda set sequence")
    g.add_argument("--lambda", dest="lam", default="1")
    g.add_argument("--sizes", default="4:12", help="min:max")
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--ground", type=int, default=64)

    v = sub.add_parser("verify-suite", parents=[common], help="seeded property battery")
    v.add_argument("--suite", choices=("exactness", "lemma", "oracle"), required=True)
    v.add_argument("--instances", type=int, default=100)
    v.add_argument("--family")
    v.add_argument("--set", action="append", dest="sets")
    v.add_argument("--window")
    return p


def _scenario_for(args) -> dict:
    cmd = args.command
    doc: dict[str, Any] = {"scenario": {"name": cmd, "seed": args.seed or 0}}
    task: dict[str, Any] = {}
    if cmd in ("eval", "certify", "transfer") or (cmd == "verify-suite" and args.suite == "oracle"):
        if not args.family:
            raise ValueError("--family is required")
        family = parse_spec(args.family)
        doc["families"] = {"x": family}
    if cmd == "eval" or (cmd == "verify-suite" and args.suite == "oracle"):
        doc["sets"] = {f"s{i}": parse_spec(s, SET_SHORTCUTS) for i, s in enumerate(args.sets or [], start=1)}
        task.update(family="x", sets=list(doc["sets"]), window=args.window)
    if cmd == "eval":
        task["kind"] = "eval"
    elif cmd == "certify":
        task.update(kind="certify", family="x", epsilon=args.epsilon, window=args.window)
        if args.partition:
            doc["partitions"] = {"P": _partition_spec(args.partition, family)}
            task["partition"] = "P"
        else:
            task.update(strategy=args.strategy or "greedy", blocks=args.blocks)
            if task["strategy"] == "random":
                task["trials"] = args.trials
    elif cmd == "transfer":
        doc["operators"] = {"T": parse_spec(args.operator)}
        doc["partitions"] = {"P": parse_spec(args.partition)}
        task.update(kind="transfer", operator="T", family="x", partition="P", z_window=args.z_window, window=args.window)
        if args.delta:
            task["delta"] = args.delta
        if args.m:
            task["m"] = args.m
    elif cmd == "generate":
        lo, _, hi = args.sizes.partition(":")
        task.update(kind="generate", size_min=int(lo), size_max=int(hi or lo), count_per_size=args.count, ground=args.ground)
        task["lambda"] = args.lam
    elif cmd == "verify-suite":
        task.update(kind="verify-suite", suite=args.suite)
        if args.suite != "oracle":
            task["instances"] = args.instances
    if args.seed is not None and cmd in ("certify", "generate", "verify-suite"):
        task["seed"] = args.seed
    doc["tasks"] = [task]
    return doc


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            sc = load_scenario(args.scenario)
            if args.echo:
                _write(sc.to_toml().encode(), args.out)
                return 0
        else:
            sc = _from_dict(_scenario_for(args))
    except ScenarioError as e:
        for msg in e.errors:
            print(f"error: {msg}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    report = run(sc, args.seed if args.command == "run" else None)
    _write(emit(report, args.format), args.out)
    return report.exit_code


def _write(data: bytes, path: str | None) -> None:
    if path:
        with open(path, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
