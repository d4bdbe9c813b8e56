"""Command-line front end.

Every subcommand prints a human-readable report, or a JSON document with
``--json``. Exit status is 0 when all requested checks pass, 1 when a check
fails and 2 on usage, input or guard errors (with a JSON failure record on
stderr).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from giglab import circuits, gig, network, schedules
from giglab.network import Network, StateSpaceGuard, config_from_str

SCHEMA = "giglab.report/1"


class CheckFailed(Exception):
    def __init__(self, payload: dict):
        self.payload = payload


# --------------------------------------------------------------------------
# input helpers


def load_source(source: str | None, file: str | None) -> Network:
    if file:
        return network.load_network(file)
    if not source:
        raise ValueError("give a network source (pos:n, neg:n, +/- literal) or --file")
    return circuits.CircuitDescriptor.parse(source).network()


def parse_config_set(text: str, n: int) -> list[int]:
    if text.startswith("@"):
        items = [ln.strip() for ln in Path(text[1:]).read_text().splitlines()]
    else:
        items = [t.strip() for t in text.split(",")]
    out = []
    for item in items:
        if not item:
            continue
        if len(item) != n:
            raise ValueError(f"configuration {item!r} has length {len(item)}, network has n={n}")
        out.append(config_from_str(item))
    return out


def parse_sign(text: str) -> int:
    if text in ("pos", "+", "positive"):
        return 1
    if text in ("neg", "-", "negative"):
        return -1
    raise ValueError(f"sign must be pos or neg, got {text!r}")


def memory_note(n: int, what: str) -> None:
    if what == "gig":
        est = 3 ** n * 16
    else:
        est = (1 << n) * 8 * 4
    print(f"note: forcing past guard; estimated memory ~{est / 2**20:.1f} MiB", file=sys.stderr)


# --------------------------------------------------------------------------
# commands


def cmd_attractors(args) -> dict:
    net = load_source(args.source, args.file)
    if args.force:
        memory_note(net.n, "trajectory")
    sched = schedules.parse_schedule(args.schedule, net.n)
    atts = schedules.enumerate_attractors(net, sched, args.observation, force=args.force)
    return {
        "network": net.describe(),
        "schedule": sched.literal(),
        "observation": args.observation,
        "fixed_points": sum(a.period == 1 for a in atts),
        "limit_cycles": sum(a.period > 1 for a in atts),
        "attractors": [a.to_dict() for a in atts],
    }


def cmd_gig(args) -> dict:
    net = load_source(args.source, args.file)
    if args.force:
        memory_note(net.n, "gig")
    graph = gig.build_gig(net, force=args.force)
    doc = gig.export_gig(graph, args.format, show_multiplicity=not args.no_mult, layers=args.layers)
    if args.output and args.output != "-":
        Path(args.output).write_text(doc)
    else:
        args._document = doc
    return {
        "network": net.describe(),
        "format": args.format,
        "nodes": graph.size,
        "distinct_arcs": len(graph.targets),
        "labelled_arcs": graph.total_arcs(),
        "output": args.output or "-",
    }


def cmd_metrics(args) -> dict:
    net = load_source(args.source, args.file)
    if args.force:
        memory_note(net.n, "gig")
    members = parse_config_set(args.set, net.n)
    graph = gig.build_gig(net, force=args.force)
    rep = gig.set_metrics(graph, members, weighting=args.weighting)
    return {"network": net.describe(), "metrics": rep.to_dict()}


def cmd_verify(args) -> dict:
    sign = parse_sign(args.sign)
    rep = circuits.verify_lemmas(args.n, sign, force=args.force)
    payload = rep.to_dict()
    if not rep.passed:
        raise CheckFailed(payload)
    return payload


def cmd_count(args) -> dict:
    n = args.n
    payload = {
        "n": n,
        "block_sequential": schedules.count_block_sequential(n),
        "surjections": {str(k): schedules.count_surjections(n, k) for k in range(n + 1)},
        "rotation_classes": schedules.count_rotation_classes(n) if n >= 1 else None,
    }
    if 1 <= n <= 6:
        all_s = list(schedules.enumerate_schedules(n))
        orbits = {schedules.canonicalize_rotation(s) for s in all_s}
        payload["enumerated"] = len(all_s)
        payload["enumerated_rotation_classes"] = len(orbits)
        ok = len(all_s) == payload["block_sequential"] and len(orbits) == payload["rotation_classes"]
        payload["cross_check"] = ok
        if not ok:
            raise CheckFailed(payload)
    return payload


def cmd_census(args) -> dict:
    rep = circuits.positive_limit_cycle_census(args.n, force=args.force, threads=args.threads)
    payload = rep.to_dict()
    if not args.full:
        payload.pop("entries")
    if rep.aligned_count != args.n or rep.deviations("macro"):
        raise CheckFailed(payload)
    return payload


def cmd_schedules(args) -> dict:
    if args.canonicalize:
        s = schedules.parse_schedule(args.canonicalize, args.n)
        c = schedules.canonicalize_rotation(s)
        return {"n": args.n, "schedule": s.literal(), "canonical": c.literal()}
    items = []
    for s in schedules.enumerate_schedules(args.n, force=args.force):
        items.append(
            {
                "schedule": s.literal(),
                "dates": list(s.dates),
                "canonical": schedules.canonicalize_rotation(s).literal(),
            }
        )
    return {"n": args.n, "count": len(items), "schedules": items}


# --------------------------------------------------------------------------
# text rendering


def render_text(command: str, p: dict) -> str:
    lines: list[str] = []
    if "network" in p:
        net = p["network"]
        signs = " ".join(f"{a['src']}{a['sign']}>{a['dst']}" for a in net["arcs"])
        lines.append(f"network: n={net['n']} arcs: {signs}")
    if command == "attractors":
        lines.append(f"schedule: {p['schedule']} ({p['observation']} observation)")
        lines.append(f"fixed points: {p['fixed_points']}  limit cycles: {p['limit_cycles']}")
        for a in p["attractors"]:
            lines.append(f"  {a['kind']:<11} p={a['period']:<3} basin={a['basin_size']:<6} {' -> '.join(a['cycle'])}")
    elif command == "gig":
        lines.append(
            f"{p['format']}: {p['nodes']} nodes, {p['distinct_arcs']} distinct arcs, "
            f"{p['labelled_arcs']} labelled arcs -> {p['output']}"
        )
    elif command == "metrics":
        m = p["metrics"]
        lines.append(f"set: {{{', '.join(m['members'])}}}  weighting: {m['weighting']}")
        lines.append(f"deg_out={m['deg_out']} deg_in={m['deg_in']} t_outside={m['t_outside']}")
        lines.append(f"R={'∞' if m['robustness'] == 'inf' else m['robustness']}")
        lines.append(f"P={m['likeliness'] if m['likeliness'] is not None else 'undefined'}")
    elif command == "verify":
        lines.append(f"canonical {p['sign']} circuit, n={p['n']}")
        lines.append("layers: " + ", ".join(f"u={k}:{v}" for k, v in p["layers"].items()))
        for c in p["checks"]:
            mark = "PASS" if c["passed"] else "FAIL"
            extra = f"  ({c['counterexample']})" if "counterexample" in c else ""
            lines.append(f"  {mark} {c['name']}{extra}")
    elif command == "count":
        lines.append(f"B({p['n']}) = {p['block_sequential']}")
        lines.append(f"B'({p['n']}) = {p['rotation_classes']}")
        lines.append("S(n,k): " + ", ".join(f"k={k}:{v}" for k, v in p["surjections"].items()))
        if "enumerated" in p:
            lines.append(
                f"enumeration: {p['enumerated']} schedules, {p['enumerated_rotation_classes']} rotation classes"
                f" ({'agree' if p['cross_check'] else 'DISAGREE'})"
            )
    elif command == "census":
        lines.append(f"canonical positive circuit n={p['n']}: {p['schedules']} schedules")
        lines.append(f"aligned sequential schedules: {p['aligned_sequential']}")
        for mode in ("macro", "block"):
            devs = p[f"deviations_{mode}"]
            lines.append(f"{mode} observation deviations: {len(devs)}")
            for d in devs:
                lines.append(f"  {d['schedule']} aligned={d['aligned_sequential']} cycles={d[f'limit_cycles_{mode}']}")
        for e in p.get("entries", []):
            lines.append(
                f"  {e['schedule']:<20} aligned={str(e['aligned_sequential']):<5} "
                f"macro={e['limit_cycles_macro']} block={e['limit_cycles_block']}"
            )
    elif command == "schedules":
        if "canonical" in p:
            lines.append(f"{p['schedule']} -> {p['canonical']}")
        else:
            lines.append(f"{p['count']} schedules for n={p['n']}")
            for s in p["schedules"]:
                lines.append(f"  {s['schedule']:<20} canonical {s['canonical']}")
    if "elapsed_s" in p:
        lines.append(f"elapsed: {p['elapsed_s']:.3f}s")
    return "\n".join(lines)


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit a structured JSON report")
    common.add_argument("--force", action="store_true", help="override state-space guards")
    common.add_argument("--threads", type=int, default=1, help="worker processes for partitionable scans")
    common.add_argument("--timing", action="store_true", help="include elapsed time in the report")

    parser = argparse.ArgumentParser(prog="giglab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def with_source(p):
        p.add_argument("source", nargs="?", help="pos:n, neg:n or a +/- circuit literal")
        p.add_argument("--file", help="network file (JSON or YAML)")
        return p

    p = with_source(sub.add_parser("attractors", parents=[common], help="enumerate attractors under a schedule"))
    p.add_argument("--schedule", default="*", help="'*', 'seq' or blocks like '0,2;1'")
    p.add_argument("--observation", choices=["macro", "block"], default="macro")
    p.set_defaults(func=cmd_attractors)

    p = with_source(sub.add_parser("gig", parents=[common], help="build and export the general iteration graph"))
    p.add_argument("--format", choices=gig.EXPORT_FORMATS, default="dot")
    p.add_argument("-o", "--output", help="output path ('-' or omitted: stdout)")
    p.add_argument("--layers", action="store_true", help="group nodes by potential u")
    p.add_argument("--no-mult", action="store_true", help="omit multiplicity labels")
    p.set_defaults(func=cmd_gig)

    p = with_source(sub.add_parser("metrics", parents=[common], help="robustness and likeliness of a configuration set"))
    p.add_argument("--set", required=True, help="comma-separated configurations or @file")
    p.add_argument("--weighting", choices=["multiplicity", "distinct"], default="multiplicity")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("verify", parents=[common], help="check circuit lemmas exhaustively")
    p.add_argument("n", type=int)
    p.add_argument("sign", help="pos or neg")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("count", parents=[common], help="schedule counts B(n), S(n,k), B'(n)")
    p.add_argument("n", type=int)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("census", parents=[common], help="limit cycles of the positive circuit per schedule")
    p.add_argument("n", type=int)
    p.add_argument("--full", action="store_true", help="list every schedule")
    p.set_defaults(func=cmd_census)

    p = sub.add_parser("schedules", parents=[common], help="enumerate or canonicalize schedules")
    p.add_argument("n", type=int)
    p.add_argument("--canonicalize", metavar="LITERAL")
    p.set_defaults(func=cmd_schedules)
    return parser


def emit(command: str, payload: dict, as_json: bool, stream) -> None:
    if as_json:
        doc = {"schema": SCHEMA, "command": command, **payload}
        stream.write(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")
    else:
        stream.write(render_text(command, payload) + "\n")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        payload = args.func(args)
    except CheckFailed as exc:
        payload = exc.payload
        if args.timing:
            payload["elapsed_s"] = time.perf_counter() - start
        emit(args.command, payload, args.json, sys.stdout)
        failure = {"schema": SCHEMA, "command": args.command, "status": "check-failed"}
        print(json.dumps(failure, sort_keys=True), file=sys.stderr)
        return 1
    except (ValueError, StateSpaceGuard, OSError, ArithmeticError, KeyError) as exc:
        failure = {
            "schema": SCHEMA,
            "command": args.command,
            "status": "error",
            "error": type(exc).__name__,
            "message": str(exc),
        }
        print(json.dumps(failure, sort_keys=True), file=sys.stderr)
        return 2
    if args.timing:
        payload["elapsed_s"] = time.perf_counter() - start
    doc = getattr(args, "_document", None)
    if doc is not None and not args.json:
        sys.stdout.write(doc)
        return 0
    if doc is not None:
        payload["document"] = doc
    emit(args.command, payload, args.json, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
