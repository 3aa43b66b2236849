"""Command-line front end.

Subcommands: parse, analyze, optimize, reduce, bench, check-equiv, dot.
Exit codes: 0 success, 64 usage, 65 data (parse/type/corpus), 70 internal;
check-equiv uses 0/1/2 for equivalent/distinct/inconclusive.  All JSON
output is schema-stable and newline-terminated.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path as FsPath

from .binding import binding_graph, decorate, parameter_cycles, spine_search_graph, to_dot
from .corpus import CorpusError, bench_corpus, load_corpus, rows_to_csv, _fraction_str
from .dominators import strong_dom_fixpoint
from .equivalence import applicative_experiments, check_op_eq
from .infer import TypeInferenceError, infer_types, parse_signature
from .reduction import DEFAULT_FUEL, count_steps_to_depth, normal_order_eval
from .terms import ParseError, ensure_distinctly_bound, parse, pretty
from .transform import optimize

__all__ = ["main"]

EX_OK = 0
EX_DISTINCT = 1
EX_INCONCLUSIVE = 2
EX_USAGE = 64
EX_DATA = 65
EX_INTERNAL = 70


class _UsageError(Exception):
    pass


class _DataError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we want 64
        raise _UsageError(message)


def _build_parser() -> _ArgumentParser:
    p = _ArgumentParser(prog="letrecopt", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("parse", help="parse a term and print it back")
    sp.add_argument("file")

    sp = sub.add_parser("analyze", help="binding graph edges and parameter cycles as JSON")
    sp.add_argument("file")
    sp.add_argument("--sig", help="signature file (default: FILE.sig or default.sig next to it)")
    sp.add_argument("--dominators", action="store_true", help="include strong dominator pairs")

    sp = sub.add_parser("optimize", help="run the verified optimization pipeline")
    sp.add_argument("file")
    sp.add_argument("--sig")
    sp.add_argument("--max-unfolds", type=int, default=1)
    sp.add_argument("--verify-depth", type=int, default=8)
    sp.add_argument("--report", choices=["json", "text"], default="text")

    sp = sub.add_parser("reduce", help="evaluate and print reduction statistics as JSON")
    sp.add_argument("file")
    sp.add_argument("--strategy", choices=["normal", "beta-only"], default="normal")
    sp.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    sp.add_argument("--depth", type=int, help="count steps across the approximation tree")

    sp = sub.add_parser("bench", help="step-count table for a corpus directory")
    sp.add_argument("directory")
    sp.add_argument("--depth", type=int, default=12)
    sp.add_argument("--format", choices=["csv", "json"], default="csv")

    sp = sub.add_parser("check-equiv", help="bounded operational-equivalence verdict")
    sp.add_argument("file1")
    sp.add_argument("file2")
    sp.add_argument("--depth", type=int, default=8)
    sp.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    sp.add_argument("--experiments", type=int, default=0)
    sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("dot", help="binding graph in DOT format")
    sp.add_argument("file")
    sp.add_argument("--sig")
    return p


def _read_term(path: str):
    try:
        text = FsPath(path).read_text()
    except OSError as exc:
        raise _DataError(f"{path}: {exc.strerror or exc}") from exc
    try:
        return parse(text)
    except ParseError as exc:
        raise _DataError(f"{path}: {exc}") from exc


def _load_sig(path: str):
    try:
        return parse_signature(FsPath(path).read_text())
    except (OSError, ValueError) as exc:
        raise _DataError(f"{path}: {exc}") from exc


def _sig_for(file: str, explicit: str | None):
    if explicit:
        return _load_sig(explicit)
    p = FsPath(file)
    own = p.with_suffix(".sig")
    if own.exists():
        return _load_sig(str(own))
    shared = p.parent / "default.sig"
    if shared.exists():
        return _load_sig(str(shared))
    return None


def _print_json(obj, out) -> None:
    json.dump(obj, out, sort_keys=True)
    out.write("\n")


def _analysis(file: str, sig_path: str | None):
    term = ensure_distinctly_bound(_read_term(file))
    sig = _sig_for(file, sig_path)
    try:
        typed = infer_types(term, sig)
    except TypeInferenceError as exc:
        raise _DataError(f"{file}: {exc}") from exc
    graph = binding_graph(decorate(typed))
    return term, graph


def _node_label(node) -> str:
    from .binding import BLACKHOLE, ExprNode, VarNode

    if node is BLACKHOLE:
        return "BLACKHOLE"
    if isinstance(node, VarNode):
        return node.name
    return node.label


def _cmd_parse(args, out, err) -> int:
    print(pretty(_read_term(args.file)), file=out)
    return EX_OK


def _cmd_analyze(args, out, err) -> int:
    _, graph = _analysis(args.file, args.sig)
    payload = {
        "edges": [
            {"var": var, "arg": label} for var, label in graph.rendered_edges()
        ],
        "cycles": parameter_cycles(graph),
    }
    if args.dominators:
        rel = strong_dom_fixpoint(graph)
        payload["strong_dominators"] = sorted(
            [e for e in ((_node_label(v), _node_label(w)) for v, w in rel.pairs)]
        )
    _print_json(payload, out)
    return EX_OK


def _cmd_optimize(args, out, err) -> int:
    term = _read_term(args.file)
    sig = _sig_for(args.file, args.sig)
    try:
        optimized, report = optimize(
            term,
            max_unfolds=args.max_unfolds,
            verify_depth=args.verify_depth,
            sig=sig,
        )
    except TypeInferenceError as exc:
        raise _DataError(f"{args.file}: {exc}") from exc
    if args.report == "json":
        _print_json({"term": pretty(optimized), "report": report.as_dict()}, out)
    else:
        print(pretty(optimized), file=out)
        for step in report.applied_steps:
            print(f"-- applied: {step.description}", file=err)
        if report.verification_failure:
            print(f"-- verification failed: {report.verification_failure}", file=err)
        print(
            f"-- beta steps at depth {report.savings_depth}: "
            f"{report.beta_before} -> {report.beta_after}",
            file=err,
        )
    return EX_OK


def _cmd_reduce(args, out, err) -> int:
    term = _read_term(args.file)
    if args.depth is not None:
        stats = count_steps_to_depth(term, args.depth, args.fuel)
    else:
        _, stats = normal_order_eval(term, fuel=args.fuel, strategy=args.strategy)
    _print_json(stats.as_dict(), out)
    return EX_OK


def _cmd_bench(args, out, err) -> int:
    try:
        entries = load_corpus(args.directory)
    except CorpusError as exc:
        raise _DataError(str(exc)) from exc
    rows = bench_corpus(entries, args.depth)
    if args.format == "csv":
        out.write(rows_to_csv(rows))
    else:
        _print_json(
            [
                {
                    "name": r.name,
                    "variant": r.variant,
                    "depth": r.depth,
                    "beta": r.beta,
                    "gbeta": r.gbeta,
                    "unfold": r.unfold,
                    "saved_per_iter": _fraction_str(r.saved_per_iter),
                }
                for r in rows
            ],
            out,
        )
    return EX_OK


def _cmd_check_equiv(args, out, err) -> int:
    t1 = _read_term(args.file1)
    t2 = _read_term(args.file2)
    verdict = check_op_eq(t1, t2, args.depth, args.fuel)
    payload = {
        "tree": {
            "kind": verdict.kind,
            "depth": verdict.depth,
            "witness": list(verdict.witness) if verdict.witness is not None else None,
            "reason": verdict.reason,
        }
    }
    outcome = verdict
    if args.experiments > 0:
        exp = applicative_experiments(t1, t2, args.experiments, args.seed, args.fuel)
        payload["experiments"] = {
            "kind": exp.kind,
            "rounds": exp.depth,
            "reason": exp.reason,
        }
        if exp.is_distinct:
            outcome = exp
    _print_json(payload, out)
    if outcome.is_distinct:
        return EX_DISTINCT
    if outcome.kind == "inconclusive":
        return EX_INCONCLUSIVE
    return EX_OK


def _cmd_dot(args, out, err) -> int:
    _, graph = _analysis(args.file, args.sig)
    print(to_dot(graph), file=out)
    return EX_OK


_COMMANDS = {
    "parse": _cmd_parse,
    "analyze": _cmd_analyze,
    "optimize": _cmd_optimize,
    "reduce": _cmd_reduce,
    "bench": _cmd_bench,
    "check-equiv": _cmd_check_equiv,
    "dot": _cmd_dot,
}


def main(argv=None, out=None, err=None) -> int:
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"letrecopt: {exc}", file=err)
        return EX_USAGE
    try:
        return _COMMANDS[args.command](args, out, err)
    except _DataError as exc:
        print(f"letrecopt: {exc}", file=err)
        return EX_DATA
    except Exception as exc:  # pragma: no cover - defensive
        print(f"letrecopt: internal error: {exc}", file=err)
        return EX_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
