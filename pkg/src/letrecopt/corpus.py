"""Corpus loading and the step-counting benchmark harness."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path as FsPath

from .infer import BareType, parse_signature
from .reduction import DEFAULT_FUEL, count_steps_to_depth
from .terms import Term, Var, make_app, parse

__all__ = [
    "CorpusError",
    "CorpusEntry",
    "load_corpus",
    "bench_term",
    "BenchRow",
    "bench_corpus",
    "rows_to_csv",
    "CSV_HEADER",
]


class CorpusError(ValueError):
    """A corpus file failed to load; the message names the file."""


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    term: Term
    optimized: Term | None
    sig: dict[str, BareType] | None


def _read_term(path: FsPath) -> Term:
    try:
        return parse(path.read_text())
    except (OSError, ValueError) as exc:
        raise CorpusError(f"{path.name}: {exc}") from exc


def load_corpus(directory: str | FsPath) -> list[CorpusEntry]:
    """Load every .ll file, pairing X_opt with X and resolving signatures.

    A term's signature is X.sig when present, otherwise the directory's
    default.sig, otherwise none.
    """
    directory = FsPath(directory)
    if not directory.is_dir():
        raise CorpusError(f"{directory}: not a directory")
    files = {p.stem: p for p in sorted(directory.glob("*.ll"))}
    default_sig = None
    default_path = directory / "default.sig"
    if default_path.exists():
        try:
            default_sig = parse_signature(default_path.read_text())
        except ValueError as exc:
            raise CorpusError(f"{default_path.name}: {exc}") from exc
    entries = []
    for stem, path in sorted(files.items()):
        if stem.endswith("_opt"):
            base = stem[: -len("_opt")]
            if base not in files:
                raise CorpusError(f"{path.name}: no base term {base}.ll to pair with")
            continue
        term = _read_term(path)
        opt_path = files.get(stem + "_opt")
        optimized = _read_term(opt_path) if opt_path else None
        sig_path = directory / f"{stem}.sig"
        if sig_path.exists():
            try:
                sig = parse_signature(sig_path.read_text())
            except ValueError as exc:
                raise CorpusError(f"{sig_path.name}: {exc}") from exc
        else:
            sig = default_sig
        entries.append(CorpusEntry(stem, term, optimized, sig))
    return entries


# ---------------------------------------------------------------------------
# Benchmark harness

def _chain(prefix: str, length: int) -> Term:
    out: Term = Var("nil")
    for i in range(length, 0, -1):
        out = make_app(Var("cons"), [Var(f"{prefix}{i}"), out])
    return out


LIST_LENGTH = 10

# Arguments each corpus function is applied to for benchmarking: stream
# producers get free constants, list consumers get constructor chains of
# length 10 built from free names.
_BENCH_ARGS: dict[str, list[Term]] = {
    "repeat": [Var("c")],
    "replicate": [Var("k0"), Var("c")],
    "map": [Var("g0"), _chain("a", LIST_LENGTH)],
    "append": [_chain("a", LIST_LENGTH), _chain("b", LIST_LENGTH)],
    "until": [Var("p0"), Var("g0"), _chain("u", LIST_LENGTH), Var("c")],
    "mutual": [],
    "fx_fy": [Var("c"), Var("d")],
    "intricate": [Var("c"), Var("d")],
}


def bench_term(name: str, term: Term) -> Term:
    """The applied form of a corpus term, per the conventions above."""
    return make_app(term, _BENCH_ARGS.get(name, []))


@dataclass(frozen=True)
class BenchRow:
    name: str
    variant: str  # "original" | "optimized"
    depth: int
    beta: int
    gbeta: int
    unfold: int
    saved_per_iter: Fraction


def _fraction_str(f: Fraction) -> str:
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def bench_corpus(
    entries: list[CorpusEntry], depth: int, fuel: int = DEFAULT_FUEL
) -> list[BenchRow]:
    """One row per (term, variant): beta/gbeta/unfold counts at the depth.

    saved_per_iter is (beta_original - beta_optimized) / depth, reported
    on the optimized row; rows without a counterpart carry 0.
    """
    rows: list[BenchRow] = []
    for entry in sorted(entries, key=lambda e: e.name):
        orig = count_steps_to_depth(bench_term(entry.name, entry.term), depth, fuel)
        rows.append(
            BenchRow(
                entry.name,
                "original",
                depth,
                orig.beta_steps,
                orig.gbeta_steps,
                orig.unfold_steps,
                Fraction(0),
            )
        )
        if entry.optimized is not None:
            opt = count_steps_to_depth(
                bench_term(entry.name, entry.optimized), depth, fuel
            )
            rows.append(
                BenchRow(
                    entry.name,
                    "optimized",
                    depth,
                    opt.beta_steps,
                    opt.gbeta_steps,
                    opt.unfold_steps,
                    Fraction(orig.beta_steps - opt.beta_steps, depth),
                )
            )
    return rows


CSV_HEADER = "name,variant,depth,beta,gbeta,unfold,saved_per_iter"


def rows_to_csv(rows: list[BenchRow]) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            f"{r.name},{r.variant},{r.depth},{r.beta},{r.gbeta},{r.unfold},"
            f"{_fraction_str(r.saved_per_iter)}"
        )
    return "\n".join(lines) + "\n"
