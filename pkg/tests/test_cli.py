import io
import json
from pathlib import Path

import pytest

from letrecopt.cli import EX_DATA, EX_DISTINCT, EX_INCONCLUSIVE, EX_OK, EX_USAGE, main
from letrecopt.corpus import (
    CorpusError,
    bench_corpus,
    bench_term,
    load_corpus,
    rows_to_csv,
)
from letrecopt.equivalence import check_op_eq
from letrecopt.terms import alpha_eq, parse

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


# -- corpus ---------------------------------------------------------------------

def test_corpus_ships_expected_terms():
    entries = load_corpus(CORPUS)
    names = {e.name for e in entries}
    assert names == {
        "repeat",
        "replicate",
        "map",
        "append",
        "until",
        "mutual",
        "fx_fy",
        "intricate",
    }
    term_count = len(entries) + sum(1 for e in entries if e.optimized is not None)
    assert term_count >= 10


def test_corpus_pairs_by_naming_convention():
    entries = {e.name: e for e in load_corpus(CORPUS)}
    for name in ("repeat", "replicate", "map", "append", "until"):
        assert entries[name].optimized is not None
    for name in ("mutual", "fx_fy", "intricate"):
        assert entries[name].optimized is None


def test_corpus_pairs_equivalent_at_depth8():
    for e in load_corpus(CORPUS):
        if e.optimized is not None:
            assert check_op_eq(e.term, e.optimized, depth=8).is_equivalent, e.name


def test_corpus_signature_resolution():
    entries = {e.name: e for e in load_corpus(CORPUS)}
    assert entries["repeat"].sig is not None
    assert "cons" in entries["repeat"].sig


def test_corpus_malformed_file_names_the_file(tmp_path):
    (tmp_path / "bad.ll").write_text("letrec f = in f")
    with pytest.raises(CorpusError, match="bad.ll"):
        load_corpus(tmp_path)


def test_corpus_orphan_opt_rejected(tmp_path):
    (tmp_path / "x_opt.ll").write_text("\\x. x")
    with pytest.raises(CorpusError, match="no base term"):
        load_corpus(tmp_path)


def test_corpus_missing_directory():
    with pytest.raises(CorpusError, match="not a directory"):
        load_corpus(CORPUS / "nonexistent")


def test_bench_rows_deterministic_and_complete():
    entries = load_corpus(CORPUS)
    rows1 = bench_corpus(entries, depth=10)
    rows2 = bench_corpus(entries, depth=10)
    assert rows1 == rows2
    assert rows_to_csv(rows1) == rows_to_csv(rows2)
    assert len(rows1) == 13  # 8 originals + 5 optimized


def test_bench_term_applies_declared_arguments():
    entries = {e.name: e for e in load_corpus(CORPUS)}
    applied = bench_term("repeat", entries["repeat"].term)
    assert applied != entries["repeat"].term  # one constant argument
    assert bench_term("mutual", entries["mutual"].term) == entries["mutual"].term


# -- CLI ------------------------------------------------------------------------

def test_cli_parse_roundtrip():
    code, out, err = run("parse", str(CORPUS / "repeat.ll"))
    assert code == EX_OK
    assert alpha_eq(parse(out), parse((CORPUS / "repeat.ll").read_text()))


def test_cli_parse_missing_file_is_data_error():
    code, out, err = run("parse", "nosuchfile.ll")
    assert code == EX_DATA
    assert "nosuchfile.ll" in err


def test_cli_parse_syntax_error_is_data_error(tmp_path):
    bad = tmp_path / "bad.ll"
    bad.write_text("letrec f = \\x. f x; f = \\y. y in f")
    code, out, err = run("parse", str(bad))
    assert code == EX_DATA
    assert "duplicate" in err


def test_cli_usage_errors():
    code, _, err = run("no-such-command")
    assert code == EX_USAGE
    code, _, _ = run("analyze")  # missing file argument
    assert code == EX_USAGE


def test_cli_analyze_repeat_schema():
    code, out, err = run("analyze", str(CORPUS / "repeat.ll"))
    assert code == EX_OK
    assert out.endswith("\n")
    payload = json.loads(out)
    assert payload["edges"] == [
        {"var": "x", "arg": "BLACKHOLE"},
        {"var": "x", "arg": "x"},
    ]
    assert payload["cycles"] == [["x"]]


def test_cli_analyze_dominators_flag():
    code, out, _ = run("analyze", str(CORPUS / "mutual.ll"), "--dominators")
    assert code == EX_OK
    payload = json.loads(out)
    assert ["a", "x"] in payload["strong_dominators"]
    assert ["a", "y"] in payload["strong_dominators"]


def test_cli_optimize_repeat_golden():
    code, out, err = run("optimize", str(CORPUS / "repeat.ll"))
    assert code == EX_OK
    assert alpha_eq(parse(out), parse((CORPUS / "repeat_opt.ll").read_text()))
    assert "applied" in err


def test_cli_optimize_json_report():
    code, out, _ = run("optimize", str(CORPUS / "mutual.ll"), "--report", "json")
    assert code == EX_OK
    payload = json.loads(out)
    assert payload["report"]["binders_eliminated"] == ["x", "y"]
    assert payload["report"]["verification_failure"] is None


def test_cli_reduce_whnf_stats():
    code, out, _ = run("reduce", str(CORPUS / "repeat.ll"), "--fuel", "50")
    assert code == EX_OK
    stats = json.loads(out)
    assert set(stats) == {"beta", "gbeta", "unfold", "fuel_used", "exhausted"}


def test_cli_reduce_depth_stats():
    code, out, _ = run("reduce", str(CORPUS / "repeat.ll"), "--depth", "5")
    assert code == EX_OK
    # unapplied stream: the root node only strips the prefix, each of the
    # four deeper levels rebinds the parameter once
    assert json.loads(out)["beta"] == 4


def test_cli_bench_csv_stable():
    code1, out1, _ = run("bench", str(CORPUS), "--depth", "10")
    code2, out2, _ = run("bench", str(CORPUS), "--depth", "10")
    assert code1 == code2 == EX_OK
    assert out1 == out2
    header, *rows = out1.strip().split("\n")
    assert header == "name,variant,depth,beta,gbeta,unfold,saved_per_iter"
    assert len(rows) == 13


def test_cli_bench_json():
    code, out, _ = run("bench", str(CORPUS), "--format", "json", "--depth", "6")
    assert code == EX_OK
    rows = json.loads(out)
    assert {r["name"] for r in rows} >= {"repeat", "mutual"}


def test_cli_check_equiv_exit_codes(tmp_path):
    code, _, _ = run(
        "check-equiv", str(CORPUS / "repeat.ll"), str(CORPUS / "repeat_opt.ll")
    )
    assert code == EX_OK
    distinct = tmp_path / "other.ll"
    distinct.write_text("\\x. \\y. x")
    code, _, _ = run("check-equiv", str(CORPUS / "repeat.ll"), str(distinct))
    assert code == EX_DISTINCT
    omega = tmp_path / "omega.ll"
    omega.write_text("letrec w = w in w")
    code, _, _ = run("check-equiv", str(omega), str(omega), "--fuel", "60")
    assert code == EX_INCONCLUSIVE


def test_cli_check_equiv_with_experiments():
    code, out, _ = run(
        "check-equiv",
        str(CORPUS / "repeat.ll"),
        str(CORPUS / "repeat_opt.ll"),
        "--experiments",
        "4",
        "--seed",
        "42",
    )
    assert code == EX_OK
    payload = json.loads(out)
    assert payload["experiments"]["kind"] != "distinct"


def test_cli_dot_output():
    code, out, _ = run("dot", str(CORPUS / "repeat.ll"))
    assert code == EX_OK
    assert out.startswith("digraph binding {")
    assert '"v_x" -> "v_x";' in out


def test_cli_untypable_is_data_error(tmp_path):
    f = tmp_path / "selfapp.ll"
    f.write_text("\\x. x x")
    code, _, err = run("analyze", str(f))
    assert code == EX_DATA
    assert "untypable" in err


def test_every_cli_path_runs_on_shipped_corpus():
    for sub in ("parse", "analyze", "dot"):
        for f in sorted(CORPUS.glob("*.ll")):
            code, _, err = run(sub, str(f))
            assert code == EX_OK, (sub, f.name, err)
