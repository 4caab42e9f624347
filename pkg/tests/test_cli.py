"""End-to-end CLI behavior: exit codes, streams, determinism."""

from __future__ import annotations

import json

import pytest

from conftest import FIXTURES
from aoci.cli import run
from aoci.grammar import parse_index

GOLDEN = FIXTURES / "listing1.aoci"


@pytest.fixture
def golden_copy(tmp_path):
    target = tmp_path / "listing1.aoci"
    target.write_bytes(GOLDEN.read_bytes())
    return target


def test_check_clean_fixture_quiet(capsys):
    assert run(["check", str(GOLDEN)]) == 0
    captured = capsys.readouterr()
    assert captured.out == ""
    assert captured.err == ""


def test_check_reports_errors_and_exits_1(tmp_path, capsys):
    broken = GOLDEN.read_text(encoding="utf-8").replace("R:model/org", "R:missing/ref")
    target = tmp_path / "bad.aoci"
    target.write_text(broken, encoding="utf-8")
    assert run(["check", str(target)]) == 1
    out = capsys.readouterr().out
    assert "error E2 org_repo.go" in out


def test_check_warnings_do_not_fail(tmp_path, capsys):
    noisy = GOLDEN.read_text(encoding="utf-8").replace(
        "S:DB/Redis/JWT/encryption keys/rate limiting/LLM proxy/CORS", "S:tiny"
    )
    target = tmp_path / "warn.aoci"
    target.write_text(noisy, encoding="utf-8")
    assert run(["check", str(target)]) == 0
    assert "warning W1 config.yaml" in capsys.readouterr().out


def test_check_parse_error_lenient_vs_strict(tmp_path, capsys):
    broken = GOLDEN.read_text(encoding="utf-8").replace("auth.go[WA9JM]", "auth.go[ZZ0]")
    target = tmp_path / "broken.aoci"
    target.write_text(broken, encoding="utf-8")
    assert run(["check", str(target)]) == 1
    err = capsys.readouterr().err
    assert "error parse" in err
    assert run(["check", "--strict", str(target)]) == 1


def test_check_coverage_output(tmp_path, capsys):
    files = tmp_path / "files.txt"
    files.write_text("auth.go\nconfig.yaml\nextra.go\n", encoding="utf-8")
    # Coverage gaps are informational; exit stays governed by Error issues.
    code = run(["check", str(GOLDEN), "--files", str(files)])
    out = capsys.readouterr().out
    assert code == 0
    assert "coverage: 2/3 eligible files indexed" in out
    assert "unindexed: extra.go" in out
    assert "orphan entry: model/org/org.go" in out


def test_check_report_records(tmp_path):
    broken = GOLDEN.read_text(encoding="utf-8").replace("R:model/org", "R:missing/ref")
    target = tmp_path / "bad.aoci"
    target.write_text(broken, encoding="utf-8")
    report = tmp_path / "report.json"
    run(["check", str(target), "--report", str(report)])
    records = json.loads(report.read_text(encoding="utf-8"))
    assert any(rec["rule"] == "E2" for rec in records)


def test_fmt_outputs_canonical(capsys):
    assert run(["fmt", str(GOLDEN)]) == 0
    assert capsys.readouterr().out == GOLDEN.read_text(encoding="utf-8")


def test_fmt_idempotent(tmp_path, capsys):
    messy = GOLDEN.read_text(encoding="utf-8").replace(" | ", "  |  ")
    source = tmp_path / "messy.aoci"
    source.write_text(messy, encoding="utf-8")
    run(["fmt", str(source)])
    first = capsys.readouterr().out
    again = tmp_path / "first.aoci"
    again.write_text(first, encoding="utf-8")
    run(["fmt", str(again)])
    assert capsys.readouterr().out == first


def test_fmt_verify(tmp_path, capsys):
    assert run(["fmt", "--verify", str(GOLDEN)]) == 0
    messy = GOLDEN.read_text(encoding="utf-8").replace(" | ", "  |  ")
    target = tmp_path / "messy.aoci"
    target.write_text(messy, encoding="utf-8")
    assert run(["fmt", "--verify", str(target)]) == 1
    assert "not in canonical form" in capsys.readouterr().err


def test_ablate_variant_to_stdout(capsys):
    assert run(["ablate", str(GOLDEN), "--variant", "wo-FRAS"]) == 0
    out = capsys.readouterr().out
    assert "auth.go[WA9JM]: F:- | R:- | A:- | S:-" in out
    parse_index(out)


def test_ablate_rejects_unknown_variant(capsys):
    assert run(["ablate", str(GOLDEN), "--variant", "wo-X"]) == 2


def test_ablate_nl_rewrite_emits_prompt_not_index(capsys):
    assert run(["ablate", str(GOLDEN), "--variant", "NL-rewrite"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("INDEX\n#AOCI 1\n")
    assert "INSTRUCTIONS" in out
    assert "Preserve every identifier verbatim" in out


def test_stats_table_and_records(tmp_path, capsys):
    records_path = tmp_path / "stats.json"
    assert run(["stats", str(GOLDEN), "--loc", "1000", "--records", str(records_path)]) == 0
    out = capsys.readouterr().out
    assert "code entries" in out
    assert "tokens per LOC" in out
    data = json.loads(records_path.read_text(encoding="utf-8"))
    assert data["total_code_entries"] == 7


def test_stats_estimator_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("AOCI_ESTIMATOR", "words13")
    assert run(["stats", str(GOLDEN)]) == 0
    capsys.readouterr()
    monkeypatch.setenv("AOCI_ESTIMATOR", "bogus")
    assert run(["stats", str(GOLDEN)]) == 2


def test_score_where_cli(tmp_path, capsys):
    pred = tmp_path / "pred.txt"
    truth = tmp_path / "truth.txt"
    pred.write_text("./src/auth.go\nsrc/db.go\n", encoding="utf-8")
    truth.write_text("src/auth.go\nsrc/other.go\n", encoding="utf-8")
    assert run(["score", "where", "--pred", str(pred), "--truth", str(truth)]) == 0
    assert capsys.readouterr().out.strip() == "0.5000"


def test_score_where_count_mismatch(tmp_path, capsys):
    pred = tmp_path / "pred.txt"
    truth = tmp_path / "truth.txt"
    pred.write_text("a.go\n", encoding="utf-8")
    truth.write_text("a.go\nb.go\n", encoding="utf-8")
    assert run(["score", "where", "--pred", str(pred), "--truth", str(truth)]) == 2


def test_score_what_cli(tmp_path, capsys):
    pred = tmp_path / "pred.txt"
    truth = tmp_path / "truth.txt"
    pred.write_text("a\nb\n", encoding="utf-8")
    truth.write_text("b\nc\n", encoding="utf-8")
    assert run(["score", "what", "--pred", str(pred), "--truth", str(truth)]) == 0
    assert capsys.readouterr().out.strip() == "0.5000"


def test_decode_tag_cli(capsys):
    assert run(["decode-tag", "WA9JM", "--index", str(GOLDEN)]) == 0
    out = capsys.readouterr().out
    assert "layer: W=Middleware" in out
    assert "module: A=Auth" in out
    assert "importance: 9" in out
    assert "features: J=JWT" in out
    assert "scale: M=Medium" in out


def test_decode_tag_cli_bad_tag(capsys):
    assert run(["decode-tag", "NOPE", "--index", str(GOLDEN)]) == 1
    assert "error" in capsys.readouterr().err


def test_scaffold_cli(tmp_path, capsys):
    repo = tmp_path / "repo"
    (repo / "middleware").mkdir(parents=True)
    (repo / "middleware" / "auth.go").write_text(
        'package middleware\nimport "myapp/pkg/jwt"\n', encoding="utf-8"
    )
    (repo / "pkg" / "jwt").mkdir(parents=True)
    (repo / "pkg" / "jwt" / "jwt.go").write_text("package jwt\n", encoding="utf-8")
    rules = tmp_path / "rules.txt"
    rules.write_text(
        "[layer]\nmiddleware/* = W\npkg/* = S\n"
        "[module]\n*auth* = A\n* = C\n",
        encoding="utf-8",
    )
    out_index = tmp_path / "draft.aoci"
    prompts = tmp_path / "prompts"
    code = run(
        [
            "scaffold",
            str(repo),
            "--rules",
            str(rules),
            "--out",
            str(out_index),
            "--prompts",
            str(prompts),
        ]
    )
    assert code == 0
    parsed = parse_index(out_index.read_bytes())
    assert [e.path for e in parsed.code_entries] == ["middleware/auth.go", "pkg/jwt/jwt.go"]
    assert parsed.entry_map()["middleware/auth.go"].r == ("pkg/jwt",)
    pack_files = sorted(p.name for p in prompts.iterdir())
    assert pack_files == [
        "middleware__auth.go.prompt.txt",
        "pkg__jwt__jwt.go.prompt.txt",
    ]


def test_update_cli_with_changes_and_drafts(tmp_path, golden_copy, capsys):
    changes = tmp_path / "changes.txt"
    changes.write_text("M\tauth.go\nD\tmodel/org/org.go\n", encoding="utf-8")
    drafts = tmp_path / "drafts"
    drafts.mkdir()
    (drafts / "auth.go.entry.txt").write_text(
        "auth.go[WA9JM]: F:JWT authentication middleware | R:pkg/jwt,model/user | A:- | "
        "S:revised synopsis via the drafts directory passes length checks\n",
        encoding="utf-8",
    )
    code = run(["update", str(golden_copy), "--changes", str(changes), "--drafts", str(drafts)])
    assert code == 0
    err = capsys.readouterr().err
    # org_repo.go still references the deleted model, which the plan surfaces.
    assert "dangling reference after update: org_repo.go -> model/org" in err
    updated = parse_index(golden_copy.read_bytes())
    assert "model/org/org.go" not in updated.code_paths()
    assert updated.entry_map()["auth.go"].s.startswith("revised synopsis")


def test_update_cli_pending_without_draft(tmp_path, golden_copy, capsys):
    changes = tmp_path / "changes.txt"
    changes.write_text("M\tauth.go\n", encoding="utf-8")
    assert run(["update", str(golden_copy), "--changes", str(changes)]) == 0
    assert "pending regeneration" in capsys.readouterr().err
    assert parse_index(golden_copy.read_bytes()).entry_map()["auth.go"].s.startswith("extract")


def test_update_cli_usage_errors(golden_copy, tmp_path):
    assert run(["update", str(golden_copy)]) == 2
    assert run(["update", str(golden_copy), "--detect"]) == 2
    changes = tmp_path / "c.txt"
    changes.write_text("M\tauth.go\n", encoding="utf-8")
    code = run(
        [
            "update",
            str(golden_copy),
            "--changes",
            str(changes),
            "--detect",
            "--store",
            str(tmp_path / "s.tsv"),
        ]
    )
    assert code == 2


def test_update_cli_changes_from_stdin(tmp_path, golden_copy, monkeypatch, capsys):
    import io

    monkeypatch.setattr("sys.stdin", io.StringIO("D\tconfig.yaml\n"))
    assert run(["update", str(golden_copy), "--changes", "-"]) == 0
    updated = parse_index(golden_copy.read_bytes())
    assert "config.yaml" not in updated.code_paths()


def test_update_cli_detect_cycle(tmp_path, monkeypatch, capsys):
    repo = tmp_path / "repo"
    repo.mkdir()
    monkeypatch.chdir(repo)
    (repo / "middleware").mkdir()
    (repo / "middleware" / "auth.go").write_text("package middleware\n", encoding="utf-8")
    index_path = tmp_path / "idx.aoci"
    index_path.write_text(
        "#AOCI 1\n#DIM A W=Middleware\n#DIM B A=Auth\n#DIM C 9,8,7,5,3,1\n"
        "#DIM E M=Medium\n@CODE\n"
        "middleware/auth.go[WA9M]: F:auth | R:- | A:- | S:text\n",
        encoding="utf-8",
    )
    store = tmp_path / "store.tsv"

    # First run seeds the store; the file is unknown to it, so it reports
    # the entry as pending (no draft supplied).
    assert run(["update", str(index_path), "--detect", "--store", str(store)]) == 0
    assert "pending regeneration" in capsys.readouterr().err
    assert store.exists()

    drafts = tmp_path / "drafts"
    drafts.mkdir()
    (drafts / "auth.entry.txt").write_text(
        "middleware/auth.go[WA9M]: F:auth middleware | R:- | A:- | S:filled in\n",
        encoding="utf-8",
    )
    assert run(
        ["update", str(index_path), "--detect", "--store", str(store), "--drafts", str(drafts)]
    ) == 0
    capsys.readouterr()

    # Stable tree plus a seeded store: the next detect run is a no-op.
    assert run(["update", str(index_path), "--detect", "--store", str(store)]) == 0
    assert "pending" not in capsys.readouterr().err
    updated = parse_index(index_path.read_bytes())
    assert updated.entry_map()["middleware/auth.go"].s == "filled in"


def test_update_cli_refuses_locked_index(tmp_path, golden_copy, capsys):
    import fcntl

    changes = tmp_path / "changes.txt"
    changes.write_text("D\tconfig.yaml\n", encoding="utf-8")
    with open(golden_copy, "rb") as holder:
        fcntl.flock(holder, fcntl.LOCK_EX)
        assert run(["update", str(golden_copy), "--changes", str(changes)]) == 3
    assert "locked" in capsys.readouterr().err


def test_usage_and_io_exit_codes(tmp_path, capsys):
    assert run(["bogus-subcommand"]) == 2
    assert run([]) == 2
    assert run(["check", str(tmp_path / "missing.aoci")]) == 3


def test_check_reads_stdin(monkeypatch, capsys):
    import io

    data = GOLDEN.read_bytes()
    monkeypatch.setattr("sys.stdin", io.TextIOWrapper(io.BytesIO(data), encoding="utf-8"))
    assert run(["check", "-"]) == 0
