"""Command-line interface: every module surface as one subcommand.

Subcommands::

    aoci check <index> [--files <list>] [--strict] [--report <file>]
    aoci fmt <index> [--verify]
    aoci scaffold <root> --rules <file> [--out <index>] [--prompts <dir>]
    aoci update <index> --changes <file|-> [--drafts <dir>]
                [--detect --store <file>]
    aoci ablate <index> --variant <name> [--tables]
    aoci stats <index> [--loc <n>] [--records <file>]
    aoci score where|what --pred <file> --truth <file>
    aoci decode-tag <tag> --index <file>

``-`` means the standard streams wherever a file is read or written. Output
is quiet on success so the tool sits well in CI. The ``AOCI_ESTIMATOR``
environment variable selects the default token estimator (``chars4`` or
``words13``).

Exit codes: 0 success, 1 validation errors present, 2 usage or configuration
error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
from enum import IntEnum
from pathlib import Path

from . import incremental, scaffold
from .ablation import AblationVariant, apply_ablation
from .errors import AociError, ConfigError, TagError
from .grammar import (
    ParseError,
    decode_tag,
    parse_code_entry_line,
    parse_index,
    parse_index_report,
    serialize_index,
)
from .metrics import TokenEstimator, index_stats, score_what, score_where, stats_records, stats_table
from .model import Index
from .validator import (
    Severity,
    check_coverage,
    has_errors,
    issues_records,
    issues_text,
    validate_index,
)

ESTIMATOR_ENV = "AOCI_ESTIMATOR"

#: Pseudo-variant: prose rewriting needs a model, so this emits a prompt
#: pack asking an external one to do it instead of a reduced index.
NL_REWRITE_VARIANT = "NL-rewrite"

NL_REWRITE_INSTRUCTIONS = """\
Rewrite the index above into coherent natural-language paragraphs.
- Preserve every identifier verbatim: file paths, table names, field names,
  API names, and technical terms.
- Cover every entry; do not drop or merge files.
- Replace the tag and element structure with flowing prose; keep the
  per-project dictionary information as an introductory paragraph.
Return only the rewritten text."""


class ExitCode(IntEnum):
    OK = 0
    VALIDATION = 1
    USAGE = 2
    IO = 3


def run(argv: list[str] | None = None) -> int:
    """Entry point; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else ExitCode.USAGE
        return int(code)
    try:
        return int(args.handler(args))
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ExitCode.VALIDATION
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ExitCode.USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ExitCode.IO
    except AociError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ExitCode.VALIDATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aoci", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse and validate an index")
    p.add_argument("index")
    p.add_argument("--files", help="newline-delimited file list for coverage ('-' for stdin)")
    p.add_argument("--strict", action="store_true", help="abort at the first parse error")
    p.add_argument("--report", help="write machine-readable issue records (JSON) here")
    p.set_defaults(handler=_cmd_check)

    p = sub.add_parser("fmt", help="canonical reserialization")
    p.add_argument("index")
    p.add_argument("--verify", action="store_true", help="compare bytes instead of printing")
    p.set_defaults(handler=_cmd_fmt)

    p = sub.add_parser("scaffold", help="draft an index from a repository")
    p.add_argument("root")
    p.add_argument("--rules", required=True)
    p.add_argument("--out", help="write the draft index here (default stdout)")
    p.add_argument("--prompts", help="write one prompt pack per entry into this directory")
    p.set_defaults(handler=_cmd_scaffold)

    p = sub.add_parser("update", help="apply a change set to an index")
    p.add_argument("index")
    p.add_argument("--changes", help="change listing file ('-' for stdin)")
    p.add_argument("--drafts", help="directory of *.entry.txt replacement lines")
    p.add_argument("--detect", action="store_true", help="synthesize changes from the store")
    p.add_argument("--store", help="staleness store file (required with --detect)")
    p.set_defaults(handler=_cmd_update)

    p = sub.add_parser("ablate", help="emit a reduced index variant")
    p.add_argument("index")
    p.add_argument(
        "--variant",
        required=True,
        choices=[variant.value for variant in AblationVariant] + [NL_REWRITE_VARIANT],
    )
    p.add_argument("--tables", action="store_true", help="also strip table tags (wo-ABCDE)")
    p.set_defaults(handler=_cmd_ablate)

    p = sub.add_parser("stats", help="index statistics")
    p.add_argument("index")
    p.add_argument("--loc", type=int, help="repository LOC for the compression ratio")
    p.add_argument("--records", help="write machine-readable stats (JSON) here")
    p.set_defaults(handler=_cmd_stats)

    p = sub.add_parser("score", help="deterministic answer scoring")
    p.add_argument("kind", choices=["where", "what"])
    p.add_argument("--pred", required=True, help="predictions file ('-' for stdin)")
    p.add_argument("--truth", required=True)
    p.set_defaults(handler=_cmd_score)

    p = sub.add_parser("decode-tag", help="decode a tag under an index's dictionary")
    p.add_argument("tag")
    p.add_argument("--index", required=True)
    p.set_defaults(handler=_cmd_decode_tag)

    return parser


def _estimator() -> TokenEstimator:
    name = os.environ.get(ESTIMATOR_ENV)
    if not name:
        return TokenEstimator.CHARS4
    try:
        return TokenEstimator(name.lower())
    except ValueError:
        raise ConfigError(
            f"{ESTIMATOR_ENV} must be one of "
            + ", ".join(est.value for est in TokenEstimator)
            + f"; got {name!r}"
        ) from None


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _read_bytes(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    return Path(path).read_bytes()


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _load_index(path: str) -> Index:
    return parse_index(_read_bytes(path))


@contextlib.contextmanager
def _index_lock(path: str):
    """Advisory lock against concurrent writers of the same index file."""
    if path == "-":
        yield
        return
    import fcntl

    with open(path, "rb") as handle:
        try:
            fcntl.flock(handle, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError as exc:
            raise OSError(f"index {path} is locked by another process") from exc
        try:
            yield
        finally:
            fcntl.flock(handle, fcntl.LOCK_UN)


def _cmd_check(args: argparse.Namespace) -> ExitCode:
    data = _read_bytes(args.index)
    if args.strict:
        index = parse_index(data)  # ParseError propagates as exit 1
        parse_errors = []
    else:
        report = parse_index_report(data)
        parse_errors = report.errors
        for error in parse_errors:
            print(f"error parse {args.index}: {error}", file=sys.stderr)
        index = report.index
    issues = validate_index(index, _estimator()) if index is not None else []
    if issues:
        print(issues_text(issues))
    if args.report:
        records = [
            {"severity": "error", "rule": "parse", "subject": args.index, "message": str(err)}
            for err in parse_errors
        ] + issues_records(issues)
        _write_text(args.report, json.dumps(records, indent=2) + "\n")
    if args.files and index is not None:
        file_list = [line for line in _read_text(args.files).splitlines() if line.strip()]
        coverage = check_coverage(index, file_list)
        print(
            f"coverage: {coverage.indexed_files}/{coverage.eligible_files} eligible files indexed"
        )
        for path in coverage.unindexed:
            print(f"unindexed: {path}")
        for path in coverage.orphan_entries:
            print(f"orphan entry: {path}")
    if parse_errors or has_errors(issues):
        return ExitCode.VALIDATION
    return ExitCode.OK


def _cmd_fmt(args: argparse.Namespace) -> ExitCode:
    data = _read_bytes(args.index)
    canonical = serialize_index(parse_index(data))
    if args.verify:
        if canonical.encode("utf-8") != data:
            print(f"{args.index}: not in canonical form", file=sys.stderr)
            return ExitCode.VALIDATION
        return ExitCode.OK
    sys.stdout.write(canonical)
    return ExitCode.OK


def _cmd_scaffold(args: argparse.Namespace) -> ExitCode:
    rules = scaffold.parse_rules_file(_read_text(args.rules))
    result = scaffold.scaffold_repo(args.root, rules)
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    _write_text(args.out or "-", serialize_index(result.index))
    if args.prompts:
        packs = scaffold.emit_prompt_pack(
            result.index, result.drafts, scaffold.file_source_loader(args.root)
        )
        out_dir = Path(args.prompts)
        out_dir.mkdir(parents=True, exist_ok=True)
        for pack in packs.packs:
            (out_dir / pack.filename).write_text(pack.text, encoding="utf-8")
        for path in packs.skipped:
            print(f"warning: skipped prompt pack for missing source {path}", file=sys.stderr)
    return ExitCode.OK


def _cmd_update(args: argparse.Namespace) -> ExitCode:
    if args.detect and not args.store:
        raise ConfigError("--detect requires --store")
    if args.detect and args.changes:
        raise ConfigError("pick one change source: --changes or --detect")
    if not args.detect and not args.changes:
        raise ConfigError("update needs --changes, or --detect with --store")

    index = _load_index(args.index)
    store = None
    file_digests: dict[str, str] = {}
    if args.store:
        store_path = Path(args.store)
        store = (
            incremental.StalenessStore.load(store_path.read_text(encoding="utf-8"))
            if store_path.exists()
            else incremental.StalenessStore()
        )
    if args.detect:
        assert store is not None
        digests = incremental.collect_file_digests(os.getcwd())
        file_digests = dict(digests)
        changes = incremental.detect_stale(store, digests, index)
    else:
        changes = incremental.parse_changeset(_read_text(args.changes))
        if store is not None:
            # Digest the touched files so the store records their current
            # content; files that are gone simply stay undigested.
            for record in changes.records:
                for path in (record.path, record.new_path):
                    if path and os.path.isfile(path):
                        with open(path, "rb") as handle:
                            file_digests[path] = incremental.content_digest(handle.read())

    drafts: dict[str, object] = {}
    if args.drafts:
        for entry_file in sorted(Path(args.drafts).glob("*.entry.txt")):
            line = entry_file.read_text(encoding="utf-8").strip()
            if not line:
                continue
            entry = parse_code_entry_line(line, index.header.dictionary)
            drafts[entry.path] = entry

    plan = incremental.plan_update(index, changes)
    for warning in plan.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    with _index_lock(args.index):
        updated = incremental.apply_update(index, plan, drafts, store)
        _write_text(args.index, serialize_index(updated))
    pending = [path for path in plan.regenerate if path not in drafts]
    for path in pending:
        print(f"pending regeneration (no draft supplied): {path}", file=sys.stderr)
    for host, ref in plan.dangling_after:
        print(f"warning: dangling reference after update: {host} -> {ref}", file=sys.stderr)
    if store is not None:
        incremental.commit_plan(store, plan, updated, file_digests, drafts.keys())
        Path(args.store).write_text(store.dump(), encoding="utf-8")
    return ExitCode.OK


def _cmd_ablate(args: argparse.Namespace) -> ExitCode:
    index = _load_index(args.index)
    if args.variant == NL_REWRITE_VARIANT:
        sys.stdout.write(
            "INDEX\n"
            + serialize_index(index)
            + "\nINSTRUCTIONS\n"
            + NL_REWRITE_INSTRUCTIONS
            + "\n"
        )
        return ExitCode.OK
    variant = AblationVariant.from_cli_name(args.variant)
    sys.stdout.write(serialize_index(apply_ablation(index, variant, args.tables)))
    return ExitCode.OK


def _cmd_stats(args: argparse.Namespace) -> ExitCode:
    stats = index_stats(_load_index(args.index), args.loc, _estimator())
    print(stats_table(stats))
    if args.records:
        _write_text(args.records, json.dumps(stats_records(stats), indent=2) + "\n")
    return ExitCode.OK


def _cmd_score(args: argparse.Namespace) -> ExitCode:
    pred_lines = [line.strip() for line in _read_text(args.pred).splitlines() if line.strip()]
    truth_lines = [line.strip() for line in _read_text(args.truth).splitlines() if line.strip()]
    if args.kind == "where":
        if len(pred_lines) != len(truth_lines):
            raise ConfigError(
                f"where scoring pairs lines up: {len(pred_lines)} predictions "
                f"vs {len(truth_lines)} truths"
            )
        if not truth_lines:
            raise ConfigError("where scoring needs at least one path pair")
        scores = [score_where(p, t) for p, t in zip(pred_lines, truth_lines)]
        print(f"{sum(scores) / len(scores):.4f}")
    else:
        print(f"{score_what(pred_lines, truth_lines):.4f}")
    return ExitCode.OK


def _cmd_decode_tag(args: argparse.Namespace) -> ExitCode:
    index = _load_index(args.index)
    dictionary = index.header.dictionary
    try:
        decoded = decode_tag(args.tag, dictionary)
    except TagError as exc:
        print(f"error: tag {args.tag!r}: {exc}", file=sys.stderr)
        return ExitCode.VALIDATION
    lines = [
        f"layer: {decoded.layer}={dictionary.dim_a[decoded.layer]}",
        f"module: {decoded.module}={dictionary.dim_b[decoded.module]}",
        f"importance: {decoded.importance}",
    ]
    if decoded.features:
        feats = ",".join(f"{code}={dictionary.dim_d[code]}" for code in decoded.features)
        lines.append(f"features: {feats}")
    else:
        lines.append("features: -")
    if decoded.scale is not None:
        lines.append(f"scale: {decoded.scale}={dictionary.dim_e[decoded.scale]}")
    else:
        lines.append("scale: -")
    print("\n".join(lines))
    return ExitCode.OK
