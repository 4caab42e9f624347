"""Parser, canonical serializer, and tag codec for the AOCI index format.

The file format is UTF-8, line oriented:

* Header directives, one per line, before the first section marker::

      #AOCI <version>
      #PROJECT <text>
      #OVERVIEW <text>          (repeatable)
      #STACK <text>
      #DIM A <code>=<label>,<code>=<label>,...
      #DIM B ... / #DIM D ... / #DIM E ...
      #DIM C <digit>,<digit>,...
      #BUDGET <digit>:<min>-<max> [<digit>:<min>-<max> ...]
      #TDIM DOMAIN|TYPE|SCALE|FEAT <code>=<label>,...

* ``@CODE`` introduces code entries, one per line::

      path[TAG]: F:<role> | R:<ref>,<ref> | A:<api> | S:<synopsis>

  The bracketed tag is optional. ``-`` marks an empty element.

* ``@TABLES`` introduces table entries, one per line::

      name[DOMAIN-TYPE-SCALE-FEAT+FEAT]: <field descriptions>

Canonical output uses LF line endings, exactly one space around ``|``, no
spaces after commas in R, and a single trailing newline; ``serialize_index``
followed by ``parse_index`` is the identity on valid indexes. The parser is
tolerant of extra whitespace so that non-canonical files can be reformatted,
and in lenient mode collects located errors instead of stopping at the first.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .errors import (
    AociError,
    InvalidImportance,
    InvalidPath,
    InvariantError,
    MalformedTableTag,
    MalformedTag,
    TagError,
    UnknownCode,
)
from .model import (
    EMPTY_SENTINEL,
    IMPORTANCE_SCALE,
    CodeEntry,
    DecodedTag,
    Header,
    Index,
    TableEntry,
    TagDictionary,
)

_DIGITS = set("0123456789")

_ENTRY_RE = re.compile(r"^([^\[\]:]+?)(?:\[([^\[\]]*)\])?\s*:\s?(.*)$")

_ELEMENT_ORDER = ("F", "R", "A", "S")


class ParseErrorKind(Enum):
    ENCODING = "encoding"
    MALFORMED_HEADER = "malformed-header"
    UNKNOWN_DIRECTIVE = "unknown-directive"
    INVALID_DICTIONARY = "invalid-dictionary"
    MISPLACED_LINE = "misplaced-line"
    MALFORMED_ENTRY = "malformed-entry"
    TAG_DECODE = "tag-decode"
    DUPLICATE_PATH = "duplicate-path"
    DUPLICATE_NAME = "duplicate-name"
    MALFORMED_CHANGE = "malformed-change"


class ParseError(AociError):
    """A located syntax or consistency error in an input document."""

    def __init__(self, line_number: int, column: int, kind: ParseErrorKind, message: str):
        self.line_number = max(1, line_number)
        self.column = max(1, column)
        self.kind = kind
        self.message = message
        super().__init__(f"line {self.line_number}, column {self.column}: {message}")


@dataclass(frozen=True)
class SourceSpan:
    """Byte offsets of one entry's line within the source document."""

    subject: str
    start: int
    end: int

    def __post_init__(self):
        if self.start < 0 or self.start >= self.end:
            raise InvariantError(f"bad span for {self.subject}: {self.start}..{self.end}")


@dataclass
class ParseReport:
    """Outcome of a lenient parse: best-effort index plus every error found."""

    index: Index | None
    errors: list[ParseError] = field(default_factory=list)
    code_spans: dict[str, SourceSpan] = field(default_factory=dict)
    table_spans: dict[str, SourceSpan] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.index is not None and not self.errors


# ---------------------------------------------------------------------------
# Tag codec
# ---------------------------------------------------------------------------


def decode_tag(tag: str, dictionary: TagDictionary) -> DecodedTag:
    """Decompose a concatenated tag against ``dictionary``.

    The single importance digit anchors the split. The prefix is consumed as
    the longest-matching layer code plus a remainder that must be exactly one
    module code. The suffix is tried with the longest scale code anchored at
    its end and the middle parsed as a greedy left-to-right feature sequence;
    if that fails, one backtrack retries with no scale code at all.

    Raises:
        MalformedTag: zero or multiple digits.
        InvalidImportance: digit outside the dictionary's importance set.
        UnknownCode: prefix or suffix residue that matches no code.
    """
    if not tag:
        raise MalformedTag("empty tag")
    positions = [i for i, ch in enumerate(tag) if ch in _DIGITS]
    if len(positions) != 1:
        raise MalformedTag(
            f"tag {tag!r} must contain exactly one importance digit, found {len(positions)}"
        )
    pos = positions[0]
    importance = int(tag[pos])
    if importance not in dictionary.dim_c:
        raise InvalidImportance(
            f"importance {importance} is not in the dictionary's allowed levels"
        )
    prefix, suffix = tag[:pos], tag[pos + 1 :]

    layer = _longest_prefix(prefix, dictionary.dim_a)
    if layer is None:
        raise UnknownCode("A", prefix)
    module = prefix[len(layer) :]
    if module not in dictionary.dim_b:
        raise UnknownCode("B", module)

    features, scale = _split_suffix(suffix, dictionary)
    return DecodedTag(layer, module, importance, features, scale)


def encode_tag(decoded: DecodedTag) -> str:
    """Concatenate the dimensions back into a tag string."""
    return (
        decoded.layer
        + decoded.module
        + str(decoded.importance)
        + "".join(decoded.features)
        + (decoded.scale or "")
    )


def _longest_prefix(text: str, codes: dict[str, str]) -> str | None:
    best = None
    for code in codes:
        if text.startswith(code) and (best is None or len(code) > len(best)):
            best = code
    return best


def _longest_suffix(text: str, codes: dict[str, str]) -> str | None:
    best = None
    for code in codes:
        if text.endswith(code) and (best is None or len(code) > len(best)):
            best = code
    return best


def _greedy_codes(text: str, codes: dict[str, str]) -> list[str] | None:
    """Split ``text`` into a code sequence by repeated longest match."""
    out: list[str] = []
    rest = text
    while rest:
        code = _longest_prefix(rest, codes)
        if code is None:
            return None
        out.append(code)
        rest = rest[len(code) :]
    return out


def _split_suffix(suffix: str, dictionary: TagDictionary) -> tuple[tuple[str, ...], str | None]:
    scale = _longest_suffix(suffix, dictionary.dim_e)
    if scale is not None:
        middle = suffix[: len(suffix) - len(scale)]
        features = _greedy_codes(middle, dictionary.dim_d)
        if features is not None:
            return tuple(features), scale
    # Single backtrack: no scale code, the whole suffix is features.
    features = _greedy_codes(suffix, dictionary.dim_d)
    if features is None:
        stuck = _stuck_remainder(suffix, dictionary.dim_d)
        raise UnknownCode("D", stuck)
    return tuple(features), None


def _stuck_remainder(text: str, codes: dict[str, str]) -> str:
    rest = text
    while rest:
        code = _longest_prefix(rest, codes)
        if code is None:
            return rest
        rest = rest[len(code) :]
    return rest


def decode_table_tag(tag: str, dictionary: TagDictionary) -> tuple[str, str, str, tuple[str, ...]]:
    """Split a dash-separated table tag into (domain, type, scale, features).

    Raises:
        MalformedTableTag: not exactly four dash-separated parts.
        UnknownCode: a part that matches no code in its dimension.
    """
    parts = tag.split("-")
    if len(parts) != 4:
        raise MalformedTableTag(
            f"table tag {tag!r} must have four dash-separated parts, found {len(parts)}"
        )
    domain, ttype, scale, feat_part = parts
    if domain not in dictionary.table_domain:
        raise UnknownCode("DOMAIN", domain)
    if ttype not in dictionary.table_type:
        raise UnknownCode("TYPE", ttype)
    if scale not in dictionary.table_scale:
        raise UnknownCode("SCALE", scale)
    features: tuple[str, ...] = ()
    if feat_part:
        parsed = []
        for feat in feat_part.split("+"):
            if feat not in dictionary.table_feat:
                raise UnknownCode("FEAT", feat)
            parsed.append(feat)
        features = tuple(parsed)
    return domain, ttype, scale, features


def encode_table_tag(table: TableEntry) -> str:
    return "-".join((table.domain, table.ttype, table.scale, "+".join(table.features)))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def serialize_semantic_elements(entry: CodeEntry) -> str:
    """The ``F:... | R:... | A:... | S:...`` section of an entry line."""
    r_text = ",".join(entry.r) if entry.r else EMPTY_SENTINEL
    return " | ".join(
        (
            f"F:{entry.f or EMPTY_SENTINEL}",
            f"R:{r_text}",
            f"A:{entry.a or EMPTY_SENTINEL}",
            f"S:{entry.s or EMPTY_SENTINEL}",
        )
    )


def serialize_code_entry(entry: CodeEntry) -> str:
    head = entry.path if entry.tag is None else f"{entry.path}[{entry.tag}]"
    return f"{head}: {serialize_semantic_elements(entry)}"


def serialize_table_entry(table: TableEntry) -> str:
    head = f"{table.name}[{encode_table_tag(table)}]" if table.has_tag else table.name
    return f"{head}: {table.fields_text or EMPTY_SENTINEL}"


def serialize_header(header: Header) -> str:
    lines = [f"#AOCI {header.version}"]
    if header.project:
        lines.append(f"#PROJECT {header.project}")
    for line in header.overview:
        lines.append(f"#OVERVIEW {line}")
    if header.stack:
        lines.append(f"#STACK {header.stack}")
    d = header.dictionary
    for name, mapping in (("A", d.dim_a), ("B", d.dim_b)):
        if mapping:
            lines.append(_dim_line("#DIM", name, mapping))
    lines.append("#DIM C " + ",".join(str(v) for v in sorted(d.dim_c, reverse=True)))
    for name, mapping in (("D", d.dim_d), ("E", d.dim_e)):
        if mapping:
            lines.append(_dim_line("#DIM", name, mapping))
    if d.budgets:
        pairs = " ".join(
            f"{level}:{lo}-{hi}"
            for level, (lo, hi) in sorted(d.budgets.items(), reverse=True)
        )
        lines.append(f"#BUDGET {pairs}")
    for name, mapping in d.table_dimensions():
        if mapping:
            lines.append(_dim_line("#TDIM", name, mapping))
    return "\n".join(lines)


def _dim_line(directive: str, name: str, mapping: dict[str, str]) -> str:
    body = ",".join(f"{code}={label}" for code, label in mapping.items())
    return f"{directive} {name} {body}"


def serialize_index(index: Index) -> str:
    """Emit the canonical textual form of ``index``.

    ``parse_index(serialize_index(i))`` equals ``i``, and a serialize, parse,
    serialize cycle is byte-identical.
    """
    lines = [serialize_header(index.header), "@CODE"]
    lines.extend(serialize_code_entry(entry) for entry in index.code_entries)
    if index.table_entries:
        lines.append("@TABLES")
        lines.extend(serialize_table_entry(table) for table in index.table_entries)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def parse_index(text: str | bytes, *, lenient: bool = False) -> Index:
    """Parse an index document.

    In strict mode (default) the first error aborts the parse. With
    ``lenient=True`` malformed lines are skipped; use ``parse_index_report``
    to also retrieve the collected errors.

    Raises:
        ParseError: located description of the first (strict) or only fatal
            (lenient) failure.
    """
    report = _parse(text, stop_on_error=not lenient)
    if report.errors and not lenient:
        raise report.errors[0]
    if report.index is None:
        raise report.errors[0]
    return report.index


def parse_index_report(text: str | bytes) -> ParseReport:
    """Lenient parse returning the index, all errors, and entry spans."""
    return _parse(text, stop_on_error=False)


class _Aborted(Exception):
    """Internal: stop-on-first-error unwind."""


class _Parser:
    def __init__(self, stop_on_error: bool):
        self.stop_on_error = stop_on_error
        self.errors: list[ParseError] = []
        self.code_spans: dict[str, SourceSpan] = {}
        self.table_spans: dict[str, SourceSpan] = {}

    def fail(self, line_no: int, column: int, kind: ParseErrorKind, message: str):
        self.errors.append(ParseError(line_no, column, kind, message))
        if self.stop_on_error:
            raise _Aborted


def _decode_input(text: str | bytes, parser: _Parser) -> str:
    if isinstance(text, str):
        return text.removeprefix("﻿")
    try:
        return text.decode("utf-8").removeprefix("﻿")
    except UnicodeDecodeError as exc:
        prefix = text[: exc.start]
        line_no = prefix.count(b"\n") + 1
        column = exc.start - (prefix.rfind(b"\n") + 1) + 1
        parser.fail(
            line_no, column, ParseErrorKind.ENCODING, f"invalid UTF-8 at byte {exc.start}"
        )
        return text.decode("utf-8", errors="replace")


def _parse(text: str | bytes, stop_on_error: bool) -> ParseReport:
    parser = _Parser(stop_on_error)
    try:
        decoded = _decode_input(text, parser)
        index = _parse_document(decoded, parser)
    except _Aborted:
        index = None
    return ParseReport(index, parser.errors, parser.code_spans, parser.table_spans)


class _HeaderBuilder:
    """Accumulates directives, validating each with a located error."""

    def __init__(self):
        self.version: int | None = None
        self.project = ""
        self.overview: list[str] = []
        self.stack = ""
        self.dims: dict[str, dict[str, str]] = {"A": {}, "B": {}, "D": {}, "E": {}}
        self.dim_c: set[int] = set()
        self.tdims: dict[str, dict[str, str]] = {
            "DOMAIN": {},
            "TYPE": {},
            "SCALE": {},
            "FEAT": {},
        }
        self.budgets: dict[int, tuple[int, int]] = {}

    def build(self) -> Header:
        dictionary = TagDictionary(
            dim_a=self.dims["A"],
            dim_b=self.dims["B"],
            dim_c=frozenset(self.dim_c) if self.dim_c else frozenset(IMPORTANCE_SCALE),
            dim_d=self.dims["D"],
            dim_e=self.dims["E"],
            table_domain=self.tdims["DOMAIN"],
            table_type=self.tdims["TYPE"],
            table_scale=self.tdims["SCALE"],
            table_feat=self.tdims["FEAT"],
            budgets=self.budgets,
        )
        return Header(
            version=self.version if self.version is not None else 1,
            project=self.project,
            overview=tuple(self.overview),
            stack=self.stack,
            dictionary=dictionary,
        )


def _parse_document(text: str, parser: _Parser) -> Index | None:
    lines = text.split("\n")
    builder = _HeaderBuilder()
    header: Header | None = None
    entries: list[CodeEntry] = []
    tables: list[TableEntry] = []
    seen_paths: set[str] = set()
    seen_names: set[str] = set()
    section = "header"
    saw_marker = False
    byte_pos = 0

    for line_no, raw_line in enumerate(lines, start=1):
        line_start = byte_pos
        byte_pos += len(raw_line.encode("utf-8")) + 1
        line = raw_line.rstrip("\r").strip()
        if not line:
            continue

        if section == "header":
            if line == "@CODE" or line == "@TABLES":
                if builder.version is None:
                    parser.fail(
                        line_no,
                        1,
                        ParseErrorKind.MALFORMED_HEADER,
                        "missing #AOCI version directive before the first section",
                    )
                try:
                    header = builder.build()
                except InvariantError as exc:
                    parser.fail(line_no, 1, ParseErrorKind.INVALID_DICTIONARY, str(exc))
                    header = Header()
                section = "code" if line == "@CODE" else "tables"
                saw_marker = True
                continue
            if line.startswith("#"):
                _parse_directive(line, line_no, builder, parser)
                continue
            if line.startswith("@"):
                parser.fail(
                    line_no, 1, ParseErrorKind.UNKNOWN_DIRECTIVE, f"unknown section marker {line!r}"
                )
                continue
            parser.fail(
                line_no,
                1,
                ParseErrorKind.MISPLACED_LINE,
                "expected a header directive or section marker",
            )
            continue

        if line == "@TABLES" and section == "code":
            section = "tables"
            continue
        if line.startswith("@"):
            parser.fail(
                line_no, 1, ParseErrorKind.UNKNOWN_DIRECTIVE, f"unexpected section marker {line!r}"
            )
            continue

        assert header is not None
        if section == "code":
            entry = _parse_code_line(line, line_no, header.dictionary, parser)
            if entry is None:
                continue
            if entry.path in seen_paths:
                parser.fail(
                    line_no,
                    1,
                    ParseErrorKind.DUPLICATE_PATH,
                    f"duplicate code entry path {entry.path!r}",
                )
                continue
            seen_paths.add(entry.path)
            entries.append(entry)
            parser.code_spans[entry.path] = SourceSpan(
                entry.path, line_start, line_start + len(raw_line.encode("utf-8"))
            )
        else:
            table = _parse_table_line(line, line_no, header.dictionary, parser)
            if table is None:
                continue
            if table.name in seen_names:
                parser.fail(
                    line_no,
                    1,
                    ParseErrorKind.DUPLICATE_NAME,
                    f"duplicate table entry name {table.name!r}",
                )
                continue
            seen_names.add(table.name)
            tables.append(table)
            parser.table_spans[table.name] = SourceSpan(
                table.name, line_start, line_start + len(raw_line.encode("utf-8"))
            )

    if not saw_marker:
        parser.fail(
            len(lines), 1, ParseErrorKind.MALFORMED_HEADER, "document has no @CODE section"
        )
        return None
    if header is None:
        return None
    try:
        return Index(header, tuple(entries), tuple(tables))
    except InvariantError as exc:  # pragma: no cover - duplicates are caught above
        parser.fail(1, 1, ParseErrorKind.MALFORMED_ENTRY, str(exc))
        return None


def _parse_directive(line: str, line_no: int, builder: _HeaderBuilder, parser: _Parser) -> None:
    word, _, rest = line[1:].partition(" ")
    rest = rest.strip()
    fail = parser.fail

    if word == "AOCI":
        if builder.version is not None:
            fail(line_no, 1, ParseErrorKind.MALFORMED_HEADER, "duplicate #AOCI directive")
            return
        if not rest.isdigit() or int(rest) < 1:
            fail(
                line_no,
                1,
                ParseErrorKind.MALFORMED_HEADER,
                f"#AOCI needs an integer version >= 1, got {rest!r}",
            )
            return
        builder.version = int(rest)
    elif word == "PROJECT":
        if builder.project:
            fail(line_no, 1, ParseErrorKind.MALFORMED_HEADER, "duplicate #PROJECT directive")
            return
        builder.project = rest
    elif word == "OVERVIEW":
        if not rest:
            fail(line_no, 1, ParseErrorKind.MALFORMED_HEADER, "#OVERVIEW needs text")
            return
        builder.overview.append(rest)
    elif word == "STACK":
        if builder.stack:
            fail(line_no, 1, ParseErrorKind.MALFORMED_HEADER, "duplicate #STACK directive")
            return
        builder.stack = rest
    elif word == "DIM":
        _parse_dim(rest, line_no, builder, parser)
    elif word == "TDIM":
        name, _, body = rest.partition(" ")
        if name not in builder.tdims:
            fail(
                line_no,
                1,
                ParseErrorKind.MALFORMED_HEADER,
                f"#TDIM dimension must be DOMAIN, TYPE, SCALE or FEAT, got {name!r}",
            )
            return
        _parse_code_map(body.strip(), name, builder.tdims[name], line_no, parser)
    elif word == "BUDGET":
        _parse_budget(rest, line_no, builder, parser)
    else:
        fail(line_no, 1, ParseErrorKind.UNKNOWN_DIRECTIVE, f"unknown directive #{word}")


def _parse_dim(rest: str, line_no: int, builder: _HeaderBuilder, parser: _Parser) -> None:
    name, _, body = rest.partition(" ")
    body = body.strip()
    if name == "C":
        for part in body.split(","):
            part = part.strip()
            if not part.isdigit() or int(part) not in IMPORTANCE_SCALE:
                parser.fail(
                    line_no,
                    1,
                    ParseErrorKind.INVALID_DICTIONARY,
                    f"importance level {part!r} is not one of "
                    + "/".join(str(v) for v in IMPORTANCE_SCALE),
                )
                continue
            builder.dim_c.add(int(part))
        return
    if name not in builder.dims:
        parser.fail(
            line_no,
            1,
            ParseErrorKind.MALFORMED_HEADER,
            f"#DIM dimension must be A, B, C, D or E, got {name!r}",
        )
        return
    _parse_code_map(body, name, builder.dims[name], line_no, parser)
    if name == "E" and len(builder.dims["E"]) > 4:
        parser.fail(
            line_no,
            1,
            ParseErrorKind.INVALID_DICTIONARY,
            "dimension E allows at most four scale levels",
        )
        # Drop the overflow so a lenient parse can continue.
        for code in list(builder.dims["E"])[4:]:
            del builder.dims["E"][code]


def _parse_code_map(
    body: str, name: str, target: dict[str, str], line_no: int, parser: _Parser
) -> None:
    if not body:
        parser.fail(
            line_no, 1, ParseErrorKind.MALFORMED_HEADER, f"dimension {name} has no code list"
        )
        return
    for item in body.split(","):
        code, eq, label = item.partition("=")
        code = code.strip()
        label = label.strip()
        if not eq:
            parser.fail(
                line_no,
                1,
                ParseErrorKind.MALFORMED_HEADER,
                f"dimension {name}: expected code=label, got {item.strip()!r}",
            )
            continue
        if code in target:
            parser.fail(
                line_no,
                1,
                ParseErrorKind.INVALID_DICTIONARY,
                f"dimension {name}: duplicate code {code!r}",
            )
            continue
        try:
            TagDictionary(dim_a={code: label})
        except InvariantError as exc:
            parser.fail(line_no, 1, ParseErrorKind.INVALID_DICTIONARY, f"dimension {name}: {exc}")
            continue
        target[code] = label


_BUDGET_RE = re.compile(r"^(\d):(\d+)-(\d+)$")


def _parse_budget(rest: str, line_no: int, builder: _HeaderBuilder, parser: _Parser) -> None:
    if not rest:
        parser.fail(line_no, 1, ParseErrorKind.MALFORMED_HEADER, "#BUDGET needs level:min-max pairs")
        return
    for token in rest.split():
        match = _BUDGET_RE.match(token)
        if not match:
            parser.fail(
                line_no,
                1,
                ParseErrorKind.MALFORMED_HEADER,
                f"budget entry {token!r} is not <digit>:<min>-<max>",
            )
            continue
        level, lo, hi = int(match.group(1)), int(match.group(2)), int(match.group(3))
        if level not in IMPORTANCE_SCALE:
            parser.fail(
                line_no,
                1,
                ParseErrorKind.INVALID_DICTIONARY,
                f"budget level {level} is not on the importance scale",
            )
            continue
        if level in builder.budgets:
            parser.fail(
                line_no, 1, ParseErrorKind.INVALID_DICTIONARY, f"duplicate budget for level {level}"
            )
            continue
        if lo > hi:
            parser.fail(
                line_no,
                1,
                ParseErrorKind.INVALID_DICTIONARY,
                f"budget {level}: min {lo} exceeds max {hi}",
            )
            continue
        builder.budgets[level] = (lo, hi)


def parse_code_entry_line(line: str, dictionary: TagDictionary) -> CodeEntry:
    """Parse a single code entry line against ``dictionary``.

    Raises:
        ParseError: with line number 1.
    """
    parser = _Parser(stop_on_error=True)
    try:
        entry = _parse_code_line(line.strip(), 1, dictionary, parser)
    except _Aborted:
        raise parser.errors[0] from None
    assert entry is not None
    return entry


def _parse_code_line(
    line: str, line_no: int, dictionary: TagDictionary, parser: _Parser
) -> CodeEntry | None:
    match = _ENTRY_RE.match(line)
    if not match:
        parser.fail(
            line_no,
            1,
            ParseErrorKind.MALFORMED_ENTRY,
            "entry line must look like path[TAG]: F:... | R:... | A:... | S:...",
        )
        return None
    path_text, tag_text, rest = match.group(1).strip(), match.group(2), match.group(3)

    parts = [part.strip() for part in rest.split("|")]
    if len(parts) != len(_ELEMENT_ORDER):
        column = max(1, min(len(line), len(line) - len(rest) + 1))
        parser.fail(
            line_no,
            column,
            ParseErrorKind.MALFORMED_ENTRY,
            f"expected four |-separated elements, found {len(parts)}",
        )
        return None
    values: dict[str, str] = {}
    for want, part in zip(_ELEMENT_ORDER, parts):
        if not part.startswith(f"{want}:"):
            parser.fail(
                line_no,
                1,
                ParseErrorKind.MALFORMED_ENTRY,
                f"expected element {want}: in position {_ELEMENT_ORDER.index(want) + 1}, "
                f"got {part[:20]!r}",
            )
            return None
        values[want] = part[2:].strip()

    refs: tuple[str, ...] = ()
    r_text = values["R"]
    if r_text not in ("", EMPTY_SENTINEL):
        pieces = [piece.strip() for piece in r_text.split(",")]
        if any(not piece for piece in pieces):
            parser.fail(
                line_no, 1, ParseErrorKind.MALFORMED_ENTRY, f"empty reference in R element {r_text!r}"
            )
            return None
        refs = tuple(pieces)

    tag: str | None = None
    decoded = None
    if tag_text is not None:
        tag = tag_text.strip()
        try:
            decoded = decode_tag(tag, dictionary)
        except TagError as exc:
            if tag not in dictionary.dim_e:
                column = line.find("[") + 2 if "[" in line else 1
                parser.fail(line_no, column, ParseErrorKind.TAG_DECODE, f"tag {tag!r}: {exc}")
                return None
            # A lone scale code is the residual tag form emitted by tag
            # ablation; it stays attached without a decoding.
            decoded = None

    def element(name: str) -> str:
        value = values[name]
        return "" if value == EMPTY_SENTINEL else value

    try:
        return CodeEntry(
            path=path_text,
            tag=tag,
            decoded=decoded,
            f=element("F"),
            r=refs,
            a=element("A"),
            s=element("S"),
        )
    except (InvariantError, InvalidPath) as exc:
        parser.fail(line_no, 1, ParseErrorKind.MALFORMED_ENTRY, str(exc))
        return None


def _parse_table_line(
    line: str, line_no: int, dictionary: TagDictionary, parser: _Parser
) -> TableEntry | None:
    match = _ENTRY_RE.match(line)
    if not match:
        parser.fail(
            line_no,
            1,
            ParseErrorKind.MALFORMED_ENTRY,
            "table line must look like name[DOMAIN-TYPE-SCALE-FEATS]: description",
        )
        return None
    name, tag_text, rest = match.group(1).strip(), match.group(2), match.group(3)
    fields_text = rest.strip()
    if fields_text == EMPTY_SENTINEL:
        fields_text = ""

    domain = ttype = scale = ""
    features: tuple[str, ...] = ()
    if tag_text is not None:
        try:
            domain, ttype, scale, features = decode_table_tag(tag_text.strip(), dictionary)
        except TagError as exc:
            column = line.find("[") + 2 if "[" in line else 1
            parser.fail(
                line_no, column, ParseErrorKind.TAG_DECODE, f"table tag {tag_text!r}: {exc}"
            )
            return None
    try:
        return TableEntry(
            name=name,
            domain=domain,
            ttype=ttype,
            scale=scale,
            features=features,
            fields_text=fields_text,
        )
    except InvariantError as exc:
        parser.fail(line_no, 1, ParseErrorKind.MALFORMED_ENTRY, str(exc))
        return None
