"""Core domain model for AOCI index documents.

Every type here is an immutable value object: construction validates the
invariants, and "mutation" means building a new value (``dataclasses.replace``
works on all of them). Checks that need a tag dictionary, such as tag decode
consistency, run when an :class:`Index` is assembled.

Path policy: repository-relative, ``'/'`` separators, no leading ``'./'``,
compared case-sensitively. ``canonical_path`` is the single normalization
point and is idempotent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import InvalidPath, InvariantError

#: The fixed six-level importance scale, highest first.
IMPORTANCE_SCALE = (9, 8, 7, 5, 3, 1)

#: The empty-element sentinel used by the textual format.
EMPTY_SENTINEL = "-"

# Characters that would collide with the index grammar if they appeared in a
# dictionary code: tag brackets, the table-tag separators '-' and '+', the
# element separator '|', and the header directive syntax (choice of ':', '=',
# ',', whitespace).
_CODE_FORBIDDEN = set("[]-|:,=+\"'")

# Characters a path may not contain, or entry lines stop being parseable:
# the bracket/colon head syntax, the element separator, and the comma that
# separates R references.
_PATH_FORBIDDEN = set("[]|:,")


def canonical_path(raw: str) -> str:
    """Normalize a path: '/' separators, no leading './', no doubled '/'.

    Raises:
        InvalidPath: if ``raw`` is empty or normalizes to the empty string.
    """
    if not raw:
        raise InvalidPath("empty path")
    path = raw.replace("\\", "/")
    while "//" in path:
        path = path.replace("//", "/")
    while path.startswith("./"):
        path = path[2:]
    if not path:
        raise InvalidPath(f"path {raw!r} normalizes to nothing")
    return path


def _check_path(path: str) -> str:
    path = canonical_path(path)
    bad = {c for c in path if c in _PATH_FORBIDDEN or c.isspace()}
    if bad:
        raise InvariantError(
            f"path {path!r} contains characters the entry grammar reserves: "
            f"{sorted(bad)}"
        )
    return path


def _check_codes(dimension: str, codes) -> None:
    for code in codes:
        if not code:
            raise InvariantError(f"dimension {dimension}: empty code")
        for ch in code:
            if ch.isdigit() or ch.isspace() or ch in _CODE_FORBIDDEN or ch in "\r\n":
                raise InvariantError(
                    f"dimension {dimension}: code {code!r} contains "
                    f"reserved character {ch!r}"
                )


def _check_text(label: str, value: str) -> None:
    """Free-text element constraints that keep the line grammar closed."""
    if "|" in value or "\n" in value or "\r" in value:
        raise InvariantError(f"{label} may not contain '|' or line breaks: {value!r}")
    if value != value.strip():
        raise InvariantError(f"{label} has leading or trailing whitespace: {value!r}")
    if value == EMPTY_SENTINEL:
        raise InvariantError(
            f"{label} may not be the literal {EMPTY_SENTINEL!r}; use the empty string"
        )


@dataclass(frozen=True)
class TagDictionary:
    """Per-project code sets for tag dimensions, plus token budgets.

    ``dim_a`` (architectural layer), ``dim_b`` (business module), ``dim_d``
    (technical characteristics) and ``dim_e`` (code scale) map codes to
    labels. ``dim_c`` is the set of allowed importance digits, a subset of
    the fixed scale 9/8/7/5/3/1. The four ``table_*`` maps are the table tag
    dimensions. ``budgets`` maps an importance digit to a (min, max) token
    allowance for the entry's semantic elements.
    """

    dim_a: dict[str, str] = field(default_factory=dict)
    dim_b: dict[str, str] = field(default_factory=dict)
    dim_c: frozenset[int] = frozenset(IMPORTANCE_SCALE)
    dim_d: dict[str, str] = field(default_factory=dict)
    dim_e: dict[str, str] = field(default_factory=dict)
    table_domain: dict[str, str] = field(default_factory=dict)
    table_type: dict[str, str] = field(default_factory=dict)
    table_scale: dict[str, str] = field(default_factory=dict)
    table_feat: dict[str, str] = field(default_factory=dict)
    budgets: dict[int, tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "dim_c", frozenset(self.dim_c))
        if not self.dim_c:
            raise InvariantError("dim_c must contain at least one importance level")
        if not self.dim_c <= set(IMPORTANCE_SCALE):
            raise InvariantError(
                f"dim_c {sorted(self.dim_c)} is not a subset of {IMPORTANCE_SCALE}"
            )
        if len(self.dim_e) > 4:
            raise InvariantError("dim_e allows at most four scale levels")
        for name, mapping in self.code_dimensions() + self.table_dimensions():
            _check_codes(name, mapping)
            for label in mapping.values():
                if "," in label or "\n" in label or "\r" in label:
                    raise InvariantError(
                        f"dimension {name}: label {label!r} contains ',' or a line break"
                    )
        budgets = {}
        for level, bounds in self.budgets.items():
            lo, hi = bounds
            if level not in IMPORTANCE_SCALE:
                raise InvariantError(f"budget level {level} is not on the scale")
            if lo < 0 or lo > hi:
                raise InvariantError(f"budget {level}: min {lo} exceeds max {hi}")
            budgets[level] = (int(lo), int(hi))
        object.__setattr__(self, "budgets", budgets)

    def code_dimensions(self) -> list[tuple[str, dict[str, str]]]:
        """The four code→label tag dimensions, in tag order."""
        return [("A", self.dim_a), ("B", self.dim_b), ("D", self.dim_d), ("E", self.dim_e)]

    def table_dimensions(self) -> list[tuple[str, dict[str, str]]]:
        return [
            ("DOMAIN", self.table_domain),
            ("TYPE", self.table_type),
            ("SCALE", self.table_scale),
            ("FEAT", self.table_feat),
        ]


@dataclass(frozen=True)
class DecodedTag:
    """The five-dimension decomposition of a code tag.

    ``scale`` may be absent: tags without a scale code are legal.
    """

    layer: str
    module: str
    importance: int
    features: tuple[str, ...] = ()
    scale: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        if self.importance not in IMPORTANCE_SCALE:
            raise InvariantError(f"importance {self.importance} is not on the scale")

    def validate_against(self, dictionary: TagDictionary) -> None:
        """Raise InvariantError unless every code resolves in ``dictionary``."""
        if self.importance not in dictionary.dim_c:
            raise InvariantError(f"importance {self.importance} not allowed by dim_c")
        if self.layer not in dictionary.dim_a:
            raise InvariantError(f"layer code {self.layer!r} not in dimension A")
        if self.module not in dictionary.dim_b:
            raise InvariantError(f"module code {self.module!r} not in dimension B")
        for feat in self.features:
            if feat not in dictionary.dim_d:
                raise InvariantError(f"feature code {feat!r} not in dimension D")
        if self.scale is not None and self.scale not in dictionary.dim_e:
            raise InvariantError(f"scale code {self.scale!r} not in dimension E")


@dataclass(frozen=True)
class Header:
    """Project metadata plus the tag dictionary shared by all entries."""

    version: int = 1
    project: str = ""
    overview: tuple[str, ...] = ()
    stack: str = ""
    dictionary: TagDictionary = field(default_factory=TagDictionary)

    def __post_init__(self):
        if self.version < 1:
            raise InvariantError(f"version must be >= 1, got {self.version}")
        object.__setattr__(self, "overview", tuple(self.overview))
        for label, value in (("project", self.project), ("stack", self.stack)):
            if "\n" in value or "\r" in value or value != value.strip():
                raise InvariantError(f"header {label} must be a single trimmed line")
        for line in self.overview:
            if not line or "\n" in line or "\r" in line or line != line.strip():
                raise InvariantError("overview lines must be nonempty trimmed lines")


@dataclass(frozen=True)
class CodeEntry:
    """One source file's record: path, optional tag, and the four semantic
    elements (role text ``f``, relation references ``r``, API text ``a``,
    synopsis ``s``).

    ``decoded`` is attached when the tag decodes fully against the project
    dictionary. A tag without a decoding is a residual scale-only tag; the
    index-level check enforces that it is exactly one scale code.

    Empty elements are the empty list (``r``) or empty string (``f``, ``a``,
    ``s``); serialization renders them as ``-``.
    """

    path: str
    tag: str | None = None
    decoded: DecodedTag | None = None
    f: str = ""
    r: tuple[str, ...] = ()
    a: str = ""
    s: str = ""

    def __post_init__(self):
        object.__setattr__(self, "path", _check_path(self.path))
        object.__setattr__(self, "r", tuple(self.r))
        if self.decoded is not None and self.tag is None:
            raise InvariantError(f"{self.path}: decoded tag without a raw tag")
        if self.tag is not None and not self.tag:
            raise InvariantError(f"{self.path}: tag may not be the empty string")
        for ref in self.r:
            if not ref:
                raise InvariantError(f"{self.path}: empty R reference")
            if ref == EMPTY_SENTINEL:
                raise InvariantError(f"{self.path}: R reference may not be '-'")
            if "|" in ref or "," in ref or any(c.isspace() for c in ref):
                raise InvariantError(
                    f"{self.path}: R reference {ref!r} contains whitespace, '|' or ','"
                )
        for label, value in (("F", self.f), ("A", self.a), ("S", self.s)):
            _check_text(f"{self.path}: element {label}", value)


@dataclass(frozen=True)
class TableEntry:
    """One database table's record: four-dimension tag plus field text.

    The tag is either fully present (domain, table type, scale, features) or
    fully absent, which is how tag-stripped index variants represent tables.
    """

    name: str
    domain: str = ""
    ttype: str = ""
    scale: str = ""
    features: tuple[str, ...] = ()
    fields_text: str = ""

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        if not self.name or not all(c.isalnum() or c == "_" for c in self.name):
            raise InvariantError(f"table name {self.name!r} is not an identifier")
        if self.name[0].isdigit():
            raise InvariantError(f"table name {self.name!r} starts with a digit")
        present = [bool(self.domain), bool(self.ttype), bool(self.scale)]
        if any(present) and not all(present):
            raise InvariantError(
                f"table {self.name}: domain, type and scale must all be present or all absent"
            )
        if not self.has_tag and self.features:
            raise InvariantError(f"table {self.name}: features require a full tag")
        _check_text(f"table {self.name}: fields", self.fields_text)

    @property
    def has_tag(self) -> bool:
        return bool(self.domain)


class ChangeStatus(Enum):
    ADDED = "A"
    MODIFIED = "M"
    DELETED = "D"
    RENAMED = "R"


@dataclass(frozen=True)
class ChangeRecord:
    """One file-change record driving incremental maintenance."""

    status: ChangeStatus
    path: str
    new_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "path", canonical_path(self.path))
        if self.status is ChangeStatus.RENAMED:
            if self.new_path is None:
                raise InvariantError(f"rename of {self.path} needs a new path")
            object.__setattr__(self, "new_path", canonical_path(self.new_path))
            if self.new_path == self.path:
                raise InvariantError(f"rename of {self.path} to itself")
        elif self.new_path is not None:
            raise InvariantError(f"{self.status.name} record carries a new path")


@dataclass(frozen=True)
class ChangeSet:
    """An ordered list of change records, one per touched path."""

    records: tuple[ChangeRecord, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        seen = set()
        for rec in self.records:
            if rec.path in seen:
                raise InvariantError(f"duplicate path in change set: {rec.path}")
            seen.add(rec.path)

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class Index:
    """A full AOCI document: header, code entries, table entries, in order."""

    header: Header = field(default_factory=Header)
    code_entries: tuple[CodeEntry, ...] = ()
    table_entries: tuple[TableEntry, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "code_entries", tuple(self.code_entries))
        object.__setattr__(self, "table_entries", tuple(self.table_entries))
        # Import here: grammar owns the tag codec and imports this module.
        from .grammar import decode_tag

        dictionary = self.header.dictionary
        seen_paths = set()
        for entry in self.code_entries:
            if entry.path in seen_paths:
                raise InvariantError(f"duplicate code entry path: {entry.path}")
            seen_paths.add(entry.path)
            if entry.tag is None:
                continue
            if entry.decoded is not None:
                redecoded = decode_tag(entry.tag, dictionary)
                if redecoded != entry.decoded:
                    raise InvariantError(
                        f"{entry.path}: attached decoding does not match tag "
                        f"{entry.tag!r} under the header dictionary"
                    )
            elif entry.tag not in dictionary.dim_e:
                # The one undecoded form the grammar admits: a residual tag
                # holding a single scale code, as produced by tag ablation.
                raise InvariantError(
                    f"{entry.path}: tag {entry.tag!r} neither decodes nor is a "
                    f"single scale code"
                )
        seen_names = set()
        for table in self.table_entries:
            if table.name in seen_names:
                raise InvariantError(f"duplicate table entry name: {table.name}")
            seen_names.add(table.name)
            if not table.has_tag:
                continue
            for value, mapping, dim in (
                (table.domain, dictionary.table_domain, "DOMAIN"),
                (table.ttype, dictionary.table_type, "TYPE"),
                (table.scale, dictionary.table_scale, "SCALE"),
            ):
                if value not in mapping:
                    raise InvariantError(
                        f"table {table.name}: code {value!r} not in dimension {dim}"
                    )
            for feat in table.features:
                if feat not in dictionary.table_feat:
                    raise InvariantError(
                        f"table {table.name}: code {feat!r} not in dimension FEAT"
                    )

    def entry_map(self) -> dict[str, CodeEntry]:
        return {entry.path: entry for entry in self.code_entries}

    def code_paths(self) -> frozenset[str]:
        return frozenset(entry.path for entry in self.code_entries)

    def table_names(self) -> frozenset[str]:
        return frozenset(table.name for table in self.table_entries)
