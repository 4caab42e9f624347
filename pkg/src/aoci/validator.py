"""Consistency checks for an index: rule catalog, coverage reporting.

Rule catalog
    E1  duplicate entry path or table name
    E2  R reference resolves to no code entry
    E3  tag code missing from the header dictionary
    E4  importance digit outside the 9/8/7/5/3/1 scale
    W1  semantic elements outside the token budget for the importance level
    W2  dictionary dimension is not prefix-free
    W3  empty F element on an entry of importance 7 or higher
    W4  R reference resolves only to a database table

E1, E3 and E4 cannot fire on an index built through the normal constructors,
which enforce those invariants; they are re-checked here so hand-built or
mutated data still gets a diagnosis. Budget violations are warnings because
budgets guide generation, they do not make an index invalid.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fnmatch import fnmatchcase
from typing import Iterable

from .errors import ConfigError
from .metrics import DEFAULT_ESTIMATOR, TokenEstimator
from .model import IMPORTANCE_SCALE, Index, TagDictionary, canonical_path

#: Budgets applied when the header carries no #BUDGET directive. The 9 row
#: and the 20-40 floor are protocol constants; the intermediate rows are
#: interpolated defaults.
DEFAULT_BUDGETS: dict[int, tuple[int, int]] = {
    9: (80, 150),
    8: (70, 130),
    7: (60, 110),
    5: (40, 80),
    3: (20, 40),
    1: (20, 40),
}

RULES: dict[str, str] = {
    "E1": "duplicate entry path or table name",
    "E2": "R reference resolves to no code entry",
    "E3": "tag code missing from the header dictionary",
    "E4": "importance digit outside the allowed scale",
    "W1": "semantic elements outside the token budget",
    "W2": "dictionary dimension is not prefix-free",
    "W3": "empty F element on a high-importance entry",
    "W4": "R reference resolves only to a database table",
}


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class ValidationIssue:
    severity: Severity
    rule: str
    subject: str
    message: str

    def __post_init__(self):
        if self.rule not in RULES:
            raise ValueError(f"unknown rule id {self.rule!r}")

    def render(self) -> str:
        return f"{self.severity.value} {self.rule} {self.subject}: {self.message}"


@dataclass(frozen=True)
class CoverageReport:
    """How much of a file tree the index covers."""

    eligible_files: int
    indexed_files: int
    unindexed: tuple[str, ...]
    orphan_entries: tuple[str, ...]


def budget_for(dictionary: TagDictionary, importance: int) -> tuple[int, int]:
    """The dictionary's budget for an importance level, or the default row."""
    return dictionary.budgets.get(importance, DEFAULT_BUDGETS[importance])


class RefResolver:
    """Resolves R references against a set of entry paths.

    A reference resolves when some path equals it, lives under it as a
    directory, or matches it once the path's extension is stripped. This is
    deliberately prefix-tolerant: references name files, directories, and
    extension-less module paths.
    """

    def __init__(self, paths: Iterable[str]):
        self.paths = frozenset(paths)
        prefixes: set[str] = set()
        sans_ext: set[str] = set()
        for path in self.paths:
            parts = path.split("/")
            for depth in range(1, len(parts)):
                prefixes.add("/".join(parts[:depth]))
            base = parts[-1]
            if "." in base:
                sans_ext.add(path[: path.rindex(".")])
        self._prefixes = prefixes
        self._sans_ext = sans_ext

    def resolves(self, ref: str) -> bool:
        return ref in self.paths or ref in self._prefixes or ref in self._sans_ext

    def targets(self, ref: str) -> list[str]:
        """Every path the reference denotes, sorted."""
        hits = [
            path
            for path in self.paths
            if resolves_to(ref, path)
        ]
        return sorted(hits)


def resolves_to(ref: str, path: str) -> bool:
    """Whether ``ref`` denotes ``path`` under the resolution rules."""
    if path == ref or path.startswith(ref + "/"):
        return True
    base = path.rsplit("/", 1)[-1]
    return "." in base and path[: path.rindex(".")] == ref


def validate_index(
    index: Index, estimator: TokenEstimator = DEFAULT_ESTIMATOR
) -> list[ValidationIssue]:
    """Run the full rule catalog; issues sorted by (subject, rule)."""
    from .grammar import serialize_semantic_elements

    issues: list[ValidationIssue] = []
    dictionary = index.header.dictionary

    seen_paths: set[str] = set()
    for entry in index.code_entries:
        if entry.path in seen_paths:
            issues.append(
                ValidationIssue(Severity.ERROR, "E1", entry.path, "duplicate entry path")
            )
        seen_paths.add(entry.path)
    seen_names: set[str] = set()
    for table in index.table_entries:
        if table.name in seen_names:
            issues.append(
                ValidationIssue(Severity.ERROR, "E1", table.name, "duplicate table name")
            )
        seen_names.add(table.name)

    resolver = RefResolver(seen_paths)
    table_names = index.table_names()
    for entry in index.code_entries:
        for ref in entry.r:
            if resolver.resolves(ref):
                continue
            if ref in table_names:
                issues.append(
                    ValidationIssue(
                        Severity.WARNING,
                        "W4",
                        entry.path,
                        f"reference {ref!r} names a table, not a code entry",
                    )
                )
            else:
                issues.append(
                    ValidationIssue(
                        Severity.ERROR,
                        "E2",
                        entry.path,
                        f"reference {ref!r} resolves to no entry",
                    )
                )

    for entry in index.code_entries:
        if entry.decoded is None:
            continue
        tag = entry.decoded
        for code, mapping, dim in (
            (tag.layer, dictionary.dim_a, "A"),
            (tag.module, dictionary.dim_b, "B"),
            *((feat, dictionary.dim_d, "D") for feat in tag.features),
        ):
            if code not in mapping:
                issues.append(
                    ValidationIssue(
                        Severity.ERROR,
                        "E3",
                        entry.path,
                        f"code {code!r} missing from dimension {dim}",
                    )
                )
        if tag.scale is not None and tag.scale not in dictionary.dim_e:
            issues.append(
                ValidationIssue(
                    Severity.ERROR,
                    "E3",
                    entry.path,
                    f"code {tag.scale!r} missing from dimension E",
                )
            )
        if tag.importance not in IMPORTANCE_SCALE:
            issues.append(
                ValidationIssue(
                    Severity.ERROR,
                    "E4",
                    entry.path,
                    f"importance {tag.importance} outside the allowed scale",
                )
            )
        tokens = estimator.estimate(serialize_semantic_elements(entry))
        lo, hi = budget_for(dictionary, tag.importance)
        if not lo <= tokens <= hi:
            issues.append(
                ValidationIssue(
                    Severity.WARNING,
                    "W1",
                    entry.path,
                    f"estimated {tokens} tokens outside budget {lo}-{hi} "
                    f"for importance {tag.importance}",
                )
            )
        if tag.importance >= 7 and not entry.f:
            issues.append(
                ValidationIssue(
                    Severity.WARNING,
                    "W3",
                    entry.path,
                    f"empty F element on importance {tag.importance} entry",
                )
            )

    for name, mapping in dictionary.code_dimensions():
        clash = _prefix_clash(mapping)
        if clash:
            issues.append(
                ValidationIssue(
                    Severity.WARNING,
                    "W2",
                    "header",
                    f"dimension {name} is not prefix-free: {clash[0]!r} prefixes {clash[1]!r}",
                )
            )

    issues.sort(key=lambda issue: (issue.subject, issue.rule, issue.message))
    return issues


def _prefix_clash(mapping: dict[str, str]) -> tuple[str, str] | None:
    codes = sorted(mapping)
    for left, right in zip(codes, codes[1:]):
        if right.startswith(left):
            return left, right
    return None


def has_errors(issues: Iterable[ValidationIssue]) -> bool:
    return any(issue.severity is Severity.ERROR for issue in issues)


def check_coverage(
    index: Index,
    file_list: Iterable[str],
    include_globs: Iterable[str] = ("*",),
    exclude_globs: Iterable[str] = (),
) -> CoverageReport:
    """Compare the index against the file tree it claims to describe.

    Globs match the whole canonical path, so ``*`` crosses ``/``; the file
    list is expected canonical and is re-normalized defensively.
    """
    include = _check_globs(include_globs, "include")
    exclude = _check_globs(exclude_globs, "exclude")
    files = [canonical_path(path) for path in file_list]
    file_set = set(files)
    eligible = [
        path
        for path in files
        if any(fnmatchcase(path, glob) for glob in include)
        and not any(fnmatchcase(path, glob) for glob in exclude)
    ]
    entry_paths = index.code_paths()
    unindexed = sorted(path for path in eligible if path not in entry_paths)
    orphans = sorted(path for path in entry_paths if path not in file_set)
    return CoverageReport(
        eligible_files=len(eligible),
        indexed_files=len(eligible) - len(unindexed),
        unindexed=tuple(unindexed),
        orphan_entries=tuple(orphans),
    )


def _check_globs(globs: Iterable[str], which: str) -> tuple[str, ...]:
    out = tuple(globs)
    for glob in out:
        if not isinstance(glob, str) or not glob:
            raise ConfigError(f"{which} glob must be a nonempty string, got {glob!r}")
    return out


def issues_text(issues: Iterable[ValidationIssue]) -> str:
    """One human-readable line per issue."""
    return "\n".join(issue.render() for issue in issues)


def issues_records(issues: Iterable[ValidationIssue]) -> list[dict]:
    """Machine-readable records, one per issue, for CI consumption."""
    return [
        {
            "severity": issue.severity.value,
            "rule": issue.rule,
            "subject": issue.subject,
            "message": issue.message,
        }
        for issue in issues
    ]
