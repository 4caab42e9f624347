"""Shared fixtures: the reference dictionary, golden index, and random
generators used by the property and acceptance suites."""

from __future__ import annotations

import random
from pathlib import Path

import pytest

from aoci.grammar import decode_table_tag, parse_code_entry_line, parse_index
from aoci.model import (
    CodeEntry,
    DecodedTag,
    Header,
    Index,
    TableEntry,
    TagDictionary,
)

FIXTURES = Path(__file__).parent / "fixtures"

# The three reference example entries, single-line form, plus the users table.
LISTING_AUTH = (
    "auth.go[WA9JM]: F:JWT authentication middleware | R:pkg/jwt,model/user | A:- | "
    "S:extract Bearer token from Authorization header, parse and verify JWT, "
    "inject user_id and is_superadmin into gin.Context, expiration check, "
    "refresh logic, API key fallback authentication, match key_prefix and query SHA256"
)
LISTING_ORG = (
    "org_repo.go[PO9NTM]: F:organizational data access | R:model/org | A:- | "
    "S:CreateWithClosure, four-step atomic transaction, closure-table JOIN query "
    "for GetTree, closure-table query for GetAncestors, MoveNode subtree "
    "closure-relation reconstruction, Delete cascading cleanup"
)
LISTING_CONFIG = (
    "config.yaml[CC9T]: F:main configuration | R:internal/config/config.go | A:- | "
    "S:DB/Redis/JWT/encryption keys/rate limiting/LLM proxy/CORS"
)
LISTING_LINES = (LISTING_AUTH, LISTING_ORG, LISTING_CONFIG)

USERS_TABLE_LINE = (
    "users[U-M-M-GUID]: user primary table, uuid/username/email unique, "
    "password_hash bcrypt, status, is_superadmin, preferences JSONB, soft delete"
)


def make_reference_dictionary() -> TagDictionary:
    """The dictionary under which every reference example decodes."""
    return TagDictionary(
        dim_a={
            "H": "Handler",
            "S": "Service",
            "P": "Repository",
            "M": "Model",
            "W": "Middleware",
            "R": "Router",
            "C": "Config",
        },
        dim_b={"C": "Core", "A": "Auth", "O": "Org", "R": "Role", "U": "User"},
        dim_d={
            "J": "JWT",
            "T": "Transaction",
            "N": "project-specific",
            "R": "RBAC",
            "E": "Encryption",
        },
        dim_e={"T": "Tiny", "S": "Small", "M": "Medium", "L": "Large"},
        table_domain={"U": "User", "P": "Points", "I": "Indexing", "A": "Auditing"},
        table_type={"M": "Main", "A": "Association", "L": "Log", "C": "Configuration"},
        table_scale={"S": "Small", "M": "Medium", "L": "Large"},
        table_feat={
            "GUID": "GUID identifier",
            "SD": "soft delete",
            "JB": "JSONB fields",
            "UQ": "unique constraints",
            "FK": "foreign keys",
        },
        budgets={9: (20, 150), 8: (20, 130), 7: (20, 110), 5: (20, 80), 3: (20, 40), 1: (20, 40)},
    )


@pytest.fixture
def reference_dictionary() -> TagDictionary:
    return make_reference_dictionary()


@pytest.fixture
def listing_text() -> str:
    return (FIXTURES / "listing1.aoci").read_text(encoding="utf-8")


@pytest.fixture
def listing_index(listing_text) -> Index:
    return parse_index(listing_text)


def listing_only_index(dictionary: TagDictionary) -> Index:
    """Just the three reference entries plus the users table (dangling refs)."""
    entries = tuple(parse_code_entry_line(line, dictionary) for line in LISTING_LINES)
    domain, ttype, scale, feats = decode_table_tag("U-M-M-GUID", dictionary)
    table = TableEntry(
        "users", domain, ttype, scale, feats, USERS_TABLE_LINE.split(": ", 1)[1]
    )
    header = Header(version=1, project="aoci-platform", dictionary=dictionary)
    return Index(header, entries, (table,))


# ---------------------------------------------------------------------------
# Random generators. Codes come from disjoint single-letter alphabets per
# dimension, so every generated tag has a unique decomposition and the codec
# round-trip is exact by construction.
# ---------------------------------------------------------------------------

LAYER_ALPHABET = "ABCDE"
MODULE_ALPHABET = "FGHIJ"
FEATURE_ALPHABET = "KLMNO"
SCALE_ALPHABET = "PQRS"

_WORDS = (
    "cache",
    "queue",
    "retry",
    "hash",
    "login",
    "stream",
    "quota",
    "merge",
    "token",
    "shard",
    "audit",
    "batch",
)


def make_dictionary(rng: random.Random, with_tables: bool = False) -> TagDictionary:
    def pick(alphabet: str, low: int, high: int) -> dict[str, str]:
        count = rng.randint(low, high)
        return {code: f"{code} label" for code in rng.sample(alphabet, count)}

    kwargs = {}
    if with_tables:
        kwargs = dict(
            table_domain=pick("abcd", 2, 4),
            table_type=pick("efgh", 2, 4),
            table_scale=pick("ijk", 2, 3),
            table_feat=pick("lmnop", 2, 5),
        )
    return TagDictionary(
        dim_a=pick(LAYER_ALPHABET, 2, 5),
        dim_b=pick(MODULE_ALPHABET, 2, 5),
        dim_d=pick(FEATURE_ALPHABET, 2, 5),
        dim_e=pick(SCALE_ALPHABET, 2, 4),
        **kwargs,
    )


def make_text(rng: random.Random, low: int = 2, high: int = 10) -> str:
    return " ".join(rng.choice(_WORDS) for _ in range(rng.randint(low, high)))


def make_decoded(
    rng: random.Random, dictionary: TagDictionary, with_scale: bool
) -> DecodedTag:
    return DecodedTag(
        layer=rng.choice(sorted(dictionary.dim_a)),
        module=rng.choice(sorted(dictionary.dim_b)),
        importance=rng.choice(sorted(dictionary.dim_c)),
        features=tuple(
            rng.choice(sorted(dictionary.dim_d)) for _ in range(rng.randint(0, 3))
        ),
        scale=rng.choice(sorted(dictionary.dim_e)) if with_scale else None,
    )


def make_index(
    rng: random.Random,
    n_entries: int,
    scale_absent: int = 0,
    clean_refs: bool = False,
    tables: int = 0,
) -> Index:
    """A random structurally valid index.

    ``scale_absent`` entries get tags with no scale code. With
    ``clean_refs``, every R reference is the exact path of another entry, so
    each reference has exactly one resolver and the index validates clean.
    """
    from aoci.grammar import encode_tag

    dictionary = make_dictionary(rng, with_tables=tables > 0)
    paths = [f"pkg{i // 10}/mod{i}.go" for i in range(n_entries)]
    absent_slots = set(rng.sample(range(n_entries), scale_absent))
    entries = []
    for i, path in enumerate(paths):
        decoded = make_decoded(rng, dictionary, with_scale=i not in absent_slots)
        refs: tuple[str, ...] = ()
        if clean_refs and n_entries > 1 and rng.random() < 0.8:
            others = [p for p in paths if p != path]
            refs = tuple(rng.sample(others, min(len(others), rng.randint(1, 3))))
        entries.append(
            CodeEntry(
                path=path,
                tag=encode_tag(decoded),
                decoded=decoded,
                f=make_text(rng, 1, 4),
                r=refs,
                a=make_text(rng, 0, 2),
                s=make_text(rng, 3, 12),
            )
        )
    table_entries = []
    for i in range(tables):
        table_entries.append(
            TableEntry(
                name=f"table_{i}",
                domain=rng.choice(sorted(dictionary.table_domain)),
                ttype=rng.choice(sorted(dictionary.table_type)),
                scale=rng.choice(sorted(dictionary.table_scale)),
                features=tuple(
                    rng.sample(
                        sorted(dictionary.table_feat), rng.randint(0, len(dictionary.table_feat))
                    )
                ),
                fields_text=make_text(rng, 2, 8),
            )
        )
    header = Header(
        version=rng.randint(1, 3),
        project=f"proj{rng.randint(0, 99)}",
        overview=tuple(make_text(rng, 2, 6) for _ in range(rng.randint(0, 2))),
        stack=make_text(rng, 0, 3),
        dictionary=dictionary,
    )
    return Index(header, tuple(entries), tuple(table_entries))
