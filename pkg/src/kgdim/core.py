"""Domain types, the 13-dimension vocabulary and the default relation mapping."""

from __future__ import annotations

import csv
import enum
import hashlib
import io
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

__all__ = [
    "Dimension",
    "Polarity",
    "Edge",
    "MappingEntry",
    "MappingTable",
    "MappingError",
    "UnmappedRelation",
    "ExcludedRelation",
    "EXCLUDED",
    "default_mapping",
    "load_mapping",
    "save_mapping",
    "mapping_checksum",
]


class Dimension(str, enum.Enum):
    """The 13 knowledge dimensions, in canonical table order."""

    LEXICAL = "lexical"
    SIMILARITY = "similarity"
    DISTINCTNESS = "distinctness"
    TAXONOMIC = "taxonomic"
    PART_WHOLE = "part-whole"
    SPATIAL = "spatial"
    CREATION = "creation"
    UTILITY = "utility"
    DESIRE_GOAL = "desire-goal"
    QUALITY = "quality"
    COMPARATIVE = "comparative"
    TEMPORAL = "temporal"
    RELATIONAL_OTHER = "relational-other"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, name: str) -> "Dimension":
        try:
            return cls(name)
        except ValueError:
            legal = ", ".join(d.value for d in cls)
            raise ValueError(f"unknown dimension {name!r}; expected one of: {legal}") from None

    @property
    def rank(self) -> int:
        return _DIMENSION_RANK[self]


_DIMENSION_RANK = {d: i for i, d in enumerate(Dimension)}


class Polarity(str, enum.Enum):
    POSITIVE = "positive"
    NEGATED = "negated"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Edge:
    """A single assertion in the unified edge format.

    Labels may carry several alternatives separated by ``|``; they are kept
    verbatim here and only split where a consumer needs a node key.
    """

    id: str
    node1: str
    relation: str
    node2: str
    node1_label: str = ""
    node2_label: str = ""
    relation_label: str = ""
    source: str = ""
    sentence: str = ""
    dimension: Dimension | None = None

    def __post_init__(self):
        for name in ("node1", "relation", "node2"):
            if not getattr(self, name):
                raise ValueError(f"edge {self.id!r}: {name} must be non-empty")
        if self.dimension is not None and not isinstance(self.dimension, Dimension):
            object.__setattr__(self, "dimension", Dimension.parse(self.dimension))

    def with_dimension(self, dimension: Dimension | None) -> "Edge":
        return replace(self, dimension=dimension)


@dataclass(frozen=True)
class MappingEntry:
    relation: str
    dimension: Dimension
    polarity: Polarity = Polarity.POSITIVE
    source_scope: str | None = None


class MappingError(ValueError):
    pass


class UnmappedRelation(LookupError):
    pass


class ExcludedRelation(LookupError):
    pass


class _Excluded:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "EXCLUDED"


#: Sentinel returned by :meth:`MappingTable.resolve` for excluded relations.
EXCLUDED = _Excluded()


@dataclass(frozen=True)
class MappingTable:
    """Relation to dimension mapping.

    Lookups prefer an entry scoped to the edge's source, then the unscoped
    entry. Relations starting with one of ``excluded_prefixes`` are excluded
    before any entry is consulted.
    """

    entries: frozenset[MappingEntry]
    excluded_prefixes: tuple[str, ...] = ()
    _index: Mapping[tuple[str, str | None], MappingEntry] = field(
        init=False, repr=False, compare=False
    )

    def __post_init__(self):
        index: dict[tuple[str, str | None], MappingEntry] = {}
        for entry in self.entries:
            key = (entry.relation, entry.source_scope)
            if key in index:
                raise MappingError(
                    f"duplicate mapping for relation {entry.relation!r} "
                    f"(scope {entry.source_scope or 'unscoped'})"
                )
            index[key] = entry
        object.__setattr__(self, "_index", index)

    @classmethod
    def from_entries(
        cls, entries: Iterable[MappingEntry], excluded_prefixes: Iterable[str] = ()
    ) -> "MappingTable":
        entries = list(entries)
        table_entries = frozenset(entries)
        if len(table_entries) != len(entries):
            # identical duplicates would be silently merged by the frozenset
            seen = set()
            for e in entries:
                if e in seen:
                    raise MappingError(f"duplicate mapping for relation {e.relation!r}")
                seen.add(e)
        return cls(table_entries, tuple(excluded_prefixes))

    def __len__(self) -> int:
        return len(self.entries)

    def is_excluded(self, relation: str) -> bool:
        return any(relation.startswith(p) for p in self.excluded_prefixes)

    def resolve(self, relation: str, source: str | None = None):
        """Return the matching entry, :data:`EXCLUDED`, or ``None``."""
        if self.is_excluded(relation):
            return EXCLUDED
        if source:
            entry = self._index.get((relation, source))
            if entry is not None:
                return entry
        return self._index.get((relation, None))

    def lookup(self, relation: str, source: str | None = None) -> MappingEntry:
        found = self.resolve(relation, source)
        if found is EXCLUDED:
            raise ExcludedRelation(relation)
        if found is None:
            raise UnmappedRelation(relation)
        return found

    def canonical_entries(self) -> list[MappingEntry]:
        return sorted(self.entries, key=lambda e: (e.relation, e.source_scope or ""))


# Default mapping. AtLocation appears under both part-whole and spatial in the
# source taxonomy; a single dimension is required, so it goes to spatial.
_UNSCOPED: dict[Dimension, list[str]] = {
    Dimension.LEXICAL: [
        "/r/FormOf", "/r/DerivedFrom", "/r/EtymologicallyDerivedFrom",
        "fn:lexical_unit", "wn:lemma",
    ],
    Dimension.SIMILARITY: [
        "/r/Synonym", "/r/SimilarTo", "/r/DefinedAs",
        "fn:reframing_mapping", "fn:metaphor", "wn:synonym",
        "P460",  # said to be the same as
    ],
    Dimension.DISTINCTNESS: [
        "/r/Antonym", "/r/DistinctFrom", "wn:antonym", "fn:excludes",
        "P1889",  # different from
        "P461",  # opposite of
    ],
    Dimension.TAXONOMIC: [
        "/r/IsA", "/r/InstanceOf", "/r/MannerOf",
        "fn:perspective_on", "fn:inheritance", "wn:hypernym",
        "P279",  # subclass of
        "P31",  # instance of
    ],
    Dimension.PART_WHOLE: [
        "/r/PartOf", "/r/HasA", "/r/MadeOf", "wn:meronym", "wn:holonym",
        "P527",  # has part
        "P463",  # member of
        "P186",  # material used
    ],
    Dimension.SPATIAL: [
        "/r/AtLocation", "/r/LocatedNear",
        "P276",  # location
        "P927",  # anatomical location
    ],
    Dimension.CREATION: [
        "/r/CreatedBy",
        "P170",  # creator
    ],
    Dimension.UTILITY: [
        "/r/ReceivesAction", "/r/UsedFor", "/r/CapableOf", "fn:using",
        "P1535",  # used by
        "P366",  # use
        "P2283",  # uses
    ],
    Dimension.DESIRE_GOAL: [
        "at:xIntent", "at:xWant", "at:oWant",
        "/r/CausesDesire", "/r/MotivatedByGoal", "/r/Desires", "/r/ObstructedBy",
    ],
    Dimension.QUALITY: [
        "at:xAttr", "/r/HasProperty", "/r/SymbolOf", "fn:frame_element",
        "P462",  # color
        "P1552",  # has quality
    ],
    Dimension.TEMPORAL: [
        "at:xNeed", "at:xEffect", "at:oEffect", "at:xReact", "at:oReact",
        "/r/HasFirstSubevent", "/r/HasLastSubevent", "/r/HasSubevent",
        "/r/HasPrerequisite", "/r/Causes", "/r/Entails",
        "fn:subframe", "fn:precedes", "fn:inchoative_of", "fn:causative_of",
        "P828",  # has cause
        "P1542",  # has effect
    ],
    Dimension.RELATIONAL_OTHER: [
        "/r/RelatedTo", "/r/HasContext", "/r/EtymologicallyRelatedTo",
        "fn:see_also", "fn:requires",
        "P425",  # field of this occupation
        "P180",  # depicts
        "P1995",  # health specialty
    ],
}

_NEGATED = {
    "/r/NotCapableOf": Dimension.UTILITY,
    "/r/NotDesires": Dimension.DESIRE_GOAL,
    "/r/NotHasProperty": Dimension.QUALITY,
}

# Generic property names that only make sense for Wikidata edges.
_SCOPED = {
    ("label", "WD"): Dimension.LEXICAL,
    ("description", "WD"): Dimension.TAXONOMIC,
}

DEFAULT_EXCLUDED_PREFIXES = ("/r/dbpedia",)


def default_mapping() -> MappingTable:
    entries = [
        MappingEntry(rel, dim) for dim, rels in _UNSCOPED.items() for rel in rels
    ]
    entries += [MappingEntry(rel, dim, Polarity.NEGATED) for rel, dim in _NEGATED.items()]
    entries += [
        MappingEntry(rel, dim, source_scope=scope) for (rel, scope), dim in _SCOPED.items()
    ]
    return MappingTable.from_entries(entries, DEFAULT_EXCLUDED_PREFIXES)


MAPPING_HEADER = ("relation", "dimension", "polarity", "source_scope")


def _parse_mapping(text: str, origin: str, excluded_prefixes: Iterable[str]) -> MappingTable:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise MappingError(f"{origin}: empty mapping file, header required")
    header = tuple(lines[0].rstrip("\r").split("\t"))
    if header != MAPPING_HEADER:
        raise MappingError(
            f"{origin}:1: bad header {lines[0]!r}, expected {chr(9).join(MAPPING_HEADER)!r}"
        )
    entries: list[MappingEntry] = []
    seen: dict[tuple[str, str | None], int] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.rstrip("\r")
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) == 3:
            fields.append("")
        if len(fields) != 4 or not fields[0]:
            raise MappingError(f"{origin}:{lineno}: malformed row {line!r}")
        relation, dim_name, polarity, scope = fields
        try:
            dimension = Dimension.parse(dim_name)
        except ValueError as exc:
            raise MappingError(f"{origin}:{lineno}: {exc}") from None
        try:
            pol = Polarity(polarity or "positive")
        except ValueError:
            raise MappingError(
                f"{origin}:{lineno}: bad polarity {polarity!r}, expected positive or negated"
            ) from None
        key = (relation, scope or None)
        if key in seen:
            raise MappingError(
                f"{origin}:{lineno}: duplicate mapping for {relation!r} "
                f"(first seen on line {seen[key]})"
            )
        seen[key] = lineno
        entries.append(MappingEntry(relation, dimension, pol, scope or None))
    return MappingTable.from_entries(entries, excluded_prefixes)


def load_mapping(
    path: str | Path, excluded_prefixes: Iterable[str] = DEFAULT_EXCLUDED_PREFIXES
) -> MappingTable:
    """Read a 4-column mapping TSV (``relation dimension polarity source_scope``).

    The file format carries no exclusion list, so ``excluded_prefixes`` is
    passed separately and defaults to the built-in one.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return _parse_mapping(text, str(path), excluded_prefixes)


def dumps_mapping(table: MappingTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter="\t", lineterminator="\n", quoting=csv.QUOTE_NONE)
    writer.writerow(MAPPING_HEADER)
    for e in table.canonical_entries():
        writer.writerow([e.relation, e.dimension.value, e.polarity.value, e.source_scope or ""])
    return buf.getvalue()


def save_mapping(table: MappingTable, path: str | Path) -> None:
    Path(path).write_text(dumps_mapping(table), encoding="utf-8", newline="")


def mapping_checksum(table: MappingTable | None = None) -> str:
    table = table or default_mapping()
    payload = dumps_mapping(table) + "\n".join(table.excluded_prefixes)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]
