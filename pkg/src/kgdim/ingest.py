"""Reading, writing and dimension-enriching edge TSV files."""

from __future__ import annotations

import gzip
import io
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

from sklearn.base import BaseEstimator, TransformerMixin

from .core import EXCLUDED, Dimension, Edge, MappingTable, default_mapping

__all__ = [
    "EDGE_COLUMNS",
    "EdgeFormatError",
    "ReadStats",
    "AssignStats",
    "read_edges",
    "iter_edges",
    "write_edges",
    "assign_dimensions",
    "DimensionAssigner",
    "open_text",
]

logger = logging.getLogger(__name__)

EDGE_COLUMNS = (
    "id",
    "node1",
    "relation",
    "node2",
    "node1;label",
    "node2;label",
    "relation;label",
    "relation;dimension",
    "source",
    "sentence",
)
MANDATORY_COLUMNS = EDGE_COLUMNS[:4]

_FIELD_FOR_COLUMN = {
    "id": "id",
    "node1": "node1",
    "relation": "relation",
    "node2": "node2",
    "node1;label": "node1_label",
    "node2;label": "node2_label",
    "relation;label": "relation_label",
    "relation;dimension": "dimension",
    "source": "source",
    "sentence": "sentence",
}


class EdgeFormatError(ValueError):
    """Raised for malformed edge files. ``line`` is 1-based, header is line 1."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass
class ReadStats:
    rows: int = 0
    yielded: int = 0
    filtered: int = 0
    errors: list[EdgeFormatError] = field(default_factory=list)


@dataclass
class AssignStats:
    mapped: int = 0
    excluded: int = 0
    unmapped: Counter = field(default_factory=Counter)

    @property
    def unmapped_total(self) -> int:
        return sum(self.unmapped.values())

    @property
    def total(self) -> int:
        return self.mapped + self.excluded + self.unmapped_total

    def __add__(self, other: "AssignStats") -> "AssignStats":
        return AssignStats(
            self.mapped + other.mapped,
            self.excluded + other.excluded,
            self.unmapped + other.unmapped,
        )


def open_text(path: str | Path, mode: str = "r") -> IO[str]:
    """Open a UTF-8 text file, transparently gzip-compressed for ``.gz`` names."""
    path = str(path)
    if path.endswith(".gz"):
        return gzip.open(path, mode + "t", encoding="utf-8", newline="")
    return open(path, mode, encoding="utf-8", newline="")


def _as_text(stream) -> tuple[IO[str], bool]:
    """Return a text view of ``stream`` and whether a wrapper was created."""
    if isinstance(stream, io.TextIOBase):
        return stream, False
    if "b" in getattr(stream, "mode", "b"):
        return io.TextIOWrapper(stream, encoding="utf-8", newline=""), True
    return stream, False


def iter_edges(
    stream,
    source_filter: Iterable[str] | None = None,
    strict: bool = False,
    stats: ReadStats | None = None,
) -> Iterator[Edge]:
    """Yield edges from a TSV stream in file order.

    ``stream`` may be a binary or text file object. In lenient mode rows with a
    wrong field count (or empty mandatory fields) are recorded in
    ``stats.errors`` and skipped; with ``strict=True`` the first one raises.
    """
    stats = stats if stats is not None else ReadStats()
    wanted = set(source_filter) if source_filter is not None else None
    text, wrapped = _as_text(stream)
    try:
        yield from _iter_rows(text, wanted, strict, stats)
    finally:
        if wrapped:
            text.detach()


def _iter_rows(text, wanted, strict, stats) -> Iterator[Edge]:
    header_line = text.readline()
    if not header_line:
        raise EdgeFormatError("empty input, header required", 1)
    header = header_line.rstrip("\r\n").split("\t")
    missing = [c for c in MANDATORY_COLUMNS if c not in header]
    if missing:
        raise EdgeFormatError(f"header is missing mandatory column(s): {', '.join(missing)}", 1)
    positions = [(_FIELD_FOR_COLUMN[c], i) for i, c in enumerate(header) if c in _FIELD_FOR_COLUMN]
    width = len(header)

    for lineno, line in enumerate(text, start=2):
        line = line.rstrip("\r\n")
        if not line:
            continue
        stats.rows += 1
        values = line.split("\t")
        if len(values) != width:
            err = EdgeFormatError(f"expected {width} fields, found {len(values)}", lineno)
            if strict:
                raise err
            stats.errors.append(err)
            continue
        kwargs = {name: values[i] for name, i in positions}
        dim = kwargs.pop("dimension", "") or None
        if wanted is not None and kwargs.get("source", "") not in wanted:
            stats.filtered += 1
            continue
        try:
            edge = Edge(dimension=Dimension.parse(dim) if dim else None, **kwargs)
        except ValueError as exc:
            err = EdgeFormatError(str(exc), lineno)
            if strict:
                raise err from None
            stats.errors.append(err)
            continue
        stats.yielded += 1
        yield edge


def read_edges(
    stream,
    source_filter: Iterable[str] | None = None,
    strict: bool = False,
) -> tuple[list[Edge], ReadStats]:
    """Eager wrapper around :func:`iter_edges`."""
    stats = ReadStats()
    edges = list(iter_edges(stream, source_filter=source_filter, strict=strict, stats=stats))
    return edges, stats


def _check_field(value: str, edge_id: str, column: str) -> str:
    if "\t" in value or "\n" in value or "\r" in value:
        raise EdgeFormatError(
            f"illegal control character in field {column!r} of edge {edge_id!r}"
        )
    return value


def format_edge(edge: Edge) -> str:
    values = (
        edge.id,
        edge.node1,
        edge.relation,
        edge.node2,
        edge.node1_label,
        edge.node2_label,
        edge.relation_label,
        edge.dimension.value if edge.dimension is not None else "",
        edge.source,
        edge.sentence,
    )
    return "\t".join(_check_field(v, edge.id, c) for v, c in zip(values, EDGE_COLUMNS))


def write_edges(edges: Iterable[Edge], stream) -> int:
    """Write the full 10-column header and one row per edge; return the row count."""
    text, wrapped = _as_text(stream)
    n = 0
    try:
        text.write("\t".join(EDGE_COLUMNS) + "\n")
        for edge in edges:
            text.write(format_edge(edge) + "\n")
            n += 1
        text.flush()
    finally:
        if wrapped:
            text.detach()
    return n


def iter_assigned(
    edges: Iterable[Edge],
    table: MappingTable,
    stats: AssignStats,
    keep_existing: bool = False,
) -> Iterator[Edge]:
    cache: dict[tuple[str, str], object] = {}
    for edge in edges:
        if keep_existing and edge.dimension is not None:
            stats.mapped += 1
            yield edge
            continue
        key = (edge.relation, edge.source)
        found = cache.get(key)
        if found is None and key not in cache:
            found = cache[key] = table.resolve(edge.relation, edge.source)
        if found is EXCLUDED:
            stats.excluded += 1
            continue
        if found is None:
            stats.unmapped[edge.relation] += 1
            yield edge.with_dimension(None) if edge.dimension is not None else edge
            continue
        stats.mapped += 1
        yield edge if edge.dimension is found.dimension else edge.with_dimension(found.dimension)


def assign_dimensions(
    edges: Iterable[Edge],
    table: MappingTable | None = None,
    keep_existing: bool = False,
) -> tuple[list[Edge], AssignStats]:
    """Set each edge's dimension from ``table``.

    Excluded relations are dropped, unmapped ones pass through without a
    dimension and are tallied per relation. With ``keep_existing`` edges that
    already carry a dimension are left untouched.
    """
    table = table if table is not None else default_mapping()
    stats = AssignStats()
    enriched = list(iter_assigned(edges, table, stats, keep_existing=keep_existing))
    return enriched, stats


class DimensionAssigner(TransformerMixin, BaseEstimator):
    """Estimator wrapper around :func:`assign_dimensions`.

    ``fit`` only resolves the mapping and records per-relation statistics for
    the training edges; ``transform`` enriches any edge sequence.

    Parameters
    ----------
    mapping : MappingTable, str or Path, optional
        Table to use; a path is read with :func:`kgdim.core.load_mapping`.
        Defaults to the built-in mapping.
    keep_existing : bool
        Leave edges that already have a dimension untouched.
    """

    def __init__(self, mapping=None, keep_existing=False):
        self.mapping = mapping
        self.keep_existing = keep_existing

    def _resolve_table(self) -> MappingTable:
        if self.mapping is None:
            return default_mapping()
        if isinstance(self.mapping, MappingTable):
            return self.mapping
        from .core import load_mapping

        return load_mapping(self.mapping)

    def fit(self, X, y=None):
        edges = _check_edges(X)
        self.table_ = self._resolve_table()
        _, self.stats_ = assign_dimensions(edges, self.table_, self.keep_existing)
        return self

    def transform(self, X):
        from sklearn.utils.validation import check_is_fitted

        check_is_fitted(self, "table_")
        enriched, stats = assign_dimensions(_check_edges(X), self.table_, self.keep_existing)
        self.last_stats_ = stats
        return enriched


def _check_edges(X) -> list[Edge]:
    edges = list(X)
    for i, e in enumerate(edges):
        if not isinstance(e, Edge):
            raise TypeError(f"expected Edge instances, got {type(e).__name__} at position {i}")
    return edges
