"""Edge counts per (source, dimension)."""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from .core import Dimension, Edge

__all__ = ["CoverageMatrix", "coverage_counts", "render_coverage"]


@dataclass
class CoverageMatrix:
    counts: Counter = field(default_factory=Counter)  # (source, Dimension) -> n
    unassigned: Counter = field(default_factory=Counter)  # source -> n

    @property
    def sources(self) -> list[str]:
        return sorted({s for s, _ in self.counts})

    def source_totals(self) -> dict[str, int]:
        totals: Counter = Counter()
        for (s, _), n in self.counts.items():
            totals[s] += n
        return dict(totals)

    def dimension_totals(self) -> dict[Dimension, int]:
        totals: Counter = Counter()
        for (_, d), n in self.counts.items():
            totals[d] += n
        return dict(totals)

    @property
    def unassigned_total(self) -> int:
        return sum(self.unassigned.values())

    def __add__(self, other: "CoverageMatrix") -> "CoverageMatrix":
        return CoverageMatrix(self.counts + other.counts, self.unassigned + other.unassigned)


def coverage_counts(edges: Iterable[Edge], dedup: bool = False) -> CoverageMatrix:
    """Count edges per source and dimension.

    With ``dedup`` repeated ``(node1, relation, node2, source)`` rows count once.
    """
    m = CoverageMatrix()
    seen: set[tuple[str, str, str, str]] = set()
    for e in edges:
        if dedup:
            key = (e.node1, e.relation, e.node2, e.source)
            if key in seen:
                continue
            seen.add(key)
        if e.dimension is None:
            m.unassigned[e.source] += 1
        else:
            m.counts[(e.source, e.dimension)] += 1
    return m


def render_coverage(matrix: CoverageMatrix, format: str = "csv") -> str:
    """Render dimensions (table order) by sources (sorted); zero cells are empty.

    Dimensions without any edge are omitted, so an empty matrix renders as a
    header-only table.
    """
    sources = matrix.sources
    header = ["dimension", *sources]
    rows = []
    for d in Dimension:
        cells = [matrix.counts.get((s, d), 0) for s in sources]
        if not any(cells):
            continue
        rows.append([d.value, *(str(c) if c else "" for c in cells)])

    if format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return buf.getvalue()
    if format == "markdown":
        lines = ["| " + " | ".join(header) + " |", "|" + "|".join(["---"] + ["---:"] * len(sources)) + "|"]
        lines += ["| " + " | ".join(r) + " |" for r in rows]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown coverage format {format!r}; expected 'csv' or 'markdown'")
