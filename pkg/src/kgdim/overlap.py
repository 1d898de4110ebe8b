"""Cross-source triple overlap on label-normalized triples."""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable

from .core import Dimension, Edge

__all__ = [
    "MODES",
    "NormalizedTriple",
    "SetOverlap",
    "OverlapReport",
    "normalize_node",
    "first_label",
    "triple_set",
    "jaccard",
    "pairwise_overlap",
    "report_rows",
]

MODES = ("relation", "dimension")

_WS = re.compile(r"\s+")
_WN_SENSE = re.compile(r"^(.+)\.[nvasr]\.\d{2}$")


def first_label(label: str) -> str:
    return label.split("|", 1)[0].strip()


def normalize_node(label: str) -> str:
    """Node key used for cross-source comparison.

    >>> normalize_node("dish|plate")
    'dish'
    >>> normalize_node("  comfort   Food ")
    'comfort food'
    >>> normalize_node("food.n.01")
    'food'
    """
    text = first_label(label)
    m = _WN_SENSE.match(text)
    if m:
        text = m.group(1).replace("_", " ")
    return _WS.sub(" ", text).strip().casefold()


@dataclass(frozen=True, order=True)
class NormalizedTriple:
    head_key: str
    rel_key: str
    tail_key: str


def _rel_key(edge: Edge, mode: str) -> str | None:
    if mode == "relation":
        return edge.relation
    if mode == "dimension":
        return edge.dimension.value if edge.dimension is not None else None
    raise ValueError(f"unknown overlap mode {mode!r}; expected 'relation' or 'dimension'")


def triple_set(
    edges: Iterable[Edge], mode: str = "relation", counts: dict | None = None
) -> set[NormalizedTriple]:
    """Distinct normalized triples; in dimension mode dimensionless edges are
    skipped and tallied in ``counts['skipped']`` when ``counts`` is given."""
    if mode not in MODES:
        raise ValueError(f"unknown overlap mode {mode!r}; expected 'relation' or 'dimension'")
    out: set[NormalizedTriple] = set()
    skipped = 0
    for e in edges:
        rel = _rel_key(e, mode)
        if rel is None:
            skipped += 1
            continue
        out.add(NormalizedTriple(normalize_node(e.node1_label), rel, normalize_node(e.node2_label)))
    if counts is not None:
        counts["skipped"] = counts.get("skipped", 0) + skipped
    return out


@dataclass(frozen=True)
class SetOverlap:
    intersection: int
    union: int
    jaccard: float


def jaccard(a: set, b: set) -> SetOverlap:
    if len(a) > len(b):
        a, b = b, a
    inter = sum(1 for t in a if t in b)
    union = len(a) + len(b) - inter
    return SetOverlap(inter, union, inter / union if union else 0.0)


@dataclass
class OverlapReport:
    pair: tuple[str, str]
    mode: str
    intersection: int
    union: int
    jaccard: float
    # None marks a dimension one of the two sources never uses
    per_dimension: dict[Dimension, SetOverlap | None] = field(default_factory=dict)


def _by_source(edges: Iterable[Edge], sources: list[str], mode: str):
    wanted = set(sources)
    sets: dict[str, set[NormalizedTriple]] = {s: set() for s in sources}
    for e in edges:
        if e.source not in wanted:
            continue
        rel = _rel_key(e, mode)
        if rel is None:
            continue
        sets[e.source].add(
            NormalizedTriple(normalize_node(e.node1_label), rel, normalize_node(e.node2_label))
        )
    return sets


def pairwise_overlap(
    edges: Iterable[Edge],
    sources: list[str],
    mode: str = "relation",
    known_sources: Iterable[str] | None = None,
) -> list[OverlapReport]:
    """One report per unordered source pair, pairs in the order given.

    ``known_sources`` is the set of source ids present in the data; when given,
    a requested source outside it is an error.
    """
    if mode not in MODES:
        raise ValueError(f"unknown overlap mode {mode!r}; expected 'relation' or 'dimension'")
    sources = list(dict.fromkeys(sources))
    if len(sources) < 2:
        raise ValueError("at least two distinct sources are required for overlap")
    edges = list(edges) if known_sources is None else edges
    present = set(known_sources) if known_sources is not None else {e.source for e in edges}
    unknown = [s for s in sources if s not in present]
    if unknown:
        raise ValueError(f"unknown source id(s): {', '.join(unknown)}")

    sets = _by_source(edges, sources, mode)
    split: dict[str, dict[str, set[NormalizedTriple]]] = {}
    if mode == "dimension":
        for s, triples in sets.items():
            groups: dict[str, set[NormalizedTriple]] = defaultdict(set)
            for t in triples:
                groups[t.rel_key].add(t)
            split[s] = groups

    reports = []
    for a, b in combinations(sources, 2):
        total = jaccard(sets[a], sets[b])
        per_dim: dict[Dimension, SetOverlap | None] = {}
        if mode == "dimension":
            for d in Dimension:
                ta, tb = split[a].get(d.value), split[b].get(d.value)
                if ta is None and tb is None:
                    continue
                per_dim[d] = jaccard(ta, tb) if ta is not None and tb is not None else None
        reports.append(OverlapReport((a, b), mode, total.intersection, total.union, total.jaccard, per_dim))
    return reports


REPORT_COLUMNS = ("sourceA", "sourceB", "mode", "dimension", "intersection", "union", "jaccard")


def report_rows(reports: Iterable[OverlapReport]) -> list[tuple]:
    """Flatten reports into CSV rows; absent per-dimension cells are left empty."""
    rows = []
    for r in reports:
        rows.append((*r.pair, r.mode, "ALL", r.intersection, r.union, f"{r.jaccard:.6f}"))
        for d, ov in r.per_dimension.items():
            if ov is None:
                rows.append((*r.pair, r.mode, d.value, "", "", ""))
            else:
                rows.append((*r.pair, r.mode, d.value, ov.intersection, ov.union, f"{ov.jaccard:.6f}"))
    return rows
