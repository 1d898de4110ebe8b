"""Synthetic multiple-choice QA sets, one bucket per dimension."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import random
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .core import Dimension, Edge
from .lexicalize import TemplateTable, default_templates, edge_labels, lexicalize_edge
from .overlap import first_label, normalize_node

__all__ = [
    "MASK",
    "ATOMIC_SOURCE",
    "STOPWORDS",
    "QAItem",
    "QABucket",
    "Stem",
    "DistractorPool",
    "SamplingError",
    "SplitError",
    "make_stem",
    "build_pool",
    "sample_distractors",
    "content_tokens",
    "load_atomic_split",
    "split_items",
    "build_buckets",
    "write_buckets",
]

logger = logging.getLogger(__name__)

MASK = "[MASK]"
ATOMIC_SOURCE = "AT"
DEFAULT_EXCLUDE = frozenset({"/r/RelatedTo"})

STOPWORDS = frozenset(
    """a an the of to in on at for from by with and or but not no is are was were be been
    being am do does did has have had it its this that these those as into onto than then
    so such can could will would shall should may might must i you he she we they me him
    her us them my your his our their personx persony others someone something some any
    one very up out over""".split()
)
_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


class SamplingError(RuntimeError):
    pass


class SplitError(ValueError):
    pass


@dataclass(frozen=True)
class Stem:
    question: str
    answer: str


@dataclass
class QAItem:
    id: str
    question: str
    answer: str
    distractors: tuple[str, str]
    dimension: Dimension
    source: str
    provenance_edge: str
    split: str = "train"
    seed_path: tuple[int, ...] = ()
    relaxed: bool = False

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "question": self.question,
            "answer": self.answer,
            "distractors": list(self.distractors),
            "dimension": self.dimension.value,
            "source": self.source,
            "provenance_edge": self.provenance_edge,
        }


@dataclass
class QABucket:
    dimension: Dimension
    train: list[QAItem] = field(default_factory=list)
    dev: list[QAItem] = field(default_factory=list)


def make_stem(edge: Edge, templates: TemplateTable | None = None) -> Stem:
    """Lexicalize ``edge`` with its tail replaced by the blank marker."""
    _, tail = edge_labels(edge)
    return Stem(lexicalize_edge(edge, templates, tail=MASK), tail)


def content_tokens(text: str) -> set[str]:
    return {t for t in _TOKEN.findall(text.casefold()) if t not in STOPWORDS}


@dataclass
class DistractorPool:
    """Candidate answers per relation plus an index of known true triples."""

    candidates: dict[str, list[str]]  # relation -> display labels, sorted by key
    known: dict[tuple[str, str], set[str]]  # (head key, relation) -> tail keys

    def is_known(self, head: str, relation: str, candidate: str) -> bool:
        return normalize_node(candidate) in self.known.get((normalize_node(head), relation), ())


def build_pool(edges: Iterable[Edge], index_edges: Iterable[Edge] | None = None) -> DistractorPool:
    """Build candidate lists from ``edges`` and the true-triple index from
    ``index_edges`` (defaults to the same edges).

    Candidates are de-duplicated by node key and sorted, so the pool does not
    depend on edge order.
    """
    edges = list(edges)
    by_rel: dict[str, dict[str, str]] = defaultdict(dict)
    for e in edges:
        tail = first_label(e.node2_label)
        key = normalize_node(tail)
        if not key:
            continue
        seen = by_rel[e.relation]
        # smallest display form wins so the choice is order independent
        if key not in seen or tail < seen[key]:
            seen[key] = tail
    candidates = {
        rel: [labels[k] for k in sorted(labels)] for rel, labels in sorted(by_rel.items())
    }
    known: dict[tuple[str, str], set[str]] = defaultdict(set)
    for e in edges if index_edges is None else index_edges:
        known[(normalize_node(e.node1_label), e.relation)].add(normalize_node(e.node2_label))
    return DistractorPool(candidates, dict(known))


def _item_rng(seed: int, edge_id: str) -> random.Random:
    digest = hashlib.sha256(f"{seed}\x1f{edge_id}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:16], "big"))


def sample_distractors(
    edge: Edge,
    answer: str,
    pool: DistractorPool,
    seed: int = 0,
    budget: int = 64,
    n: int = 2,
) -> tuple[tuple[str, ...], tuple[int, ...], bool]:
    """Draw ``n`` distractors for ``edge`` from tails of the same relation.

    A candidate is rejected if it (a) equals the answer or an already chosen
    distractor by node key, (b) forms a known triple with the edge head under
    the edge relation, or (c) shares a content token with the answer. After
    ``budget`` draws rule (c) is dropped for another ``budget`` draws.

    Returns the distractors, the drawn candidate indices and whether rule (c)
    had to be relaxed. Raises :class:`SamplingError` when fewer than ``n``
    survive.
    """
    cands = pool.candidates.get(edge.relation, [])
    if len(cands) < n:
        raise SamplingError(f"relation {edge.relation!r} has fewer than {n} candidate answers")
    rng = _item_rng(seed, edge.id)
    answer_key = normalize_node(answer)
    answer_tokens = content_tokens(answer)
    head_key = normalize_node(edge.node1_label)
    known = pool.known.get((head_key, edge.relation), set())

    chosen: list[str] = []
    chosen_keys: set[str] = set()
    draws: list[int] = []
    relaxed = False
    for attempt in range(2 * budget):
        if attempt == budget:
            relaxed = True
        idx = rng.randrange(len(cands))
        draws.append(idx)
        cand = cands[idx]
        key = normalize_node(cand)
        if key == answer_key or key in chosen_keys:
            continue
        if key in known:
            continue
        if not relaxed and content_tokens(cand) & answer_tokens:
            continue
        chosen.append(cand)
        chosen_keys.add(key)
        if len(chosen) == n:
            return tuple(chosen), tuple(draws), relaxed
    raise SamplingError(
        f"edge {edge.id!r}: only {len(chosen)} of {n} distractors survived filtering"
    )


def load_atomic_split(path: str | Path) -> dict[str, str]:
    """Read ``event<TAB>split`` rows into a node-key -> split map.

    ``trn``/``train`` map to train, ``dev`` to dev and ``tst``/``test`` to
    test. A header row starting with ``event`` is skipped.
    """
    aliases = {"trn": "train", "train": "train", "dev": "dev", "tst": "test", "test": "test"}
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line or (lineno == 1 and line.split("\t")[0] == "event"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or parts[1].strip().lower() not in aliases:
                raise SplitError(f"{path}:{lineno}: expected 'event<TAB>trn|dev|tst'")
            out[normalize_node(parts[0])] = aliases[parts[1].strip().lower()]
    return out


def _split_key(seed: int, provenance: str) -> bytes:
    return hashlib.sha256(f"split\x1f{seed}\x1f{provenance}".encode("utf-8")).digest()


def dev_quota(n: int, dev_fraction: float) -> int:
    return math.floor(n * dev_fraction + 0.5)


def split_items(
    items: list[QAItem],
    dev_fraction: float = 0.05,
    atomic_split: Mapping[str, str] | None = None,
    source_aware: bool = True,
    strict: bool = False,
    seed: int = 0,
    heads: Mapping[str, str] | None = None,
) -> dict[str, str]:
    """Assign ``train``/``dev`` (or ``test``) to items by provenance edge.

    Hash-split items are ranked by a seeded hash of their provenance edge and
    exactly ``floor(n * dev_fraction + 0.5)`` of them go to dev. When
    ``source_aware`` is set, ATOMIC items instead follow ``atomic_split``,
    looked up by the head event (``heads`` maps provenance edge to head label).
    ATOMIC events absent from the split file fall back to hashing, unless
    ``strict``.
    """
    if not 0.0 < dev_fraction < 1.0:
        raise SplitError(f"dev_fraction must lie in (0, 1), got {dev_fraction}")
    out: dict[str, str] = {}
    hashed: list[QAItem] = []
    for it in items:
        if source_aware and it.source == ATOMIC_SOURCE:
            if atomic_split is None:
                if strict:
                    raise SplitError("ATOMIC items present but no official split file was given")
                hashed.append(it)
                continue
            head = heads.get(it.provenance_edge, "") if heads else it.question
            split = atomic_split.get(normalize_node(head))
            if split is None:
                if strict:
                    raise SplitError(f"ATOMIC event {head!r} not found in the split file")
                hashed.append(it)
                continue
            out[it.provenance_edge] = split
        else:
            hashed.append(it)
    hashed.sort(key=lambda it: _split_key(seed, it.provenance_edge))
    n_dev = dev_quota(len(hashed), dev_fraction)
    for rank, it in enumerate(hashed):
        out[it.provenance_edge] = "dev" if rank < n_dev else "train"
    return out


@dataclass
class BucketReport:
    train: Counter = field(default_factory=Counter)
    dev: Counter = field(default_factory=Counter)
    test_dropped: Counter = field(default_factory=Counter)
    sampling_dropped: Counter = field(default_factory=Counter)
    relaxed: Counter = field(default_factory=Counter)
    excluded_relation: int = 0
    no_dimension: int = 0
    duplicate_edge: int = 0
    unlexicalizable: int = 0

    def rows(self) -> list[tuple[str, int, int]]:
        dims = [d for d in Dimension if self.train[d] or self.dev[d]]
        return [(d.value, self.train[d], self.dev[d]) for d in dims]


def build_buckets(
    edges: Iterable[Edge],
    templates: TemplateTable | None = None,
    exclude_relations: Iterable[str] = DEFAULT_EXCLUDE,
    seed: int = 0,
    dev_fraction: float = 0.05,
    atomic_split: Mapping[str, str] | None = None,
    strict: bool = False,
    budget: int = 64,
) -> tuple[dict[Dimension, QABucket], BucketReport]:
    """Generate QA items for every dimension-tagged edge and split them.

    Buckets are returned in dimension order; items inside a bucket are ordered
    by provenance edge id, so output does not depend on input edge order.
    """
    templates = templates if templates is not None else default_templates()
    excluded = set(exclude_relations)
    report = BucketReport()

    all_edges = sorted(edges, key=lambda e: e.id)
    usable: list[Edge] = []
    seen_ids: set[str] = set()
    for e in all_edges:
        if e.dimension is None:
            report.no_dimension += 1
        elif e.relation in excluded:
            report.excluded_relation += 1
        elif e.id in seen_ids:
            report.duplicate_edge += 1
        else:
            seen_ids.add(e.id)
            usable.append(e)

    # every dimension-tagged edge counts as a true fact for rule (b)
    pool = build_pool(usable, index_edges=[e for e in all_edges if e.dimension is not None])

    items: list[QAItem] = []
    heads: dict[str, str] = {}
    for e in usable:
        try:
            stem = make_stem(e, templates)
        except ValueError:
            report.unlexicalizable += 1
            continue
        try:
            distractors, draws, relaxed = sample_distractors(e, stem.answer, pool, seed, budget)
        except SamplingError:
            report.sampling_dropped[e.dimension] += 1
            continue
        if relaxed:
            report.relaxed[e.dimension] += 1
        heads[e.id] = first_label(e.node1_label)
        items.append(
            QAItem(
                id=f"q:{e.id}",
                question=stem.question,
                answer=stem.answer,
                distractors=distractors,
                dimension=e.dimension,
                source=e.source,
                provenance_edge=e.id,
                seed_path=draws,
                relaxed=relaxed,
            )
        )

    by_dim: dict[Dimension, list[QAItem]] = defaultdict(list)
    for it in items:
        by_dim[it.dimension].append(it)

    buckets: dict[Dimension, QABucket] = {}
    for d in Dimension:
        group = by_dim.get(d)
        if not group:
            continue
        splits = split_items(group, dev_fraction, atomic_split, True, strict, seed, heads)
        bucket = QABucket(d)
        for it in group:
            it.split = splits[it.provenance_edge]
            if it.split == "test":
                report.test_dropped[d] += 1
                continue
            (bucket.dev if it.split == "dev" else bucket.train).append(it)
        report.train[d] = len(bucket.train)
        report.dev[d] = len(bucket.dev)
        if bucket.train or bucket.dev:
            buckets[d] = bucket
    return buckets, report


def dumps_jsonl(items: Iterable[QAItem]) -> str:
    return "".join(
        json.dumps(it.to_json(), ensure_ascii=False, sort_keys=False) + "\n" for it in items
    )


def bucket_files(buckets: Mapping[Dimension, QABucket], report: BucketReport) -> dict[str, str]:
    """File name -> content for a full output tree."""
    files: dict[str, str] = {}
    for d, b in buckets.items():
        files[f"{d.value}.train.jsonl"] = dumps_jsonl(b.train)
        files[f"{d.value}.dev.jsonl"] = dumps_jsonl(b.dev)
    lines = ["dimension\ttrain\tdev"] + [f"{d}\t{t}\t{v}" for d, t, v in report.rows()]
    files["report.tsv"] = "\n".join(lines) + "\n"
    log = ["id\tsplit\trelaxed\tdraws"]
    for b in buckets.values():
        for it in sorted(b.train + b.dev, key=lambda i: i.id):
            log.append(f"{it.id}\t{it.split}\t{int(it.relaxed)}\t{','.join(map(str, it.seed_path))}")
    files["sampling_log.tsv"] = "\n".join(log) + "\n"
    return files


def write_buckets(buckets: Mapping[Dimension, QABucket], report: BucketReport, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, content in bucket_files(buckets, report).items():
        path = out / name
        path.write_text(content, encoding="utf-8", newline="")
        written.append(path)
    return written
