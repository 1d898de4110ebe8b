"""k-means over edge embeddings and agreement with dimension labels."""

from __future__ import annotations

import math
import random
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .core import Dimension, Edge

__all__ = [
    "VectorTable",
    "VectorFormatError",
    "Clustering",
    "AgreementReport",
    "EdgeKMeans",
    "load_vectors",
    "kmeans",
    "dimension_partition",
    "adjusted_rand_index",
    "cluster_dimension_jaccard",
    "cluster_profile",
    "sample_ids",
]

# rows per distance block; fixed so that results never depend on thread count
_CHUNK = 2048


class VectorFormatError(ValueError):
    pass


@dataclass
class VectorTable:
    ids: list[str]
    matrix: np.ndarray  # (n, width) float64

    def __post_init__(self):
        if self.matrix.ndim != 2 or self.matrix.shape[0] != len(self.ids):
            raise VectorFormatError("matrix must be 2-D with one row per id")
        if len(set(self.ids)) != len(self.ids):
            raise VectorFormatError("duplicate ids in vector table")
        if not np.isfinite(self.matrix).all():
            raise VectorFormatError("non-finite component in vector table")

    @property
    def width(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return len(self.ids)

    @classmethod
    def from_mapping(cls, vectors: Mapping[str, Sequence[float]]) -> "VectorTable":
        ids = list(vectors)
        return cls(ids, np.asarray([vectors[i] for i in ids], dtype=np.float64).reshape(len(ids), -1))

    def sorted(self) -> "VectorTable":
        order = sorted(range(len(self.ids)), key=self.ids.__getitem__)
        return VectorTable([self.ids[i] for i in order], self.matrix[order])


def load_vectors(stream) -> VectorTable:
    """Parse ``id<TAB>v0,v1,...`` or ``id<TAB>v0 v1 ...`` rows.

    The component separator is detected per row: commas if present, else
    whitespace. A plain whitespace-separated row without a tab is also
    accepted (first token is the id).
    """
    ids: list[str] = []
    rows: list[list[float]] = []
    seen: dict[str, int] = {}
    width = None
    for rowno, line in enumerate(stream, start=1):
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        line = line.rstrip("\r\n")
        if not line.strip():
            continue
        if "\t" in line:
            vid, rest = line.split("\t", 1)
        else:
            parts = line.split(None, 1)
            vid, rest = parts[0], parts[1] if len(parts) > 1 else ""
        tokens = rest.split(",") if "," in rest else rest.split()
        try:
            vec = [float(t) for t in tokens]
        except ValueError:
            raise VectorFormatError(f"unparseable vector component at row {rowno}") from None
        if not vec:
            raise VectorFormatError(f"empty vector at row {rowno}")
        if not all(math.isfinite(v) for v in vec):
            raise VectorFormatError(f"non-finite component at row {rowno}")
        if width is None:
            width = len(vec)
        elif len(vec) != width:
            raise VectorFormatError(
                f"inconsistent vector width at row {rowno}: expected {width}, found {len(vec)}"
            )
        if vid in seen:
            raise VectorFormatError(f"duplicate id {vid!r} at row {rowno} (first at row {seen[vid]})")
        seen[vid] = rowno
        ids.append(vid)
        rows.append(vec)
    matrix = np.asarray(rows, dtype=np.float64).reshape(len(rows), width or 0)
    return VectorTable(ids, matrix)


def _sq_distances(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    # elementwise form so every row's result is independent of how rows are blocked
    out = np.empty((X.shape[0], C.shape[0]), dtype=np.float64)
    diff = np.empty_like(X, dtype=np.float64)
    for j in range(C.shape[0]):
        np.subtract(X, C[j], out=diff)
        out[:, j] = np.einsum("ij,ij->i", diff, diff)
    return out


def _assign(X: np.ndarray, C: np.ndarray, n_threads: int, pool: ThreadPoolExecutor | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Nearest centroid (lowest index wins ties) and squared distance per row."""
    n = X.shape[0]
    labels = np.empty(n, dtype=np.intp)
    mind = np.empty(n, dtype=np.float64)
    starts = range(0, n, _CHUNK)

    def block(start):
        stop = min(start + _CHUNK, n)
        d = _sq_distances(X[start:stop], C)
        lab = np.argmin(d, axis=1)
        labels[start:stop] = lab
        mind[start:stop] = d[np.arange(stop - start), lab]

    if pool is not None and n > _CHUNK:
        list(pool.map(block, starts))
    elif n_threads > 1 and n > _CHUNK:
        with ThreadPoolExecutor(max_workers=n_threads) as own:
            list(own.map(block, starts))
    else:
        for s in starts:
            block(s)
    return labels, mind


def _kmeanspp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]), dtype=np.float64)
    centers[0] = X[rng.integers(n)]
    closest = _sq_distances(X, centers[:1])[:, 0]
    for i in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            # all remaining mass is on existing centers; pick uniformly
            idx = int(rng.integers(n))
        else:
            # inverse-CDF draw keeps the result reproducible across numpy versions
            cdf = np.cumsum(closest)
            idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
            idx = min(idx, n - 1)
        centers[i] = X[idx]
        closest = np.minimum(closest, _sq_distances(X, centers[i : i + 1])[:, 0])
    return centers


def _update_centers(X, labels, mind, centers, k):
    """Cluster means; empty clusters are reseeded at the farthest points."""
    new = np.zeros_like(centers)
    counts = np.bincount(labels, minlength=k)
    # rows are in canonical id order and bincount sums sequentially, so order is fixed
    for col in range(X.shape[1]):
        new[:, col] = np.bincount(labels, weights=X[:, col], minlength=k)
    nonempty = counts > 0
    new[nonempty] /= counts[nonempty, None]
    empty = np.flatnonzero(~nonempty)
    if empty.size:
        # stable sort: farthest first, lowest row index among equals
        far = np.argsort(-mind, kind="stable")
        for j, row in zip(empty, far):
            new[j] = X[row]
    return new, int(empty.size)


def _lloyd(X, k, seed, max_iter, tol, n_threads):
    pool = ThreadPoolExecutor(max_workers=n_threads) if n_threads > 1 else None
    try:
        return _lloyd_loop(X, k, seed, max_iter, tol, n_threads, pool)
    finally:
        if pool is not None:
            pool.shutdown()


def _lloyd_loop(X, k, seed, max_iter, tol, n_threads, pool):
    rng = np.random.default_rng(seed)
    centers = _kmeanspp(X, k, rng)
    labels, mind = _assign(X, centers, n_threads, pool)
    history = [float(mind.sum())]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        new_centers, _ = _update_centers(X, labels, mind, centers, k)
        shift = float(np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max())
        centers = new_centers
        new_labels, mind = _assign(X, centers, n_threads, pool)
        history.append(float(mind.sum()))
        converged = shift < tol or np.array_equal(new_labels, labels)
        labels = new_labels
        if converged:
            break
    return labels, centers, history, n_iter


@dataclass
class Clustering:
    k: int
    assignment: dict[str, int]
    centroids: np.ndarray
    inertia: float
    seed: int
    iterations: int
    inertia_history: list[float] = field(default_factory=list)

    def members(self) -> dict[int, list[str]]:
        out: dict[int, list[str]] = {c: [] for c in range(self.k)}
        for eid, c in self.assignment.items():
            out[c].append(eid)
        return out


class EdgeKMeans(ClusterMixin, BaseEstimator):
    """Lloyd's k-means with k-means++ seeding.

    Deterministic for a fixed ``seed``; ``n_threads`` only changes how the
    assignment step is scheduled, never its result.

    Parameters
    ----------
    n_clusters : int, default=13
    seed : int, default=0
    max_iter : int, default=300
    tol : float, default=1e-4
        Stop once no centroid moves farther than this (Euclidean).
    n_threads : int, default=1

    Attributes
    ----------
    labels_, cluster_centers_, inertia_, n_iter_, inertia_history_
    """

    def __init__(self, n_clusters=13, seed=0, max_iter=300, tol=1e-4, n_threads=1):
        self.n_clusters = n_clusters
        self.seed = seed
        self.max_iter = max_iter
        self.tol = tol
        self.n_threads = n_threads

    def _validate(self, n_samples):
        if not isinstance(self.n_clusters, (int, np.integer)) or self.n_clusters < 1:
            raise ValueError(f"n_clusters must be a positive integer, got {self.n_clusters!r}")
        if n_samples < self.n_clusters:
            raise ValueError(
                f"n_samples={n_samples} should be >= n_clusters={self.n_clusters}"
            )
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.tol < 0:
            raise ValueError("tol must be non-negative")

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self._validate(X.shape[0])
        labels, centers, history, n_iter = _lloyd(
            X, int(self.n_clusters), self.seed, self.max_iter, self.tol, max(1, int(self.n_threads))
        )
        self.labels_ = labels
        self.cluster_centers_ = centers
        self.inertia_ = history[-1]
        self.inertia_history_ = history
        self.n_iter_ = n_iter
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "cluster_centers_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but EdgeKMeans is expecting {self.n_features_in_}"
            )
        return _assign(X, self.cluster_centers_, max(1, int(self.n_threads)))[0]

    def score(self, X, y=None):
        check_is_fitted(self, "cluster_centers_")
        X = check_array(X, dtype=np.float64)
        return -float(_assign(X, self.cluster_centers_, 1)[1].sum())


def kmeans(
    vectors: VectorTable,
    k: int = 13,
    seed: int = 0,
    max_iter: int = 300,
    tol: float = 1e-4,
    n_threads: int = 1,
) -> Clustering:
    """Cluster a vector table; rows are put in sorted id order first so the
    result does not depend on input row order."""
    if len(vectors) < k:
        raise ValueError(f"cannot form {k} clusters from {len(vectors)} vectors")
    table = vectors.sorted()
    est = EdgeKMeans(n_clusters=k, seed=seed, max_iter=max_iter, tol=tol, n_threads=n_threads)
    est.fit(table.matrix)
    return Clustering(
        k=k,
        assignment={i: int(c) for i, c in zip(table.ids, est.labels_)},
        centroids=est.cluster_centers_,
        inertia=est.inertia_,
        seed=seed,
        iterations=est.n_iter_,
        inertia_history=est.inertia_history_,
    )


def dimension_partition(edges: Iterable[Edge]) -> tuple[dict[str, Dimension], int]:
    """Map edge id to dimension; returns the map and the number of skipped
    dimensionless edges."""
    out: dict[str, Dimension] = {}
    excluded = 0
    for e in edges:
        if e.dimension is None:
            excluded += 1
        else:
            out[e.id] = e.dimension
    return out, excluded


def _comb2(x):
    return x * (x - 1) // 2


def _aligned_labels(pa, pb) -> tuple[list, list]:
    if isinstance(pa, Mapping) or isinstance(pb, Mapping):
        if not (isinstance(pa, Mapping) and isinstance(pb, Mapping)):
            raise TypeError("both partitions must be mappings, or both sequences")
        if pa.keys() != pb.keys():
            missing = len(set(pa) ^ set(pb))
            raise ValueError(f"partitions cover different id sets ({missing} ids differ)")
        ids = list(pa)
        return [pa[i] for i in ids], [pb[i] for i in ids]
    la, lb = list(pa), list(pb)
    if len(la) != len(lb):
        raise ValueError(f"partitions have different sizes: {len(la)} vs {len(lb)}")
    return la, lb


def adjusted_rand_index(pa, pb) -> float:
    """Adjusted Rand index between two partitions of the same items.

    Partitions are either ``id -> label`` mappings over identical id sets or
    equal-length label sequences. When the expected and maximum index
    coincide (e.g. both partitions are a single cluster, or both all
    singletons) the result is 1.0 for identical partitions and 0.0 otherwise.
    """
    la, lb = _aligned_labels(pa, pb)
    n = len(la)
    contingency = Counter(zip(la, lb))
    rows, cols = Counter(la), Counter(lb)
    index = sum(_comb2(v) for v in contingency.values())
    sum_a = sum(_comb2(v) for v in rows.values())
    sum_b = sum(_comb2(v) for v in cols.values())
    total = _comb2(n)
    expected = sum_a * sum_b / total if total else 0.0
    max_index = (sum_a + sum_b) / 2
    if max_index == expected:
        identical = len(contingency) == len(rows) == len(cols)
        return 1.0 if identical else 0.0
    return (index - expected) / (max_index - expected)


@dataclass
class AgreementReport:
    pair_jaccard: dict[tuple[int, Dimension], float]
    top_pairs: list[tuple[int, Dimension, float]]
    top_per_cluster: dict[int, list[tuple[Dimension, float]]]
    intersections: dict[tuple[int, Dimension], int]
    ari: float | None = None


def cluster_dimension_jaccard(
    clustering: Clustering | Mapping[str, int],
    dims: Mapping[str, Dimension],
    top_n: int = 3,
) -> AgreementReport:
    """Jaccard between every cluster's edge set and every dimension's edge set.

    Also computes the ARI between the two partitions.
    """
    assignment = clustering.assignment if isinstance(clustering, Clustering) else clustering
    if assignment.keys() != dims.keys():
        raise ValueError("clustering and dimension partition cover different edge ids")
    csize: Counter = Counter(assignment.values())
    dsize: Counter = Counter(dims.values())
    inter: Counter = Counter((assignment[i], dims[i]) for i in assignment)
    clusters = range(clustering.k) if isinstance(clustering, Clustering) else sorted(csize)
    dim_order = [d for d in Dimension if d in dsize]

    pj: dict[tuple[int, Dimension], float] = {}
    for c in clusters:
        for d in dim_order:
            i = inter.get((c, d), 0)
            u = csize.get(c, 0) + dsize[d] - i
            pj[(c, d)] = i / u if u else 0.0
    top = sorted(((c, d, j) for (c, d), j in pj.items()), key=lambda t: (-t[2], t[0], t[1].rank))
    per_cluster = {
        c: sorted(((d, pj[(c, d)]) for d in dim_order), key=lambda t: (-t[1], t[0].rank))[:top_n]
        for c in clusters
    }
    return AgreementReport(
        pair_jaccard=pj,
        top_pairs=top,
        top_per_cluster=per_cluster,
        intersections=dict(inter),
        ari=adjusted_rand_index(dict(assignment), dict(dims)),
    )


@dataclass
class ClusterProfile:
    size: int
    dimensions: dict[Dimension | None, int]
    top_nodes: list[tuple[str, int]]

    def share(self, dimension: Dimension | None) -> float:
        return self.dimensions.get(dimension, 0) / self.size if self.size else 0.0


def cluster_profile(
    clustering: Clustering | Mapping[str, int], edges: Iterable[Edge], top_n: int = 10
) -> dict[int, ClusterProfile]:
    """Dimension histogram and most frequent nodes (both endpoints) per cluster."""
    assignment = clustering.assignment if isinstance(clustering, Clustering) else clustering
    hist: dict[int, Counter] = defaultdict(Counter)
    nodes: dict[int, Counter] = defaultdict(Counter)
    sizes: Counter = Counter()
    for e in edges:
        c = assignment.get(e.id)
        if c is None:
            continue
        sizes[c] += 1
        hist[c][e.dimension] += 1
        nodes[c][e.node1] += 1
        nodes[c][e.node2] += 1
    clusters = range(clustering.k) if isinstance(clustering, Clustering) else sorted(sizes)
    return {
        c: ClusterProfile(
            size=sizes[c],
            dimensions=dict(hist[c]),
            top_nodes=sorted(nodes[c].items(), key=lambda kv: (-kv[1], kv[0]))[:top_n],
        )
        for c in clusters
    }


def sample_ids(ids: Iterable[Hashable], n: int, seed: int = 0) -> list:
    """Seeded uniform sample of ``n`` ids, returned in sorted order."""
    pool = sorted(ids)
    if n >= len(pool):
        return pool
    return sorted(random.Random(seed).sample(pool, n))
