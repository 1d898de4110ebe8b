import io
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.base import clone
from sklearn.metrics import adjusted_rand_score

from kgdim.clustering import (
    Clustering,
    EdgeKMeans,
    VectorFormatError,
    VectorTable,
    adjusted_rand_index,
    cluster_dimension_jaccard,
    cluster_profile,
    dimension_partition,
    kmeans,
    load_vectors,
    sample_ids,
)
from kgdim.core import Dimension

from conftest import make_edge


# -- oracles -----------------------------------------------------------------


def brute_force_ari(la, lb):
    """Pair-counting ARI over all item pairs (Hubert-Arabie form)."""
    a = b = c = d = 0
    for i, j in combinations(range(len(la)), 2):
        same_a, same_b = la[i] == la[j], lb[i] == lb[j]
        if same_a and same_b:
            a += 1
        elif same_a:
            b += 1
        elif same_b:
            c += 1
        else:
            d += 1
    denom = (a + b) * (b + d) + (a + c) * (c + d)
    return 2 * (a * d - b * c) / denom if denom else 1.0


def best_two_means(X):
    """Minimum 2-means SSE over every partition cut by a line through two
    points (with both points tried on either side); the optimal 2-means
    partition is linearly separable, so this enumeration contains it."""
    best = (np.inf, None)
    n = len(X)
    for i, j in combinations(range(n), 2):
        direction = X[j] - X[i]
        normal = np.array([-direction[1], direction[0]])
        side = (X - X[i]) @ normal > 0
        for si in (False, True):
            for sj in (False, True):
                s = side.copy()
                s[i], s[j] = si, sj
                if s.all() or not s.any():
                    continue
                sse = sum(((X[m] - X[m].mean(axis=0)) ** 2).sum() for m in (s, ~s))
                if sse < best[0]:
                    best = (sse, s.copy())
    return best


def blobs(seed=0):
    rng = np.random.default_rng(seed)
    pts = []
    for center in (np.array([-50.0, 0.0]), np.array([50.0, 0.0])):
        r = np.sqrt(rng.random(50))
        theta = rng.random(50) * 2 * np.pi
        pts.append(center + np.c_[r * np.cos(theta), r * np.sin(theta)])
    return np.vstack(pts)


# -- load_vectors --------------------------------------------------------------


def test_load_vectors_formats():
    t = load_vectors(io.StringIO("a\t1,2,3\nb\t4 5 6\n"))
    assert (t.width, len(t)) == (3, 2)
    t = load_vectors(io.StringIO("a 1 2 3\n"))
    assert t.ids == ["a"] and t.matrix.tolist() == [[1, 2, 3]]


@pytest.mark.parametrize(
    "text, message",
    [
        ("a\t1,2,3\nb\t1,2,3,4\n", "inconsistent vector width at row 2"),
        ("a\t1,NaN,3\n", "non-finite component"),
        ("a\t1,inf,3\n", "non-finite component"),
        ("a\t1,2\na\t3,4\n", "duplicate id"),
        ("a\t1,x\n", "unparseable"),
    ],
)
def test_load_vectors_errors(text, message):
    with pytest.raises(VectorFormatError, match=message):
        load_vectors(io.StringIO(text))


# -- kmeans ------------------------------------------------------------------------


def test_single_point():
    c = kmeans(VectorTable(["p"], np.array([[3.0, 4.0]])), k=1)
    assert c.assignment == {"p": 0}
    assert c.centroids.tolist() == [[3.0, 4.0]]
    assert c.inertia == 0.0


def test_too_few_points():
    with pytest.raises(ValueError):
        kmeans(VectorTable(["p"], np.zeros((1, 2))), k=2)


def test_blobs_match_exhaustive_optimum():
    X = blobs()
    sse, oracle = best_two_means(X)
    labels = EdgeKMeans(n_clusters=2, seed=0).fit_predict(X)
    assert adjusted_rand_index(list(labels), list(oracle)) == 1.0
    truth = np.r_[np.zeros(50), np.ones(50)]
    assert adjusted_rand_index(list(labels), list(truth)) == 1.0
    assert EdgeKMeans(n_clusters=2, seed=0).fit(X).inertia_ == pytest.approx(sse, rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 6))
def test_inertia_non_increasing(seed, k):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(60, 3))
    est = EdgeKMeans(n_clusters=k, seed=seed).fit(X)
    h = est.inertia_history_
    assert all(b <= a for a, b in zip(h, h[1:]))
    assert est.inertia_ == pytest.approx(((X - est.cluster_centers_[est.labels_]) ** 2).sum())


def test_deterministic_and_thread_invariant():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(5000, 8))
    a = EdgeKMeans(n_clusters=7, seed=3, n_threads=1).fit(X)
    b = EdgeKMeans(n_clusters=7, seed=3, n_threads=8).fit(X)
    assert np.array_equal(a.labels_, b.labels_)
    assert np.array_equal(a.cluster_centers_, b.cluster_centers_)
    assert a.inertia_history_ == b.inertia_history_


def test_row_order_invariance():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(200, 4))
    ids = [f"e{i:03d}" for i in range(200)]
    perm = rng.permutation(200)
    a = kmeans(VectorTable(ids, X), k=5, seed=1)
    b = kmeans(VectorTable([ids[i] for i in perm], X[perm]), k=5, seed=1)
    assert a.assignment == b.assignment


def test_empty_cluster_repair():
    # three identical points and one outlier, k=3: k-means++ has to place two
    # centres on duplicates, which leaves a cluster empty after assignment
    X = np.array([[0.0, 0.0]] * 3 + [[10.0, 0.0]])
    est = EdgeKMeans(n_clusters=3, seed=0).fit(X)
    assert est.inertia_ == 0.0
    assert len(est.labels_) == 4


def test_estimator_api():
    est = EdgeKMeans(n_clusters=3, seed=4)
    assert clone(est).get_params()["n_clusters"] == 3
    X = blobs(1)
    est.fit(X)
    assert np.array_equal(est.predict(X), est.labels_)
    assert est.score(X) == pytest.approx(-est.inertia_)
    with pytest.raises(ValueError):
        est.predict(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        EdgeKMeans(n_clusters=0).fit(X)
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        EdgeKMeans().predict(X)


# -- ARI ---------------------------------------------------------------------------


def test_ari_four_points():
    pa, pb = [0, 0, 1, 1], [0, 0, 1, 2]
    assert brute_force_ari(pa, pb) == pytest.approx(4 / 7)
    assert adjusted_rand_index(pa, pb) == pytest.approx(0.5714285714, abs=1e-6)


def test_ari_identity_and_single_cluster():
    p = {f"i{n}": n % 4 for n in range(20)}
    assert adjusted_rand_index(p, dict(p)) == 1.0
    single = {i: 0 for i in p}
    assert adjusted_rand_index(single, p) == 0.0
    assert adjusted_rand_index(p, single) == 0.0
    assert adjusted_rand_index(single, dict(single)) == 1.0
    singletons = {i: i for i in p}
    assert adjusted_rand_index(singletons, dict(singletons)) == 1.0


def test_ari_mismatched_ids():
    with pytest.raises(ValueError):
        adjusted_rand_index({"a": 0, "b": 1}, {"a": 0, "c": 1})
    with pytest.raises(ValueError):
        adjusted_rand_index([0, 1], [0])


@settings(max_examples=60)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 3)), min_size=2, max_size=25))
def test_ari_matches_brute_force_and_sklearn(pairs):
    la, lb = [p[0] for p in pairs], [p[1] for p in pairs]
    ours = adjusted_rand_index(la, lb)
    assert ours == pytest.approx(adjusted_rand_score(la, lb), abs=1e-12)
    assert ours == pytest.approx(adjusted_rand_index(lb, la), abs=1e-12)
    if len(set(la)) > 1 or len(set(lb)) > 1:
        assert ours == pytest.approx(brute_force_ari(la, lb), abs=1e-12)


# -- dimension agreement -----------------------------------------------------------


def test_dimension_partition():
    edges = [
        make_edge("e1", "a", "/r/Synonym", "b", dimension="similarity"),
        make_edge("e2", "a", "/r/IsA", "c", dimension="taxonomic"),
        make_edge("e3", "a", "/r/Foo", "d"),
    ]
    part, excluded = dimension_partition(edges)
    assert part == {"e1": Dimension.SIMILARITY, "e2": Dimension.TAXONOMIC}
    assert excluded == 1
    assert len(part) + excluded == len(edges)


def _clustering(assign, k):
    return Clustering(k, assign, np.zeros((k, 1)), 0.0, 0, 0)


def test_cluster_dimension_jaccard_exact_match():
    assign = {"a": 0, "b": 0, "c": 1}
    dims = {"a": Dimension.SIMILARITY, "b": Dimension.SIMILARITY, "c": Dimension.SPATIAL}
    rep = cluster_dimension_jaccard(_clustering(assign, 2), dims)
    assert rep.pair_jaccard[(0, Dimension.SIMILARITY)] == 1.0
    assert rep.top_pairs[0][:2] == (0, Dimension.SIMILARITY)
    assert rep.ari == 1.0


def test_cluster_dimension_jaccard_partial():
    # cluster 0 has 3 edges, distinctness has 5, they share 2 -> 2 / 6
    assign = {f"x{i}": 0 for i in range(3)} | {f"y{i}": 1 for i in range(4)}
    dims = {"x0": Dimension.DISTINCTNESS, "x1": Dimension.DISTINCTNESS, "x2": Dimension.LEXICAL}
    dims |= {"y0": Dimension.DISTINCTNESS, "y1": Dimension.DISTINCTNESS, "y2": Dimension.DISTINCTNESS}
    dims |= {"y3": Dimension.LEXICAL}
    rep = cluster_dimension_jaccard(_clustering(assign, 2), dims)
    assert rep.pair_jaccard[(0, Dimension.DISTINCTNESS)] == pytest.approx(2 / 6)
    assert len(rep.top_per_cluster[0]) == 2
    for d in (Dimension.DISTINCTNESS, Dimension.LEXICAL):
        assert sum(rep.intersections.get((c, d), 0) for c in range(2)) == sum(v is d for v in dims.values())
    assert all(0.0 <= j <= 1.0 for j in rep.pair_jaccard.values())
    with pytest.raises(ValueError):
        cluster_dimension_jaccard(_clustering(assign, 2), {"x0": Dimension.LEXICAL})


def test_cluster_profile_top_node():
    edges = [make_edge("e1", "a", "r", "b", dimension="lexical"), make_edge("e2", "a", "r", "c", dimension="lexical")]
    prof = cluster_profile(_clustering({"e1": 0, "e2": 0}, 1), edges, top_n=3)
    assert prof[0].top_nodes[0] == ("/c/en/a", 2)
    assert prof[0].top_nodes[1:] == [("/c/en/b", 1), ("/c/en/c", 1)]
    assert sum(prof[0].dimensions.values()) == prof[0].size == 2


def test_cluster_profile_distinctness_share():
    edges = [make_edge(f"d{i}", f"h{i}", "/r/Antonym", f"t{i}", dimension="distinctness") for i in range(360)]
    edges += [make_edge(f"o{i}", f"h{i}", "/r/Synonym", f"t{i}", dimension="similarity") for i in range(30)]
    prof = cluster_profile(_clustering({e.id: 0 for e in edges}, 1), edges)
    assert prof[0].size == 390
    assert round(prof[0].share(Dimension.DISTINCTNESS), 2) == 0.92


def test_sample_ids_seeded():
    ids = [f"e{i}" for i in range(100)]
    a = sample_ids(ids, 10, seed=3)
    assert a == sample_ids(list(reversed(ids)), 10, seed=3)
    assert len(a) == 10 and a == sorted(a)
    assert sample_ids(ids, 500) == sorted(ids)
