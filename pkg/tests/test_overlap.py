import random

import pytest
from hypothesis import given, strategies as st

from kgdim.core import Dimension
from kgdim.ingest import assign_dimensions
from kgdim.overlap import (
    NormalizedTriple,
    jaccard,
    normalize_node,
    pairwise_overlap,
    report_rows,
    triple_set,
)

from conftest import make_edge


@pytest.mark.parametrize(
    "label, key",
    [
        ("dish|plate", "dish"),
        ("  Food  ", "food"),
        ("comfort   food", "comfort food"),
        ("", ""),
        ("food.n.01", "food"),
        ("comfort_food.n.01", "comfort food"),
        ("STRASSE", "strasse"),
        ("Straße", "strasse"),
    ],
)
def test_normalize_node(label, key):
    assert normalize_node(label) == key


def synonym_pair():
    return assign_dimensions(
        [make_edge("e1", "food", "/r/Synonym", "dish"), make_edge("e2", "food", "/r/SimilarTo", "dish")]
    )[0]


def test_triple_set_dimension_mode_merges():
    s = triple_set(synonym_pair(), "dimension")
    assert s == {NormalizedTriple("food", "similarity", "dish")}


def test_triple_set_relation_mode_keeps_both():
    assert len(triple_set(synonym_pair(), "relation")) == 2


def test_triple_set_empty_and_skips():
    assert triple_set([], "relation") == set()
    counts = {}
    triple_set([make_edge("e1", "a", "/r/Nope", "b")], "dimension", counts)
    assert counts == {"skipped": 1}
    with pytest.raises(ValueError):
        triple_set([], "bogus")


def test_jaccard_examples():
    a = {1, 2, 3, 4, 5}
    assert jaccard(a, set(a)).jaccard == 1.0
    assert jaccard({1, 2}, {3, 4}).jaccard == 0.0
    r = jaccard({"t1", "t2", "t3"}, {"t2", "t3", "t4"})
    assert (r.intersection, r.union, r.jaccard) == (2, 4, 0.5)
    assert jaccard(set(), set()).jaccard == 0.0


@given(st.sets(st.integers(0, 30)), st.sets(st.integers(0, 30)))
def test_jaccard_bounds_and_symmetry(a, b):
    r, s = jaccard(a, b), jaccard(b, a)
    assert r == s
    if a or b:
        assert r.intersection <= min(len(a), len(b)) <= r.union <= len(a) + len(b)
        assert r.jaccard == r.intersection / r.union


def test_pairwise_overlap_fixture(fixture_edges):
    edges = assign_dimensions(fixture_edges)[0]
    rel = {r.pair: r for r in pairwise_overlap(edges, ["CN", "WN", "RG", "WD"], "relation")}
    dim = {r.pair: r for r in pairwise_overlap(edges, ["CN", "WN", "RG", "WD"], "dimension")}
    assert len(rel) == len(dim) == 6
    # shared facts in the fixture: (food, SimilarTo|Synonym, dish), (food, IsA, substance),
    # (apple, IsA, fruit), (hot, Antonym, cold), (flour, PartOf, bread) between CN and WN
    assert rel[("CN", "WN")].intersection == 4
    assert dim[("CN", "WN")].intersection == 5
    assert dim[("CN", "WN")].jaccard >= rel[("CN", "WN")].jaccard
    per = dim[("CN", "WN")].per_dimension
    assert per[Dimension.TAXONOMIC].intersection == 2
    assert per[Dimension.SPATIAL] is None  # WN has no spatial edges
    assert rel[("CN", "WN")].per_dimension == {}


def test_pairwise_overlap_errors(fixture_edges):
    with pytest.raises(ValueError, match="at least two"):
        pairwise_overlap(fixture_edges, ["CN"], "relation")
    with pytest.raises(ValueError, match="unknown source"):
        pairwise_overlap(fixture_edges, ["CN", "XX"], "relation")


def test_pairwise_overlap_order_invariant(fixture_edges):
    edges = assign_dimensions(fixture_edges)[0]
    shuffled = edges[:]
    random.Random(1).shuffle(shuffled)
    a = report_rows(pairwise_overlap(edges, ["CN", "WN", "RG", "WD"], "dimension"))
    b = report_rows(pairwise_overlap(shuffled, ["CN", "WN", "RG", "WD"], "dimension"))
    assert a == b


def test_report_rows_shape(fixture_edges):
    edges = assign_dimensions(fixture_edges)[0]
    rows = report_rows(pairwise_overlap(edges, ["CN", "WN"], "dimension"))
    assert rows[0][:4] == ("CN", "WN", "dimension", "ALL")
    spatial = [r for r in rows if r[3] == "spatial"]
    assert spatial == [("CN", "WN", "dimension", "spatial", "", "", "")]
