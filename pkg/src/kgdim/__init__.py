"""Consolidate commonsense knowledge-graph relations under 13 knowledge
dimensions and analyse coverage, overlap, cluster agreement and QA data."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    EXCLUDED,
    Dimension,
    Edge,
    MappingEntry,
    MappingTable,
    Polarity,
    default_mapping,
    load_mapping,
    save_mapping,
)
from .ingest import DimensionAssigner, assign_dimensions, read_edges, write_edges  # noqa: E402
from .clustering import EdgeKMeans, adjusted_rand_index, kmeans  # noqa: E402

__all__ = [
    "EXCLUDED",
    "Dimension",
    "Edge",
    "MappingEntry",
    "MappingTable",
    "Polarity",
    "default_mapping",
    "load_mapping",
    "save_mapping",
    "DimensionAssigner",
    "assign_dimensions",
    "read_edges",
    "write_edges",
    "EdgeKMeans",
    "adjusted_rand_index",
    "kmeans",
]
