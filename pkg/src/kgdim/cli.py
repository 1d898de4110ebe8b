"""``kgdim`` command line entry point."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from collections import Counter
from contextlib import contextmanager
from pathlib import Path

from . import __version__
from .clustering import (
    VectorFormatError,
    VectorTable,
    cluster_dimension_jaccard,
    cluster_profile,
    dimension_partition,
    kmeans,
    load_vectors,
    sample_ids,
)
from .core import Dimension, MappingError, default_mapping, load_mapping, mapping_checksum
from .coverage import coverage_counts, render_coverage
from .ingest import (
    AssignStats,
    EdgeFormatError,
    ReadStats,
    iter_assigned,
    iter_edges,
    open_text,
    write_edges,
)
from .lexicalize import TemplateError, default_templates, lexicalize_edge, load_templates
from .overlap import REPORT_COLUMNS, pairwise_overlap, report_rows
from .qa_synth import SplitError, bucket_files, build_buckets, load_atomic_split

logger = logging.getLogger("kgdim")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- output helpers ---------------------------------------------------------


@contextmanager
def atomic_output(path: str | None):
    """Yield a text buffer; on success it goes to ``path`` via temp file +
    rename, or to stdout when ``path`` is None or ``-``."""
    buf = io.StringIO()
    yield buf
    data = buf.getvalue()
    if path in (None, "-"):
        sys.stdout.write(data)
        sys.stdout.flush()
        return
    _atomic_write(Path(path), data)


def _atomic_write(path: Path, data: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        if path.name.endswith(".gz"):
            import gzip

            os.close(fd)
            # mtime=0 keeps compressed output byte-identical across runs
            with open(tmp, "wb") as raw, gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as gz:
                gz.write(data.encode("utf-8"))
        else:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# -- edge loading -----------------------------------------------------------


def _table(args):
    return load_mapping(args.mapping) if getattr(args, "mapping", None) else default_mapping()


def _load_edges(args, path=None, sources=None):
    """Read edges and fill in missing dimensions from the mapping."""
    path = path or args.input
    rstats = ReadStats()
    astats = AssignStats()
    with open_text(path) as fh:
        edges = iter_edges(fh, source_filter=sources, strict=args.strict, stats=rstats)
        if getattr(args, "no_assign", False):
            out = list(edges)
        else:
            out = list(iter_assigned(edges, _table(args), astats, keep_existing=not args.reassign))
    for err in rstats.errors[:10]:
        logger.warning("skipped row: %s", err)
    if rstats.errors:
        logger.warning("%d malformed row(s) skipped", len(rstats.errors))
    if rstats.filtered:
        logger.info("%d row(s) filtered by source", rstats.filtered)
    return out, rstats, astats


def _split_list(value: str | None) -> list[str] | None:
    if value is None:
        return None
    return [v.strip() for v in value.split(",") if v.strip()]


# -- subcommands ------------------------------------------------------------


def cmd_map_dims(args) -> int:
    edges, rstats, astats = _load_edges(args, sources=_split_list(args.sources))
    if args.output in (None, "-"):
        write_edges(edges, sys.stdout)
    else:
        buf = io.StringIO()
        write_edges(edges, buf)
        _atomic_write(Path(args.output), buf.getvalue())
    stats = {
        "rows": rstats.rows,
        "malformed": len(rstats.errors),
        "filtered": rstats.filtered,
        "mapped": astats.mapped,
        "excluded": astats.excluded,
        "unmapped": dict(sorted(astats.unmapped.items())),
    }
    if args.stats:
        _atomic_write(Path(args.stats), json.dumps(stats, indent=2, sort_keys=True) + "\n")
    logger.info("map-dims: %s", json.dumps({k: v for k, v in stats.items() if k != "unmapped"}))
    return EXIT_OK


def cmd_coverage(args) -> int:
    edges, _, _ = _load_edges(args)
    matrix = coverage_counts(edges, dedup=args.dedup)
    with atomic_output(args.out) as fh:
        fh.write(render_coverage(matrix, args.format))
    if matrix.unassigned_total:
        logger.info("coverage: %d edge(s) without a dimension", matrix.unassigned_total)
    return EXIT_OK


def cmd_overlap(args) -> int:
    sources = _split_list(args.sources) or []
    if len(set(sources)) < 2:
        raise UsageError("--sources needs at least two distinct source ids")
    rstats = ReadStats()
    astats = AssignStats()
    present: set[str] = set()

    def tracked(it):
        for e in it:
            present.add(e.source)
            yield e

    with open_text(args.input) as fh:
        edges = tracked(iter_edges(fh, strict=args.strict, stats=rstats))
        if args.mode == "dimension":
            edges = iter_assigned(edges, _table(args), astats, keep_existing=not args.reassign)
        edges = list(edges)
    reports = pairwise_overlap(edges, sources, args.mode, known_sources=present)
    with atomic_output(args.out) as fh:
        fh.write(_csv_text(REPORT_COLUMNS, report_rows(reports)))
    return EXIT_OK


def cmd_lexicalize(args) -> int:
    templates = load_templates(args.templates) if args.templates else default_templates()
    edges, _, _ = _load_edges(args)
    rows = []
    failed = 0
    for e in edges:
        try:
            rows.append(f"{e.id}\t{lexicalize_edge(e, templates)}")
        except ValueError as exc:
            if args.strict:
                raise
            failed += 1
            logger.warning("%s", exc)
    with atomic_output(args.out) as fh:
        fh.write("id\tsentence\n")
        fh.write("".join(r + "\n" for r in rows))
    if failed:
        logger.warning("lexicalize: %d edge(s) skipped for empty labels", failed)
    return EXIT_OK


def cmd_cluster(args) -> int:
    with open_text(args.vectors) as fh:
        vectors = load_vectors(fh)
    edges, _, _ = _load_edges(args, path=args.edges)
    dims, skipped = dimension_partition(edges)
    if skipped:
        logger.info("cluster: %d edge(s) without a dimension ignored", skipped)
    common = sorted(set(dims) & set(vectors.ids))
    if len(common) < len(vectors.ids):
        logger.info("cluster: %d vector(s) have no dimension-tagged edge", len(vectors.ids) - len(common))
    keep = set(common)
    rows = [n for n, i in enumerate(vectors.ids) if i in keep]
    table = VectorTable([vectors.ids[n] for n in rows], vectors.matrix[rows])
    result = kmeans(table, k=args.k, seed=args.seed, max_iter=args.max_iter, tol=args.tol, n_threads=args.threads)
    agreement = cluster_dimension_jaccard(result, {i: dims[i] for i in common})
    profiles = cluster_profile(result, (e for e in edges if e.id in keep), top_n=args.top_nodes)
    report = {
        "k": result.k,
        "seed": result.seed,
        "iterations": result.iterations,
        "inertia": result.inertia,
        "n_edges": len(common),
        "ari": agreement.ari,
        "top_pairs": [
            {"cluster": c, "dimension": d.value, "jaccard": j} for c, d, j in agreement.top_pairs[: args.top_pairs]
        ],
        "clusters": {
            str(c): {
                "size": p.size,
                "top_dimensions": [
                    {"dimension": d.value, "jaccard": j} for d, j in agreement.top_per_cluster[c]
                ],
                "dimensions": {
                    (d.value if d is not None else ""): n
                    for d, n in sorted(p.dimensions.items(), key=lambda kv: kv[0].rank if kv[0] else -1)
                },
                "top_nodes": [[node, n] for node, n in p.top_nodes],
            }
            for c, p in profiles.items()
        },
    }
    with atomic_output(args.out) as fh:
        fh.write(json.dumps(report, indent=2) + "\n")
    if args.assignments:
        ids = sample_ids(common, args.sample, args.seed) if args.sample else common
        lines = ["id\tcluster\tdimension"] + [f"{i}\t{result.assignment[i]}\t{dims[i].value}" for i in ids]
        _atomic_write(Path(args.assignments), "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_qa_gen(args) -> int:
    templates = load_templates(args.templates) if args.templates else default_templates()
    atomic = load_atomic_split(args.atomic_split) if args.atomic_split else None
    edges, _, _ = _load_edges(args)
    exclude = _split_list(args.exclude_relations) or []
    buckets, report = build_buckets(
        edges,
        templates,
        exclude_relations=exclude,
        seed=args.seed,
        dev_fraction=args.dev_fraction,
        atomic_split=atomic,
        strict=args.strict,
    )
    files = bucket_files(buckets, report)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, content in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", suffix=".tmp", dir=out)
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(content)
            staged.append((tmp, out / name))
    except BaseException:
        for tmp, _ in staged:
            os.unlink(tmp)
        raise
    for tmp, dest in staged:
        os.replace(tmp, dest)
    dropped = sum(report.sampling_dropped.values())
    logger.info(
        "qa-gen: %d bucket(s), %d item(s), %d dropped by distractor sampling",
        len(buckets),
        sum(report.train.values()) + sum(report.dev.values()),
        dropped,
    )
    return EXIT_OK


def cmd_stats(args) -> int:
    edges, rstats, astats = _load_edges(args)
    by_source = Counter(e.source for e in edges)
    by_dim = Counter(e.dimension.value if e.dimension else "" for e in edges)
    by_rel = Counter((e.relation, e.dimension.value if e.dimension else "") for e in edges)
    out = {
        "rows": rstats.rows,
        "edges": len(edges),
        "malformed": len(rstats.errors),
        "excluded": astats.excluded,
        "sources": dict(sorted(by_source.items())),
        "dimensions": {d.value: by_dim[d.value] for d in Dimension if by_dim[d.value]},
        "unassigned": by_dim[""],
        "relations": [
            {"relation": r, "dimension": d, "edges": n} for (r, d), n in sorted(by_rel.items())
        ],
    }
    with atomic_output(args.out) as fh:
        fh.write(json.dumps(out, indent=2) + "\n")
    return EXIT_OK


# -- parser -----------------------------------------------------------------


def _common(p, input_required=True):
    if input_required:
        p.add_argument("--input", "-i", required=True, help="edge TSV (.gz ok)")
    p.add_argument("--mapping", help="relation->dimension TSV (default: built-in)")
    p.add_argument("--reassign", action="store_true", help="recompute dimensions already present in the input")
    p.add_argument("--strict", action="store_true", help="fail on the first malformed row")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kgdim", description="Commonsense knowledge dimension toolkit.")
    parser.add_argument(
        "--version", action="version", version=f"kgdim {__version__} (mapping {mapping_checksum()})"
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")

    p = sub.add_parser("map-dims", help="assign dimensions to edges")
    _common(p)
    p.add_argument("--output", "-o", help="enriched edge TSV (default stdout)")
    p.add_argument("--stats", help="write assignment statistics as JSON")
    p.add_argument("--sources", help="comma-separated source filter")
    p.set_defaults(func=cmd_map_dims, reassign=True)

    p = sub.add_parser("coverage", help="edges per source and dimension")
    _common(p)
    p.add_argument("--format", choices=("csv", "markdown"), default="csv")
    p.add_argument("--dedup", action="store_true", help="count repeated triples once per source")
    p.add_argument("--out", "-o")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("overlap", help="pairwise Jaccard overlap between sources")
    _common(p)
    p.add_argument("--sources", required=True, help="comma-separated source ids, at least two")
    p.add_argument("--mode", choices=("relation", "dimension"), default="dimension")
    p.add_argument("--out", "-o")
    p.set_defaults(func=cmd_overlap)

    p = sub.add_parser("lexicalize", help="render edges as sentences")
    _common(p)
    p.add_argument("--templates", help="relation<TAB>template overrides")
    p.add_argument("--out", "-o")
    p.set_defaults(func=cmd_lexicalize, no_assign=True)

    p = sub.add_parser("cluster", help="k-means over edge vectors vs dimensions")
    _common(p, input_required=False)
    p.add_argument("--vectors", required=True)
    p.add_argument("--edges", required=True)
    p.add_argument("--k", type=int, default=13)
    p.add_argument("--max-iter", type=int, default=300)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--top-pairs", type=int, default=10)
    p.add_argument("--top-nodes", type=int, default=10)
    p.add_argument("--out", "-o", help="report JSON (default stdout)")
    p.add_argument("--assignments", help="write id, cluster, dimension TSV")
    p.add_argument("--sample", type=int, default=0, help="limit --assignments to a seeded sample")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("qa-gen", help="per-dimension synthetic QA sets")
    _common(p)
    p.add_argument("--out", "-o", required=True, help="output directory")
    p.add_argument("--templates")
    p.add_argument("--atomic-split", help="event<TAB>trn|dev|tst file")
    p.add_argument("--dev-fraction", type=float, default=0.05)
    p.add_argument("--exclude-relations", default="/r/RelatedTo")
    p.set_defaults(func=cmd_qa_gen)

    p = sub.add_parser("stats", help="edge counts per source, relation and dimension")
    _common(p)
    p.add_argument("--out", "-o")
    p.set_defaults(func=cmd_stats)
    return parser


def _setup_logging(verbose: bool) -> None:
    # bound to the current sys.stderr on every call so embedding callers see output
    for h in list(logger.handlers):
        logger.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("kgdim: %(levelname)s: %(message)s"))
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    logger.propagate = False


def _resolved(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    logger.info("kgdim %s config %s", __version__, json.dumps(_resolved(args), default=str))
    if args.threads < 1:
        print("kgdim: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"kgdim {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (
        EdgeFormatError,
        MappingError,
        VectorFormatError,
        TemplateError,
        SplitError,
        ValueError,
        OSError,
    ) as exc:
        print(f"kgdim {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
