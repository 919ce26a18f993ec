"""Command-line interface.

Exit codes: 0 success, 1 usage or validation error, 2 incomplete distance matrix.
"""
from __future__ import annotations

import argparse
import math
import sys
import warnings
from pathlib import Path
from typing import Sequence

from . import __version__
from .atlas import Atlas, AtlasError, load_atlas
from .cluster import (
    ClusterError,
    ClusterNode,
    SilhouetteReport,
    agglomerate,
    cut_top,
    mean_silhouette,
    partition_medoids,
    recursive_partition,
    silhouette,
    tree_from_json,
)
from .matrixlab import (
    DistanceMatrix,
    MatrixComparison,
    MatrixError,
    atomic_write_text,
    compare,
    read_matrix,
)
from .metrics import (
    DEFAULT_FEATURE_INDEL_COST,
    CostModel,
    IncompleteMatrixError,
    MetricRequirementError,
    MetricSpec,
    build_matrix,
)
from .transcript import (
    FeatureTableError,
    MissingSymbolError,
    TokenizationError,
    default_feature_system,
    load_feature_system,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INCOMPLETE = 2

# Command-line metric name -> metric name.
METRIC_ALIASES = {
    "isogloss": "isogloss",
    "etymon": "etymon",
    "word": "word",
    "phone": "phone_string",
    "feature-all": "feature_all_word",
    "feature-same": "feature_same_word",
}
METRIC_ALIASES.update({v: v for v in list(METRIC_ALIASES.values())})

# Row order of the comparison and silhouette tables.
PIPELINE_METRICS = (
    "isogloss",
    "phone_string",
    "feature_all_word",
    "feature_same_word",
    "etymon",
    "word",
)
METRIC_LABELS = {
    "isogloss": "Isoglosses",
    "phone_string": "Phone string comparison",
    "feature_all_word": "Feature string comparison, all-word",
    "feature_same_word": "Feature string comparison, same-word",
    "etymon": "Etymon identity",
    "word": "Word identity",
}
METHODS = ("agglomerative", "pam")
STAR_SCALE = 10


class CommandError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        self.code = code
        super().__init__(message)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _add_metric_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--features", type=Path, help="feature table TSV (default: bundled table)")
    p.add_argument("--diacritics", type=Path, help="diacritic override TSV (default: bundled table)")
    p.add_argument(
        "--indel-cost",
        type=float,
        default=DEFAULT_FEATURE_INDEL_COST,
        help="insertion/deletion cost for feature metrics (default: %(default)s)",
    )
    p.add_argument("--normalize-length", action="store_true", help="divide edit distances by the longer form's length")
    p.add_argument("--min-aggregation", action="store_true", help="combine variant citations by minimum instead of mean")
    p.add_argument("--impute-missing", action="store_true", help="fill undefined site pairs with the mean distance")
    p.add_argument("--workers", type=_positive_int, default=1, help="worker threads (default: 1)")


def _add_cluster_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--min-size", type=int, default=2, help="partitioning: smallest group worth splitting is 2*min-size (default: 2)")
    p.add_argument("--max-depth", type=int, default=None, help="partitioning: maximum recursion depth (default: unlimited)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dialectometry", description=__doc__.splitlines()[0] if __doc__ else None)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("matrix", help="compute a site distance matrix from an atlas")
    p.add_argument("--dataset", type=Path, required=True, help="atlas JSON file")
    p.add_argument("--metric", required=True, help=f"one of {', '.join(k for k in METRIC_ALIASES if '_' not in k)}")
    p.add_argument("-o", "--output", type=Path, required=True, help="output matrix TSV")
    _add_metric_options(p)

    p = sub.add_parser("compare", help="Pearson's rho and K_c between two matrices")
    p.add_argument("reference", type=Path, help="reference matrix TSV (e.g. isoglosses)")
    p.add_argument("other", type=Path, help="matrix TSV to compare")

    p = sub.add_parser("cluster", help="build a dialect tree from a matrix")
    p.add_argument("--matrix", type=Path, required=True)
    p.add_argument("--method", required=True, help="agglomerative or pam")
    p.add_argument("-o", "--output", type=Path, required=True, help="output tree JSON")
    _add_cluster_options(p)

    p = sub.add_parser("silhouette", help="silhouette star report for one split of a tree")
    p.add_argument("--matrix", type=Path, required=True)
    p.add_argument("--tree", type=Path, required=True)
    p.add_argument("--node", default="", help="child path from the root, e.g. '0' or '1.0' (default: root)")
    p.add_argument("--dataset", type=Path, help="atlas JSON for site labels (default: site ids)")
    p.add_argument("-o", "--output", type=Path, help="write the report here instead of stdout")

    p = sub.add_parser("pipeline", help="all metrics, comparisons, clusterings and silhouettes")
    p.add_argument("--dataset", type=Path, required=True, help="atlas JSON file")
    p.add_argument("-o", "--output", type=Path, required=True, help="output directory")
    _add_metric_options(p)
    _add_cluster_options(p)
    return parser


def _feature_system(args):
    if args.features is None and args.diacritics is None:
        return default_feature_system()
    default_dir = Path(__file__).parent / "data"
    table = args.features or default_dir / "features.tsv"
    marks = args.diacritics or default_dir / "diacritics.tsv"
    return load_feature_system(table, marks)


def _metric_spec(name: str, args, fs) -> MetricSpec:
    if name not in METRIC_ALIASES:
        choices = ", ".join(k for k in METRIC_ALIASES if "_" not in k)
        raise CommandError(f"unknown metric {name!r}; choose from {choices}")
    name = METRIC_ALIASES[name]
    cm = None
    if name == "phone_string":
        cm = CostModel.flat()
    elif name in ("feature_all_word", "feature_same_word"):
        cm = CostModel.feature(fs, args.indel_cost)
    return MetricSpec(
        name,
        cm,
        normalize=args.normalize_length,
        aggregate="min" if args.min_aggregation else "mean",
    )


def _load_dataset(path: Path, fs=None) -> Atlas:
    if not path.is_file():
        raise CommandError(f"dataset not found: {path}")
    inventory = fs.inventory if fs is not None else None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        atlas = load_atlas(path, inventory)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return atlas


def _read_matrix(path: Path) -> DistanceMatrix:
    if not path.is_file():
        raise CommandError(f"matrix file not found: {path}")
    return read_matrix(path)


def _make_matrix(atlas: Atlas, spec: MetricSpec, args) -> DistanceMatrix:
    m = build_matrix(atlas, spec, impute=args.impute_missing, workers=args.workers)
    for a, b in m.imputed:
        print(f"warning: {spec.name}: imputed distance for {a}-{b}", file=sys.stderr)
    return m


def cmd_matrix(args) -> int:
    fs = _feature_system(args)
    spec = _metric_spec(args.metric, args, fs)
    atlas = _load_dataset(args.dataset, fs if (args.features or args.diacritics) else None)
    m = _make_matrix(atlas, spec, args)
    m.write(args.output)
    n = len(m)
    print(f"{spec.name}: {n} sites, {n * (n - 1) // 2} site pairs, {len(m.imputed)} imputed -> {args.output}")
    return EXIT_OK


def format_comparison(cmp: MatrixComparison) -> str:
    return (
        f"sites pairs {cmp.n_pairs}, triples {cmp.n_triples}\n"
        f"rho\t{cmp.rho:.3f}\t{cmp.rho!r}\n"
        f"K_c\t{cmp.kc:.3f}\t{cmp.kc!r}\n"
    )


def cmd_compare(args) -> int:
    x = _read_matrix(args.reference)
    y = _read_matrix(args.other)
    sys.stdout.write(format_comparison(compare(x, y)))
    return EXIT_OK


def make_tree(m: DistanceMatrix, method: str, min_size: int = 2, max_depth: int | None = None) -> ClusterNode:
    if method not in METHODS:
        raise CommandError(f"unknown clustering method {method!r}; choose from {', '.join(METHODS)}")
    if len(m) < 2:
        raise CommandError("clustering needs at least two sites")
    if method == "agglomerative":
        return agglomerate(m)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return recursive_partition(m, min_size=min_size, max_depth=max_depth)


def cmd_cluster(args) -> int:
    m = _read_matrix(args.matrix)
    tree = make_tree(m, args.method, args.min_size, args.max_depth)
    atomic_write_text(args.output, tree.to_json())
    if tree.is_leaf:
        print(f"{args.method}: root left undivided ({len(tree)} sites) -> {args.output}")
    else:
        g1, g2 = cut_top(tree)
        print(f"{args.method}: top-level split {len(g1)} | {len(g2)} sites -> {args.output}")
    return EXIT_OK


def star_bar(s: float) -> str:
    # Half-up rounding so that e.g. s = 0.85 gives 9 stars rather than 8.
    return "*" * int(math.floor(STAR_SCALE * max(s, 0.0) + 0.5))


def render_silhouette(report: SilhouetteReport, labels: dict[str, str] | None = None) -> str:
    """Star-plot silhouette report, one line per site, groups in order."""
    labels = labels or {}
    lines = []
    for g in (0, 1):
        entries = report.group(g)
        lines.append(f"group {g + 1} ({len(entries)} sites)")
        for e in entries:
            lines.append(f"{star_bar(e.s):<{STAR_SCALE}}  {labels.get(e.site, e.site)}")
        lines.append(f"mean s, group {g + 1}: {report.group_means[g]:.3f}")
        lines.append("")
    lines.append(f"mean s, overall: {mean_silhouette(report):.3f}")
    return "\n".join(lines) + "\n"


def _parse_node_path(text: str) -> list[int]:
    if not text:
        return []
    try:
        path = [int(p) for p in text.split(".")]
    except ValueError:
        raise CommandError(f"bad node path {text!r}; use e.g. '0' or '1.0'") from None
    if any(p not in (0, 1) for p in path):
        raise CommandError(f"bad node path {text!r}; steps must be 0 or 1")
    return path


def cmd_silhouette(args) -> int:
    m = _read_matrix(args.matrix)
    if not args.tree.is_file():
        raise CommandError(f"tree file not found: {args.tree}")
    tree = tree_from_json(args.tree.read_text(encoding="utf-8"))
    if set(tree.members) != set(m.site_ids):
        raise CommandError("tree and matrix cover different sites")
    node = tree.node_at(_parse_node_path(args.node))
    if node.is_leaf:
        raise CommandError("the selected node is a leaf and has no split")
    g1, g2 = cut_top(node)
    labels = None
    if args.dataset is not None:
        atlas = _load_dataset(args.dataset)
        labels = {s.id: s.label for s in atlas.sites}
    text = render_silhouette(silhouette(m, g1, g2), labels)
    if args.output is None:
        sys.stdout.write(text)
    else:
        atomic_write_text(args.output, text)
    return EXIT_OK


def format_comparison_table(rows: dict[str, MatrixComparison]) -> str:
    width = max(len(METRIC_LABELS[k]) for k in rows)
    lines = [f"{'':<{width}}  {'rho':>6}  {'K_c':>6}"]
    for name, cmp in rows.items():
        lines.append(f"{METRIC_LABELS[name]:<{width}}  {cmp.rho:6.3f}  {cmp.kc:6.3f}")
    return "\n".join(lines) + "\n"


def format_silhouette_table(rows: dict[str, tuple[float, float]]) -> str:
    width = max(len(METRIC_LABELS[k]) for k in rows)
    lines = [f"{'':<{width}}  {'Part.':>6}  {'Aggl.':>6}"]
    for name, (part, aggl) in rows.items():
        lines.append(f"{METRIC_LABELS[name]:<{width}}  {part:6.3f}  {aggl:6.3f}")
    return "\n".join(lines) + "\n"


def cmd_pipeline(args) -> int:
    if not args.dataset.is_file():
        raise CommandError(f"dataset not found: {args.dataset}")
    stage = "setup"
    try:
        out: Path = args.output
        out.mkdir(parents=True, exist_ok=True)
        for sub in ("matrices", "trees", "silhouettes"):
            (out / sub).mkdir(exist_ok=True)

        stage = "load"
        custom = args.features is not None or args.diacritics is not None
        fs = _feature_system(args)
        atlas = _load_dataset(args.dataset, fs if custom else None)
        labels = {s.id: s.label for s in atlas.sites}

        matrices: dict[str, DistanceMatrix] = {}
        for name in PIPELINE_METRICS:
            stage = f"matrix {name}"
            m = _make_matrix(atlas, _metric_spec(name, args, fs), args)
            m.write(out / "matrices" / f"{name}.tsv")
            matrices[name] = m

        comparisons: dict[str, MatrixComparison] = {}
        for name in PIPELINE_METRICS:
            stage = f"compare {name}"
            comparisons[name] = compare(matrices["isogloss"], matrices[name])
        tsv = ["metric\trho\tK_c"]
        tsv += [f"{k}\t{v.rho!r}\t{v.kc!r}" for k, v in comparisons.items()]
        atomic_write_text(out / "comparison.tsv", "\n".join(tsv) + "\n")

        sbar: dict[str, tuple[float, float]] = {}
        for name in PIPELINE_METRICS:
            m = matrices[name]
            results = {}
            for method in METHODS:
                stage = f"cluster {name} {method}"
                tree = make_tree(m, method, args.min_size, args.max_depth)
                atomic_write_text(out / "trees" / f"{name}.{method}.json", tree.to_json())
                if method == "agglomerative":
                    g1, g2 = cut_top(tree)
                else:
                    g1, g2 = partition_medoids(m).groups
                stage = f"silhouette {name} {method}"
                report = silhouette(m, g1, g2)
                atomic_write_text(
                    out / "silhouettes" / f"{name}.{method}.txt", render_silhouette(report, labels)
                )
                results[method] = mean_silhouette(report)
            sbar[name] = (results["pam"], results["agglomerative"])
        tsv = ["metric\tpartitioning\tagglomeration"]
        tsv += [f"{k}\t{p!r}\t{a!r}" for k, (p, a) in sbar.items()]
        atomic_write_text(out / "silhouette.tsv", "\n".join(tsv) + "\n")

        stage = "summary"
        summary = (
            "Correlation of distance matrices to the isogloss distance matrix\n\n"
            + format_comparison_table(comparisons)
            + "\nMean silhouette of the top-level binary division\n\n"
            + format_silhouette_table(sbar)
        )
        atomic_write_text(out / "summary.txt", summary)
        sys.stdout.write(summary)
    except IncompleteMatrixError as exc:
        raise CommandError(f"stage {stage}: {exc}", EXIT_INCOMPLETE) from exc
    except CommandError as exc:
        raise CommandError(f"stage {stage}: {exc}", exc.code) from exc
    except OSError as exc:
        raise CommandError(f"stage {stage}: I/O error: {exc}") from exc
    except (AtlasError, MatrixError, ClusterError, ValueError, KeyError) as exc:
        raise CommandError(f"stage {stage}: {exc}") from exc
    return EXIT_OK


COMMANDS = {
    "matrix": cmd_matrix,
    "compare": cmd_compare,
    "cluster": cmd_cluster,
    "silhouette": cmd_silhouette,
    "pipeline": cmd_pipeline,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CommandError as exc:
        print(f"dialectometry {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except IncompleteMatrixError as exc:
        print(f"dialectometry {args.command}: {exc}", file=sys.stderr)
        return EXIT_INCOMPLETE
    except MissingSymbolError as exc:
        print(f"dialectometry {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (
        AtlasError,
        MatrixError,
        ClusterError,
        MetricRequirementError,
        FeatureTableError,
        TokenizationError,
        ValueError,
        OSError,
    ) as exc:
        print(f"dialectometry {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
