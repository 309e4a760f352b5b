"""Command-line surface: generate, embed, split, select, verify, compare,
sweep, hist, fit, rerank, eval.

Exit codes: 0 success, 1 usage error, 2 data error, 3 failed verification.
All randomness flows from --seed (labeled substreams); identical invocations
produce bitwise-identical output files. An optional key=value config file
supplies defaults that explicit flags override; DIVSEL_THREADS is the
default for --threads.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .catalogs import FeatureCatalog, read_features, read_genres, write_features
from .dataio import (
    EmbeddingSpec,
    SplitSpec,
    embed_items,
    filter_feedback,
    load_feedback,
    split_feedback,
    write_feedback,
)
from .datagen import gen_claim32, gen_claim33, gen_ellipse, gen_two_circles
from .distance import DistanceOracle
from .experiments import (
    DEFAULT_LAMBDAS,
    default_sigma_grid,
    eval_rerank,
    pairwise_histogram,
    relative_scores,
    selection_to_json_dict,
    sigma_sweep,
    write_json,
)
from .objectives import ObjectiveSpec
from .optimize import RerankConfig, greedy, greedy_gild_adaptive, greedy_rerank
from .relevance import export_ease_csv, fit_ease, load_ease, save_ease, score_users, tune_l2
from .util import BudgetExceededError, DataError, resolve_threads
from .verify import check_claim_32, check_claim_33, gild_limits_suite, run_all
from .verify import approximation_suite, theorem_31_suite

USAGE_ERROR = 1
DATA_ERROR = 2
VERIFY_FAILED = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _load_config(path) -> list[str]:
    """key=value lines -> CLI tokens (inserted before explicit flags)."""
    tokens = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DataError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            key = key.strip().replace("_", "-")
            value = value.strip()
            if value.lower() in ("true", "false"):
                if value.lower() == "true":
                    tokens.append(f"--{key}")
            else:
                tokens.extend([f"--{key}", value])
    return tokens


def _build_oracle(args) -> DistanceOracle:
    if getattr(args, "features", None):
        catalog = read_features(args.features)
        scale = getattr(args, "scale_diameter", None)
        if scale is not None:
            probe = DistanceOracle.from_features(catalog, args.metric)
            catalog = catalog.scaled(scale / probe.diameter())
        return DistanceOracle.from_features(catalog, args.metric, cache=args.cache)
    if getattr(args, "genres", None):
        if args.metric != "jaccard":
            raise DataError("genre catalogs support only the jaccard metric")
        return DistanceOracle.from_genres(read_genres(args.genres), cache=args.cache)
    raise DataError("one of --features or --genres is required")


def _add_oracle_args(sub, metric_default="euclidean"):
    sub.add_argument("--features", help="feature CSV (id,f0,...)")
    sub.add_argument("--genres", help="genre CSV (id,genres)")
    sub.add_argument("--metric", choices=["euclidean", "cosine", "jaccard"],
                     default=metric_default)
    sub.add_argument("--cache", choices=["none", "full"], default="full",
                     help="distance cache policy (default full)")
    sub.add_argument("--scale-diameter", type=float, default=None,
                     help="rescale the feature catalog to this diameter")


def _cmd_gen(args) -> int:
    if args.kind in ("two_circles", "ellipse"):
        fn = gen_two_circles if args.kind == "two_circles" else gen_ellipse
        catalog = fn(args.n, args.seed)
    elif args.kind == "claim32":
        catalog = gen_claim32(args.n, args.eps)
    else:
        catalog = gen_claim33(args.n)
    write_features(catalog, args.output)
    print(f"wrote {catalog.n} items of dimension {catalog.d} to {args.output}")
    return 0


def _cmd_embed(args) -> int:
    fm = load_feedback(args.feedback)
    if fm.duplicates_dropped:
        print(f"warning: dropped {fm.duplicates_dropped} duplicate interactions",
              file=sys.stderr)
    if args.min_user > 1 or args.min_item > 1:
        fm, _, item_ids = filter_feedback(fm, args.min_user, args.min_item)
        print(f"filtered to {fm.m} users x {fm.n} items", file=sys.stderr)
        if args.map_out:
            with open(args.map_out, "w", encoding="utf-8") as fh:
                fh.write("new_id,original_id\n")
                for new, orig in enumerate(item_ids):
                    fh.write(f"{new},{orig}\n")
    spec = EmbeddingSpec(d=args.dim, oversampling=args.oversampling,
                         power_iterations=args.power_iterations, seed=args.seed,
                         sigma_scale=args.sigma_scale)
    catalog = embed_items(fm, spec)
    write_features(catalog, args.output)
    print(f"wrote {catalog.n} item vectors of dimension {catalog.d} to {args.output}")
    return 0


def _cmd_split(args) -> int:
    fm = load_feedback(args.feedback)
    ratios = _float_list(args.ratios)
    train, validation, test = split_feedback(fm, SplitSpec(tuple(ratios), args.seed))
    for part, name in ((train, "train"), (validation, "validation"), (test, "test")):
        write_feedback(part, f"{args.output}.{name}.csv")
        print(f"{name}: {part.count} interactions")
    return 0


def _cmd_select(args) -> int:
    oracle = _build_oracle(args)
    spec = ObjectiveSpec.parse(args.objective)
    if spec.adaptive and args.exact_pair:
        sel = greedy_gild_adaptive(oracle, spec.scheme, args.k, exact_pair=True)
    else:
        sel = greedy(oracle, spec, args.k)
    doc = selection_to_json_dict(sel)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(f"objective {spec.label()}, k={args.k}")
    print("items:", " ".join(str(i) for i in sel.items))
    for step, entry in enumerate(sel.trace, start=1):
        sigma = "" if entry.sigma is None else f" sigma={entry.sigma:.6g}"
        print(f"  step {step:3d}: item {entry.item:6d} gain={entry.gain:.6g} "
              f"value={entry.value:.6g}{sigma}")
    return 0


def _cmd_verify(args) -> int:
    eps_list = _float_list(args.eps)
    claim33_ns = [int(v) for v in _float_list(args.claim33_n)]
    if args.all or not (args.approx or args.theorem31 or args.claim32
                        or args.claim33 or args.limits):
        reports = run_all(seed=args.seed, instances=args.instances, n=args.n,
                          claim32_n=args.claim32_n, claim32_eps=eps_list,
                          claim33_ns=claim33_ns)
    else:
        reports = {}
        if args.approx:
            reports["greedy_half_approximation"] = approximation_suite(
                seed=args.seed, instances=args.instances, n=args.n)
        if args.theorem31:
            reports["theorem_3_1"] = theorem_31_suite(
                seed=args.seed, instances=args.instances, n=args.n,
                claim32_eps=eps_list, claim32_n=args.claim32_n)
        if args.claim32:
            for eps in eps_list:
                reports[f"claim_3_2_eps_{eps}"] = check_claim_32(args.claim32_n, eps)
        if args.claim33:
            for cn in claim33_ns:
                reports[f"claim_3_3_n_{cn}"] = check_claim_33(cn)
        if args.limits:
            reports["theorem_5_1_limits"] = gild_limits_suite(seed=args.seed)
    doc = {name: rep.to_json_dict() for name, rep in sorted(reports.items())}
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    all_passed = True
    for name, rep in sorted(reports.items()):
        status = "PASS" if rep.passed else "FAIL"
        print(f"{status} {name}: {rep.instances_checked} instance(s), "
              f"worst margin {rep.worst_margin:.3e}")
        all_passed &= rep.passed
    return 0 if all_passed else VERIFY_FAILED


def _cmd_compare(args) -> int:
    oracle = _build_oracle(args)
    specs = [ObjectiveSpec.parse(tok) for tok in args.objectives.split(",")]
    report = relative_scores(oracle, specs, k_max=args.k_max, seed=args.seed,
                             random_repeats=args.random_repeats)
    write_json(report, f"{args.output}.json")
    report.write_csv(f"{args.output}.csv")
    for f, row in report.averages.items():
        for g, avg in row.items():
            shown = "n/a" if avg is None else f"{avg:.3f}"
            print(f"avg relative score {f} -> {g}: {shown}")
    for g, avg in report.random_averages.items():
        shown = "n/a" if avg is None else f"{avg:.3f}"
        print(f"avg relative score random -> {g}: {shown}")
    return 0


def _cmd_sweep(args) -> int:
    oracle = _build_oracle(args)
    if args.sigma_grid:
        grid = np.asarray(_float_list(args.sigma_grid))
    else:
        grid = default_sigma_grid(args.grid_points, args.grid_start, args.grid_stop)
    report = sigma_sweep(oracle, args.k, grid=grid,
                         threads=resolve_threads(args.threads))
    write_json(report, f"{args.output}.json")
    report.write_csv(f"{args.output}.csv")
    print(f"swept {len(report.sigma_grid)} bandwidths at k={args.k}; "
          f"markers: adjusted_min={report.marker_adjusted_min:.6g} "
          f"adjusted_med={report.marker_adjusted_med:.6g}")
    return 0


def _cmd_hist(args) -> int:
    oracle = _build_oracle(args)
    if args.selection:
        with open(args.selection, encoding="utf-8") as fh:
            items = json.load(fh)["items"]
    else:
        items = greedy(oracle, ObjectiveSpec.parse(args.objective), args.k).items
    report = pairwise_histogram(oracle, items, bins=args.bins)
    write_json(report, f"{args.output}.json")
    report.write_csv(f"{args.output}.csv")
    print(f"{sum(report.counts)} pairs over [0, {report.diameter:.6g}] "
          f"in {args.bins} bins")
    return 0


def _cmd_fit(args) -> int:
    train = load_feedback(args.train)
    if args.tune:
        if not args.validation:
            raise DataError("--tune requires --validation")
        validation = load_feedback(args.validation)
        l2 = tune_l2(train, validation, _float_list(args.grid), k=args.ndcg_k)
        print(f"tuned l2 = {l2}")
    else:
        l2 = args.l2
    model = fit_ease(train, l2)
    save_ease(model, args.output)
    print(f"fitted EASE model on {train.m} users x {train.n} items "
          f"(l2={l2}) -> {args.output}")
    if args.export_csv:
        export_ease_csv(model, args.export_csv)
    return 0


def _cmd_rerank(args) -> int:
    model = load_ease(args.model)
    train = load_feedback(args.train)
    oracle = _build_oracle(args)
    spec = ObjectiveSpec.parse(args.objective)
    rel = score_users(model, train, args.user)
    pool = np.setdiff1d(np.arange(train.n), train.user_items(args.user))
    if args.validation:
        validation = load_feedback(args.validation)
        pool = np.setdiff1d(pool, validation.user_items(args.user))
    sel = greedy_rerank(oracle, RerankConfig(rel, args.lam, spec, args.k),
                        candidates=pool)
    doc = selection_to_json_dict(sel)
    doc["user"] = args.user
    doc["lambda"] = args.lam
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(f"user {args.user}, objective {spec.label()}, lambda={args.lam}")
    print("items:", " ".join(str(i) for i in sel.items))
    return 0


def _cmd_eval(args) -> int:
    model = load_ease(args.model)
    train = load_feedback(args.train)
    validation = load_feedback(args.validation)
    test = load_feedback(args.test)
    oracle = _build_oracle(args)
    specs = [ObjectiveSpec.parse(tok) for tok in args.objectives.split(",")]
    lambdas = _float_list(args.lambdas) if args.lambdas else DEFAULT_LAMBDAS
    report = eval_rerank(oracle, model, train, validation, test, specs,
                         lambdas=lambdas, k=args.k,
                         threads=resolve_threads(args.threads))
    write_json(report, f"{args.output}.json")
    report.write_csv(f"{args.output}.csv")
    for cell in report.cells:
        nild = "n/a" if cell.mean_nild is None else f"{cell.mean_nild:.3f}"
        ndisp = "n/a" if cell.mean_ndisp is None else f"{cell.mean_ndisp:.3f}"
        print(f"{cell.objective} lambda={cell.lam}: nDCG={cell.mean_ndcg:.3f} "
              f"nILD={nild} ndisp={ndisp}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="divsel", description=__doc__)
    parser.add_argument("--version", action="version", version=f"divsel {__version__}")
    parser.add_argument("--config", help="key=value config file mirroring flags")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic catalog")
    p.add_argument("--kind", required=True,
                   choices=["two_circles", "ellipse", "claim32", "claim33"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=0.01, help="claim32 cluster radius")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(fn=_cmd_gen)

    p = sub.add_parser("embed", help="SVD item embeddings from feedback")
    p.add_argument("--feedback", required=True)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--oversampling", type=int, default=8)
    p.add_argument("--power-iterations", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma-scale", action="store_true",
                   help="scale item vectors by the singular values")
    p.add_argument("--min-user", type=int, default=1,
                   help="drop users with fewer interactions (fixed point)")
    p.add_argument("--min-item", type=int, default=1)
    p.add_argument("--map-out", help="write new->original item id mapping CSV")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(fn=_cmd_embed)

    p = sub.add_parser("split", help="train/validation/test interaction split")
    p.add_argument("--feedback", required=True)
    p.add_argument("--ratios", default="0.6,0.2,0.2")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="output path prefix")
    p.set_defaults(fn=_cmd_split)

    p = sub.add_parser("select", help="greedy diversity maximization")
    _add_oracle_args(p)
    p.add_argument("--objective", required=True,
                   help="ild | disp | gild:fixed=<s> | gild:adjusted_min | gild:adjusted_med")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--exact-pair", action="store_true",
                   help="adaptive GILD: start from the globally farthest pair")
    p.add_argument("-o", "--output")
    p.set_defaults(fn=_cmd_select)

    p = sub.add_parser("verify", help="numeric theorem and claim checks")
    p.add_argument("--all", action="store_true")
    p.add_argument("--approx", action="store_true")
    p.add_argument("--theorem31", action="store_true")
    p.add_argument("--claim32", action="store_true")
    p.add_argument("--claim33", action="store_true")
    p.add_argument("--limits", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--claim32-n", type=int, default=8)
    p.add_argument("--eps", default="0.1,0.01")
    p.add_argument("--claim33-n", default="4,10")
    p.add_argument("-o", "--output")
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("compare", help="relative scores between objectives")
    _add_oracle_args(p)
    p.add_argument("--objectives", default="ild,disp,gild:adjusted_med")
    p.add_argument("--k-max", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--random-repeats", type=int, default=10)
    p.add_argument("-o", "--output", required=True, help="output path prefix")
    p.set_defaults(fn=_cmd_compare)

    p = sub.add_parser("sweep", help="bandwidth sweep of the Gaussian objective")
    _add_oracle_args(p)
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--grid-start", type=float, default=0.02)
    p.add_argument("--grid-stop", type=float, default=1.0)
    p.add_argument("--grid-points", type=int, default=64)
    p.add_argument("--sigma-grid", help="explicit comma-separated grid override")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("-o", "--output", required=True, help="output path prefix")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("hist", help="pairwise-distance histogram of a selection")
    _add_oracle_args(p)
    p.add_argument("--objective", default="ild")
    p.add_argument("--k", type=int, default=128)
    p.add_argument("--selection", help="JSON selection file (overrides --objective)")
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("-o", "--output", required=True, help="output path prefix")
    p.set_defaults(fn=_cmd_hist)

    p = sub.add_parser("fit", help="fit the item-item relevance model")
    p.add_argument("--train", required=True)
    p.add_argument("--l2", type=float, default=100.0)
    p.add_argument("--tune", action="store_true", help="grid-tune l2 on validation")
    p.add_argument("--validation")
    p.add_argument("--grid", default="1,10,100,500,1000")
    p.add_argument("--ndcg-k", type=int, default=50)
    p.add_argument("--export-csv", help="also dump the weight matrix as CSV")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(fn=_cmd_fit)

    p = sub.add_parser("rerank", help="relevance-diversity reranking for one user")
    _add_oracle_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--validation", help="also exclude the user's validation items")
    p.add_argument("--user", type=int, required=True)
    p.add_argument("--objective", default="disp")
    p.add_argument("--lam", type=float, default=0.2)
    p.add_argument("--k", type=int, default=50)
    p.add_argument("-o", "--output")
    p.set_defaults(fn=_cmd_rerank)

    p = sub.add_parser("eval", help="nDCG/nILD/ndisp over the lambda grid")
    _add_oracle_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--validation", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--objectives", default="ild,disp,gild:adjusted_med")
    p.add_argument("--lambdas", help="comma-separated; default the published grid")
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("-o", "--output", required=True, help="output path prefix")
    p.set_defaults(fn=_cmd_eval)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        if "--config" in argv:
            at = argv.index("--config")
            if at + 1 >= len(argv):
                parser.error("--config requires a path")
            config_tokens = _load_config(argv[at + 1])
            head = argv[:at]
            tail = argv[at + 2:]
            if not head:
                parser.error("--config must follow a subcommand")
            argv = head + config_tokens + tail
        args = parser.parse_args(argv)
        return args.fn(args)
    except BudgetExceededError as exc:
        print(f"divsel: {exc}", file=sys.stderr)
        return DATA_ERROR
    except DataError as exc:
        print(f"divsel: {exc}", file=sys.stderr)
        return DATA_ERROR
    except OSError as exc:
        print(f"divsel: {exc}", file=sys.stderr)
        return DATA_ERROR
    except ValueError as exc:
        print(f"divsel: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
