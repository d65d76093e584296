"""``laid`` command-line front end.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric error,
1 anything else.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import pipeline
from .attacks import AttackKind
from .config import RunConfig, load_config
from .data import (DatasetManifest, DomainTag, TensorCache, build_spectral_cache, preprocess,
                   scan_directory, split_val_test, stratified_subsample, synth_cache)
from .errors import ConfigError, DataError, LaidError, NumericError, ParameterError
from .imgcore import Rng
from .metrics import Setting, evaluate_protocol
from .nn import TrainConfig, checkpoint, tiny_detector_arch, train
from .profiler import profile
from .selection import EfficiencyWeights, constraint_filter, format_ranking, rank_and_dedupe, read_pool
from .trends import emit_scatter_svg, linear_fit

EXIT_OK, EXIT_OTHER, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3, 4


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, pipeline.StageError):
        return exit_code(exc.cause)
    if isinstance(exc, (ConfigError, ParameterError)):
        return EXIT_CONFIG
    if isinstance(exc, (DataError, FileNotFoundError)):
        return EXIT_DATA
    if isinstance(exc, NumericError):
        return EXIT_NUMERIC
    return EXIT_OTHER


def _parse_attacks(text: str) -> list[AttackKind]:
    try:
        return [AttackKind(k.strip()) for k in text.split(",") if k.strip()]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# -- subcommands -------------------------------------------------------------------

def cmd_preprocess(args) -> int:
    if args.manifest:
        manifest = DatasetManifest.read(args.manifest)
    else:
        manifest = scan_directory(args.root)
    if args.subsample:
        manifest = stratified_subsample(manifest, args.subsample, Rng(args.seed))
    if args.split_val_test:
        val, test = split_val_test(manifest, Rng(args.seed).child(1))
        out = Path(args.out)
        val.write(out.with_suffix(".val.tsv"))
        test.write(out.with_suffix(".test.tsv"))
        print(f"val {len(val)}  test {len(test)}")
        return EXIT_OK
    cache = preprocess(manifest, args.size)
    cache.write(args.out)
    if args.spectral_out:
        build_spectral_cache(cache).write(args.spectral_out)
    print(f"wrote {len(cache)} images to {args.out}")
    return EXIT_OK


def cmd_synth_data(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = Rng(args.seed).child(pipeline.STREAM_DATA)
    val_n = args.val_per_class if args.val_per_class else max(args.per_class // 4, 1)
    test_n = args.test_per_class if args.test_per_class else val_n
    for i, (name, n) in enumerate((("train", args.per_class), ("val", val_n), ("test", test_n))):
        cache = synth_cache(n, rng.child(i), args.size)
        cache.write(out / f"{name}.cache")
        if args.spectral:
            build_spectral_cache(cache).write(out / f"{name}.spectral.cache")
        print(f"{name}: {len(cache)} images")
    return EXIT_OK


def cmd_attack(args) -> int:
    cache = TensorCache.read(args.cache)
    if cache.domain is not DomainTag.SPATIAL:
        raise DataError("attacks apply to spatial caches")
    log_path = Path(args.log) if args.log else Path(str(args.out) + ".attacks.tsv")
    if args.replay:
        specs = pipeline.read_attack_log(args.replay)
        attacked = pipeline.replay_attacks(cache.images, specs)
    else:
        kinds = _parse_attacks(args.attacks)
        if len(kinds) != 1:
            raise ConfigError("attack takes exactly one kind")
        kind = kinds[0]
        rng = Rng(args.seed).child(pipeline.STREAM_ATTACK).child(list(AttackKind).index(kind))
        attacked, specs = pipeline.attack_images(cache.images, kind, rng)
    TensorCache(attacked, cache.labels, cache.range_tag, cache.domain).write(args.out)
    pipeline.write_attack_log(specs, log_path)
    print(f"attacked {len(specs)} images -> {args.out} (log {log_path})")
    return EXIT_OK


def cmd_train(args) -> int:
    tr, va = TensorCache.read(args.train), TensorCache.read(args.val)
    net = tiny_detector_arch(tr.images.shape[1]).init_params(Rng(args.seed).child(pipeline.STREAM_INIT))
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch, lr=args.lr,
                      seed=Rng(args.seed).child(pipeline.STREAM_TRAIN).seed64())
    result = train(net, (tr.images, tr.labels), (va.images, va.labels), cfg)
    checkpoint.save(result.net, args.out)
    print(f"best val acc {result.best_val_acc:.2f}% at epoch {result.best_epoch}; saved {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cache = TensorCache.read(args.cache)
    if cache.domain is not DomainTag.SPATIAL:
        raise DataError("evaluate takes a spatial cache; the spectral view is derived")
    net_p, net_f = checkpoint.load(args.spatial_model), checkpoint.load(args.spectral_model)
    recs = pipeline.evaluate_pair(net_p, net_f, cache.images, cache.labels)
    if args.adversarial:
        settings = [(Setting.ADV_SPATIAL, None), (Setting.ADV_SPECTRAL, None), (Setting.ADV_FUSION, None)]
    else:
        settings = [(Setting.CLEAN, "spatial"), (Setting.CLEAN, "spectral")]
        if args.fusion_clean:
            settings.append((Setting.CLEAN_FUSION, None))
    cost = profile(net_p)
    reports = [evaluate_protocol(recs, s, d, None if s in (Setting.ADV_FUSION, Setting.CLEAN_FUSION) else cost)
               for s, d in settings]
    for r in reports:
        print(r.to_text())
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        pipeline.write_reports(reports, Path(args.out))
    return EXIT_OK


def cmd_select(args) -> int:
    pool = read_pool(args.pool)
    if not args.no_filter:
        pool = constraint_filter(pool)
    weights = EfficiencyWeights.parse(args.weights) if args.weights else EfficiencyWeights()
    print(format_ranking(rank_and_dedupe(pool, weights, args.top_k)))
    return EXIT_OK


def cmd_profile(args) -> int:
    net = checkpoint.load(args.checkpoint) if args.checkpoint else tiny_detector_arch(args.input_size)
    shape = (net.input_shape[0], args.input_size, args.input_size) if args.input_size else None
    report = profile(net, shape)
    print(report.table())
    print(json.dumps(report.totals(), sort_keys=True))
    return EXIT_OK


def cmd_analyze(args) -> int:
    try:
        pts = np.loadtxt(args.points, delimiter=None, comments="#", skiprows=args.skip_header,
                         usecols=(0, 1), ndmin=2)
    except (OSError, ValueError) as exc:
        raise DataError(f"{args.points}: {exc}") from exc
    fit = linear_fit(pts)
    print(json.dumps({"slope": fit.slope, "intercept": fit.intercept,
                      "r_squared": fit.r_squared, "n": fit.n}, sort_keys=True))
    if args.svg:
        Path(args.svg).write_text(emit_scatter_svg(pts, fit, args.x_label, args.y_label, args.title))
    return EXIT_OK


def cmd_run(args) -> int:
    config = load_config(args.config) if args.config else RunConfig()
    config.update({"seed": args.seed, "attacks": args.attacks, "epochs": args.epochs,
                   "batch": args.batch, "lr": args.lr, "lambdas": args.weights, "out": args.out,
                   "fusion_clean": True if args.fusion_clean else None})
    result = pipeline.run_pipeline(config)
    print((result.out_dir / "metrics.txt").read_text(), end="")
    return EXIT_OK


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="laid", description="Lightweight AI-generated image detection bench")
    p.add_argument("-v", "--verbose", action="store_true", help="log training progress")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("preprocess", help="resize a PNM dataset into a tensor cache")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--root", help="<root>/<generator>/<nature|ai>/ images")
    src.add_argument("--manifest", help="TSV manifest (path, label, generator, split)")
    s.add_argument("--size", type=int, default=256)
    s.add_argument("--subsample", type=int, help="stratified subsample to this many images")
    s.add_argument("--split-val-test", action="store_true",
                   help="write val/test manifests next to --out instead of a cache")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--spectral-out")
    s.set_defaults(func=cmd_preprocess)

    s = sub.add_parser("synth-data", help="generate the synthetic train/val/test caches")
    s.add_argument("--per-class", type=int, default=2000)
    s.add_argument("--val-per-class", type=int)
    s.add_argument("--test-per-class", type=int)
    s.add_argument("--size", type=int, default=64)
    s.add_argument("--spectral", action="store_true", help="also write spectral caches")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth_data)

    s = sub.add_parser("attack", help="perturb a spatial cache and log the sampled parameters")
    s.add_argument("--cache", required=True)
    s.add_argument("--attacks", default="combined", help="one of crop,blur,noise,jpeg,combined")
    s.add_argument("--replay", help="apply the parameters of an existing attack log")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--log", help="attack log path (default <out>.attacks.tsv)")
    s.set_defaults(func=cmd_attack)

    s = sub.add_parser("train", help="train one detector on a cache")
    s.add_argument("--train", required=True)
    s.add_argument("--val", required=True)
    s.add_argument("--epochs", type=int, default=100)
    s.add_argument("--batch", type=int, default=32)
    s.add_argument("--lr", type=float, default=1e-4)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="checkpoint path")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("evaluate", help="score a spatial cache with both detectors")
    s.add_argument("--cache", required=True)
    s.add_argument("--spatial-model", required=True)
    s.add_argument("--spectral-model", required=True)
    s.add_argument("--adversarial", action="store_true", help="report adversarial settings")
    s.add_argument("--fusion-clean", action="store_true")
    s.add_argument("--out", help="directory for metrics.json / metrics.txt")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("select", help="rank a candidate pool by efficiency score")
    s.add_argument("--pool", required=True)
    s.add_argument("--lambda", dest="weights", help="accuracy,flops,params weights")
    s.add_argument("--top-k", type=int, default=10)
    s.add_argument("--no-filter", action="store_true", help="skip the size constraint")
    s.set_defaults(func=cmd_select)

    s = sub.add_parser("profile", help="per-layer parameter and FLOP counts")
    s.add_argument("--checkpoint")
    s.add_argument("--input-size", type=int, default=256)
    s.set_defaults(func=cmd_profile)

    s = sub.add_parser("analyze", help="least-squares trend of (x, y) points")
    s.add_argument("--points", required=True, help="whitespace or comma separated x y columns")
    s.add_argument("--skip-header", type=int, default=0)
    s.add_argument("--svg")
    s.add_argument("--title", default="")
    s.add_argument("--x-label", default="x")
    s.add_argument("--y-label", default="y")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("run", help="full pipeline")
    s.add_argument("--config")
    s.add_argument("--seed", type=int)
    s.add_argument("--attacks")
    s.add_argument("--epochs", type=int)
    s.add_argument("--batch", type=int)
    s.add_argument("--lr", type=float)
    s.add_argument("--lambda", dest="weights")
    s.add_argument("--out")
    s.add_argument("--fusion-clean", action="store_true")
    s.set_defaults(func=cmd_run)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        return args.func(args)
    except (LaidError, OSError) as exc:
        print(f"laid {args.command}: {exc}", file=sys.stderr)
        return exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
