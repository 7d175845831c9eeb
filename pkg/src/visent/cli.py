"""Command-line pipeline: prepare -> codebook -> extract -> train / evaluate.

Exit codes: 0 success, 2 usage, 3 format/parse error, 4 computation error
(undefined metric), 5 I/O error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import data
from .container import FormatError, read_blobs, write_blobs
from .evaluation import UndefinedMetricError, dump_reports, render_table, run_protocol
from .features import DescriptorConfig, concat_lowlevel, dense_patch_descriptors, load_codebook, save_codebook, train_codebook
from .model import TrainConfig, save_model, train_one_vs_rest
from .net import DEFAULT_MEANS, SpecError, canonical_network, extract_features, load_network, load_weights, random_weights
from .tensor import read_pnm

log = logging.getLogger("visent")

EXIT_OK, EXIT_USAGE, EXIT_FORMAT, EXIT_COMPUTE, EXIT_IO = 0, 2, 3, 4, 5

# Tunables settable from --config; command-line flags take precedence.
DEFAULTS = {
    "learning_rate": 0.1,
    "epochs": 500,
    "lam": 1e-4,
    "batch_size": 0,
    "runs": 5,
    "test_fraction": 0.2,
    "mode": "split",
    "codebook_size": 1000,
    "max_descriptors": 50000,
    "lbp_mode": "uniform",
    "means": ",".join(str(m) for m in DEFAULT_MEANS),
}
_TYPES = {"learning_rate": float, "epochs": int, "lam": float, "batch_size": int, "runs": int,
          "test_fraction": float, "mode": str, "codebook_size": int, "max_descriptors": int,
          "lbp_mode": str, "means": str}


class CLIError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def atomic_write_text(path, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def load_config(path) -> dict:
    if path is None:
        return {}
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            for token in line.split():
                key, sep, value = token.partition("=")
                if not sep or key not in _TYPES:
                    raise CLIError(f"{path}:{lineno}: unknown or malformed setting {token!r}", EXIT_FORMAT)
                try:
                    out[key] = _TYPES[key](value)
                except ValueError:
                    raise CLIError(f"{path}:{lineno}: bad value for {key}: {value!r}", EXIT_FORMAT) from None
    return out


def resolve_settings(args) -> dict:
    settings = dict(DEFAULTS)
    settings.update(load_config(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


class RunRecorder:
    """Collects per-stage timings and digests, written next to the main output."""

    def __init__(self, command, settings, seed):
        self.command = command
        self.settings = settings
        self.seed = seed
        self.inputs = {}
        self.outputs = []
        self.timing = {}

    def stage(self, name):
        recorder = self

        class _Stage:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                recorder.timing[name] = round(time.perf_counter() - self.t0, 6)

        return _Stage()

    def add_input(self, path):
        if path is not None:
            self.inputs[str(path)] = sha256_file(path)

    def write(self, path):
        config = json.dumps({"command": self.command, "settings": self.settings}, sort_keys=True)
        doc = {
            "command": self.command,
            "config_digest": hashlib.sha256(config.encode()).hexdigest(),
            "settings": self.settings,
            "inputs": self.inputs,
            "seed": self.seed,
            "outputs": [str(p) for p in self.outputs],
            "timing_seconds": self.timing,
        }
        atomic_write_text(f"{path}.run.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _read_samples(path) -> list:
    records = data.load_manifest(path)
    if records and isinstance(records[0], data.PostRecord):
        resolution = data.resolve_dataset(records)
        return resolution.samples
    return records


def _load_images(samples, base: Path) -> list:
    images = []
    for s in samples:
        try:
            images.append(read_pnm(base / s.image))
        except (OSError, ValueError) as exc:
            raise CLIError(f"sample {s.id!r}: cannot decode image {s.image!r}: {exc}", EXIT_IO) from None
    return images


def _means(settings) -> tuple:
    try:
        means = tuple(float(v) for v in str(settings["means"]).split(","))
    except ValueError:
        raise CLIError(f"bad channel means {settings['means']!r}", EXIT_FORMAT) from None
    if len(means) != 3:
        raise CLIError("channel means need exactly 3 values", EXIT_FORMAT)
    return means


def _descriptor_config(settings) -> DescriptorConfig:
    return DescriptorConfig(codebook_size=settings["codebook_size"], lbp_mode=settings["lbp_mode"])


# --- commands ---------------------------------------------------------------

def cmd_prepare(args, settings, out=sys.stdout) -> int:
    rec = RunRecorder("prepare", settings, args.seed)
    for p in (args.manifest, args.lexicon):
        if p is not None and not os.path.exists(p):
            raise CLIError(f"missing input file {p}", EXIT_IO)
    rec.add_input(args.manifest)
    rec.add_input(args.lexicon)
    with rec.stage("load"):
        records = data.load_manifest(args.manifest)
        lexicon = data.parse_lexicon(args.lexicon) if args.lexicon else None
    with rec.stage("curate"):
        if records and isinstance(records[0], data.PostRecord):
            kept = data.filter_posts(records, lexicon) if lexicon is not None else list(records)
            resolution = data.resolve_dataset(kept)
            samples, rate, invalid = resolution.samples, resolution.agreement_rate, resolution.invalid
        else:
            kept, samples, invalid = records, list(records), []
            rate = data.Fraction(1)
    hist = data.label_histogram(samples)
    report = {
        "input_posts": len(records),
        "after_lexicon_filter": len(kept),
        "samples": len(samples),
        "invalid": len(invalid),
        "agreement": f"{len(samples)}/{len(kept)}",
        "agreement_rate": f"{rate.numerator}/{rate.denominator}",
        "agreement_rate_float": float(rate),
        "histogram": {str(k): v for k, v in hist.items()},
        "seed": args.seed,
    }
    data.write_samples(args.out, samples)
    atomic_write_text(f"{args.out}.curation.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    rec.outputs += [args.out, f"{args.out}.curation.json"]
    if not samples:
        print("0 samples", file=out)
    print(f"posts: {len(records)}  kept by lexicon: {len(kept)}  resolved: {len(samples)}", file=out)
    print(f"agreement rate: {len(samples)}/{len(kept)} = {float(rate):.3f}", file=out)
    print("label histogram: " + "  ".join(f"{k}:{v}" for k, v in hist.items()), file=out)
    rec.write(args.out)
    return EXIT_OK


def cmd_codebook(args, settings, out=sys.stdout) -> int:
    rec = RunRecorder("codebook", settings, args.seed)
    rec.add_input(args.samples)
    config = _descriptor_config(settings)
    samples = _read_samples(args.samples)
    with rec.stage("descriptors"):
        images = _load_images(samples, Path(args.samples).parent)
        descs = [dense_patch_descriptors(img, config)[1] for img in images]
        pool = np.concatenate(descs) if descs else np.zeros((0, config.patch_dim), np.float32)
        if pool.shape[0] > settings["max_descriptors"]:
            rng = np.random.default_rng(args.seed)
            pick = np.sort(rng.choice(pool.shape[0], settings["max_descriptors"], replace=False))
            pool = pool[pick]
    with rec.stage("kmeans"):
        codebook = train_codebook(pool, config.codebook_size, seed=args.seed)
    save_codebook(args.out, codebook)
    rec.outputs.append(args.out)
    print(f"codebook: {codebook.k} words x {codebook.dim} dims from {pool.shape[0]} descriptors, "
          f"{codebook.iterations} iterations, seed {args.seed}", file=out)
    rec.write(args.out)
    return EXIT_OK


def write_feature_store(path, method, matrix, ids) -> None:
    atomic_write_text(f"{path}.index", "".join(f"{i}\t{sid}\n" for i, sid in enumerate(ids)))
    write_blobs(path, {method: matrix})


def read_feature_store(path):
    blobs = read_blobs(path)
    if len(blobs) != 1:
        raise FormatError(f"{path}: expected one feature blob, found {len(blobs)}")
    (method, matrix), = blobs.items()
    ids = []
    with open(f"{path}.index", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            row, _, sid = line.rstrip("\n").partition("\t")
            if not row.isdigit() or int(row) != lineno - 1:
                raise FormatError(f"{path}.index:{lineno}: bad row number {row!r}")
            ids.append(sid)
    if matrix.ndim != 2 or matrix.shape[0] != len(ids):
        raise FormatError(f"{path}: {matrix.shape} rows do not match {len(ids)} index entries")
    return method, matrix, ids


def cmd_extract(args, settings, out=sys.stdout) -> int:
    rec = RunRecorder("extract", settings, args.seed)
    rec.add_input(args.samples)
    samples = _read_samples(args.samples)
    with rec.stage("decode"):
        images = _load_images(samples, Path(args.samples).parent)
    method = args.method
    with rec.stage("features"):
        if method in ("fc7", "fc8"):
            spec = load_network(args.net) if args.net else canonical_network()
            rec.add_input(args.net)
            if args.weights:
                rec.add_input(args.weights)
                weights = load_weights(args.weights)
            elif args.random_weights:
                weights = random_weights(spec, args.seed)
            else:
                raise CLIError("fc7/fc8 extraction needs --weights or --random-weights", EXIT_USAGE)
            matrix = extract_features(spec, weights, images, method, _means(settings), threads=args.threads)
        else:
            if not args.codebook:
                raise CLIError("lowlevel extraction needs --codebook", EXIT_USAGE)
            rec.add_input(args.codebook)
            codebook = load_codebook(args.codebook)
            config = DescriptorConfig(codebook_size=codebook.k, lbp_mode=settings["lbp_mode"])
            dim = config.lowlevel_dim
            rows = [concat_lowlevel(img, codebook, config) for img in images]
            matrix = np.stack(rows) if rows else np.zeros((0, dim), np.float32)
    write_feature_store(args.out, method, matrix, [s.id for s in samples])
    rec.outputs += [args.out, f"{args.out}.index"]
    print(f"{method}: {matrix.shape[0]} x {matrix.shape[1]} features -> {args.out}", file=out)
    rec.write(args.out)
    return EXIT_OK


def _train_config(args, settings) -> TrainConfig:
    return TrainConfig(settings["learning_rate"], settings["epochs"], settings["batch_size"],
                       settings["lam"], args.seed)


def _aligned(store_path, samples):
    method, matrix, ids = read_feature_store(store_path)
    if ids != [s.id for s in samples]:
        raise CLIError(f"{store_path}: rows are not aligned with the sample manifest", EXIT_FORMAT)
    return method, matrix


def cmd_train(args, settings, out=sys.stdout) -> int:
    rec = RunRecorder("train", settings, args.seed)
    rec.add_input(args.samples)
    rec.add_input(args.store)
    samples = _read_samples(args.samples)
    method, matrix = _aligned(args.store, samples)
    with rec.stage("train"):
        model = train_one_vs_rest(matrix, [s.label for s in samples], _train_config(args, settings))
    save_model(args.out, model)
    rec.outputs.append(args.out)
    print(f"{method}: trained {len(model.models)} one-vs-rest models on {matrix.shape[0]} samples", file=out)
    rec.write(args.out)
    return EXIT_OK


def cmd_evaluate(args, settings, out=sys.stdout) -> int:
    rec = RunRecorder("evaluate", settings, args.seed)
    rec.add_input(args.samples)
    samples = _read_samples(args.samples)
    labels = [s.label for s in samples]
    stores = []
    for path in args.store:
        rec.add_input(path)
        stores.append(_aligned(path, samples))
    config = _train_config(args, settings)
    reports = []
    with rec.stage("protocol"):
        for method, matrix in stores:
            reports.append(run_protocol(matrix, labels, config, runs=settings["runs"],
                                        test_fraction=settings["test_fraction"], base_seed=args.seed,
                                        method=method, mode=settings["mode"]))
    seeds = sorted({s for r in reports for s in r.seeds})
    table = render_table(reports)
    table += f"seeds: {', '.join(str(s) for s in seeds)}\n"
    prefix = args.out
    atomic_write_text(f"{prefix}.txt", table)
    atomic_write_text(f"{prefix}.json", dump_reports(reports, seeds))
    rec.outputs += [f"{prefix}.txt", f"{prefix}.json"]
    out.write(table)
    rec.write(prefix)
    return EXIT_OK


def cmd_net_info(args, settings, out=sys.stdout) -> int:
    spec = load_network(args.net) if args.net else canonical_network()
    weights = load_weights(args.weights) if args.weights else None
    if weights is not None:
        weights.validate(spec)
    wshapes = spec.weight_shapes()
    total = 0
    print(f"{'layer':<10}{'kind':<16}{'output':<18}{'params':>12}", file=out)
    print(f"{'input':<10}{'':<16}{'x'.join(map(str, spec.input_shape)):<18}{0:>12}", file=out)
    for layer, shape in zip(spec.layers, spec.output_shapes()):
        n = 0
        if layer.name in wshapes:
            w, b = wshapes[layer.name]
            n = int(np.prod(w)) + int(np.prod(b))
        total += n
        print(f"{layer.name:<10}{layer.kind:<16}{'x'.join(map(str, shape)):<18}{n:>12}", file=out)
    print(f"total parameters: {total}", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    def global_flags(suppress):
        # subcommands repeat the flags without defaults so a value given before the subcommand survives
        default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        g = argparse.ArgumentParser(add_help=False)
        g.add_argument("--seed", type=int, default=default(0), help="base random seed (default 0)")
        g.add_argument("--threads", type=int, default=default(1), help="worker threads for feature extraction")
        g.add_argument("--config", default=default(None), help="file of key=value settings")
        g.add_argument("-v", "--verbose", action="store_true", default=default(False))
        return g

    common = global_flags(suppress=True)
    parser = argparse.ArgumentParser(prog="visent", description=__doc__.splitlines()[0],
                                     parents=[global_flags(suppress=False)])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", parents=[common], help="filter posts and resolve majority-vote labels")
    p.add_argument("--manifest", required=True)
    p.add_argument("--lexicon")
    p.add_argument("--out", required=True, help="resolved sample manifest to write")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("codebook", parents=[common], help="train the visual-word codebook")
    p.add_argument("--samples", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--codebook-size", dest="codebook_size", type=int)
    p.add_argument("--max-descriptors", dest="max_descriptors", type=int)
    p.set_defaults(func=cmd_codebook)

    p = sub.add_parser("extract", parents=[common], help="compute a feature store")
    p.add_argument("--samples", required=True)
    p.add_argument("--method", required=True, choices=("fc7", "fc8", "lowlevel"))
    p.add_argument("--net", help="network file (default: bundled canonical topology)")
    p.add_argument("--weights")
    p.add_argument("--random-weights", action="store_true", help="use seeded random weights")
    p.add_argument("--codebook")
    p.add_argument("--means", help="comma-separated R,G,B channel means")
    p.add_argument("--lbp-mode", dest="lbp_mode", choices=("uniform", "full", "riu2"))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    for name, func, helptext in (("train", cmd_train, "fit one-vs-rest classifiers on a feature store"),
                                 ("evaluate", cmd_evaluate, "run the repeated-split AUC protocol")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--samples", required=True)
        if name == "train":
            p.add_argument("--store", required=True)
        else:
            p.add_argument("--store", required=True, action="append")
            p.add_argument("--runs", type=int)
            p.add_argument("--test-fraction", dest="test_fraction", type=float)
            p.add_argument("--mode", choices=("split", "kfold"))
        p.add_argument("--learning-rate", dest="learning_rate", type=float)
        p.add_argument("--epochs", type=int)
        p.add_argument("--lam", type=float)
        p.add_argument("--batch-size", dest="batch_size", type=int)
        p.add_argument("--out", required=True)
        p.set_defaults(func=func)

    p = sub.add_parser("net-info", parents=[common], help="list layer shapes and parameter counts")
    p.add_argument("--net")
    p.add_argument("--weights")
    p.set_defaults(func=cmd_net_info)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        settings = resolve_settings(args)
        return args.func(args, settings, out=out)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except UndefinedMetricError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except (FormatError, SpecError, data.ManifestError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
