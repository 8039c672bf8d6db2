"""Command-line entry points for the offline pipeline and the scorer.

Subcommands: generate, slice, embed, train, evaluate, sweep, serve, score.
Pipeline-shaped commands read a JSON config; see README for the schema.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from datetime import date

import numpy as np

from . import detect, pipeline
from .embed import (SkipGramConfig, WalkConfig, generate_walks, save_embeddings,
                    train_skipgram, train_skipgram_distributed)
from .graph import build_network, dump_network, load_network
from .ingest import (SyntheticConfig, WindowSpec, generate_synthetic_frame,
                     parse_labels, parse_records, serialize_labels,
                     serialize_records, slice_windows)
from .serve import ModelServer, ScoreRequest, serve_loop
from .store import FeatureStore


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="titant")
    sub = parser.add_subparsers(required=True)

    p = sub.add_parser("generate", help="generate a synthetic record/label set")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("slice", help="partition records into T+1 windows")
    p.add_argument("--records", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--test-date", required=True)
    p.add_argument("--network-days", type=int, default=90)
    p.add_argument("--train-days", type=int, default=14)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("embed", help="train node embeddings from a graph dump")
    p.add_argument("--graph", required=True)
    p.add_argument("--walk-len", type=int, default=50)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("train", help="run one T+1 training cycle")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a labeled record file with a model")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="mean F1 across a hyperparameter axis")
    p.add_argument("--config", required=True)
    p.add_argument("--axis", required=True, choices=pipeline.SWEEP_AXES)
    p.add_argument("--values", required=True)
    p.add_argument("--repeats", type=int, default=10)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("serve", help="run the scoring server")
    p.add_argument("--store", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--bind", default="127.0.0.1:7447")
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("score", help="offline parity scoring of one request")
    p.add_argument("--one-shot", required=True, dest="one_shot")
    p.add_argument("--store", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_score)
    return parser


def cmd_generate(args) -> int:
    with open(args.config, encoding="utf-8") as fh:
        raw = json.load(fh)
    if "start_date" in raw:
        raw["start_date"] = date.fromisoformat(raw["start_date"])
    cfg = SyntheticConfig(**raw)
    frame, labels = generate_synthetic_frame(cfg)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "records.txt"), "w", encoding="utf-8") as fh:
        fh.write(serialize_records(frame))
    with open(os.path.join(args.out, "labels.txt"), "w", encoding="utf-8") as fh:
        fh.write(serialize_labels(labels))
    print(f"wrote {len(frame)} records, {len(labels)} fraud labels to {args.out}")
    return 0


def cmd_slice(args) -> int:
    records = _read_records(args.records)
    labels = _read_labels(args.labels)
    spec = WindowSpec(test_date=date.fromisoformat(args.test_date),
                      network_days=args.network_days, train_days=args.train_days)
    network, train, test = slice_windows(records, labels, spec)
    os.makedirs(args.out, exist_ok=True)
    for name, frame in (("network", network), ("train", train), ("test", test)):
        with open(os.path.join(args.out, f"{name}.txt"), "w", encoding="utf-8") as fh:
            fh.write(serialize_records(frame))
    print(f"network={len(network)} train={len(train)} test={len(test)}")
    return 0


def cmd_embed(args) -> int:
    net = load_network(args.graph)
    corpus = generate_walks(net, WalkConfig(walk_length=args.walk_len,
                                            samples_per_node=args.samples,
                                            seed=args.seed))
    cfg = SkipGramConfig(dim=args.dim, context_window=args.window,
                         negatives_per_positive=args.negatives,
                         epochs=args.epochs, seed=args.seed)
    if args.workers == 1:
        matrix = train_skipgram(corpus, cfg)
    else:
        matrix = train_skipgram_distributed(corpus, cfg, args.workers)
    save_embeddings(matrix, args.out)
    print(f"wrote {len(matrix.users)} x {matrix.dim} embeddings to {args.out}")
    return 0


def cmd_train(args) -> int:
    with open(args.config, encoding="utf-8") as fh:
        raw = json.load(fh)
    records = _read_records(raw["records"])
    labels = _read_labels(raw["labels"])
    cfg = _pipeline_config(raw)
    os.makedirs(args.out, exist_ok=True)
    store = FeatureStore(raw["store"]) if raw.get("store") else FeatureStore(os.path.join(args.out, "store"))
    model_path = os.path.join(args.out, "model.txt")
    emb_path = os.path.join(args.out, "embeddings.txt")
    model, embedding, report = pipeline.run_t_plus_1(
        records, labels, cfg, store=store, model_path=model_path,
        embeddings_path=emb_path if cfg.feature_mode != "basic_only" else None)
    with open(os.path.join(args.out, "report.tsv"), "w", encoding="utf-8") as fh:
        fh.write(_report_table(report))
    print(_report_table(report), end="")
    return 0


def cmd_evaluate(args) -> int:
    model = detect.load_model(args.model)
    frame = pipeline.as_frame(_read_records(args.test))
    labels = _read_labels(args.labels)
    fraud_ids = {l.txn_id for l in labels if l.is_fraud}
    y = np.array([t in fraud_ids for t in frame.txn_ids], dtype=bool)
    embedding = None
    if args.embeddings:
        from .embed import load_embeddings
        embedding = load_embeddings(args.embeddings)
    mode = "basic_only" if model.feature_arity == 52 else "basic_plus_embedding"
    X = pipeline.assemble_features(frame, embedding, mode)
    report = pipeline.evaluate(model.predict_scores(X), y, threshold=args.threshold)
    print(_report_table(report), end="")
    return 0


def cmd_sweep(args) -> int:
    with open(args.config, encoding="utf-8") as fh:
        raw = json.load(fh)
    records = _read_records(raw["records"])
    labels = _read_labels(raw["labels"])
    cfg = _pipeline_config(raw)
    values = [float(v) for v in args.values.split(",")]
    rows = pipeline.sweep(records, labels, cfg, args.axis, values, repeats=args.repeats)
    print(pipeline.sweep_table(rows), end="")
    return 0


def cmd_serve(args) -> int:
    host, port = args.bind.rsplit(":", 1)
    store = FeatureStore(args.store)
    server = ModelServer(store, model_path=args.model, threshold=args.threshold)
    serve_loop(server, (host, int(port)))
    return 0


def cmd_score(args) -> int:
    store = FeatureStore(args.store)
    server = ModelServer(store, model_path=args.model, threshold=args.threshold)
    with open(args.one_shot, encoding="utf-8") as fh:
        request = ScoreRequest.from_json(fh.read())
    response = server.score(request)
    print(response.to_json())
    return 0


def _read_records(path):
    with open(path, encoding="utf-8") as fh:
        return parse_records(fh)


def _read_labels(path):
    with open(path, encoding="utf-8") as fh:
        return parse_labels(fh)


def _pipeline_config(raw: dict) -> pipeline.PipelineConfig:
    window = WindowSpec(test_date=date.fromisoformat(raw["test_date"]),
                        network_days=raw.get("network_days", 90),
                        train_days=raw.get("train_days", 14))
    walk = WalkConfig(**raw.get("walk", {}))
    sgns = SkipGramConfig(**raw.get("sgns", {}))
    return pipeline.PipelineConfig(
        window=window, walk=walk, sgns=sgns,
        detector=raw.get("detector", "gbdt"),
        detector_params=raw.get("detector_params", {}),
        feature_mode=raw.get("feature_mode", "basic_plus_embedding"),
        bins=raw.get("bins", 200),
        threshold=raw.get("threshold", 0.5),
        threshold_mode=raw.get("threshold_mode", "fixed"),
        num_workers=raw.get("num_workers", 1),
        seed=raw.get("seed", 0),
    )


def _report_table(report) -> str:
    head = "f1\tprecision\trecall\tthreshold\tmode\ttp\tfp\tfn\ttn"
    row = (f"{report.f1:.6f}\t{report.precision:.6f}\t{report.recall:.6f}\t"
           f"{report.threshold:.6f}\t{report.threshold_mode}\t"
           f"{report.tp}\t{report.fp}\t{report.fn}\t{report.tn}")
    lines = [head, row]
    for frac, rec in sorted(report.rec_at_top_frac.items()):
        lines.append(f"rec@top{frac:g}\t{rec:.6f}")
    return "\n".join(lines) + "\n"


if __name__ == "__main__":
    sys.exit(main())
