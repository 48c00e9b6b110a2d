"""Command line entry points: prepare, rewrite, eval, report."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from importlib import resources
from pathlib import Path

from . import attack, corpus, metrics, rewriter, wire
from .lm import FixtureProvider, NgramLm, Vocabulary
from .mechanism import SamplerConfig

log = logging.getLogger("textpriv")

ENDPOINT_ENV = "TEXTPRIV_ENDPOINT"

LABEL_KINDS = ("author", "gender", "age")

EVAL_FIELDS = (
    "dataset",
    "strategy",
    "param",
    "label",
    "f1_base",
    "f1_static",
    "f1_adaptive",
    "cosine",
    "bleu",
    "ppl",
    "gain",
)


def load_config(path=None) -> dict:
    """Shipped defaults, overlaid with the user's config file if given."""
    with resources.files("textpriv").joinpath("default_config.json").open() as fh:
        config = json.load(fh)
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            overrides = json.load(fh)
        unknown = set(overrides) - set(config)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        config.update(overrides)
    if os.environ.get(ENDPOINT_ENV):
        config["endpoint"] = os.environ[ENDPOINT_ENV]
    return config


def _label_values(docs, kind: str) -> list[str]:
    if kind == "age":
        return [corpus.bin_age(d.age) for d in docs]
    return [getattr(d, kind) for d in docs]


def _param_tag(config: SamplerConfig) -> str:
    if config.strategy in ("dp", "quasi-dp"):
        return f"eps{config.epsilon:g}"
    if config.top_k is None:
        return "full"
    return f"k{config.top_k}"


def _parse_endpoint(value: str) -> tuple[str, int]:
    host, sep, port = value.rpartition(":")
    if not sep or not host:
        raise ValueError(f"endpoint must look like host:port, got {value!r}")
    return host, int(port)


def _ensure_parent(path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)


def _cmd_prepare(args) -> int:
    if args.synthetic:
        docs = corpus.generate_synthetic(args.docs, args.authors, args.signal, args.seed)
        _ensure_parent(args.out)
        corpus.save_jsonl(docs, args.out)
        log.info("wrote %d synthetic documents to %s", len(docs), args.out)
        return 0
    if not args.input:
        raise SystemExit("prepare needs either --synthetic or --input")
    docs = corpus.load_jsonl(args.input)
    filtered, stats = corpus.filter_pipeline(
        docs, top_topics=args.top_topics, max_tokens=args.max_tokens
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus.save_jsonl(filtered, out_dir / "filtered.jsonl")
    corpus.save_jsonl(corpus.select_author10(filtered), out_dir / "author10.jsonl")
    corpus.save_jsonl(
        corpus.select_topic10(filtered, seed=args.seed), out_dir / "topic10.jsonl"
    )
    with open(out_dir / "stats.json", "w", encoding="utf-8") as fh:
        json.dump(stats, fh, indent=2)
    log.info("filter stages: %s", stats)
    return 0


def _build_provider(args, config, texts):
    if args.provider == "local":
        return rewriter.LocalProviderFactory(
            texts, order=config["lm_order"], alpha=config["alpha"]
        )
    if args.provider == "fixture":
        if not args.fixture:
            raise SystemExit("--provider fixture needs --fixture")
        return FixtureProvider.from_file(args.fixture)
    endpoint = args.endpoint or config["endpoint"]
    if not endpoint:
        raise SystemExit(f"--provider remote needs --endpoint or ${ENDPOINT_ENV}")
    if not args.vocab_manifest:
        raise SystemExit("--provider remote needs --vocab-manifest")
    host, port = _parse_endpoint(endpoint)
    return wire.RemoteProvider.connect(host, port, args.vocab_manifest)


def _sweep_samplers(config) -> list[SamplerConfig]:
    """The full published grid: two epsilon strategies plus the k ladder."""
    eps_grid = config["epsilon_grid"]
    k_grid = config["k_grid"]
    if not eps_grid or not k_grid:
        raise SystemExit("sweep needs non-empty epsilon_grid and k_grid in the config")
    samplers = []
    for strategy in ("dp", "quasi-dp"):
        for eps in eps_grid:
            samplers.append(
                SamplerConfig(
                    strategy=strategy,
                    epsilon=float(eps),
                    sensitivity=config["sensitivity"],
                    bounds=tuple(config["bounds"]),
                    top_k=config["top_k"],
                )
            )
    for k in k_grid:
        samplers.append(SamplerConfig(strategy="non-dp", top_k=int(k)))
    return samplers


def _cmd_rewrite(args) -> int:
    config = load_config(args.config)
    if args.lm_order is not None:
        config["lm_order"] = args.lm_order
    if args.alpha is not None:
        config["alpha"] = args.alpha
    if args.sweep:
        if args.epsilon is not None or args.top_k is not None or args.full_vocab:
            raise SystemExit(
                "--sweep takes its grids from the config; drop --epsilon/--top-k/--full-vocab"
            )
        samplers = _sweep_samplers(config)
    else:
        if args.strategy in ("dp", "quasi-dp") and args.epsilon is None:
            raise SystemExit(f"--strategy {args.strategy} needs --epsilon")
        samplers = [
            SamplerConfig(
                strategy=args.strategy,
                epsilon=args.epsilon,
                sensitivity=config["sensitivity"],
                bounds=tuple(args.bounds if args.bounds else config["bounds"]),
                top_k=None if args.full_vocab else (args.top_k if args.top_k else config["top_k"]),
            )
        ]
    docs = corpus.load_jsonl(args.input)
    texts = [d.text for d in docs]
    provider = _build_provider(args, config, texts)
    max_new = args.max_new_tokens or config["max_new_tokens"]
    batch = config["batch_size"]

    def progress(done, total):
        if done % batch == 0 or done == total:
            log.info("rewrote %d/%d documents", done, total)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset = Path(args.input).stem
    failed = 0
    for sampler in samplers:
        records = rewriter.rewrite_corpus(
            texts, provider, sampler, seed=args.seed, max_new_tokens=max_new, progress=progress
        )
        out_path = out_dir / f"{dataset}_{sampler.strategy}_{_param_tag(sampler)}.jsonl"
        rewriter.save_records(records, out_path)
        log.info("wrote %s", out_path)
        print(out_path)
        failed += sum(1 for r in records if r.error is not None)
    if failed:
        log.error("%d rewrites failed; their records carry the error", failed)
        return 1
    return 0


def _cmd_eval(args) -> int:
    config = load_config(args.config)
    docs = corpus.load_jsonl(args.original)
    records = rewriter.load_records(args.privatized)
    if len(records) != len(docs):
        raise SystemExit(
            f"{args.privatized} has {len(records)} records, {args.original} has {len(docs)}"
        )
    for i, (doc, rec) in enumerate(zip(docs, records)):
        if rec.index != i or rec.original != doc.text:
            raise SystemExit(f"record {i} does not line up with the original corpus")
    failed = [rec.index for rec in records if rec.error is not None]
    if failed:
        raise SystemExit(
            f"{len(failed)} records carry rewrite errors (first: {failed[:5]}); "
            "re-run rewrite before evaluating"
        )
    ratio, seed, runs = config["split_ratio"], config["split_seed"], config["adaptive_runs"]
    train_idx, val_idx = corpus.split_indices(len(docs), ratio, seed)
    originals = [d.text for d in docs]
    rewrites = [r.rewritten for r in records]
    cs = [metrics.cosine_texts(originals[i], rewrites[i]) for i in val_idx]
    bl = [metrics.bleu(rewrites[i], originals[i]) for i in val_idx]
    cs_mean = sum(cs) / len(cs)
    bleu_mean = sum(bl) / len(bl)
    # Readability proxy: a model of the original training-split text
    # scores the validation-split rewrites.  Empty rewrites are skipped.
    train_texts = [originals[i] for i in train_idx]
    scoring_lm = NgramLm(
        Vocabulary.from_corpus(train_texts), config["lm_order"], config["alpha"]
    ).fit(train_texts)
    ppl = [
        metrics.perplexity(rewrites[i], scoring_lm)
        for i in val_idx
        if metrics.tokenize(rewrites[i])
    ]
    ppl_mean = sum(ppl) / len(ppl) if ppl else None
    sampler = SamplerConfig(
        strategy=records[0].strategy, epsilon=records[0].epsilon, top_k=records[0].top_k
    )
    meta = {
        "dataset": Path(args.original).stem,
        "strategy": sampler.strategy,
        "param": _param_tag(sampler),
    }
    rows = []
    gains = []
    for kind in LABEL_KINDS:
        y = _label_values(docs, kind)
        y_train = [y[i] for i in train_idx]
        y_val = [y[i] for i in val_idx]
        orig_train = [originals[i] for i in train_idx]
        orig_val = [originals[i] for i in val_idx]
        priv_val = [rewrites[i] for i in val_idx]
        f1_base = attack.static_attack(orig_train, y_train, orig_val, y_val)
        f1_static = attack.static_attack(orig_train, y_train, priv_val, y_val)
        f1_adaptive = attack.adaptive_attack(rewrites, y, ratio=ratio, seed=seed, runs=runs)
        gain = attack.relative_gain(cs_mean, f1_adaptive, f1_base)
        gains.append(gain)
        rows.append(
            dict(
                meta,
                label=kind,
                f1_base=f"{f1_base:.6f}",
                f1_static=f"{f1_static:.6f}",
                f1_adaptive=f"{f1_adaptive:.6f}",
                cosine=f"{cs_mean:.6f}",
                bleu=f"{bleu_mean:.6f}",
                ppl="" if ppl_mean is None else f"{ppl_mean:.6f}",
                gain=f"{gain:.6f}",
            )
        )
        log.info("%s: base %.3f static %.3f adaptive %.3f", kind, f1_base, f1_static, f1_adaptive)
    rows.append(
        dict(meta, label="cumulative", gain=f"{attack.cumulative_gain(gains):.6f}")
    )
    _ensure_parent(args.out)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=EVAL_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    log.info("wrote %s", args.out)
    return 0


def _report_rows(eval_paths) -> list[dict]:
    """One output row per evaluated run; gains recomputed, never trusted."""
    rows = []
    for path in eval_paths:
        with open(path, encoding="utf-8", newline="") as fh:
            by_label = {row["label"]: row for row in csv.DictReader(fh)}
        missing = [k for k in LABEL_KINDS if k not in by_label]
        if missing:
            raise SystemExit(f"{path} is missing labels: {missing}")
        first = by_label[LABEL_KINDS[0]]
        out = {
            "dataset": first["dataset"],
            "strategy": first["strategy"],
            "param": first["param"],
            "cosine": float(first["cosine"]),
            "bleu": float(first["bleu"]),
            "ppl": float(first["ppl"]) if first.get("ppl") else "",
        }
        total = 0.0
        for kind in LABEL_KINDS:
            row = by_label[kind]
            gain = attack.relative_gain(
                float(row["cosine"]), float(row["f1_adaptive"]), float(row["f1_base"])
            )
            out[f"{kind}_f1"] = float(row["f1_adaptive"])
            out[f"{kind}_gain"] = gain
            total += gain
        out["cumulative_gain"] = total
        rows.append(out)
    rows.sort(key=lambda r: (r["dataset"], r["strategy"], r["param"]))
    return rows


def _cmd_report(args) -> int:
    rows = _report_rows(args.evals)
    fields = list(rows[0].keys())
    _ensure_parent(args.out)
    if args.format in ("csv", "both"):
        path = f"{args.out}.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            for row in rows:
                writer.writerow({k: f"{v:.4f}" if isinstance(v, float) else v for k, v in row.items()})
        log.info("wrote %s", path)
    if args.format in ("markdown", "both"):
        path = f"{args.out}.md"
        lines = ["| " + " | ".join(fields) + " |", "| " + " | ".join("---" for _ in fields) + " |"]
        for row in rows:
            cells = [f"{v:.4f}" if isinstance(v, float) else str(v) for v in row.values()]
            lines.append("| " + " | ".join(cells) + " |")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        log.info("wrote %s", path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="textpriv", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    prepare = sub.add_parser("prepare", help="build a dataset (synthetic or filtered)")
    prepare.add_argument("--synthetic", action="store_true")
    prepare.add_argument("--docs", type=int, default=500)
    prepare.add_argument("--authors", type=int, default=4)
    prepare.add_argument("--signal", type=float, default=0.8)
    prepare.add_argument("--seed", type=int, default=42)
    prepare.add_argument("--out", default="dataset.jsonl")
    prepare.add_argument("--input", help="labeled JSONL corpus to filter")
    prepare.add_argument("--out-dir", default="data")
    prepare.add_argument("--top-topics", type=int, default=15)
    prepare.add_argument("--max-tokens", type=int, default=256)
    prepare.set_defaults(func=_cmd_prepare)

    rw = sub.add_parser("rewrite", help="privatize a corpus")
    rw.add_argument("--input", required=True)
    rw.add_argument("--out-dir", default=".")
    rw.add_argument("--strategy", choices=["dp", "quasi-dp", "non-dp"], default="dp")
    rw.add_argument("--epsilon", type=float)
    rw.add_argument("--top-k", type=int)
    rw.add_argument(
        "--sweep", action="store_true",
        help="rewrite with every configured (strategy, parameter) variant",
    )
    rw.add_argument("--full-vocab", action="store_true", help="disable the top-k filter")
    rw.add_argument("--bounds", type=float, nargs=2, metavar=("LO", "HI"))
    rw.add_argument("--seed", type=int, default=42)
    rw.add_argument("--max-new-tokens", type=int)
    rw.add_argument("--provider", choices=["local", "remote", "fixture"], default="local")
    rw.add_argument("--endpoint", help="host:port of a logits server")
    rw.add_argument("--vocab-manifest", help="token table for the remote vocabulary")
    rw.add_argument("--fixture", help="canned-logits JSON file")
    rw.add_argument("--lm-order", type=int, dest="lm_order")
    rw.add_argument("--alpha", type=float)
    rw.add_argument("--config")
    rw.set_defaults(func=_cmd_rewrite)

    ev = sub.add_parser("eval", help="score one privatized corpus")
    ev.add_argument("--original", required=True)
    ev.add_argument("--privatized", required=True)
    ev.add_argument("--out", default="eval.csv")
    ev.add_argument("--config")
    ev.set_defaults(func=_cmd_eval)

    rep = sub.add_parser("report", help="aggregate eval CSVs into one table")
    rep.add_argument("evals", nargs="+")
    rep.add_argument("--out", default="report")
    rep.add_argument("--format", choices=["csv", "markdown", "both"], default="both")
    rep.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
