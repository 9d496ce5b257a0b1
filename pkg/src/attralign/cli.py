"""Command-line entry point: train, eval, parse, gen-data, inspect-surrogates, grad-check.

Exit codes: 0 success, 1 usage error, 2 data error, 3 check failure. Every
failure writes exactly one JSON object on one line to stderr, e.g.
``{"error": "DataError", "exit": 2, "message": "train.jsonl:3: ..."}``.

Config precedence for ``train``: built-in ``TrainConfig`` defaults, then the
``--config`` file, then explicit command-line flags.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .core import CATEGORIES
from .data import DataError, InvalidSpec, SyntheticSpec, load_dataset, split_modalities, write_dataset
from .textparse import DEFAULT_THETA, ResourceFormatError, default_resources, parse_description

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CHECK = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _fail(kind: str, code: int, message: str) -> int:
    print(json.dumps({"error": kind, "exit": code, "message": message}, sort_keys=True), file=sys.stderr)
    return code


def _read_json(path, what: str) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            obj = json.load(f)
    except FileNotFoundError:
        raise DataError(f"{path}: {what} file not found") from None
    except json.JSONDecodeError as e:
        raise DataError(f"{path}:{e.lineno}: invalid JSON: {e.msg}") from None
    if not isinstance(obj, dict):
        raise DataError(f"{path}: {what} must be a JSON object")
    return obj


def _load_checkpoint(path):
    from .trainer import Checkpoint

    try:
        return Checkpoint.from_json(_read_json(path, "checkpoint"))
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, DataError):
            raise
        raise DataError(f"{path}: invalid checkpoint: {e}") from None


# ---------------------------------------------------------------- commands


_OVERRIDES = ("epochs", "lr", "batch_size", "seed", "k", "theta", "weight_decay", "decay_epoch",
              "eval_lambda", "dim")


def cmd_train(args) -> int:
    from .trainer import TrainConfig, fit, write_metric_log

    base = _read_json(args.config, "config") if args.config else {}
    for name in _OVERRIDES:
        value = getattr(args, name)
        if value is not None:
            base[name] = value
    try:
        cfg = TrainConfig.from_dict(base)
    except (TypeError, ValueError) as e:
        raise UsageError(f"invalid config: {e}") from None
    train, val, _ = load_dataset(args.data, theta=cfg.theta)
    result = fit(train, val, cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    result.checkpoint.save(out)
    metrics_path = Path(args.metrics) if args.metrics else out.with_suffix(".metrics.csv")
    write_metric_log(metrics_path, result.history)
    best = max((h["val_r1"] for h in result.history), default=float("nan"))
    print(f"checkpoint {out} (epoch {result.checkpoint.epoch}, val R@1 {best:.4f})")
    print(f"metrics {metrics_path}")
    return EXIT_OK


def cmd_eval(args) -> int:
    from .evaluate import RECALL_KS, person_search_metrics, probe_malpositioned, write_metrics

    ckpt = _load_checkpoint(args.ckpt)
    model = ckpt.model
    _, val, probe = load_dataset(args.data, theta=model.cfg.theta)
    global_only = args.ablate == "global-only"
    lam = 0.0 if global_only else (args.lam if args.lam is not None else model.cfg.eval_lambda)
    metrics = person_search_metrics(model, val, lam=lam, ks=RECALL_KS, global_only=global_only,
                                    with_map=True)
    if probe:
        metrics["probe_acc"] = probe_malpositioned(probe, model, lam=lam, seed=args.seed,
                                                   global_only=global_only)
    for name, value in metrics.items():
        print(f"{name} {value:.4f}")
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_metrics(out / "eval.csv", out / "eval.json", metrics)
    return EXIT_OK


def cmd_parse(args) -> int:
    from .textparse import LanguageResources, chunk_phrases, tokenize

    if args.resources is None:
        res = default_resources()
    else:
        d = Path(args.resources)
        res = LanguageResources.load(d / "wordvecs.txt", d / "dictionary.txt", d / "lexicon.txt")
    tokens = tokenize(args.text)
    parsed = parse_description(args.text, res, args.theta)
    report = {
        "tokens": tokens,
        "chunks": [" ".join(c) for c in chunk_phrases(tokens, res.lexicon)],
        "phrases": [{"text": " ".join(p.tokens),
                     "category": p.category.key if p.category is not None else None,
                     "score": round(p.score, 6)} for p in parsed.phrases],
        "attributes": {c.key: " ".join(t) for c, t in parsed.attrs.items()},
    }
    if args.json:
        print(json.dumps(report, indent=2))
        return EXIT_OK
    print("tokens: " + " ".join(tokens))
    for p in report["phrases"]:
        print(f"phrase: {p['text']!r} -> {p['category'] or '-'} ({p['score']:.3f})")
    for key, text in report["attributes"].items():
        print(f"{key}: {text}")
    return EXIT_OK


def cmd_gen_data(args) -> int:
    raw = _read_json(args.spec, "spec") if args.spec else {}
    if args.seed is not None:
        raw["seed"] = args.seed
    try:
        spec = SyntheticSpec.from_dict(raw)
    except TypeError as e:
        raise InvalidSpec(str(e)) from None
    out = write_dataset(args.out, spec)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_inspect_surrogates(args) -> int:
    from .sampler import SamplerInput, k_reciprocal_sample

    ckpt = _load_checkpoint(args.ckpt)
    model = ckpt.model
    train, val, _ = load_dataset(args.data, theta=model.cfg.theta)
    records = train if args.split == "train" else val
    visual, textual = split_modalities(records)
    _, v_attrs = model.encode_arrays(visual)
    _, t_attrs = model.encode_arrays(textual)
    k = args.k if args.k is not None else model.cfg.k
    dump = {}
    for c in CATEGORIES:
        if c not in v_attrs or c not in t_attrs:
            dump[c.key] = {}
            continue
        (vi, ve), (ti, te) = v_attrs[c], t_attrs[c]
        found = k_reciprocal_sample(SamplerInput(list(zip(vi.tolist(), ve)), list(zip(ti.tolist(), te)), k))
        dump[c.key] = {str(v): sorted(ts) for v, ts in sorted(found.items())}
    print(json.dumps({"k": k, "split": args.split, "surrogates": dump}, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_grad_check(args) -> int:
    from .gradcheck import run_all

    results = run_all(seed=args.seed)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        return _fail("CheckFailure", EXIT_CHECK, "gradient check failed: " + ", ".join(failed))
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="attralign", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log per-epoch progress")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    t = sub.add_parser("train", help="train and write a checkpoint plus a metric CSV")
    t.add_argument("--config", help="JSON document with TrainConfig fields")
    t.add_argument("--data", required=True, help="directory with train.jsonl and val.jsonl")
    t.add_argument("--out", required=True, help="checkpoint path")
    t.add_argument("--metrics", help="metric CSV path (default: <out>.metrics.csv)")
    t.add_argument("--epochs", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--batch-size", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--k", type=int)
    t.add_argument("--theta", type=float)
    t.add_argument("--weight-decay", type=float)
    t.add_argument("--decay-epoch", type=int)
    t.add_argument("--eval-lambda", type=float)
    t.add_argument("--dim", type=int)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="person search metrics and swap-probe accuracy")
    e.add_argument("--ckpt", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--lambda", dest="lam", type=float, help="attribute weight (default: checkpoint config)")
    e.add_argument("--ablate", choices=("global-only", "full"), default="full")
    e.add_argument("--seed", type=int, default=0, help="tie-break seed for the probe")
    e.add_argument("--out-dir", help="write eval.csv and eval.json here")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("parse", help="show how a description is parsed into attribute phrases")
    s.add_argument("--text", required=True)
    s.add_argument("--theta", type=float, default=DEFAULT_THETA)
    s.add_argument("--resources", help="directory with wordvecs.txt, dictionary.txt, lexicon.txt")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_parse)

    g = sub.add_parser("gen-data", help="write a synthetic dataset")
    g.add_argument("--spec", help="JSON document with SyntheticSpec fields")
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int)
    g.set_defaults(func=cmd_gen_data)

    i = sub.add_parser("inspect-surrogates", help="dump k-reciprocal surrogate pairs per category")
    i.add_argument("--ckpt", required=True)
    i.add_argument("--data", required=True)
    i.add_argument("--k", type=int)
    i.add_argument("--split", choices=("train", "val"), default="train")
    i.set_defaults(func=cmd_inspect_surrogates)

    c = sub.add_parser("grad-check", help="finite-difference gradient checks")
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_grad_check)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        return _fail("UsageError", EXIT_USAGE, str(e))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        return _fail("UsageError", EXIT_USAGE, str(e))
    except (DataError, InvalidSpec, ResourceFormatError, FileNotFoundError) as e:
        return _fail(type(e).__name__, EXIT_DATA, str(e))
    except ValueError as e:
        # shape/dimension problems between a checkpoint and the data it is applied to
        return _fail(type(e).__name__, EXIT_DATA, str(e))


if __name__ == "__main__":
    sys.exit(main())
