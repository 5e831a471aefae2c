"""``synsrl`` command line: train, predict, evaluate, analyze, features.

Exit codes: 0 on success, 2 for unreadable or inconsistent data, 3 for bad
configuration.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

from . import syntax as syn
from .analysis import AlignmentError, analysis_report, dumps, evaluate, format_analysis
from .corpus import DataError, load_corpus, read_props, read_trees
from .model import (
    ConfigError,
    ModelConfig,
    SRLModel,
    TrainConfig,
    ensemble_predict,
    load_external_vectors,
    train,
)
from .treebank import PropsSentence, TreebankError, write_props_blocks

log = logging.getLogger("synsrl")

EXIT_DATA = 2
EXIT_CONFIG = 3

PATH_KEYS = ("train_deps", "train_props", "train_external", "dev_deps", "dev_props",
             "dev_external", "checkpoint_dir")


# ---------------------------------------------------------------------------
# configuration


@dataclasses.dataclass
class RunConfig:
    paths: dict
    model: ModelConfig
    train: TrainConfig

    def to_dict(self) -> dict:
        return {"paths": dict(self.paths), "model": dataclasses.asdict(self.model),
                "train": dataclasses.asdict(self.train)}


def _read_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return data


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def resolve_run_config(args) -> RunConfig:
    """JSON file first, then ``--set section.key=value``, then dedicated flags."""
    raw = _read_json(args.config) if args.config else {}
    unknown = set(raw) - {"paths", "model", "train"}
    if unknown:
        raise ConfigError(f"unknown config sections: {', '.join(sorted(unknown))}")
    paths = dict(raw.get("paths", {}))
    model = dict(raw.get("model", {}))
    tr = dict(raw.get("train", {}))
    sections = {"paths": paths, "model": model, "train": tr}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        section, dot, name = key.partition(".")
        if not sep or not dot or section not in sections:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        sections[section][name] = _parse_value(value)
    for key in PATH_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            paths[key] = flag
    for flag, section, key in (("syntax", model, "syntax"), ("epochs", tr, "epochs"),
                               ("batch_size", tr, "batch_size")):
        value = getattr(args, flag, None)
        if value is not None:
            section[key] = value
    model["seed"] = tr["seed"] = args.seed
    unknown = set(paths) - set(PATH_KEYS)
    if unknown:
        raise ConfigError(f"unknown path keys: {', '.join(sorted(unknown))}")
    for key in ("train_deps", "train_props", "checkpoint_dir"):
        if not paths.get(key):
            raise ConfigError(f"missing required path {key!r}")
    if bool(paths.get("dev_deps")) != bool(paths.get("dev_props")):
        raise ConfigError("dev_deps and dev_props must be given together")
    try:
        return RunConfig(paths, ModelConfig.from_dict(model), TrainConfig.from_dict(tr))
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# train


def cmd_train(args) -> int:
    cfg = resolve_run_config(args)
    resolved = json.dumps(cfg.to_dict(), sort_keys=True)
    log.info("resolved config: %s", resolved)
    p = cfg.paths
    for key in ("train_deps", "train_props", "train_external", "dev_deps", "dev_props", "dev_external"):
        if p.get(key) and not Path(p[key]).is_file():
            raise DataError(f"{p[key]}: no such file ({key})")
    corpus, _ = load_corpus(p["train_deps"], p["train_props"], p.get("train_external"))
    dev = None
    if p.get("dev_deps"):
        dev, _ = load_corpus(p["dev_deps"], p["dev_props"], p.get("dev_external"))
    out = Path(p["checkpoint_dir"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(
        json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    with open(out / "train_log.jsonl", "w", encoding="utf-8") as fh:
        def record(entry):
            fh.write(json.dumps({"epoch": entry.epoch, "loss": entry.loss, "dev_f1": entry.dev_f1}) + "\n")
            fh.flush()
            log.info("epoch %d loss %.6f dev_f1 %s", entry.epoch, entry.loss,
                     "-" if entry.dev_f1 is None else f"{entry.dev_f1:.2f}")

        try:
            result = train(corpus, cfg.model, cfg.train, dev=dev, callback=record)
        except ValueError as exc:
            raise DataError(str(exc)) from None
    path = result.model.save(out / "model.json")
    log.info("best epoch %d; checkpoint %s", result.best_epoch, path)
    print(path)
    return 0


# ---------------------------------------------------------------------------
# predict

_WORKER_MODELS: list[SRLModel] = []


def _init_worker(paths: Sequence[str]) -> None:
    _WORKER_MODELS[:] = [SRLModel.load(p) for p in paths]


def _predict_sentence(job):
    sent, tree, predicates, external = job
    return [ensemble_predict(sent, tree, p, _WORKER_MODELS, external) for p in predicates]


def _load_checkpoints(paths: Sequence[str]) -> list[SRLModel]:
    models = []
    for path in paths:
        try:
            models.append(SRLModel.load(path))
        except OSError as exc:
            raise DataError(f"{path}: {exc.strerror or exc}") from None
        except (ValueError, KeyError) as exc:
            raise DataError(f"{path}: not a model checkpoint ({exc})") from None
    tags = models[0].tags
    for path, m in zip(paths[1:], models[1:]):
        if m.tags != tags:
            raise ConfigError(f"{path}: tag set differs from {paths[0]}")
    return models


def _check_against_config(models: Sequence[SRLModel], config_path: str, paths) -> None:
    raw = _read_json(config_path).get("model", {})
    expected = ModelConfig.from_dict({**raw, "seed": 0})
    for path, m in zip(paths, models):
        have = dataclasses.asdict(m.config)
        for key, value in dataclasses.asdict(expected).items():
            if key in raw and key != "seed" and have[key] != value:
                raise ConfigError(f"{path}: checkpoint has {key}={have[key]!r} "
                                  f"but the config says {value!r}")


def cmd_predict(args) -> int:
    models = _load_checkpoints(args.checkpoint)
    if args.config:
        _check_against_config(models, args.config, args.checkpoint)
    trees = read_trees(args.deps)
    blocks = read_props(args.props)
    if len(trees) != len(blocks):
        raise DataError(f"{args.deps} has {len(trees)} sentences but {args.props} has {len(blocks)}")
    external = {}
    if args.external:
        try:
            external = load_external_vectors(args.external)
        except OSError as exc:
            raise DataError(f"{args.external}: {exc.strerror or exc}") from None
        except ValueError as exc:
            raise DataError(str(exc)) from None
    jobs = []
    for k, ((sent, tree), block) in enumerate(zip(trees, blocks)):
        if len(block.lemmas) != len(sent):
            raise DataError(f"sentence {k}: {len(sent)} tokens in {args.deps} but "
                            f"{len(block.lemmas)} rows in {args.props}")
        jobs.append((sent, tree, block.predicates, external.get(k)))
    try:
        if args.jobs > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(args.jobs, initializer=_init_worker,
                                     initargs=(list(args.checkpoint),)) as pool:
                frames = list(pool.map(_predict_sentence, jobs, chunksize=8))
        else:
            _WORKER_MODELS[:] = models
            frames = [_predict_sentence(job) for job in jobs]
    except ValueError as exc:
        raise DataError(str(exc)) from None
    out_blocks = [PropsSentence(b.lemmas, tuple(f)) for b, f in zip(blocks, frames)]
    text = write_props_blocks(out_blocks)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# evaluate / analyze


def _aligned_frames(gold_path: str, pred_path: str):
    gold, pred = read_props(gold_path), read_props(pred_path)
    if len(gold) != len(pred):
        raise DataError(f"{gold_path} has {len(gold)} sentences but {pred_path} has {len(pred)}")
    g_frames, p_frames = [], []
    for k, (g, p) in enumerate(zip(gold, pred)):
        if g.predicates != p.predicates:
            raise DataError(f"sentence {k}: predicates {g.predicates} in {gold_path} "
                            f"but {p.predicates} in {pred_path}")
        g_frames += g.frames
        p_frames += p.frames
    return g_frames, p_frames


def cmd_evaluate(args) -> int:
    gold, pred = _aligned_frames(args.gold, args.pred)
    report = evaluate(gold, pred)
    print(dumps(report.to_dict()) if args.json else report.table())
    return 0


def cmd_analyze(args) -> int:
    gold, pred = _aligned_frames(args.gold, args.pred)
    if args.deps:
        trees = read_trees(args.deps)
        if len(trees) != len(read_props(args.gold)):
            raise DataError(f"{args.deps} and {args.gold} differ in sentence count")
    report = analysis_report(gold, pred)
    if args.json_out:
        Path(args.json_out).write_text(dumps(report) + "\n", encoding="utf-8")
        print(format_analysis(report))
    else:
        print(dumps(report))
        print()
        print(format_analysis(report))
    return 0


# ---------------------------------------------------------------------------
# features


def feature_rows(tree, p: int, mode: str) -> list[list[str]]:
    """One row of extracted discrete features per token for predicate ``p``."""
    rows = []
    for i in range(1, len(tree) + 1):
        if mode == "tpf":
            rows.append(["({},{})".format(*syn.tpf_extract(tree, i, p))])
        elif mode == "pe":
            rows.append([syn.pattern_extract(tree, i, p), *syn.pe_labels(tree, i, p)])
        else:
            left, right = syn.sdp_label_paths(tree, i, p)
            rows.append([" ".join(left), " ".join(right)])
    return rows


def cmd_features(args) -> int:
    trees = read_trees(args.deps)
    if args.props:
        blocks = read_props(args.props)
        if len(blocks) != len(trees):
            raise DataError(f"{args.deps} has {len(trees)} sentences but {args.props} has {len(blocks)}")
        predicates = [b.predicates for b in blocks]
    else:
        predicates = [[args.predicate] if args.predicate <= len(t[0]) else [] for t in trees]
    header = {"tpf": ["tpf"], "pe": ["pattern", "label_i", "label_lca", "label_p"],
              "sdp": ["path_i", "path_p"]}[args.mode]
    out = ["\t".join(["sentence", "predicate", "token", "word", *header])]
    for k, ((sent, tree), preds) in enumerate(zip(trees, predicates)):
        for p in preds:
            for i, cells in enumerate(feature_rows(tree, p, args.mode), 1):
                out.append("\t".join([str(k), str(p), str(i), sent.tokens[i - 1], *cells]))
    print("\n".join(out))
    return 0


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="synsrl", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a model and write a checkpoint")
    t.add_argument("--config", help="JSON run config with paths/model/train sections")
    t.add_argument("--seed", type=int, required=True)
    for key in PATH_KEYS:
        t.add_argument("--" + key.replace("_", "-"), dest=key)
    t.add_argument("--syntax", choices=syn.SYNTAX_MODES)
    t.add_argument("--epochs", type=int)
    t.add_argument("--batch-size", type=int)
    t.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                   help="override any config value (repeatable)")
    t.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="tag predicates and write props")
    p.add_argument("--checkpoint", action="append", required=True,
                   help="model checkpoint; repeat for an ensemble")
    p.add_argument("--deps", required=True, help="CoNLL-X trees")
    p.add_argument("--props", required=True, help="props file giving predicate positions")
    p.add_argument("--external", help="JSON-lines external token vectors")
    p.add_argument("--config", help="run config whose model section must match the checkpoint")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--output", help="output file (default stdout)")
    p.set_defaults(func=cmd_predict)

    e = sub.add_parser("evaluate", help="span precision, recall, F1 and Comp.")
    e.add_argument("--gold", required=True)
    e.add_argument("--pred", required=True)
    e.add_argument("--json", action="store_true")
    e.set_defaults(func=cmd_evaluate)

    a = sub.add_parser("analyze", help="F1 by distance and the oracle-transformation curve")
    a.add_argument("--gold", required=True)
    a.add_argument("--pred", required=True)
    a.add_argument("--deps", help="trees for the same sentences (checked for alignment)")
    a.add_argument("--json-out", help="write the JSON report here and print only text")
    a.set_defaults(func=cmd_analyze)

    f = sub.add_parser("features", help="dump extracted tree features as TSV")
    f.add_argument("--deps", required=True)
    src = f.add_mutually_exclusive_group(required=True)
    src.add_argument("--props", help="take predicates from this props file")
    src.add_argument("--predicate", type=int, help="1-based predicate index for every sentence")
    f.add_argument("--mode", choices=("sdp", "tpf", "pe"), required=True)
    f.set_defaults(func=cmd_features)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (DataError, TreebankError, AlignmentError) as exc:
        log.error("data error: %s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
