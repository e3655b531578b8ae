"""Command-line pipeline: segment, ground, train, eval, infer, ablate.

Every subcommand reads its inputs from flags, optionally backed by a flat
key=value config file (--config); flags given on the command line win.
Failures exit nonzero with a one-line machine-readable JSON error on
stderr. With a fixed seed every artifact is byte-deterministic.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .data import load_qa_dataset
from .embeddings import load_embeddings
from .errors import ConfigError, DimensionMismatch, StepQAError
from .metrics import rank_records, report_from_records
from .model import (
    GroundingMode,
    ModelConfig,
    load_checkpoint,
    resolve_sample,
    save_checkpoint,
)
from .optim import TrainConfig
from .segmenter import (
    FunctionSet,
    SegmentationMode,
    load_function_set,
    load_script,
    save_function_set,
    segment_script,
)
from .toy import build_toy_fixture
from .train import StepRanker, predict_steps, tfidf_function_weights, train

FEATURE_FLAGS = ("ft", "fv", "at", "av")


# --- config file handling -----------------------------------------------------


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Flat `key = value` lines; '#' starts a comment."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, val = line.split("=", 1)
        values[key.strip().replace("-", "_")] = val.strip()
    return values


class Options:
    """Merged view of CLI flags, config-file values, and defaults."""

    def __init__(self, args: argparse.Namespace):
        self._args = args
        self._file = parse_config_file(args.config) if args.config else {}

    def get(self, key: str, convert=str, default=None, required: bool = False):
        val = getattr(self._args, key, None)
        if val is None and key in self._file:
            val = convert(self._file[key])
        if val is None:
            val = default
        if val is None and required:
            raise ConfigError(f"missing required option --{key.replace('_', '-')}")
        return val


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _segmentation_mode(text: str) -> SegmentationMode:
    try:
        return SegmentationMode(text)
    except ValueError:
        raise ConfigError(
            f"unknown segmentation mode {text!r} (expected function|sentence)"
        ) from None


def _grounding_mode(text: str) -> GroundingMode:
    try:
        return GroundingMode(text)
    except ValueError:
        raise ConfigError(
            f"unknown grounding mode {text!r} (expected tfidf|cross-att)"
        ) from None


def _features(text: str) -> dict[str, bool]:
    chosen = set()
    for tok in text.split(","):
        tok = tok.strip().lower()
        if not tok:
            continue
        if tok not in FEATURE_FLAGS:
            raise ConfigError(
                f"unknown feature {tok!r} (expected subset of fT,fV,aT,aV)"
            )
        chosen.add(tok)
    return {
        "use_function_t": "ft" in chosen,
        "use_function_v": "fv" in chosen,
        "use_answer_t": "at" in chosen,
        "use_answer_v": "av" in chosen,
    }


# --- shared loading helpers -----------------------------------------------------


def _load_functions(path: str | Path) -> dict[str, FunctionSet]:
    """Load one functions.json or every *.json in a directory."""
    p = Path(path)
    files = sorted(p.glob("*.json")) if p.is_dir() else [p]
    if not files:
        raise ConfigError(f"no functions files under {path}")
    out: dict[str, FunctionSet] = {}
    for f in files:
        fs = load_function_set(f)
        out[fs.video_id] = fs
    return out


def _write_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _model_config(
    opt: Options, table_dim: int, grounding: GroundingMode, seed: int
) -> ModelConfig:
    feats = _features(opt.get("feat", str, default="fT,fV,aT,aV"))
    return ModelConfig(
        dim_t=table_dim,
        dim_v=table_dim,
        hidden=opt.get("hidden", int, default=128),
        mlp_hidden=opt.get("mlp_hidden", int, default=512),
        grounding_mode=grounding,
        seed=seed,
        **feats,
    )


def _train_config(opt: Options) -> TrainConfig:
    return TrainConfig(
        lr=opt.get("lr", float, default=1e-4),
        epochs=opt.get("epochs", int, default=100),
        batch_size=opt.get("batch_size", int, default=16),
        teacher_forcing=opt.get("teacher_forcing", _bool, default=True),
        precision=opt.get("precision", str, default="f64"),
    )


# --- subcommands ------------------------------------------------------------------


def cmd_segment(args: argparse.Namespace) -> int:
    opt = Options(args)
    script_path = opt.get("script", required=True)
    mode = _segmentation_mode(opt.get("mode", str, default="function"))
    out = Path(opt.get("out", required=True))
    fs = segment_script(load_script(script_path), mode)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_function_set(fs, out)
    print(f"wrote {out} ({len(fs.units)} units, video {fs.video_id})")
    return 0


def cmd_ground(args: argparse.Namespace) -> int:
    opt = Options(args)
    fs = load_function_set(opt.get("functions", required=True))
    question = opt.get("question", required=True)
    top_k = opt.get("top_k", int)
    out = Path(opt.get("out", required=True))
    fw = tfidf_function_weights(fs, question, top_k)
    _write_json(
        out,
        {
            "video_id": fs.video_id,
            "weights": fw.weights.tolist(),
            "scores": fw.scores.tolist(),
        },
    )
    best = int(np.argmax(fw.weights))
    print(f"wrote {out} (argmax function #{best}: {fs.units[best].function_id})")
    return 0


def cmd_emb(args: argparse.Namespace) -> int:
    table = load_embeddings(args.path)
    ids = list(table.entries)
    print(f"count {len(table)}  dim {table.dim}")
    if ids:
        print(f"first {ids[0]}")
        print(f"last  {ids[-1]}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    opt = Options(args)
    dataset = load_qa_dataset(opt.get("data", required=True))
    functions = _load_functions(opt.get("functions", required=True))
    table = load_embeddings(opt.get("emb", required=True))
    grounding = _grounding_mode(opt.get("grounding", str, default="tfidf"))
    seed = opt.get("seed", int, default=0)
    model_cfg = _model_config(opt, table.dim, grounding, seed)
    train_cfg = _train_config(opt)
    eval_path = opt.get("eval_data")
    eval_dataset = load_qa_dataset(eval_path) if eval_path else dataset
    top_k = opt.get("top_k", int)

    params, log = train(
        dataset, functions, table, model_cfg, train_cfg,
        eval_dataset=eval_dataset, top_k=top_k,
    )
    out = Path(opt.get("out", required=True))
    out.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out, model_cfg, params)
    print(
        f"trained {train_cfg.epochs} epochs, final loss {log.epoch_losses[-1]:.6f}"
    )
    if log.best_report is not None:
        b = log.best_report
        print(
            f"best epoch {log.best_epoch}: R@1 {b.r_at_1:.1f}  R@3 {b.r_at_3:.1f}  "
            f"MR {b.mr:.2f}  MRR {b.mrr:.3f}"
        )
    print(f"wrote {out}")
    return 0


def _eval_report(opt: Options) -> tuple[dict, object]:
    ckpt_path = opt.get("ckpt", required=True)
    config, params = load_checkpoint(ckpt_path)
    dataset = load_qa_dataset(opt.get("data", required=True))
    functions = _load_functions(opt.get("functions", required=True))
    table = load_embeddings(opt.get("emb", required=True))
    if table.dim != config.dim_t or table.dim != config.dim_v:
        raise DimensionMismatch(
            f"checkpoint dims (t={config.dim_t}, v={config.dim_v}) do not match "
            f"embedding file dim {table.dim}"
        )
    top_k = opt.get("top_k", int)
    predictions = []
    for sample in dataset:
        try:
            fs = functions[sample.video_id]
        except KeyError:
            raise ConfigError(
                f"no segmented functions for video {sample.video_id!r}"
            ) from None
        predictions.append(
            predict_steps(params, sample, fs, table, config, top_k=top_k)
        )
    records = rank_records(predictions, dataset)
    report = report_from_records(records)
    doc = report.to_dict()
    doc["ranks"] = [r.rank for r in records]
    return doc, report


def cmd_eval(args: argparse.Namespace) -> int:
    opt = Options(args)
    doc, report = _eval_report(opt)
    out = Path(opt.get("out", required=True))
    _write_json(out, doc)
    print(
        f"R@1 {report.r_at_1:.1f}  R@3 {report.r_at_3:.1f}  "
        f"MR {report.mr:.2f}  MRR {report.mrr:.3f}  ({report.count} steps)"
    )
    print(f"wrote {out}")
    return 0


def cmd_infer(args: argparse.Namespace) -> int:
    opt = Options(args)
    config, params = load_checkpoint(opt.get("ckpt", required=True))
    table = load_embeddings(opt.get("emb", required=True))
    functions = _load_functions(opt.get("functions", required=True))
    dataset = load_qa_dataset(opt.get("data", required=True))
    video = opt.get("video", required=True)
    question = opt.get("question", required=True)
    top_k = opt.get("top_k", int)

    sample = next(
        (
            s
            for s in dataset
            if s.video_id == video and s.question_text == question
        ),
        None,
    )
    if sample is None:
        raise ConfigError(
            f"no sample with video {video!r} and that question in the dataset"
        )
    fs = functions[video]
    weights = None
    if config.grounding_mode is GroundingMode.TFIDF:
        weights = tfidf_function_weights(fs, question, top_k)
    rs = resolve_sample(sample, fs, table, config, weights)
    ranker = StepRanker(params, rs, config)

    for s, step in enumerate(sample.steps):
        probs = ranker.rank_step()
        order = np.argsort(-probs, kind="stable")
        print(f"step {s + 1}/{len(sample.steps)}:")
        for place, j in enumerate(order.tolist(), 1):
            print(
                f"  {place}. candidate {j}  p={probs[j]:.4f}  "
                f"{step.candidates[j].text_emb_id}"
            )
        if s + 1 == len(sample.steps):
            break
        sys.stdout.write("chosen candidate index (blank = top-1): ")
        sys.stdout.flush()
        line = sys.stdin.readline().strip()
        choice = int(order[0]) if not line else int(line)
        ranker.feed_choice(choice)
        print(f"  -> proceeding with candidate {choice}")
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    opt = Options(args)
    axes = [
        a.strip()
        for a in opt.get("axes", str, default="").split(",")
        if a.strip()
    ]
    for a in axes:
        if a not in ("segmentation", "grounding", "features"):
            raise ConfigError(f"unknown ablation axis {a!r}")
    scripts_path = opt.get("scripts", required=True)
    data_path = opt.get("data", required=True)
    emb_path = opt.get("emb", required=True)
    out_dir = Path(opt.get("out", required=True))
    seed = opt.get("seed", int, default=0)
    top_k = opt.get("top_k", int)

    seg_values = (
        [SegmentationMode.SENTENCE_CENTRIC, SegmentationMode.FUNCTION_CENTRIC]
        if "segmentation" in axes
        else [_segmentation_mode(opt.get("mode", str, default="function"))]
    )
    grounding_values = (
        [GroundingMode.CROSS_ATTENTION, GroundingMode.TFIDF]
        if "grounding" in axes
        else [_grounding_mode(opt.get("grounding", str, default="tfidf"))]
    )
    feature_values = (
        ["fT,fV,aT", "fT,fV,aT,aV"]
        if "features" in axes
        else [opt.get("feat", str, default="fT,fV,aT,aV")]
    )

    dataset = load_qa_dataset(data_path)
    table = load_embeddings(emb_path)
    train_cfg = _train_config(opt)

    scripts = Path(scripts_path)
    script_files = sorted(scripts.glob("*.json")) if scripts.is_dir() else [scripts]
    if not script_files:
        raise ConfigError(f"no script files under {scripts_path}")

    rows = []
    for seg in seg_values:
        segmented = {
            fs.video_id: fs
            for fs in (segment_script(load_script(f), seg) for f in script_files)
        }
        for grounding in grounding_values:
            for feat in feature_values:
                cell = f"{seg.value}__{grounding.value}__{feat.replace(',', '-')}"
                cell_dir = out_dir / "cells" / cell
                cell_dir.mkdir(parents=True, exist_ok=True)
                for fs in segmented.values():
                    save_function_set(fs, cell_dir / f"{fs.video_id}.functions.json")
                feats = _features(feat)
                model_cfg = ModelConfig(
                    dim_t=table.dim,
                    dim_v=table.dim,
                    hidden=opt.get("hidden", int, default=128),
                    mlp_hidden=opt.get("mlp_hidden", int, default=512),
                    grounding_mode=grounding,
                    seed=seed,
                    **feats,
                )
                params, log = train(
                    dataset, segmented, table, model_cfg, train_cfg,
                    eval_dataset=dataset, top_k=top_k,
                )
                save_checkpoint(cell_dir / "model.qam1", model_cfg, params)
                predictions = [
                    predict_steps(
                        params, s, segmented[s.video_id], table, model_cfg,
                        top_k=top_k,
                    )
                    for s in dataset
                ]
                report = report_from_records(rank_records(predictions, dataset))
                _write_json(cell_dir / "report.json", report.to_dict())
                rows.append(
                    {
                        "segmentation": seg.value,
                        "grounding": grounding.value,
                        "features": feat,
                        **report.to_dict(),
                    }
                )

    md_lines = [
        "| Segmentation | Grounding | Features | R@1 | R@3 | MR | MRR |",
        "|---|---|---|---|---|---|---|",
    ]
    for row in rows:
        md_lines.append(
            "| {segmentation} | {grounding} | {features} "
            "| {r_at_1:.1f} | {r_at_3:.1f} | {mr:.2f} | {mrr:.3f} |".format(**row)
        )
    matrix_md = "\n".join(md_lines) + "\n"
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "matrix.md").write_text(matrix_md, encoding="utf-8")
    _write_json(out_dir / "matrix.json", {"rows": rows})
    print(matrix_md, end="")
    print(f"wrote {out_dir / 'matrix.json'}")
    return 0


def cmd_toy(args: argparse.Namespace) -> int:
    opt = Options(args)
    out = Path(opt.get("out", required=True))
    for path in build_toy_fixture(out).values():
        print(f"wrote {path}")
    return 0


# --- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stepqa",
        description="Function-grounded multi-step QA over instructional scripts",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--seed", type=int, help="run seed (default 0)")

    p = sub.add_parser("segment", help="split a script into function units")
    common(p)
    p.add_argument("--script", help="script JSON file")
    p.add_argument("--mode", choices=["function", "sentence"])
    p.add_argument("--out", help="output functions.json")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("ground", help="score a question against function units")
    common(p)
    p.add_argument("--functions", help="functions.json from segment")
    p.add_argument("--question")
    p.add_argument("--top-k", dest="top_k", type=int)
    p.add_argument("--out", help="output weights.json")
    p.set_defaults(func=cmd_ground)

    p = sub.add_parser("emb", help="embedding file tools")
    emb_sub = p.add_subparsers(dest="emb_command", required=True)
    pi = emb_sub.add_parser("inspect", help="print count, dim, first/last ids")
    common(pi)
    pi.add_argument("path")
    pi.set_defaults(func=cmd_emb)

    p = sub.add_parser("train", help="train the answer classifier")
    common(p)
    p.add_argument("--data", help="QA dataset JSON")
    p.add_argument("--functions", help="functions.json file or directory")
    p.add_argument("--emb", help="EMB1 embedding file")
    p.add_argument("--grounding", choices=["tfidf", "cross-att"])
    p.add_argument("--feat", help="comma list from fT,fV,aT,aV")
    p.add_argument("--hidden", type=int)
    p.add_argument("--mlp-hidden", dest="mlp_hidden", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--top-k", dest="top_k", type=int)
    p.add_argument("--eval-data", dest="eval_data")
    p.add_argument("--out", help="output checkpoint path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    common(p)
    p.add_argument("--ckpt")
    p.add_argument("--data")
    p.add_argument("--functions")
    p.add_argument("--emb")
    p.add_argument("--top-k", dest="top_k", type=int)
    p.add_argument("--out", help="output report.json")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("infer", help="rank answers step by step for one question")
    common(p)
    p.add_argument("--ckpt")
    p.add_argument("--data")
    p.add_argument("--functions")
    p.add_argument("--emb")
    p.add_argument("--video")
    p.add_argument("--question")
    p.add_argument("--top-k", dest="top_k", type=int)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("ablate", help="run an ablation matrix")
    common(p)
    p.add_argument("--axes", help="comma list from segmentation,grounding,features")
    p.add_argument("--scripts", help="script JSON file or directory")
    p.add_argument("--data")
    p.add_argument("--emb")
    p.add_argument("--mode", choices=["function", "sentence"])
    p.add_argument("--grounding", choices=["tfidf", "cross-att"])
    p.add_argument("--feat")
    p.add_argument("--hidden", type=int)
    p.add_argument("--mlp-hidden", dest="mlp_hidden", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--top-k", dest="top_k", type=int)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("toy", help="write the bundled synthetic fixture")
    common(p)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_toy)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StepQAError as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1
    except OSError as exc:
        print(
            json.dumps({"error": "IoError", "message": str(exc)}), file=sys.stderr
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
