"""Deterministic synthetic fixture: a tiny video script, QA samples, and
an embedding table on which the answer classifier is linearly separable.

Every candidate's embedding carries a +/-2 marker in its leading
components (text dims 0-1, button dims 2-3) flagging whether it is the
ground truth, so a linear scorer on answer features alone can solve the
task. Function, question, and remaining candidate components are small
seeded noise. All vectors are float32-exact so EMB1 round-trips are
bit-identical.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .data import qa_dataset_to_dict, qa_dataset_from_dict
from .embeddings import EmbeddingTable, make_id, save_embeddings
from .model import GroundingMode, ModelConfig
from .segmenter import SegmentationMode, parse_script, segment

TOY_VIDEO_ID = "toyvid"
TOY_DIM = 8
TOY_SEED = 7

_FUNCTIONS = [
    (
        "How to defrost fish in the microwave?",
        "Press the turbo defrost button.",
        "Turn the time knob clockwise.",
    ),
    (
        "How to set the timer for one minute?",
        "Turn the time knob to one minute.",
        "Press the start button.",
    ),
    (
        "How to stop the microwave while running?",
        "Press the stop button once.",
        "Press the start button to resume.",
    ),
    (
        "How to heat milk at medium power?",
        "Press the micro power button twice.",
        "Turn the knob to thirty seconds.",
    ),
]

_QUESTIONS = [
    "How to defrost some fish?",
    "How to set a one minute timer?",
    "How to stop the microwave?",
    "How to heat milk at medium power level?",
    "How to defrost fish quickly?",
    "How to set the timer?",
    "How to stop the microwave while it is running?",
    "How to heat some milk?",
]

N_SAMPLES = 8
N_STEPS = 2
N_CANDIDATES = 3


def _f32(vec: np.ndarray) -> np.ndarray:
    # Snap to the float32 grid so save/load round-trips are exact.
    return vec.astype(np.float32).astype(np.float64)


def toy_script_dict() -> dict:
    lines = []
    t = 0.0
    for header, *body in _FUNCTIONS:
        for text in (header, *body):
            lines.append({"start_s": t, "end_s": t + 2.0, "text": text})
            t += 2.0
    return {"video_id": TOY_VIDEO_ID, "lines": lines}


def toy_qa_dict() -> dict:
    samples = []
    for i in range(N_SAMPLES):
        steps = []
        for s in range(N_STEPS):
            cands = [
                {
                    "text_emb_id": make_id("at", TOY_VIDEO_ID, f"a{i}s{s}c{j}"),
                    "button_emb_id": make_id("av", TOY_VIDEO_ID, f"a{i}s{s}c{j}"),
                }
                for j in range(N_CANDIDATES)
            ]
            steps.append({"candidates": cands, "gt_index": (i + s) % N_CANDIDATES})
        samples.append(
            {
                "video_id": TOY_VIDEO_ID,
                "question_text": _QUESTIONS[i],
                "question_emb_id": make_id("q", TOY_VIDEO_ID, f"q{i}"),
                "steps": steps,
            }
        )
    return {"samples": samples}


def toy_embedding_table(seed: int = TOY_SEED) -> EmbeddingTable:
    rng = np.random.default_rng(seed)
    table = EmbeddingTable(dim=TOY_DIM)

    script = parse_script(json.dumps(toy_script_dict()))
    for mode in (SegmentationMode.FUNCTION_CENTRIC, SegmentationMode.SENTENCE_CENTRIC):
        for unit in segment(script, mode):
            for kind in ("ft", "fv"):
                vec = rng.normal(0.0, 0.5, TOY_DIM)
                table.put(make_id(kind, TOY_VIDEO_ID, unit.function_id), _f32(vec))

    for i in range(N_SAMPLES):
        table.put(
            make_id("q", TOY_VIDEO_ID, f"q{i}"),
            _f32(rng.normal(0.0, 0.5, TOY_DIM)),
        )

    for i in range(N_SAMPLES):
        for s in range(N_STEPS):
            gt = (i + s) % N_CANDIDATES
            for j in range(N_CANDIDATES):
                sign = 2.0 if j == gt else -2.0
                text_vec = rng.normal(0.0, 0.1, TOY_DIM)
                text_vec[0] = sign
                text_vec[1] = -sign
                button_vec = rng.normal(0.0, 0.1, TOY_DIM)
                button_vec[2] = sign
                button_vec[3] = -sign
                local = f"a{i}s{s}c{j}"
                table.put(make_id("at", TOY_VIDEO_ID, local), _f32(text_vec))
                table.put(make_id("av", TOY_VIDEO_ID, local), _f32(button_vec))
    return table


def toy_model_config(
    grounding_mode: GroundingMode = GroundingMode.TFIDF,
    use_function_t: bool = True,
    use_function_v: bool = True,
    use_answer_t: bool = True,
    use_answer_v: bool = True,
    seed: int = 0,
) -> ModelConfig:
    """Model sized for the toy fixture."""
    return ModelConfig(
        dim_t=TOY_DIM,
        dim_v=TOY_DIM,
        hidden=16,
        mlp_hidden=64,
        use_function_t=use_function_t,
        use_function_v=use_function_v,
        use_answer_t=use_answer_t,
        use_answer_v=use_answer_v,
        grounding_mode=grounding_mode,
        seed=seed,
    )


def build_toy_fixture(out_dir: str | Path, seed: int = TOY_SEED) -> dict[str, Path]:
    """Write script.json, qa.json, and toy.emb1 into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    script_path = out / "script.json"
    qa_path = out / "qa.json"
    emb_path = out / "toy.emb1"
    script_path.write_text(
        json.dumps(toy_script_dict(), indent=2) + "\n", encoding="utf-8"
    )
    qa_path.write_text(json.dumps(toy_qa_dict(), indent=2) + "\n", encoding="utf-8")
    save_embeddings(toy_embedding_table(seed), emb_path)
    return {"script": script_path, "qa": qa_path, "emb": emb_path}


def load_toy_samples():
    return qa_dataset_from_dict(toy_qa_dict())
