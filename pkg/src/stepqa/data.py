"""QA dataset types and JSON loading.

A sample is one user question about one video, answered over an ordered
sequence of steps; each step offers candidate answers (text embedding id
plus optional button-image embedding id) and records the ground truth.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import MalformedDataset


@dataclass(frozen=True)
class CandidateAnswer:
    text_emb_id: str
    button_emb_id: str | None = None


@dataclass(frozen=True)
class Step:
    candidates: tuple[CandidateAnswer, ...]
    gt_index: int


@dataclass(frozen=True)
class QASample:
    video_id: str
    question_text: str
    question_emb_id: str
    steps: tuple[Step, ...]


def qa_dataset_from_dict(doc: dict) -> list[QASample]:
    if not isinstance(doc, dict) or not isinstance(doc.get("samples"), list):
        raise MalformedDataset("dataset must be an object with a samples array")
    samples = []
    for si, rec in enumerate(doc["samples"]):
        try:
            video_id = rec["video_id"]
            question_text = rec["question_text"]
            question_emb_id = rec["question_emb_id"]
            raw_steps = rec["steps"]
        except (KeyError, TypeError) as exc:
            raise MalformedDataset(f"sample {si} is missing a field: {exc}") from exc
        if not all(
            isinstance(v, str) for v in (video_id, question_text, question_emb_id)
        ):
            raise MalformedDataset(f"sample {si} has a non-string field")
        if not isinstance(raw_steps, list) or not raw_steps:
            raise MalformedDataset(f"sample {si} has no steps")
        steps = []
        for ti, step in enumerate(raw_steps):
            try:
                raw_cands = step["candidates"]
                gt_index = step["gt_index"]
            except (KeyError, TypeError) as exc:
                raise MalformedDataset(
                    f"sample {si} step {ti} is missing a field: {exc}"
                ) from exc
            if not isinstance(raw_cands, list) or len(raw_cands) < 2:
                raise MalformedDataset(
                    f"sample {si} step {ti} needs at least 2 candidates"
                )
            cands = []
            for ci, cand in enumerate(raw_cands):
                text_id = cand.get("text_emb_id") if isinstance(cand, dict) else None
                if not isinstance(text_id, str):
                    raise MalformedDataset(
                        f"sample {si} step {ti} candidate {ci} lacks text_emb_id"
                    )
                button_id = cand.get("button_emb_id")
                if button_id is not None and not isinstance(button_id, str):
                    raise MalformedDataset(
                        f"sample {si} step {ti} candidate {ci} has a bad button_emb_id"
                    )
                cands.append(
                    CandidateAnswer(text_emb_id=text_id, button_emb_id=button_id)
                )
            if not isinstance(gt_index, int) or not 0 <= gt_index < len(cands):
                raise MalformedDataset(
                    f"sample {si} step {ti} gt_index {gt_index!r} out of range"
                )
            steps.append(Step(candidates=tuple(cands), gt_index=gt_index))
        samples.append(
            QASample(
                video_id=video_id,
                question_text=question_text,
                question_emb_id=question_emb_id,
                steps=tuple(steps),
            )
        )
    return samples


def load_qa_dataset(path: str | Path) -> list[QASample]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedDataset(f"bad dataset JSON: {exc}") from exc
    return qa_dataset_from_dict(doc)


def qa_dataset_to_dict(samples: list[QASample]) -> dict:
    return {
        "samples": [
            {
                "video_id": s.video_id,
                "question_text": s.question_text,
                "question_emb_id": s.question_emb_id,
                "steps": [
                    {
                        "candidates": [
                            {
                                "text_emb_id": c.text_emb_id,
                                "button_emb_id": c.button_emb_id,
                            }
                            for c in step.candidates
                        ],
                        "gt_index": step.gt_index,
                    }
                    for step in s.steps
                ],
            }
            for s in samples
        ]
    }
