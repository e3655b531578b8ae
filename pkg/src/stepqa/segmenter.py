"""Timestamped-script parsing and segmentation into function units.

A script is a list of timestamped transcript lines for one video. Two
segmentation modes are supported: function-centric, where a new unit
starts at every line opening with a "How to ...?" header, and
sentence-centric, where every line is its own unit. Each unit keeps the
clip time range spanned by its source lines.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import EmptyScript, EmptySublist, MalformedScript

# Real ASR lines may overlap slightly; anything beyond this is treated as
# a corrupt file rather than jitter.
OVERLAP_TOLERANCE_S = 0.5

# A line that opens a new function unit. Matched case-insensitively at the
# start of the line text.
HEADER_RE = re.compile(r"\s*how to .*\?", re.IGNORECASE)


class SegmentationMode(Enum):
    FUNCTION_CENTRIC = "function"
    SENTENCE_CENTRIC = "sentence"


@dataclass(frozen=True)
class ScriptLine:
    start_s: float
    end_s: float
    text: str


@dataclass(frozen=True)
class Script:
    video_id: str
    lines: tuple[ScriptLine, ...]  # sorted by start_s


@dataclass(frozen=True)
class FunctionUnit:
    function_id: str
    para_text: str
    clip_start_s: float
    clip_end_s: float
    source_line_indices: tuple[int, ...]


@dataclass(frozen=True)
class FunctionSet:
    """Segmented functions of one video."""

    video_id: str
    units: tuple[FunctionUnit, ...]


def parse_script(raw: bytes | str) -> Script:
    """Parse a script JSON document into a validated Script.

    Lines are re-sorted by start time. Raises MalformedScript on structural
    problems and EmptyScript when no lines are present.
    """
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedScript(f"script is not valid UTF-8: {exc}") from exc
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedScript(f"script is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedScript("script document must be a JSON object")
    video_id = doc.get("video_id")
    if not isinstance(video_id, str) or not video_id:
        raise MalformedScript("missing or empty video_id")
    raw_lines = doc.get("lines")
    if not isinstance(raw_lines, list):
        raise MalformedScript("missing lines array")
    if not raw_lines:
        raise EmptyScript(f"script {video_id!r} has no lines")

    lines = []
    for i, rec in enumerate(raw_lines):
        if not isinstance(rec, dict):
            raise MalformedScript(f"line {i} is not an object")
        try:
            start_s = float(rec["start_s"])
            end_s = float(rec["end_s"])
            text = rec["text"]
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedScript(f"line {i} is missing a field: {exc}") from exc
        if not isinstance(text, str):
            raise MalformedScript(f"line {i} text is not a string")
        text = text.strip()
        if not text:
            raise MalformedScript(f"line {i} text is empty")
        if start_s < 0:
            raise MalformedScript(f"line {i} has negative start_s {start_s}")
        if start_s > end_s:
            raise MalformedScript(
                f"line {i} has start_s {start_s} > end_s {end_s}"
            )
        lines.append(ScriptLine(start_s=start_s, end_s=end_s, text=text))

    lines.sort(key=lambda ln: ln.start_s)
    for prev, cur in zip(lines, lines[1:]):
        if cur.start_s < prev.end_s - OVERLAP_TOLERANCE_S:
            raise MalformedScript(
                f"lines overlap by more than {OVERLAP_TOLERANCE_S}s "
                f"({prev.end_s} -> {cur.start_s})"
            )
    return Script(video_id=video_id, lines=tuple(lines))


def load_script(path: str | Path) -> Script:
    return parse_script(Path(path).read_bytes())


def align_clip(lines: list[ScriptLine] | tuple[ScriptLine, ...]) -> tuple[float, float]:
    """Clip range spanned by a group of lines: (min start, max end)."""
    if not lines:
        raise EmptySublist("cannot align an empty line group")
    return min(ln.start_s for ln in lines), max(ln.end_s for ln in lines)


def is_header_line(text: str) -> bool:
    return HEADER_RE.match(text) is not None


def segment(script: Script, mode: SegmentationMode) -> list[FunctionUnit]:
    """Partition a script's lines into function units.

    Function-centric: a new unit begins at every header line; lines before
    the first header join the first unit; a script with no headers is one
    unit. Sentence-centric: one unit per line. Unit ids are prefixed "f"
    or "s" by mode so both segmentations of a video can coexist in one
    embedding table.
    """
    if not script.lines:
        raise EmptyScript(f"script {script.video_id!r} has no lines")

    if mode is SegmentationMode.SENTENCE_CENTRIC:
        groups = [[i] for i in range(len(script.lines))]
        prefix = "s"
    else:
        boundaries = [
            i for i, ln in enumerate(script.lines) if is_header_line(ln.text)
        ]
        if not boundaries:
            groups = [list(range(len(script.lines)))]
        else:
            # Lines before the first header fold into the first unit.
            starts = [0] + boundaries[1:]
            ends = boundaries[1:] + [len(script.lines)]
            groups = [list(range(a, b)) for a, b in zip(starts, ends)]
        prefix = "f"

    units = []
    for k, idxs in enumerate(groups):
        lines = [script.lines[i] for i in idxs]
        clip_start, clip_end = align_clip(lines)
        units.append(
            FunctionUnit(
                function_id=f"{prefix}{k}",
                para_text=" ".join(ln.text for ln in lines),
                clip_start_s=clip_start,
                clip_end_s=clip_end,
                source_line_indices=tuple(idxs),
            )
        )
    return units


def segment_script(script: Script, mode: SegmentationMode) -> FunctionSet:
    return FunctionSet(video_id=script.video_id, units=tuple(segment(script, mode)))


# --- functions.json io ------------------------------------------------------


def function_set_to_dict(fs: FunctionSet) -> dict:
    return {
        "video_id": fs.video_id,
        "functions": [
            {
                "function_id": u.function_id,
                "para_text": u.para_text,
                "clip_start_s": u.clip_start_s,
                "clip_end_s": u.clip_end_s,
                "source_line_indices": list(u.source_line_indices),
            }
            for u in fs.units
        ],
    }


def function_set_from_dict(doc: dict) -> FunctionSet:
    try:
        units = tuple(
            FunctionUnit(
                function_id=u["function_id"],
                para_text=u["para_text"],
                clip_start_s=float(u["clip_start_s"]),
                clip_end_s=float(u["clip_end_s"]),
                source_line_indices=tuple(int(i) for i in u["source_line_indices"]),
            )
            for u in doc["functions"]
        )
        return FunctionSet(video_id=doc["video_id"], units=units)
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedScript(f"bad functions document: {exc}") from exc


def save_function_set(fs: FunctionSet, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(function_set_to_dict(fs), indent=2) + "\n", encoding="utf-8"
    )


def load_function_set(path: str | Path) -> FunctionSet:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedScript(f"bad functions JSON: {exc}") from exc
    return function_set_from_dict(doc)
