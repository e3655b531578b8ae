"""Ranking metrics over per-step predictions: Recall@k, mean rank, MRR."""
from __future__ import annotations

from dataclasses import dataclass

from .data import QASample
from .errors import CoverageGap, EmptyRecords


@dataclass(frozen=True)
class RankRecord:
    """1-based position of the ground-truth answer in one step's ranking."""

    rank: int
    num_candidates: int

    def __post_init__(self) -> None:
        if not 1 <= self.rank <= self.num_candidates:
            raise ValueError(
                f"rank {self.rank} outside [1, {self.num_candidates}]"
            )


@dataclass(frozen=True)
class MetricReport:
    r_at_1: float  # percentage in [0, 100]
    r_at_3: float
    mr: float
    mrr: float
    count: int

    def to_dict(self) -> dict:
        return {
            "r_at_1": self.r_at_1,
            "r_at_3": self.r_at_3,
            "mr": self.mr,
            "mrr": self.mrr,
            "count": self.count,
        }


def recall_at_k(records: list[RankRecord], k: int) -> float:
    if not records:
        raise EmptyRecords("recall over zero records")
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    hits = sum(1 for r in records if r.rank <= k)
    return 100.0 * hits / len(records)


def mean_rank(records: list[RankRecord]) -> float:
    if not records:
        raise EmptyRecords("mean rank over zero records")
    return sum(r.rank for r in records) / len(records)


def mrr(records: list[RankRecord]) -> float:
    if not records:
        raise EmptyRecords("MRR over zero records")
    return sum(1.0 / r.rank for r in records) / len(records)


def report_from_records(records: list[RankRecord]) -> MetricReport:
    return MetricReport(
        r_at_1=recall_at_k(records, 1),
        r_at_3=recall_at_k(records, 3),
        mr=mean_rank(records),
        mrr=mrr(records),
        count=len(records),
    )


def rank_records(
    predictions: list[list[list[int]]], dataset: list[QASample]
) -> list[RankRecord]:
    """Turn per-sample, per-step rankings into RankRecords.

    predictions[i][s] is the ordered candidate-index ranking for step s of
    sample i. Raises CoverageGap when a sample or step lacks a prediction
    or a ranking omits the ground-truth index.
    """
    if len(predictions) != len(dataset):
        raise CoverageGap(
            f"{len(predictions)} predictions for {len(dataset)} samples"
        )
    records = []
    for i, (sample_preds, sample) in enumerate(zip(predictions, dataset)):
        if len(sample_preds) != len(sample.steps):
            raise CoverageGap(
                f"sample {i}: {len(sample_preds)} rankings for "
                f"{len(sample.steps)} steps"
            )
        for s, (ranking, step) in enumerate(zip(sample_preds, sample.steps)):
            try:
                rank = ranking.index(step.gt_index) + 1
            except ValueError:
                raise CoverageGap(
                    f"sample {i} step {s}: ground truth {step.gt_index} "
                    "missing from ranking"
                ) from None
            records.append(
                RankRecord(rank=rank, num_candidates=len(step.candidates))
            )
    return records


def evaluate(
    predictions: list[list[list[int]]], dataset: list[QASample]
) -> MetricReport:
    """All four metrics over every step of every sample."""
    return report_from_records(rank_records(predictions, dataset))
