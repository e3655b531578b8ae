"""Training loop, inference, and the grounding glue between pipeline stages.

Batches are built from whole samples: shuffled samples are packed into a
batch until it holds at least `batch_size` step-instances (a sample
contributes one instance per step and is never split, so the GRU unroll
stays intact). The batch loss is the mean cross-entropy over its
instances, optimized with bias-corrected Adam. All shuffling comes from
the run seed's shuffle stream, so a fixed seed reproduces training
bit-for-bit.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import QASample
from .embeddings import EmbeddingTable
from .errors import ConfigError, EmptyDataset
from .grounding import FunctionWeights, build_tfidf, ground_question, tokenize
from .metrics import MetricReport, RankRecord, report_from_records
from .model import (
    STREAM_SHUFFLE,
    GroundingMode,
    ModelConfig,
    ModelParams,
    ResolvedSample,
    Trace,
    _mlp_logits,
    backward_sample,
    forward_sample,
    gru_step,
    init_params,
    resolve_sample,
    softmax,
    stream_rng,
    zero_grads,
)
from .optim import OptState, TrainConfig, adam_update, init_opt_state
from .segmenter import FunctionSet


def tfidf_function_weights(
    functions: FunctionSet, question_text: str, top_k: int | None = None
) -> FunctionWeights:
    """Ground a question on a video's function units via TF-IDF."""
    corpus = [tokenize(u.para_text) for u in functions.units]
    model = build_tfidf(corpus)
    return ground_question(model, tokenize(question_text), corpus, top_k=top_k)


@dataclass
class TrainLog:
    epoch_losses: list[float] = field(default_factory=list)
    epoch_reports: list[MetricReport | None] = field(default_factory=list)
    best_epoch: int | None = None  # 0-based epoch with the highest eval R@1
    best_report: MetricReport | None = None


def _resolve_all(
    dataset: list[QASample],
    functions_by_video: dict[str, FunctionSet],
    table: EmbeddingTable,
    config: ModelConfig,
    top_k: int | None,
) -> list[ResolvedSample]:
    resolved = []
    for sample in dataset:
        try:
            functions = functions_by_video[sample.video_id]
        except KeyError:
            raise ConfigError(
                f"no segmented functions for video {sample.video_id!r}"
            ) from None
        weights = None
        if config.grounding_mode is GroundingMode.TFIDF:
            weights = tfidf_function_weights(functions, sample.question_text, top_k)
        resolved.append(resolve_sample(sample, functions, table, config, weights))
    return resolved


def _pack_batches(
    order: np.ndarray, sizes: list[int], batch_size: int
) -> list[list[int]]:
    batches: list[list[int]] = []
    cur: list[int] = []
    count = 0
    for i in order.tolist():
        cur.append(i)
        count += sizes[i]
        if count >= batch_size:
            batches.append(cur)
            cur = []
            count = 0
    if cur:
        batches.append(cur)
    return batches


def _rankings(trace: Trace) -> list[list[int]]:
    return [
        np.argsort(-st.probs, kind="stable").tolist() for st in trace.steps
    ]


def _predict_resolved(
    params: ModelParams, rs: ResolvedSample, config: ModelConfig
) -> list[list[int]]:
    trace = forward_sample(params, rs, config, teacher_forcing=False)
    return _rankings(trace)


def _records_for(
    params: ModelParams, resolved: list[ResolvedSample], config: ModelConfig
) -> list[RankRecord]:
    records = []
    for rs in resolved:
        rankings = _predict_resolved(params, rs, config)
        for ranking, gt in zip(rankings, rs.gt):
            records.append(
                RankRecord(rank=ranking.index(gt) + 1, num_candidates=len(ranking))
            )
    return records


def _cast_params(params: ModelParams, dtype) -> None:
    for name, tensor in params.tensors():
        setattr(params, name, tensor.astype(dtype))


def train(
    dataset: list[QASample],
    functions_by_video: dict[str, FunctionSet],
    table: EmbeddingTable,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig | None = None,
    eval_dataset: list[QASample] | None = None,
    top_k: int | None = None,
) -> tuple[ModelParams, TrainLog]:
    """Train the answer classifier; returns final params and the log.

    When eval_dataset is given, every epoch is scored on it (no teacher
    forcing) and the epoch with the highest R@1 is recorded as best.
    """
    if not dataset:
        raise EmptyDataset("cannot train on zero samples")
    cfg = train_cfg or TrainConfig()
    resolved = _resolve_all(dataset, functions_by_video, table, model_cfg, top_k)
    eval_resolved = (
        _resolve_all(eval_dataset, functions_by_video, table, model_cfg, top_k)
        if eval_dataset
        else None
    )

    params = init_params(model_cfg)
    if cfg.precision == "f32":
        _cast_params(params, np.float32)
    state = init_opt_state(params)
    shuffle_rng = stream_rng(model_cfg.seed, STREAM_SHUFFLE)
    sizes = [rs.num_steps for rs in resolved]

    log = TrainLog()
    for epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(len(resolved))
        epoch_loss = 0.0
        epoch_instances = 0
        for batch in _pack_batches(order, sizes, cfg.batch_size):
            grads = zero_grads(params)
            n_inst = sum(sizes[i] for i in batch)
            for i in batch:
                trace = forward_sample(
                    params, resolved[i], model_cfg,
                    teacher_forcing=cfg.teacher_forcing,
                )
                backward_sample(
                    params, resolved[i], model_cfg, trace, grads,
                    scale=1.0 / n_inst,
                )
                epoch_loss += trace.loss_sum
            epoch_instances += n_inst
            adam_update(params, grads, state, cfg)
        log.epoch_losses.append(epoch_loss / epoch_instances)

        if eval_resolved is not None:
            report = report_from_records(
                _records_for(params, eval_resolved, model_cfg)
            )
            log.epoch_reports.append(report)
            if log.best_report is None or report.r_at_1 > log.best_report.r_at_1:
                log.best_epoch = epoch
                log.best_report = report
        else:
            log.epoch_reports.append(None)
    return params, log


def predict_steps(
    params: ModelParams,
    sample: QASample,
    functions: FunctionSet,
    table: EmbeddingTable,
    config: ModelConfig,
    weights: FunctionWeights | None = None,
    top_k: int | None = None,
) -> list[list[int]]:
    """Per-step candidate rankings (descending probability, ties -> lower
    index). The GRU consumes the model's own top-1 pick at each step."""
    if weights is None and config.grounding_mode is GroundingMode.TFIDF:
        weights = tfidf_function_weights(functions, sample.question_text, top_k)
    rs = resolve_sample(sample, functions, table, config, weights)
    return _predict_resolved(params, rs, config)


class StepRanker:
    """Step-at-a-time inference where the caller picks each answer.

    Usage: probs = rank_step(); ...; feed_choice(chosen_index); repeat.
    """

    def __init__(self, params: ModelParams, rs: ResolvedSample, config: ModelConfig):
        self._params = params
        self._rs = rs
        self._config = config
        if config.grounding_mode is GroundingMode.CROSS_ATTENTION:
            scores = rs.function_text @ (rs.question @ params.w_att)
            w = softmax(scores)
        else:
            w = rs.tfidf_weights
        self.weights = w
        self._context = w @ rs.function_feats
        self._h = np.zeros(config.hidden)
        self._prev = params.start_vec
        self._step = 0

    @property
    def num_steps(self) -> int:
        return self._rs.num_steps

    def rank_step(self) -> np.ndarray:
        """Advance the GRU with the pending previous answer and return the
        probability vector over the current step's candidates."""
        if self._step >= self._rs.num_steps:
            raise IndexError("no steps left")
        x = np.concatenate([self._context, self._rs.question, self._prev])
        self._h = gru_step(self._params, self._h, x)
        cand_feats = self._rs.step_answers[self._step]
        logits = _mlp_logits(
            self._params, self._h, self._context, self._rs.question, cand_feats
        )
        self._probs = softmax(logits)
        return self._probs

    def feed_choice(self, index: int) -> None:
        cand_feats = self._rs.step_answers[self._step]
        if not 0 <= index < cand_feats.shape[0]:
            raise IndexError(f"choice {index} outside {cand_feats.shape[0]} candidates")
        self._prev = cand_feats[index]
        self._step += 1
