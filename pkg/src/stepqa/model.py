"""Answer-ranking model: weighted function fusion, GRU step tracker, MLP head.

The model scores candidate answers step by step. A question's relevance
weights over the video's function units (from TF-IDF grounding or a
learned bilinear cross-attention) fuse the function embeddings into one
context vector. A GRU carries history across steps; its input at each
step is concat(context, question, previous answer embedding), with a
learned start vector standing in for the previous answer at step one. A
two-layer MLP scores each candidate from concat(hidden, context,
question, candidate embedding), and softmax turns the scores into
probabilities.

All math is float64 numpy with hand-written analytic gradients; see
backward_sample. Checkpoints use the QAM1 binary format defined at the
bottom of this module.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .data import CandidateAnswer, QASample
from .embeddings import EmbeddingTable, make_id
from .errors import (
    BadMagic,
    ConfigError,
    DimensionMismatch,
    IndexOutOfRange,
    MissingId,
    NonFiniteValue,
    TruncatedFile,
)
from .grounding import FunctionWeights
from .segmenter import FunctionSet

# Named random streams derived from the run seed.
STREAM_INIT = 0
STREAM_SHUFFLE = 1


def stream_rng(seed: int, stream: int) -> np.random.Generator:
    """Independent generator for one named stream of a run seed."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream,)))


class GroundingMode(Enum):
    TFIDF = "tfidf"
    CROSS_ATTENTION = "cross-att"


@dataclass(frozen=True)
class ModelConfig:
    dim_t: int
    dim_v: int
    hidden: int = 128
    mlp_hidden: int = 512
    use_function_t: bool = True
    use_function_v: bool = True
    use_answer_t: bool = True
    use_answer_v: bool = True
    grounding_mode: GroundingMode = GroundingMode.TFIDF
    seed: int = 0

    def __post_init__(self) -> None:
        if self.dim_t <= 0 or self.dim_v <= 0:
            raise ConfigError("embedding dims must be positive")
        if self.hidden <= 0 or self.mlp_hidden <= 0:
            raise ConfigError("hidden sizes must be positive")
        if not (self.use_function_t or self.use_function_v):
            raise ConfigError("at least one function feature must be enabled")
        if not (self.use_answer_t or self.use_answer_v):
            raise ConfigError("at least one answer feature must be enabled")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")

    @property
    def ctx_dim(self) -> int:
        return self.dim_t * self.use_function_t + self.dim_v * self.use_function_v

    @property
    def ans_dim(self) -> int:
        return self.dim_t * self.use_answer_t + self.dim_v * self.use_answer_v

    @property
    def gru_input_dim(self) -> int:
        return self.ctx_dim + self.dim_t + self.ans_dim

    @property
    def mlp_input_dim(self) -> int:
        return self.hidden + self.ctx_dim + self.dim_t + self.ans_dim


@dataclass
class ModelParams:
    """All trainable tensors. Declaration order is the serialization and
    initialization order; w_att exists only in cross-attention mode."""

    w_z: np.ndarray
    u_z: np.ndarray
    b_z: np.ndarray
    w_r: np.ndarray
    u_r: np.ndarray
    b_r: np.ndarray
    w_h: np.ndarray
    u_h: np.ndarray
    b_h: np.ndarray
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    start_vec: np.ndarray
    w_att: np.ndarray | None = None

    def tensors(self) -> list[tuple[str, np.ndarray]]:
        out = [
            ("w_z", self.w_z),
            ("u_z", self.u_z),
            ("b_z", self.b_z),
            ("w_r", self.w_r),
            ("u_r", self.u_r),
            ("b_r", self.b_r),
            ("w_h", self.w_h),
            ("u_h", self.u_h),
            ("b_h", self.b_h),
            ("w1", self.w1),
            ("b1", self.b1),
            ("w2", self.w2),
            ("b2", self.b2),
            ("start_vec", self.start_vec),
        ]
        if self.w_att is not None:
            out.append(("w_att", self.w_att))
        return out

    def copy(self) -> "ModelParams":
        return ModelParams(
            **{name: t.copy() for name, t in self.tensors() if name != "w_att"},
            w_att=None if self.w_att is None else self.w_att.copy(),
        )


def expected_shapes(config: ModelConfig) -> list[tuple[str, tuple[int, ...]]]:
    h, x = config.hidden, config.gru_input_dim
    shapes = [
        ("w_z", (h, x)),
        ("u_z", (h, h)),
        ("b_z", (h,)),
        ("w_r", (h, x)),
        ("u_r", (h, h)),
        ("b_r", (h,)),
        ("w_h", (h, x)),
        ("u_h", (h, h)),
        ("b_h", (h,)),
        ("w1", (config.mlp_hidden, config.mlp_input_dim)),
        ("b1", (config.mlp_hidden,)),
        ("w2", (config.mlp_hidden,)),
        ("b2", (1,)),
        ("start_vec", (config.ans_dim,)),
    ]
    if config.grounding_mode is GroundingMode.CROSS_ATTENTION:
        shapes.append(("w_att", (config.dim_t, config.dim_t)))
    return shapes


def _glorot(rng: np.random.Generator, fan_out: int, fan_in: int, shape) -> np.ndarray:
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=shape)


def init_params(config: ModelConfig, rng: np.random.Generator | None = None) -> ModelParams:
    """Seeded initialization: Glorot-uniform weight matrices, zero biases,
    Glorot-style start vector. Tensors draw in declaration order."""
    if rng is None:
        rng = stream_rng(config.seed, STREAM_INIT)
    h, x = config.hidden, config.gru_input_dim
    fields: dict[str, np.ndarray] = {}
    for name, shape in expected_shapes(config):
        if name.startswith("b"):
            fields[name] = np.zeros(shape)
        elif name in ("w_z", "w_r", "w_h"):
            fields[name] = _glorot(rng, h, x, shape)
        elif name in ("u_z", "u_r", "u_h"):
            fields[name] = _glorot(rng, h, h, shape)
        elif name == "w1":
            fields[name] = _glorot(rng, config.mlp_hidden, config.mlp_input_dim, shape)
        elif name == "w2":
            fields[name] = _glorot(rng, 1, config.mlp_hidden, shape)
        elif name == "start_vec":
            fields[name] = _glorot(rng, config.ans_dim, config.ans_dim, shape)
        elif name == "w_att":
            fields[name] = _glorot(rng, config.dim_t, config.dim_t, shape)
    return ModelParams(**fields)


# --- primitives --------------------------------------------------------------


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    """Max-subtracted softmax; safe for widely spread logits."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max()
    ex = np.exp(shifted)
    return ex / ex.sum()


def ce_loss(probs: np.ndarray, gt_index: int) -> float:
    """Cross-entropy of one distribution against its ground-truth index."""
    if not 0 <= gt_index < len(probs):
        raise IndexOutOfRange(
            f"gt_index {gt_index} outside {len(probs)} candidates"
        )
    return float(-np.log(probs[gt_index]))


def gru_step(params: ModelParams, h_prev: np.ndarray, x: np.ndarray) -> np.ndarray:
    """One GRU update:

    z = sigmoid(W_z x + U_z h + b_z)
    r = sigmoid(W_r x + U_r h + b_r)
    hbar = tanh(W_h x + U_h (r * h) + b_h)
    h' = (1 - z) * h + z * hbar
    """
    if x.shape != (params.w_z.shape[1],):
        raise DimensionMismatch(
            f"gru input has shape {x.shape}, expected ({params.w_z.shape[1]},)"
        )
    if h_prev.shape != (params.w_z.shape[0],):
        raise DimensionMismatch(
            f"gru hidden has shape {h_prev.shape}, expected ({params.w_z.shape[0]},)"
        )
    z = sigmoid(params.w_z @ x + params.u_z @ h_prev + params.b_z)
    r = sigmoid(params.w_r @ x + params.u_r @ h_prev + params.b_r)
    hbar = np.tanh(params.w_h @ x + params.u_h @ (r * h_prev) + params.b_h)
    return (1.0 - z) * h_prev + z * hbar


# --- embedding resolution -----------------------------------------------------


def _fetch(table: EmbeddingTable, emb_id: str, dim: int, what: str) -> np.ndarray:
    vec = table.get(emb_id)
    if vec.shape != (dim,):
        raise DimensionMismatch(
            f"{what} {emb_id!r} has dim {vec.shape[0]}, expected {dim}"
        )
    return vec


def function_feature_matrix(
    table: EmbeddingTable, functions: FunctionSet, config: ModelConfig
) -> np.ndarray:
    """Per-unit concat of the enabled function features, shape (n, ctx_dim)."""
    rows = []
    for unit in functions.units:
        parts = []
        if config.use_function_t:
            fid = make_id("ft", functions.video_id, unit.function_id)
            parts.append(_fetch(table, fid, config.dim_t, "function text embedding"))
        if config.use_function_v:
            fid = make_id("fv", functions.video_id, unit.function_id)
            parts.append(_fetch(table, fid, config.dim_v, "function clip embedding"))
        rows.append(np.concatenate(parts))
    return np.stack(rows)


def function_text_matrix(
    table: EmbeddingTable, functions: FunctionSet, dim_t: int
) -> np.ndarray:
    rows = [
        _fetch(
            table,
            make_id("ft", functions.video_id, unit.function_id),
            dim_t,
            "function text embedding",
        )
        for unit in functions.units
    ]
    return np.stack(rows)


def candidate_feature_matrix(
    table: EmbeddingTable, candidates: list[CandidateAnswer], config: ModelConfig
) -> np.ndarray:
    """Per-candidate concat of the enabled answer features, shape (m, ans_dim)."""
    rows = []
    for cand in candidates:
        parts = []
        if config.use_answer_t:
            parts.append(
                _fetch(table, cand.text_emb_id, config.dim_t, "answer text embedding")
            )
        if config.use_answer_v:
            if cand.button_emb_id is None:
                raise MissingId(
                    "answer-visual features enabled but candidate "
                    f"{cand.text_emb_id!r} has no button embedding id"
                )
            parts.append(
                _fetch(table, cand.button_emb_id, config.dim_v, "button embedding")
            )
        rows.append(np.concatenate(parts))
    return np.stack(rows)


# --- public forward operations -------------------------------------------------


def fuse_context(
    weights: FunctionWeights | np.ndarray,
    table: EmbeddingTable,
    functions: FunctionSet,
    config: ModelConfig,
) -> np.ndarray:
    """Relevance-weighted sum of the enabled function features."""
    w = weights.weights if isinstance(weights, FunctionWeights) else np.asarray(weights)
    feats = function_feature_matrix(table, functions, config)
    if w.shape != (feats.shape[0],):
        raise DimensionMismatch(
            f"{w.shape[0]} weights for {feats.shape[0]} functions"
        )
    return w @ feats


def cross_attention_weights(
    params: ModelParams,
    table: EmbeddingTable,
    question_emb: np.ndarray,
    functions: FunctionSet,
) -> FunctionWeights:
    """Learned grounding: softmax over bilinear scores q . W_att . f_t."""
    if params.w_att is None:
        raise ConfigError("cross-attention weights requested but w_att is absent")
    dim_t = params.w_att.shape[0]
    if question_emb.shape != (dim_t,):
        raise DimensionMismatch(
            f"question embedding has shape {question_emb.shape}, expected ({dim_t},)"
        )
    f_text = function_text_matrix(table, functions, dim_t)
    scores = f_text @ (question_emb @ params.w_att)
    return FunctionWeights(weights=softmax(scores), scores=scores)


def score_candidates(
    params: ModelParams,
    h: np.ndarray,
    context: np.ndarray,
    question_emb: np.ndarray,
    candidates: list[CandidateAnswer],
    table: EmbeddingTable,
    config: ModelConfig,
) -> np.ndarray:
    """Per-candidate logits from the two-layer MLP head."""
    if h.shape != (config.hidden,):
        raise DimensionMismatch(f"hidden has shape {h.shape}, expected ({config.hidden},)")
    if context.shape != (config.ctx_dim,):
        raise DimensionMismatch(
            f"context has shape {context.shape}, expected ({config.ctx_dim},)"
        )
    if question_emb.shape != (config.dim_t,):
        raise DimensionMismatch(
            f"question embedding has shape {question_emb.shape}, expected ({config.dim_t},)"
        )
    cand_feats = candidate_feature_matrix(table, candidates, config)
    return _mlp_logits(params, h, context, question_emb, cand_feats)


def _mlp_logits(
    params: ModelParams,
    h: np.ndarray,
    context: np.ndarray,
    question_emb: np.ndarray,
    cand_feats: np.ndarray,
) -> np.ndarray:
    m = cand_feats.shape[0]
    fixed = np.concatenate([h, context, question_emb])
    ins = np.concatenate([np.tile(fixed, (m, 1)), cand_feats], axis=1)
    pre = ins @ params.w1.T + params.b1
    act = np.maximum(pre, 0.0)
    return act @ params.w2 + params.b2[0]


# --- resolved samples and the training-time forward/backward -------------------


@dataclass
class ResolvedSample:
    """One QA sample with every embedding id replaced by its vector."""

    question: np.ndarray  # (dim_t,)
    function_feats: np.ndarray  # (n, ctx_dim)
    function_text: np.ndarray | None  # (n, dim_t), cross-attention only
    tfidf_weights: np.ndarray | None  # (n,), TF-IDF mode only
    step_answers: list[np.ndarray]  # per step (m, ans_dim)
    gt: list[int]

    @property
    def num_steps(self) -> int:
        return len(self.step_answers)


def resolve_sample(
    sample: QASample,
    functions: FunctionSet,
    table: EmbeddingTable,
    config: ModelConfig,
    tfidf_weights: FunctionWeights | np.ndarray | None = None,
) -> ResolvedSample:
    question = _fetch(table, sample.question_emb_id, config.dim_t, "question embedding")
    feats = function_feature_matrix(table, functions, config)
    if config.grounding_mode is GroundingMode.CROSS_ATTENTION:
        f_text = function_text_matrix(table, functions, config.dim_t)
        weights = None
    else:
        f_text = None
        if tfidf_weights is None:
            raise ConfigError("TF-IDF grounding requires precomputed weights")
        weights = (
            tfidf_weights.weights
            if isinstance(tfidf_weights, FunctionWeights)
            else np.asarray(tfidf_weights, dtype=np.float64)
        )
        if weights.shape != (feats.shape[0],):
            raise DimensionMismatch(
                f"{weights.shape[0]} grounding weights for {feats.shape[0]} functions"
            )
    step_answers = [
        candidate_feature_matrix(table, list(step.candidates), config)
        for step in sample.steps
    ]
    return ResolvedSample(
        question=question,
        function_feats=feats,
        function_text=f_text,
        tfidf_weights=weights,
        step_answers=step_answers,
        gt=[step.gt_index for step in sample.steps],
    )


@dataclass
class StepTrace:
    x: np.ndarray
    h_prev: np.ndarray
    z: np.ndarray
    r: np.ndarray
    hbar: np.ndarray
    h: np.ndarray
    ins: np.ndarray  # (m, mlp_input_dim)
    pre: np.ndarray  # (m, mlp_hidden)
    probs: np.ndarray
    chosen: int  # argmax candidate (ties -> lower index)


@dataclass
class Trace:
    weights: np.ndarray
    att_scores: np.ndarray | None
    context: np.ndarray
    steps: list[StepTrace]
    losses: list[float]

    @property
    def loss_sum(self) -> float:
        return float(sum(self.losses))


def forward_sample(
    params: ModelParams,
    rs: ResolvedSample,
    config: ModelConfig,
    teacher_forcing: bool = True,
) -> Trace:
    """Run one sample through grounding, fusion, GRU unroll, and scoring.

    With teacher forcing the GRU consumes the ground-truth answer of the
    previous step; otherwise it consumes the model's own top-1 choice.
    Records every intermediate needed by backward_sample.
    """
    if config.grounding_mode is GroundingMode.CROSS_ATTENTION:
        att_scores = rs.function_text @ (rs.question @ params.w_att)
        weights = softmax(att_scores)
    else:
        att_scores = None
        weights = rs.tfidf_weights
    context = weights @ rs.function_feats

    h = np.zeros(config.hidden)
    steps: list[StepTrace] = []
    losses: list[float] = []
    prev_ans = params.start_vec
    for cand_feats, gt in zip(rs.step_answers, rs.gt):
        x = np.concatenate([context, rs.question, prev_ans])
        h_prev = h
        z = sigmoid(params.w_z @ x + params.u_z @ h_prev + params.b_z)
        r = sigmoid(params.w_r @ x + params.u_r @ h_prev + params.b_r)
        hbar = np.tanh(params.w_h @ x + params.u_h @ (r * h_prev) + params.b_h)
        h = (1.0 - z) * h_prev + z * hbar

        m = cand_feats.shape[0]
        fixed = np.concatenate([h, context, rs.question])
        ins = np.concatenate([np.tile(fixed, (m, 1)), cand_feats], axis=1)
        pre = ins @ params.w1.T + params.b1
        act = np.maximum(pre, 0.0)
        logits = act @ params.w2 + params.b2[0]
        probs = softmax(logits)
        chosen = int(np.argmax(probs))  # ties -> lower index

        steps.append(
            StepTrace(
                x=x, h_prev=h_prev, z=z, r=r, hbar=hbar, h=h,
                ins=ins, pre=pre, probs=probs, chosen=chosen,
            )
        )
        losses.append(ce_loss(probs, gt))
        prev_ans = cand_feats[gt] if teacher_forcing else cand_feats[chosen]
    return Trace(
        weights=weights, att_scores=att_scores, context=context,
        steps=steps, losses=losses,
    )


def zero_grads(params: ModelParams) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(t) for name, t in params.tensors()}


def backward_sample(
    params: ModelParams,
    rs: ResolvedSample,
    config: ModelConfig,
    trace: Trace,
    grads: dict[str, np.ndarray] | None = None,
    scale: float = 1.0,
) -> dict[str, np.ndarray]:
    """Accumulate analytic gradients of scale * sum of the trace's step
    losses into `grads` (allocated when omitted).

    Backpropagates through the MLP head, the GRU unroll, fusion, and the
    cross-attention softmax when that mode is active. Question, function,
    and candidate embeddings are constants; the previous-answer input is
    a constant except at step one, where it is the learned start vector.
    """
    if grads is None:
        grads = zero_grads(params)
    hid, ctx, dt = config.hidden, config.ctx_dim, config.dim_t
    d_context = np.zeros(ctx)
    dh_carry = np.zeros(hid)
    for s in range(len(trace.steps) - 1, -1, -1):
        st = trace.steps[s]
        dlogits = st.probs.copy()
        dlogits[rs.gt[s]] -= 1.0
        dlogits *= scale

        act = np.maximum(st.pre, 0.0)
        grads["w2"] += act.T @ dlogits
        grads["b2"] += dlogits.sum()
        dact = np.outer(dlogits, params.w2)
        dpre = dact * (st.pre > 0.0)
        grads["w1"] += dpre.T @ st.ins
        grads["b1"] += dpre.sum(axis=0)
        dins = dpre @ params.w1

        dh = dh_carry + dins[:, :hid].sum(axis=0)
        d_context += dins[:, hid : hid + ctx].sum(axis=0)

        dz = dh * (st.hbar - st.h_prev)
        dhbar = dh * st.z
        dh_prev = dh * (1.0 - st.z)

        dah = dhbar * (1.0 - st.hbar**2)
        grads["w_h"] += np.outer(dah, st.x)
        grads["u_h"] += np.outer(dah, st.r * st.h_prev)
        grads["b_h"] += dah
        drh = params.u_h.T @ dah
        dr = drh * st.h_prev
        dh_prev += drh * st.r

        daz = dz * st.z * (1.0 - st.z)
        grads["w_z"] += np.outer(daz, st.x)
        grads["u_z"] += np.outer(daz, st.h_prev)
        grads["b_z"] += daz
        dh_prev += params.u_z.T @ daz

        dar = dr * st.r * (1.0 - st.r)
        grads["w_r"] += np.outer(dar, st.x)
        grads["u_r"] += np.outer(dar, st.h_prev)
        grads["b_r"] += dar
        dh_prev += params.u_r.T @ dar

        dx = params.w_z.T @ daz + params.w_r.T @ dar + params.w_h.T @ dah
        d_context += dx[:ctx]
        if s == 0:
            grads["start_vec"] += dx[ctx + dt :]
        dh_carry = dh_prev

    if config.grounding_mode is GroundingMode.CROSS_ATTENTION:
        d_weights = rs.function_feats @ d_context
        w = trace.weights
        d_scores = w * (d_weights - np.dot(d_weights, w))
        grads["w_att"] += np.outer(rs.question, d_scores @ rs.function_text)
    return grads


# --- QAM1 checkpoint format -----------------------------------------------------

CKPT_MAGIC = b"QAM1"


def _config_to_json(config: ModelConfig) -> bytes:
    doc = {
        "dim_t": config.dim_t,
        "dim_v": config.dim_v,
        "hidden": config.hidden,
        "mlp_hidden": config.mlp_hidden,
        "use_function_t": config.use_function_t,
        "use_function_v": config.use_function_v,
        "use_answer_t": config.use_answer_t,
        "use_answer_v": config.use_answer_v,
        "grounding_mode": config.grounding_mode.value,
        "seed": config.seed,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _config_from_json(blob: bytes) -> ModelConfig:
    try:
        doc = json.loads(blob.decode("utf-8"))
        return ModelConfig(
            dim_t=doc["dim_t"],
            dim_v=doc["dim_v"],
            hidden=doc["hidden"],
            mlp_hidden=doc["mlp_hidden"],
            use_function_t=doc["use_function_t"],
            use_function_v=doc["use_function_v"],
            use_answer_t=doc["use_answer_t"],
            use_answer_v=doc["use_answer_v"],
            grounding_mode=GroundingMode(doc["grounding_mode"]),
            seed=doc["seed"],
        )
    except (ValueError, KeyError, UnicodeDecodeError) as exc:
        raise ConfigError(f"bad checkpoint config: {exc}") from exc


def save_checkpoint(path: str | Path, config: ModelConfig, params: ModelParams) -> None:
    """QAM1: magic, u32 config length, config JSON, then every tensor in
    declaration order as u8 ndim | ndim x u32 shape | f64 LE data."""
    blob = _config_to_json(config)
    chunks = [CKPT_MAGIC, struct.pack("<I", len(blob)), blob]
    for name, tensor in params.tensors():
        if not np.all(np.isfinite(tensor)):
            raise NonFiniteValue(f"checkpoint tensor {name} is not finite")
        chunks.append(struct.pack("<B", tensor.ndim))
        chunks.append(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
        chunks.append(np.asarray(tensor, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_checkpoint(path: str | Path) -> tuple[ModelConfig, ModelParams]:
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:4] != CKPT_MAGIC:
        raise BadMagic(f"{path}: not a QAM1 checkpoint")
    if len(data) < 8:
        raise TruncatedFile(f"{path}: header cut short")
    (blob_len,) = struct.unpack_from("<I", data, 4)
    offset = 8
    if offset + blob_len > len(data):
        raise TruncatedFile(f"{path}: config blob cut short")
    config = _config_from_json(data[offset : offset + blob_len])
    offset += blob_len

    fields: dict[str, np.ndarray] = {}
    for name, shape in expected_shapes(config):
        if offset + 1 > len(data):
            raise TruncatedFile(f"{path}: tensor {name} header cut short")
        (ndim,) = struct.unpack_from("<B", data, offset)
        offset += 1
        if offset + 4 * ndim > len(data):
            raise TruncatedFile(f"{path}: tensor {name} shape cut short")
        got_shape = struct.unpack_from(f"<{ndim}I", data, offset)
        offset += 4 * ndim
        if got_shape != shape:
            raise DimensionMismatch(
                f"{path}: tensor {name} has shape {got_shape}, expected {shape}"
            )
        count = int(np.prod(shape)) if shape else 1
        if offset + 8 * count > len(data):
            raise TruncatedFile(f"{path}: tensor {name} data cut short")
        tensor = np.frombuffer(data, dtype="<f8", count=count, offset=offset)
        offset += 8 * count
        if not np.all(np.isfinite(tensor)):
            raise NonFiniteValue(f"{path}: tensor {name} is not finite")
        fields[name] = tensor.reshape(shape).copy()
    if offset != len(data):
        raise TruncatedFile(
            f"{path}: {len(data) - offset} trailing bytes after declared tensors"
        )
    return config, ModelParams(**fields)
