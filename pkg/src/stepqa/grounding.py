"""TF-IDF grounding of a question onto a video's function units.

The corpus is the function-paras of one video. A question is scored
against every para by cosine similarity of TF-IDF vectors, and the scores
are normalized into relevance weights for downstream fusion.
"""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyCorpus, EmptyFunctionSet

# Unicode alphanumeric runs; underscores and punctuation split tokens.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on any non-alphanumeric character.

    Pure-number tokens are kept; there is no stopword removal.
    """
    return _TOKEN_RE.findall(text.lower())


@dataclass
class TfidfModel:
    vocab: dict[str, int]  # term -> column index
    idf: np.ndarray  # per-term, aligned to vocab indices
    doc_count: int


@dataclass
class SparseVector:
    indices: np.ndarray  # strictly increasing int column indices
    values: np.ndarray
    dim: int

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.values, self.values)))


@dataclass
class FunctionWeights:
    """Per-function relevance: normalized weights plus the raw scores."""

    weights: np.ndarray
    scores: np.ndarray


def build_tfidf(corpus: list[list[str]]) -> TfidfModel:
    """Build vocabulary and smoothed IDF over tokenized documents.

    idf(t) = ln((1 + N) / (1 + df(t))) + 1, which stays positive even for
    terms present in every document of a tiny corpus.
    """
    if not corpus:
        raise EmptyCorpus("cannot build a TF-IDF model from zero documents")
    doc_count = len(corpus)
    df: Counter[str] = Counter()
    for tokens in corpus:
        df.update(set(tokens))
    vocab = {term: i for i, term in enumerate(sorted(df))}
    idf = np.empty(len(vocab))
    for term, i in vocab.items():
        idf[i] = math.log((1 + doc_count) / (1 + df[term])) + 1.0
    return TfidfModel(vocab=vocab, idf=idf, doc_count=doc_count)


def vectorize(model: TfidfModel, tokens: list[str]) -> SparseVector:
    """TF-IDF vector of a token list: raw count x idf per in-vocab term."""
    counts = Counter(tokens)
    pairs = sorted(
        (model.vocab[t], c) for t, c in counts.items() if t in model.vocab
    )
    indices = np.array([i for i, _ in pairs], dtype=np.int64)
    values = np.array(
        [c * model.idf[i] for i, c in pairs], dtype=np.float64
    )
    return SparseVector(indices=indices, values=values, dim=len(model.vocab))


def cosine_sim(a: SparseVector, b: SparseVector) -> float:
    """Cosine similarity; 0 when either vector has zero norm."""
    if a.dim != b.dim:
        raise DimensionMismatch(
            f"sparse vectors have dims {a.dim} and {b.dim}"
        )
    norm_a = a.norm
    norm_b = b.norm
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    bvals = dict(zip(b.indices.tolist(), b.values.tolist()))
    dot = 0.0
    for i, v in zip(a.indices.tolist(), a.values.tolist()):
        if i in bvals:
            dot += v * bvals[i]
    return dot / (norm_a * norm_b)


def ground_question(
    model: TfidfModel,
    question: list[str],
    functions: list[list[str]],
    top_k: int | None = None,
) -> FunctionWeights:
    """Score a tokenized question against tokenized function-paras.

    Raw score_i is the cosine of the question and para TF-IDF vectors.
    With top_k set, all but the k highest scores are zeroed (ties broken
    by lower index). Weights are the kept scores normalized to sum 1;
    when every kept score is zero the weight mass is spread uniformly
    over the kept functions.
    """
    if not functions:
        raise EmptyFunctionSet("cannot ground a question on zero functions")
    q_vec = vectorize(model, question)
    scores = np.array(
        [cosine_sim(q_vec, vectorize(model, f)) for f in functions],
        dtype=np.float64,
    )
    n = len(functions)
    if top_k is not None:
        if top_k < 1:
            raise ValueError(f"top_k must be positive, got {top_k}")
        kept_idx = sorted(range(n), key=lambda i: (-scores[i], i))[:top_k]
    else:
        kept_idx = list(range(n))
    kept = np.zeros(n)
    kept[kept_idx] = scores[kept_idx]
    total = kept.sum()
    if total > 0.0:
        weights = kept / total
    else:
        weights = np.zeros(n)
        weights[kept_idx] = 1.0 / len(kept_idx)
    return FunctionWeights(weights=weights, scores=scores)
