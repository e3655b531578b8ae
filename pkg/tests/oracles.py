"""Shared test data and independent oracle implementations.

The oracles here are deliberately written with plain Python loops (or a
second, dumber algorithm) so they stay independent of the library code
they check.
"""
from __future__ import annotations

import math

import numpy as np

# The microwave grounding case: a question and four function-paras, with
# the transcription quirks of the source data kept as-is.
MICROWAVE_QUESTION = "How to defrost 2kg of fish?"
MICROWAVE_PARAS = [
    "How to defrost 1kg of fish? Press turbo defrost button. "
    "Turn the time knob clockwise to 1 kg. Press the start button.",
    "How to microwave eggplant at medium high power for 30 seconds? "
    "Press micropower button twice. Turn time knob clockwise to 30 seconds. "
    "start button.",
    "How to set microwave to 1 minute timer? Turn time knob clockwise to "
    "1 minute. Press the start button. How to stop microwave in the middle "
    "of use? Press the sensor reheat button. Press the start button.",
    "To stop, press the stop button. To resume, press the start button again. "
    "How to start, stop, start and stop microwave? Press the sensor reheat "
    "button.Press the start button. To stop, press the stop button. "
    "To resume, press the start button again. To stop, press the stop button.",
]

# The same paras cut into ASR-style lines. Only the four para openers start
# with a header; the inner "How to ..." of para 3 and the preamble of para 4
# ride mid-line / at the end of the previous unit, as real line boundaries
# would leave them.
MICROWAVE_SCRIPT_LINES = [
    "How to defrost 1kg of fish?",
    "Press turbo defrost button.",
    "Turn the time knob clockwise to 1 kg.",
    "Press the start button.",
    "How to microwave eggplant at medium high power for 30 seconds?",
    "Press micropower button twice.",
    "Turn time knob clockwise to 30 seconds.",
    "start button.",
    "How to set microwave to 1 minute timer?",
    "Turn time knob clockwise to 1 minute.",
    "Press the start button. How to stop microwave in the middle of use?",
    "Press the sensor reheat button.",
    "Press the start button. To stop, press the stop button. To resume, "
    "press the start button again.",
    "How to start, stop, start and stop microwave?",
    "Press the sensor reheat button.Press the start button.",
    "To stop, press the stop button.",
    "To resume, press the start button again.",
    "To stop, press the stop button.",
]


def microwave_script_dict() -> dict:
    lines = []
    t = 0.0
    for text in MICROWAVE_SCRIPT_LINES:
        lines.append({"start_s": t, "end_s": t + 3.0, "text": text})
        t += 3.0
    return {"video_id": "microwave", "lines": lines}


# --- dense TF-IDF oracle -----------------------------------------------------


def dense_tfidf(corpus: list[list[str]]):
    """Brute-force dense TF-IDF: returns (vocab, vec) where vec(tokens)
    is a plain-Python dense vector over the sorted vocabulary."""
    n_docs = len(corpus)
    vocab = sorted({t for doc in corpus for t in doc})
    idf = {}
    for term in vocab:
        df = sum(1 for doc in corpus if term in doc)
        idf[term] = math.log((1 + n_docs) / (1 + df)) + 1.0

    def vec(tokens: list[str]) -> list[float]:
        return [tokens.count(t) * idf[t] for t in vocab]

    return vocab, vec


def dense_cosine(u: list[float], v: list[float]) -> float:
    dot = sum(a * b for a, b in zip(u, v))
    nu = math.sqrt(sum(a * a for a in u))
    nv = math.sqrt(sum(b * b for b in v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return dot / (nu * nv)


def dense_ground(
    corpus: list[list[str]], question: list[str], top_k: int | None = None
) -> list[float]:
    """Brute-force grounding weights over a corpus of function token lists."""
    _, vec = dense_tfidf(corpus)
    qv = vec(question)
    scores = [dense_cosine(qv, vec(doc)) for doc in corpus]
    n = len(scores)
    kept_idx = (
        sorted(range(n), key=lambda i: (-scores[i], i))[:top_k]
        if top_k is not None
        else list(range(n))
    )
    kept = [scores[i] if i in kept_idx else 0.0 for i in range(n)]
    total = sum(kept)
    if total > 0:
        return [k / total for k in kept]
    return [1.0 / len(kept_idx) if i in kept_idx else 0.0 for i in range(n)]


# --- random synthetic scripts -------------------------------------------------


_HEADER_WORDS = ["toast", "boil", "grill", "clean", "reset", "defrost", "open"]
_BODY_WORDS = ["start", "stop", "power", "timer", "defrost", "menu", "clock"]


def random_script_dict(rng: np.random.Generator) -> tuple[dict, int]:
    """Random timestamped script plus its constructed header-line count.

    Line starts may overlap the previous end by up to 0.4 s, within the
    parser's jitter tolerance.
    """
    n = int(rng.integers(1, 13))
    lines = []
    n_headers = 0
    t = float(rng.uniform(0, 5))
    for _ in range(n):
        if rng.random() < 0.35:
            w = _HEADER_WORDS[int(rng.integers(len(_HEADER_WORDS)))]
            text = f"How to {w} the machine?"
            n_headers += 1
        else:
            w = _BODY_WORDS[int(rng.integers(len(_BODY_WORDS)))]
            text = f"Press the {w} button."
        dur = float(rng.uniform(0.5, 4.0))
        lines.append({"start_s": round(t, 3), "end_s": round(t + dur, 3), "text": text})
        jitter = float(rng.uniform(0.0, 0.4)) if rng.random() < 0.3 else 0.0
        t = max(t + dur - jitter, 0.0)
    return {"video_id": f"vid{int(rng.integers(1e6))}", "lines": lines}, n_headers


# --- scalar network oracles -----------------------------------------------------


def _mv(mat: list[list[float]], vec: list[float]) -> list[float]:
    return [sum(row[j] * vec[j] for j in range(len(vec))) for row in mat]


def scalar_gru(params, h_prev: np.ndarray, x: np.ndarray) -> np.ndarray:
    """GRU step recomputed with plain-Python loops."""
    hp = h_prev.tolist()
    xv = x.tolist()

    def gate(w, u, b):
        wx = _mv(w.tolist(), xv)
        uh = _mv(u.tolist(), hp)
        return [wx[i] + uh[i] + bi for i, bi in enumerate(b.tolist())]

    z = [1.0 / (1.0 + math.exp(-a)) for a in gate(params.w_z, params.u_z, params.b_z)]
    r = [1.0 / (1.0 + math.exp(-a)) for a in gate(params.w_r, params.u_r, params.b_r)]
    rh = [r[i] * hp[i] for i in range(len(hp))]
    wx = _mv(params.w_h.tolist(), xv)
    uh = _mv(params.u_h.tolist(), rh)
    hbar = [
        math.tanh(wx[i] + uh[i] + b) for i, b in enumerate(params.b_h.tolist())
    ]
    out = [(1.0 - z[i]) * hp[i] + z[i] * hbar[i] for i in range(len(hp))]
    return np.array(out)


def scalar_mlp_logits(
    params, h: np.ndarray, context: np.ndarray, question: np.ndarray,
    cand_feats: np.ndarray,
) -> np.ndarray:
    """Candidate logits recomputed with plain-Python loops."""
    w1 = params.w1.tolist()
    b1 = params.b1.tolist()
    w2 = params.w2.tolist()
    b2 = float(params.b2[0])
    fixed = h.tolist() + context.tolist() + question.tolist()
    logits = []
    for row in cand_feats.tolist():
        inp = fixed + row
        hid = [
            max(0.0, sum(w1[i][j] * inp[j] for j in range(len(inp))) + b1[i])
            for i in range(len(w1))
        ]
        logits.append(sum(w2[i] * hid[i] for i in range(len(hid))) + b2)
    return np.array(logits)


# --- finite differences -----------------------------------------------------------


def fd_gradients(loss_fn, params, step: float = 1e-5) -> dict[str, np.ndarray]:
    """Central finite differences of loss_fn() w.r.t. every tensor, in place."""
    grads = {}
    for name, tensor in params.tensors():
        fd = np.zeros_like(tensor)
        it = np.nditer(tensor, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = tensor[idx]
            tensor[idx] = old + step
            lp = loss_fn()
            tensor[idx] = old - step
            lm = loss_fn()
            tensor[idx] = old
            fd[idx] = (lp - lm) / (2.0 * step)
        grads[name] = fd
    return grads


def rel_err(a: np.ndarray, b: np.ndarray, floor: float = 1e-6) -> float:
    """Norm-based relative error with a floor so that near-zero gradient
    pairs (for example a bias that softmax shift-invariance cancels) do
    not divide noise by noise."""
    num = float(np.linalg.norm(a - b))
    den = max(float(np.linalg.norm(a) + np.linalg.norm(b)), floor)
    return num / den
