"""Function-grounded multi-step QA over instructional scripts.

Pipeline: segment a timestamped script into function units, ground a
question onto them with TF-IDF relevance weights, then train and evaluate
a GRU + MLP answer classifier over precomputed embeddings.
"""

from .data import CandidateAnswer, QASample, Step, load_qa_dataset
from .embeddings import (
    EmbeddingTable,
    load_embeddings,
    make_id,
    mean_pool,
    save_embeddings,
)
from .grounding import (
    FunctionWeights,
    SparseVector,
    TfidfModel,
    build_tfidf,
    cosine_sim,
    ground_question,
    tokenize,
    vectorize,
)
from .metrics import (
    MetricReport,
    RankRecord,
    evaluate,
    mean_rank,
    mrr,
    rank_records,
    recall_at_k,
)
from .model import (
    GroundingMode,
    ModelConfig,
    ModelParams,
    ce_loss,
    cross_attention_weights,
    fuse_context,
    gru_step,
    init_params,
    load_checkpoint,
    save_checkpoint,
    score_candidates,
    softmax,
)
from .optim import OptState, TrainConfig, adam_update, init_opt_state
from .segmenter import (
    FunctionSet,
    FunctionUnit,
    Script,
    ScriptLine,
    SegmentationMode,
    align_clip,
    load_function_set,
    load_script,
    parse_script,
    save_function_set,
    segment,
    segment_script,
)
from .train import StepRanker, TrainLog, predict_steps, tfidf_function_weights, train

__version__ = "0.1.0"
