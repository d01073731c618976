"""Training-free character error correction with LM-guided beam search."""

from .decoder import Backends, DecoderConfig, Hypothesis, ScoreBreakdown, beam_search, correct
from .distortion import (
    EditOp,
    EditType,
    EditWeightConfig,
    best_end_index,
    classify_edit,
    edit_weight,
    incremental_distance,
    weighted_hamming,
    weighted_levenshtein,
)
from .estimator import Corrector
from .evaluation import (
    CorpusPair,
    MetricReport,
    char_metrics,
    corpus_stats,
    extract_edits,
    load_corpus,
    normalize,
    sentence_metrics,
)
from .lm import LanguageModel, NgramLM, RemoteLM, Token, TokenDistribution

__version__ = "0.1.0"

__all__ = [
    "Backends",
    "CorpusPair",
    "Corrector",
    "DecoderConfig",
    "EditOp",
    "EditType",
    "EditWeightConfig",
    "Hypothesis",
    "LanguageModel",
    "MetricReport",
    "NgramLM",
    "RemoteLM",
    "ScoreBreakdown",
    "Token",
    "TokenDistribution",
    "beam_search",
    "best_end_index",
    "char_metrics",
    "classify_edit",
    "corpus_stats",
    "correct",
    "edit_weight",
    "extract_edits",
    "incremental_distance",
    "load_corpus",
    "normalize",
    "sentence_metrics",
    "weighted_hamming",
    "weighted_levenshtein",
]
