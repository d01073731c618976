"""scikit-learn style wrapper around the decoder."""

from __future__ import annotations

import logging
import numbers
from concurrent.futures import ThreadPoolExecutor

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_consistent_length, check_scalar, check_sentences, effective_n_jobs
from .decoder import Backends, DecoderConfig, beam_search
from .distortion import EditWeightConfig
from .evaluation import char_metrics, normalize
from .exceptions import CharfixError
from .lm.base import build_prompt, check_template, load_template
from .lm.ngram import NgramLM

logger = logging.getLogger(__name__)

_DECODER_PARAMS = tuple(DecoderConfig.__dataclass_fields__)


class Corrector(TransformerMixin, BaseEstimator):
    """Training-free character error corrector.

    ``transform`` maps raw sentences to corrected sentences.  The decoder needs
    no training; ``fit`` only validates parameters, loads tables and the
    prompt template, and, when ``lm`` is None, fits a character n-gram model
    on the reference sentences ``y`` (or on ``X`` if ``y`` is omitted).

    Parameters
    ----------
    lm : LanguageModel or None
        Backend for the fluency channel.
    prompt_lm : LanguageModel or None
        Backend for the prompt-conditioned channel; defaults to ``lm``.
    weights : mapping, path, EditWeightConfig or None
        Edit weights; unspecified edit types use the built-in defaults.
    tables : mapping, path or None
        Confusion tables; None uses the bundled demonstration table.  Ignored
        when ``weights`` is an ``EditWeightConfig``.
    insert_weight, delete_weight : float or None
        Overrides for the two length-changing edit costs.
    template : str
        ``"minimal"``, ``"detailed"``, a path, or a literal template.
    n_jobs : int or None
        Sentences decoded concurrently.  -1 uses every core.
    on_error : {"raise", "keep"}
        ``"keep"`` returns the input sentence unchanged when decoding fails.

    The remaining parameters mirror :class:`~charfix.decoder.DecoderConfig`.
    """

    def __init__(
        self,
        lm=None,
        prompt_lm=None,
        *,
        mode="c2ec",
        beam_size=8,
        alpha=2.5,
        gamma=1.0,
        prompt_temperature=1.5,
        max_extra_deletes=2,
        enable_faithfulness=True,
        enable_length_reward=True,
        lm_topk=20,
        entropy_source="pure",
        normalize_entropy=False,
        temperature_both=False,
        incremental="substring",
        weights=None,
        tables=None,
        insert_weight=None,
        delete_weight=None,
        template="minimal",
        n_jobs=None,
        on_error="raise",
    ):
        self.lm = lm
        self.prompt_lm = prompt_lm
        self.mode = mode
        self.beam_size = beam_size
        self.alpha = alpha
        self.gamma = gamma
        self.prompt_temperature = prompt_temperature
        self.max_extra_deletes = max_extra_deletes
        self.enable_faithfulness = enable_faithfulness
        self.enable_length_reward = enable_length_reward
        self.lm_topk = lm_topk
        self.entropy_source = entropy_source
        self.normalize_entropy = normalize_entropy
        self.temperature_both = temperature_both
        self.incremental = incremental
        self.weights = weights
        self.tables = tables
        self.insert_weight = insert_weight
        self.delete_weight = delete_weight
        self.template = template
        self.n_jobs = n_jobs
        self.on_error = on_error

    def _decoder_config(self) -> DecoderConfig:
        check_scalar(self.beam_size, "beam_size", numbers.Integral, 1)
        check_scalar(self.lm_topk, "lm_topk", numbers.Integral, 1)
        check_scalar(self.max_extra_deletes, "max_extra_deletes", numbers.Integral, 0)
        check_scalar(self.gamma, "gamma", numbers.Real, 0)
        check_scalar(self.alpha, "alpha", numbers.Real)
        check_scalar(self.prompt_temperature, "prompt_temperature", numbers.Real, 0, include_min=False)
        return DecoderConfig(**{name: getattr(self, name) for name in _DECODER_PARAMS})

    def _edit_weights(self) -> EditWeightConfig:
        if isinstance(self.weights, EditWeightConfig):
            cfg = self.weights
        else:
            cfg = EditWeightConfig.from_files(self.weights, self.tables)
        overrides = {}
        if self.insert_weight is not None:
            overrides["Insert"] = check_scalar(self.insert_weight, "insert_weight", numbers.Real, 0)
        if self.delete_weight is not None:
            overrides["Delete"] = check_scalar(self.delete_weight, "delete_weight", numbers.Real, 0)
        return cfg.replace(**overrides) if overrides else cfg

    def fit(self, X=None, y=None):
        if self.on_error not in ("raise", "keep"):
            raise ValueError("on_error must be 'raise' or 'keep'")
        self.config_ = self._decoder_config()
        self.weights_ = self._edit_weights()
        self.template_ = load_template(self.template)
        check_template(self.template_)
        if self.lm is None:
            texts = y if y is not None else X
            if texts is None:
                raise ValueError("lm is None: pass reference sentences to fit an n-gram model")
            self.lm_ = NgramLM().fit(check_sentences(texts, "y" if y is not None else "X"))
        else:
            self.lm_ = self.lm
        self.backends_ = Backends(self.lm_, self.prompt_lm)
        return self

    def correct_one(self, x: str):
        """Return ``(corrected, ScoreBreakdown)`` for a single sentence."""
        check_is_fitted(self, "config_")
        if not x:
            return "", None
        prompt_ctx = ()
        if self.config_.mode == "c2ec":
            prompt_ctx = build_prompt(self.template_, x, self.backends_.prompt)
        return beam_search(x, self.backends_, self.config_, self.weights_, prompt_ctx)

    def _correct_safe(self, x: str) -> str:
        try:
            return self.correct_one(x)[0]
        except CharfixError as exc:
            if self.on_error == "raise":
                raise
            logger.warning("keeping input unchanged: %s", exc)
            return x

    def transform(self, X) -> list:
        check_is_fitted(self, "config_")
        X = check_sentences(X)
        workers = effective_n_jobs(self.n_jobs)
        if workers == 1 or len(X) < 2:
            return [self._correct_safe(x) for x in X]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(self._correct_safe, X))

    def predict(self, X) -> list:
        return self.transform(X)

    def score(self, X, y) -> float:
        """Character-level correction F1 of ``transform(X)`` against ``y``."""
        X = check_sentences(X)
        y = check_sentences(y, "y")
        check_consistent_length(X, y)
        pred = self.transform(X)
        return char_metrics(
            (normalize(s), normalize(r), normalize(p)) for s, r, p in zip(X, y, pred)
        ).char_f1

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.input_tags.string = True
        tags.input_tags.two_d_array = False
        tags.requires_fit = True
        return tags

