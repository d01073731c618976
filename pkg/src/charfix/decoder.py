"""Beam search over (partial output, consumed input) hypotheses.

Each step extends a hypothesis by one LM token ``t`` and charges::

    log p(t | prompt + output) + log p(t | output)
        + lam * (-gamma * dist(x[a:b], t) + alpha * (len(t) - 1))

where ``a``/``b`` are the input positions consumed before/after the step and
``lam = 1 + H`` grows with the LM's uncertainty.  In ``tfpf`` mode the prompt
term is dropped and the distance is a position-wise (Hamming) cost, so the
output keeps the input length.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Sequence

from .distortion import (
    EditType,
    EditWeightConfig,
    best_end_index,
    default_config,
    extend_row,
    incremental_distance,
    initial_row,
    row_argmin,
    weighted_hamming,
)
from .exceptions import IndexOutOfRange, NoHypothesis, UnknownToken
from .lm.base import LanguageModel, Token, TokenDistribution, build_prompt, load_template

MODES = ("c2ec", "tfpf")


@dataclass(frozen=True)
class DecoderConfig:
    beam_size: int = 8
    alpha: float = 2.5
    gamma: float = 1.0
    prompt_temperature: float = 1.5
    max_extra_deletes: int = 2
    mode: str = "c2ec"
    enable_faithfulness: bool = True
    enable_length_reward: bool = True
    lm_topk: int = 20
    # which channel's entropy drives the faithfulness factor: "pure" or "prompt"
    entropy_source: str = "pure"
    normalize_entropy: bool = False
    # temper the pure channel with prompt_temperature too
    temperature_both: bool = False
    # "substring": charge dist(x[a:b], t) per step with one best b;
    # "exact": carry a full DP row per hypothesis so per-step charges telescope
    # to the true sentence distance
    incremental: str = "substring"

    def __post_init__(self):
        if self.beam_size < 1:
            raise ValueError("beam_size must be >= 1")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if not self.prompt_temperature > 0:
            raise ValueError("prompt_temperature must be positive")
        if self.max_extra_deletes < 0:
            raise ValueError("max_extra_deletes must be >= 0")
        if self.lm_topk < 1:
            raise ValueError("lm_topk must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.entropy_source not in ("pure", "prompt"):
            raise ValueError("entropy_source must be 'pure' or 'prompt'")
        if self.incremental not in ("substring", "exact"):
            raise ValueError("incremental must be 'substring' or 'exact'")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "DecoderConfig":
        known = {f.name: f for f in fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise ValueError(f"unknown decoder config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "DecoderConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    def replace(self, **changes) -> "DecoderConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class ScoreBreakdown:
    prompt_lp: float = 0.0
    pure_lp: float = 0.0
    distortion: float = 0.0
    length_bonus: float = 0.0

    @property
    def total(self) -> float:
        return self.prompt_lp + self.pure_lp - self.distortion + self.length_bonus

    def to_dict(self) -> dict:
        return {**asdict(self), "total": self.total}


@dataclass(frozen=True)
class Hypothesis:
    tokens: tuple = ()
    consumed: int = 0
    score: ScoreBreakdown = field(default_factory=ScoreBreakdown)
    finished: bool = False
    # consumed index after each token, for replaying the score
    ends: tuple = ()
    # exact mode only: dist(x[:i], output) for every i
    row: tuple = field(default=(), repr=False, compare=False)

    @property
    def text(self) -> str:
        return "".join(t.chars for t in self.tokens)

    @property
    def key(self) -> tuple:
        return tuple((t.id, t.chars) for t in self.tokens), self.finished

    def rank(self) -> tuple:
        return (-self.score.total, len(self.tokens), self.text, self.consumed, not self.finished)


@dataclass(frozen=True)
class Backends:
    """The fluency LM and the prompt-conditioned LM (the same model by default)."""

    pure: LanguageModel
    prompt: Optional[LanguageModel] = None

    def __post_init__(self):
        if self.prompt is None:
            object.__setattr__(self, "prompt", self.pure)


def as_backends(backends) -> Backends:
    return backends if isinstance(backends, Backends) else Backends(backends)


def faithfulness_factor(pure_dist: TokenDistribution, prompt_dist: Optional[TokenDistribution], cfg: DecoderConfig) -> float:
    if not cfg.enable_faithfulness:
        return 1.0
    dist = prompt_dist if cfg.entropy_source == "prompt" and prompt_dist is not None else pure_dist
    h = dist.entropy
    if cfg.normalize_entropy and dist.vocab_size and dist.vocab_size > 1:
        h /= math.log(dist.vocab_size)
    return 1.0 + h


def _advance(prev: ScoreBreakdown, n_chars: int, delta: float, lp_prompt: float, lp_pure: float,
             lam: float, cfg: DecoderConfig) -> ScoreBreakdown:
    bonus = lam * cfg.alpha * (n_chars - 1) if cfg.enable_length_reward else 0.0
    return ScoreBreakdown(
        prompt_lp=prev.prompt_lp + lp_prompt,
        pure_lp=prev.pure_lp + lp_pure,
        distortion=prev.distortion + lam * cfg.gamma * delta,
        length_bonus=prev.length_bonus + bonus,
    )


def _step_delta(hyp: Hypothesis, x: str, chars: str, b: Optional[int], weights: EditWeightConfig,
                cfg: DecoderConfig):
    """Return ``(b, delta, row)`` for appending ``chars`` to ``hyp``.

    ``b=None`` lets the search pick the end index; a given ``b`` is honoured
    (except in tfpf mode and exact mode, where it is determined).
    """
    a = hyp.consumed
    if cfg.mode == "tfpf":
        b = a + len(chars)
        if b > len(x):
            raise IndexOutOfRange(f"token overruns the input ({b} > {len(x)})")
        return b, weighted_hamming(x[a:b], chars, weights), ()
    if cfg.incremental == "exact":
        row = hyp.row or initial_row(x, weights)
        new = extend_row(row, x, chars, weights)
        b = row_argmin(new)
        return b, new[b] - row[a], new
    if b is None:
        b, delta = best_end_index(x, a, chars, cfg.max_extra_deletes, weights)
        return b, delta, ()
    return b, incremental_distance(x, a, b, chars, weights), ()


def step_score(prev: Hypothesis, t: Token, b: int, prompt_dist: Optional[TokenDistribution],
               pure_dist: TokenDistribution, cfg: DecoderConfig, x: str,
               weights: Optional[EditWeightConfig] = None) -> ScoreBreakdown:
    """Score after appending ``t`` to ``prev`` and moving the input cursor to ``b``."""
    weights = weights or default_config()
    _, delta, _ = _step_delta(prev, x, t.chars, b, weights, cfg)
    lam = faithfulness_factor(pure_dist, prompt_dist, cfg)
    lp_prompt = prompt_dist.logprob(t.id) if cfg.mode == "c2ec" else 0.0
    return _advance(prev.score, len(t.chars), delta, lp_prompt, pure_dist.logprob(t.id), lam, cfg)


def finalize(hyp: Hypothesis, x: str, cfg: DecoderConfig, weights: Optional[EditWeightConfig] = None,
             lam: float = 1.0, eos_logprobs: tuple = (0.0, 0.0)) -> Optional[Hypothesis]:
    """Close ``hyp``; unconsumed input is charged as trailing deletions.

    ``eos_logprobs`` are the (prompt, pure) log-probs of the end-of-sequence
    token, zero for backends without one.  Returns None when more input is
    left than the deletion window allows (or any at all in tfpf mode).
    """
    weights = weights or default_config()
    remaining = len(x) - hyp.consumed
    if remaining > cfg.max_extra_deletes or (cfg.mode == "tfpf" and remaining):
        return None
    if not remaining:
        tail = 0.0
    elif hyp.row:
        tail = hyp.row[len(x)] - hyp.row[hyp.consumed]
    else:
        tail = weights.weight(EditType.DELETE) * remaining
    lp_prompt, lp_pure = eos_logprobs
    s = hyp.score
    score = ScoreBreakdown(
        prompt_lp=s.prompt_lp + (lp_prompt if cfg.mode == "c2ec" else 0.0),
        pure_lp=s.pure_lp + lp_pure,
        distortion=s.distortion + (lam * cfg.gamma * tail if tail else 0.0),
        length_bonus=s.length_bonus,
    )
    return Hypothesis(hyp.tokens, len(x), score, True, hyp.ends, hyp.row)


class _Sentence:
    """Per-sentence state: caches shared by every expansion of one input."""

    def __init__(self, x: str, backends: Backends, cfg: DecoderConfig, weights: EditWeightConfig, prompt_ctx: tuple):
        self.x = x
        self.backends = backends
        self.cfg = cfg
        self.weights = weights
        self.prompt_ctx = tuple(prompt_ctx)
        self._tok_cache: dict = {}

    def root(self) -> Hypothesis:
        if self.cfg.mode == "c2ec" and self.cfg.incremental == "exact":
            return Hypothesis(row=initial_row(self.x, self.weights))
        return Hypothesis()

    def tokenize(self, text: str) -> list:
        toks = self._tok_cache.get(text)
        if toks is None:
            toks = self._tok_cache[text] = self.backends.pure.tokenize(text)
        return toks

    def distributions(self, hyp: Hypothesis):
        cfg = self.cfg
        ids = tuple(t.id for t in hyp.tokens)
        pure_t = cfg.prompt_temperature if cfg.temperature_both else 1.0
        pure = self.backends.pure.next_token_logprobs(ids, cfg.lm_topk, pure_t)
        prompt = None
        if cfg.mode == "c2ec":
            prompt = self.backends.prompt.next_token_logprobs(self.prompt_ctx + ids, cfg.lm_topk, cfg.prompt_temperature)
        return prompt, pure

    def eos_logprobs(self, prompt, pure) -> tuple:
        bk = self.backends
        return (
            prompt.logprob(bk.prompt.eos_id) if prompt is not None and bk.prompt.eos_id is not None else 0.0,
            pure.logprob(bk.pure.eos_id) if bk.pure.eos_id is not None else 0.0,
        )

    def candidates(self, hyp: Hypothesis, prompt: Optional[TokenDistribution], pure: TokenDistribution) -> list:
        rest = self.x[hyp.consumed:]
        found: dict = {}
        if rest:
            keep = self.tokenize(rest)[0]
            found[(keep.id, keep.chars)] = keep
            for p, ch in enumerate(keep.chars):
                for alt in self.weights.neighbors(ch):
                    variant = keep.chars[:p] + alt + keep.chars[p + 1:]
                    try:
                        toks = self.tokenize(variant)
                    except UnknownToken:
                        # the backend cannot spell this variant
                        continue
                    if len(toks) == 1:
                        found.setdefault((toks[0].id, toks[0].chars), toks[0])
        for tok in (prompt if prompt is not None else pure).tokens:
            if tok.chars:
                found.setdefault((tok.id, tok.chars), tok)
        return list(found.values())

    def step(self, hyp: Hypothesis, tok: Token, b: Optional[int], prompt, pure, lam: float) -> Hypothesis:
        b, delta, row = _step_delta(hyp, self.x, tok.chars, b, self.weights, self.cfg)
        lp_prompt = prompt.logprob(tok.id) if prompt is not None else 0.0
        score = _advance(hyp.score, len(tok.chars), delta, lp_prompt, pure.logprob(tok.id), lam, self.cfg)
        return Hypothesis(hyp.tokens + (tok,), b, score, False, hyp.ends + (b,), row)


def expand(hyp: Hypothesis, x: str, backends, cfg: DecoderConfig, weights: Optional[EditWeightConfig] = None,
           prompt_ctx: Sequence[int] = (), _sentence: Optional[_Sentence] = None) -> list:
    """All one-token extensions of ``hyp`` plus its end-of-sequence closure.

    Candidate tokens: the token continuing the input at the cursor, its
    confusion-table variants, and the LM's top ``lm_topk`` proposals.
    """
    if hyp.finished:
        raise ValueError("cannot expand a finished hypothesis")
    sent = _sentence or _Sentence(x, as_backends(backends), cfg, weights or default_config(), prompt_ctx)
    prompt, pure = sent.distributions(hyp)
    lam = faithfulness_factor(pure, prompt, cfg)
    a = hyp.consumed
    out_len = len(hyp.text)
    max_len = len(x) + cfg.max_extra_deletes
    results = []
    for tok in sent.candidates(hyp, prompt, pure):
        n = len(tok.chars)
        if out_len + n > max_len or (cfg.mode == "tfpf" and a + n > len(x)):
            continue
        results.append(sent.step(hyp, tok, None, prompt, pure, lam))
    closed = finalize(hyp, x, cfg, sent.weights, lam, sent.eos_logprobs(prompt, pure))
    if closed is not None:
        results.append(closed)
    return results


def search(x: str, backends, cfg: Optional[DecoderConfig] = None, weights: Optional[EditWeightConfig] = None,
           prompt_ctx: Sequence[int] = ()) -> Hypothesis:
    """Run the beam search and return the best finished hypothesis."""
    cfg = cfg or DecoderConfig()
    sent = _Sentence(x, as_backends(backends), cfg, weights or default_config(), prompt_ctx)
    beam = [sent.root()]
    while any(not h.finished for h in beam):
        pool: dict = {}
        for hyp in beam:
            new = [hyp] if hyp.finished else expand(hyp, x, None, cfg, _sentence=sent)
            for cand in new:
                old = pool.get(cand.key)
                if old is None or cand.rank() < old.rank():
                    pool[cand.key] = cand
        beam = sorted(pool.values(), key=Hypothesis.rank)[: cfg.beam_size]
        if not beam:
            break
    done = [h for h in beam if h.finished]
    if not done:
        raise NoHypothesis(
            f"no hypothesis reached the end of a {len(x)}-char input; "
            f"max_extra_deletes={cfg.max_extra_deletes} may be too small"
        )
    return min(done, key=Hypothesis.rank)


def beam_search(x: str, backends, cfg: Optional[DecoderConfig] = None, weights: Optional[EditWeightConfig] = None,
                prompt_ctx: Sequence[int] = ()):
    """Return ``(corrected text, ScoreBreakdown)`` for input ``x``."""
    best = search(x, backends, cfg, weights, prompt_ctx)
    return best.text, best.score


def correct(x: str, backends, cfg: Optional[DecoderConfig] = None, template=None,
            weights: Optional[EditWeightConfig] = None) -> str:
    """Correct one sentence.  Empty input returns empty output without LM calls."""
    if not x:
        return ""
    cfg = cfg or DecoderConfig()
    backends = as_backends(backends)
    prompt_ctx = ()
    if cfg.mode == "c2ec":
        prompt_ctx = build_prompt(load_template(template), x, backends.prompt)
    return beam_search(x, backends, cfg, weights, prompt_ctx)[0]


def rescore(x: str, tokens: Sequence[Token], ends: Sequence[int], backends, cfg: DecoderConfig,
            weights: Optional[EditWeightConfig] = None, prompt_ctx: Sequence[int] = ()) -> ScoreBreakdown:
    """Recompute a finished hypothesis' score from its tokens and end indices."""
    sent = _Sentence(x, as_backends(backends), cfg, weights or default_config(), prompt_ctx)
    hyp = sent.root()
    for tok, b in zip(tokens, ends):
        prompt, pure = sent.distributions(hyp)
        hyp = sent.step(hyp, tok, b, prompt, pure, faithfulness_factor(pure, prompt, cfg))
    prompt, pure = sent.distributions(hyp)
    closed = finalize(hyp, x, cfg, sent.weights, faithfulness_factor(pure, prompt, cfg), sent.eos_logprobs(prompt, pure))
    if closed is None:
        raise NoHypothesis("hypothesis leaves too much input unconsumed")
    return closed.score
