from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from ..exceptions import TemplateError

PLACEHOLDER = "{INPUT}"
FLOOR_MARGIN = 5.0


@dataclass(frozen=True)
class Token:
    """A vocabulary item and its surface form.

    ``chars`` is empty for tokens with no printable surface (end of sequence,
    or ids a remote backend never spelled out); those are scored but never
    proposed as output.
    """

    id: int
    chars: str


@dataclass(frozen=True)
class TokenDistribution:
    """Top-k slice of a next-token distribution plus the full entropy (nats)."""

    entries: tuple
    entropy: float
    vocab_size: Optional[int] = None
    _by_id: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {tok.id: lp for tok, lp in self.entries})

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def tokens(self) -> list:
        return [tok for tok, _ in self.entries]

    @property
    def floor(self) -> float:
        """Log-prob charged to tokens missing from the slice."""
        return self.entries[-1][1] - FLOOR_MARGIN

    def logprob(self, token_id: int) -> float:
        lp = self._by_id.get(token_id)
        return self.floor if lp is None else lp

    def __contains__(self, token_id) -> bool:
        return token_id in self._by_id


def temper(logprobs: np.ndarray, temperature: float) -> np.ndarray:
    """Divide log-scores by ``temperature`` and renormalise."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    if temperature == 1.0:
        return logprobs
    scaled = logprobs / temperature
    return scaled - logsumexp(scaled)


def entropy(logprobs: np.ndarray) -> float:
    p = np.exp(logprobs)
    mask = p > 0
    return float(max(0.0, -np.sum(p[mask] * logprobs[mask])))


def top_k_entries(logprobs: np.ndarray, top_k: int, tokens: Sequence[Token]) -> tuple:
    # stable sort on -logp keeps lower ids first among ties
    order = np.argsort(-logprobs, kind="stable")[:top_k]
    return tuple((tokens[i], float(logprobs[i])) for i in order)


class LanguageModel:
    """Scoring contract every backend implements.

    Contexts are plain tuples of token ids: prompt ids (if any) followed by the
    ids generated so far.
    """

    eos_id: Optional[int] = None
    vocab_size: Optional[int] = None

    def tokenize(self, text: str) -> list:
        raise NotImplementedError

    def detokenize(self, tokens: Sequence[Token]) -> str:
        return "".join(t.chars for t in tokens)

    def next_token_logprobs(self, ctx: Sequence[int], top_k: int, temperature: float = 1.0) -> TokenDistribution:
        raise NotImplementedError

    def describe(self) -> str:
        return type(self).__name__

    def sequence_logprob(self, ctx: Sequence[int], continuation: Sequence, temperature: float = 1.0) -> float:
        """Sum of step log-probs of ``continuation`` (tokens or ids) after ``ctx``."""
        if not continuation:
            raise ValueError("continuation must be non-empty")
        top_k = self.vocab_size or 1024
        ctx = tuple(ctx)
        total = 0.0
        for item in continuation:
            tid = item.id if isinstance(item, Token) else int(item)
            total += self.next_token_logprobs(ctx, top_k, temperature).logprob(tid)
            ctx = ctx + (tid,)
        return total


def load_template(name_or_path) -> str:
    """Return template text: a bundled name (``minimal``/``detailed``), a file
    path, or a literal template string containing the placeholder."""
    if name_or_path is None:
        name_or_path = "minimal"
    if name_or_path in ("minimal", "detailed"):
        return resources.files("charfix.data").joinpath(f"{name_or_path}.txt").read_text(encoding="utf-8")
    text = str(name_or_path)
    if PLACEHOLDER in text:
        return text
    return Path(text).read_text(encoding="utf-8")


def check_template(template: str) -> None:
    count = template.count(PLACEHOLDER)
    if count != 1:
        raise TemplateError(f"template must contain exactly one {PLACEHOLDER} placeholder, found {count}")


def build_prompt(template: str, x: str, lm: LanguageModel) -> tuple:
    check_template(template)
    # str.replace does not rescan the inserted text, so braces in x stay literal
    return tuple(t.id for t in lm.tokenize(template.replace(PLACEHOLDER, x)))


def uniform_entropy(vocab_size: int) -> float:
    return math.log(vocab_size)
