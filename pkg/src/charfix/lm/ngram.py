"""Character n-gram language model with add-k smoothing.

Deterministic and small; it backs the test suite and works as a desk-scale
stand-in for a neural LM.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from ..exceptions import UnknownToken
from .base import LanguageModel, Token, TokenDistribution, entropy, temper, top_k_entries

BOS = "\x02"
EOS = "\x03"
UNK = "\x1a"
_SPECIAL = (BOS, EOS, UNK)


class NgramLM(LanguageModel):
    """Order-``order`` character model with add-``smoothing`` estimates.

    Vocabulary: end-of-sequence, unknown, then the training characters in code
    point order.  Every character is its own token; characters outside the
    vocabulary map to the unknown id but keep their surface form.

    Parameters
    ----------
    order : int
        n-gram order; the context is the previous ``order - 1`` symbols.
    smoothing : float
        Pseudo-count added to every vocabulary entry.
    """

    eos_id = 0
    unk_id = 1

    def __init__(self, order: int = 3, smoothing: float = 0.01):
        self.order = order
        self.smoothing = smoothing

    def fit(self, texts: Iterable[str], vocab: Optional[Iterable[str]] = None) -> "NgramLM":
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if not self.smoothing > 0:
            raise ValueError("smoothing must be positive")
        counts = defaultdict(Counter)
        pad = BOS * (self.order - 1)
        for text in texts:
            seq = pad + text + EOS
            for i in range(self.order - 1, len(seq)):
                counts[seq[i - self.order + 1 : i]][seq[i]] += 1
        return self._set_counts(counts, vocab)

    @classmethod
    def from_counts(cls, counts: dict, order: int = 3, smoothing: float = 0.01, vocab=None) -> "NgramLM":
        return cls(order=order, smoothing=smoothing)._set_counts(counts, vocab)

    @classmethod
    def load(cls, path) -> "NgramLM":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls.from_counts(
            data["counts"],
            order=int(data["order"]),
            smoothing=float(data.get("smoothing", 0.01)),
            vocab=data.get("vocab"),
        )

    def save(self, path) -> None:
        data = {
            "order": self.order,
            "smoothing": self.smoothing,
            "vocab": "".join(self.chars_),
            "counts": {ctx: dict(sorted(c.items())) for ctx, c in sorted(self.counts_.items())},
        }
        Path(path).write_text(json.dumps(data, ensure_ascii=False, indent=1), encoding="utf-8")

    def _set_counts(self, counts: dict, vocab) -> "NgramLM":
        chars = set(vocab or ())
        clean = {}
        for ctx, row in counts.items():
            if len(ctx) != self.order - 1:
                raise ValueError(f"context {ctx!r} does not have length {self.order - 1}")
            chars.update(ctx)
            clean[ctx] = {ch: int(n) for ch, n in row.items() if n}
            chars.update(clean[ctx])
        chars -= set(_SPECIAL)
        self.counts_ = clean
        self.chars_ = tuple(sorted(chars))
        self.symbols_ = (EOS, UNK) + self.chars_
        self.index_ = {s: i for i, s in enumerate(self.symbols_)}
        self.tokens_ = (Token(0, ""), Token(1, "")) + tuple(Token(i + 2, c) for i, c in enumerate(self.chars_))
        self.vocab_size = len(self.symbols_)
        self._logprobs = lru_cache(maxsize=65536)(self._context_logprobs)
        return self

    # the cache wraps a bound method, so copies and pickles rebuild their own
    def __getstate__(self):
        state = dict(self.__dict__)
        state.pop("_logprobs", None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        if "counts_" in state:
            self._logprobs = lru_cache(maxsize=65536)(self._context_logprobs)

    # --- LanguageModel -----------------------------------------------------

    def tokenize(self, text: str) -> list:
        index = self.index_
        return [Token(index.get(ch, self.unk_id) if ch not in _SPECIAL else self.unk_id, ch) for ch in text]

    def _context_logprobs(self, ctx: str, temperature: float) -> np.ndarray:
        row = self.counts_.get(ctx, {})
        vec = np.full(self.vocab_size, self.smoothing)
        for ch, n in row.items():
            vec[self.index_[ch]] += n
        logp = np.log(vec) - np.log(vec.sum())
        logp = temper(logp, temperature)
        logp.flags.writeable = False
        return logp

    def context_key(self, ctx: Sequence[int]) -> str:
        n = self.order - 1
        if n == 0:
            return ""
        tail = []
        for tid in tuple(ctx)[-n:]:
            if not 0 <= tid < self.vocab_size or tid == self.eos_id:
                raise UnknownToken(f"token id {tid} not valid in this context")
            tail.append(self.symbols_[tid])
        return BOS * (n - len(tail)) + "".join(tail)

    def distribution(self, ctx: Sequence[int], temperature: float = 1.0) -> np.ndarray:
        """Full next-symbol log-prob vector indexed by token id."""
        return self._logprobs(self.context_key(ctx), float(temperature))

    def next_token_logprobs(self, ctx: Sequence[int], top_k: int, temperature: float = 1.0) -> TokenDistribution:
        if top_k < 1:
            raise ValueError("top_k must be >= 1")
        if not temperature > 0:
            raise ValueError("temperature must be positive")
        logp = self.distribution(ctx, temperature)
        return TokenDistribution(
            entries=top_k_entries(logp, top_k, self.tokens_),
            entropy=entropy(logp),
            vocab_size=self.vocab_size,
        )

    def describe(self) -> str:
        return f"ngram(order={self.order}, smoothing={self.smoothing}, vocab={self.vocab_size})"
