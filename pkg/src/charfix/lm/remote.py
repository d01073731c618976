"""Client for a JSON-over-HTTP log-prob server.

Endpoints::

    POST /v1/tokenize  {"text": str}
        -> {"ids": [int], "pieces": [str]}
    POST /v1/logprobs  {"context": [int], "top_k": int, "temperature": float}
        -> {"tokens": [int], "logprobs": [float], "entropy": float}

The logprobs response may also carry ``"pieces"`` aligned with ``"tokens"``;
otherwise surface forms come from earlier tokenize calls.
"""

from __future__ import annotations

import math
import threading
from typing import Optional, Sequence

import httpx

from ..exceptions import BackendUnavailable
from .base import LanguageModel, Token, TokenDistribution


class RemoteLM(LanguageModel):
    def __init__(
        self,
        base_url: str,
        timeout: float = 30.0,
        max_in_flight: int = 8,
        eos_id: Optional[int] = None,
        vocab_size: Optional[int] = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.max_in_flight = max_in_flight
        self.eos_id = eos_id
        self.vocab_size = vocab_size
        self._client = httpx.Client(base_url=self.base_url, timeout=timeout)
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._pieces: dict = {}
        self._lock = threading.Lock()

    def close(self):
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _post(self, path: str, payload: dict) -> dict:
        with self._slots:
            try:
                resp = self._client.post(path, json=payload)
            except httpx.HTTPError as exc:
                raise BackendUnavailable(f"{self.base_url}{path}: {exc}") from exc
        if resp.status_code != 200:
            raise BackendUnavailable(f"{self.base_url}{path} returned HTTP {resp.status_code}")
        try:
            return resp.json()
        except ValueError as exc:
            raise BackendUnavailable(f"{self.base_url}{path}: invalid JSON") from exc

    def tokenize(self, text: str) -> list:
        data = self._post("/v1/tokenize", {"text": text})
        ids, pieces = data.get("ids"), data.get("pieces")
        if not isinstance(ids, list) or not isinstance(pieces, list) or len(ids) != len(pieces):
            raise BackendUnavailable("malformed /v1/tokenize response")
        tokens = [Token(int(i), str(p)) for i, p in zip(ids, pieces)]
        with self._lock:
            for tok in tokens:
                if tok.chars:
                    self._pieces.setdefault(tok.id, tok.chars)
        return tokens

    def next_token_logprobs(self, ctx: Sequence[int], top_k: int, temperature: float = 1.0) -> TokenDistribution:
        if top_k < 1:
            raise ValueError("top_k must be >= 1")
        if not temperature > 0:
            raise ValueError("temperature must be positive")
        data = self._post(
            "/v1/logprobs",
            {"context": [int(i) for i in ctx], "top_k": int(top_k), "temperature": float(temperature)},
        )
        ids, lps, ent = data.get("tokens"), data.get("logprobs"), data.get("entropy")
        if not isinstance(ids, list) or not isinstance(lps, list) or len(ids) != len(lps) or not ids:
            raise BackendUnavailable("malformed /v1/logprobs response")
        if not all(isinstance(v, (int, float)) and math.isfinite(v) for v in lps + [ent]):
            raise BackendUnavailable("non-finite value in /v1/logprobs response")
        pieces = data.get("pieces")
        if pieces is not None and len(pieces) == len(ids):
            with self._lock:
                for i, p in zip(ids, pieces):
                    if p:
                        self._pieces.setdefault(int(i), str(p))
        entries = sorted(
            ((Token(int(i), "" if int(i) == self.eos_id else self._pieces.get(int(i), "")), float(lp))
             for i, lp in zip(ids, lps)),
            key=lambda e: (-e[1], e[0].id),
        )
        return TokenDistribution(entries=tuple(entries), entropy=float(ent), vocab_size=self.vocab_size)

    def describe(self) -> str:
        return f"http:{self.base_url}"
