from .base import (
    PLACEHOLDER,
    LanguageModel,
    Token,
    TokenDistribution,
    build_prompt,
    check_template,
    entropy,
    load_template,
    temper,
)
from .ngram import NgramLM
from .remote import RemoteLM

__all__ = [
    "PLACEHOLDER",
    "LanguageModel",
    "NgramLM",
    "RemoteLM",
    "Token",
    "TokenDistribution",
    "build_prompt",
    "check_template",
    "entropy",
    "load_template",
    "open_backend",
    "temper",
]


def open_backend(spec: str) -> LanguageModel:
    """Resolve ``ngram:<path>`` or ``http:<url>`` into a backend."""
    if spec.startswith(("http://", "https://")):
        return RemoteLM(spec)
    kind, _, target = spec.partition(":")
    if kind == "ngram" and target:
        return NgramLM.load(target)
    if kind == "http" and target:
        return RemoteLM(target if "://" in target else f"http://{target}")
    raise ValueError(f"backend spec must be ngram:<path> or http:<url>, got {spec!r}")
