"""Input validation helpers shared by the estimator and the CLI."""

from __future__ import annotations

import numbers
import os

import numpy as np


def check_sentences(X, name="X") -> list:
    """Coerce ``X`` to a list of str.

    Accepts any 1-d iterable of strings, or a 2-d array-like with a single
    column.  A bare string is rejected since iterating it would yield
    characters rather than sentences.
    """
    if isinstance(X, str):
        raise TypeError(f"{name} must be a sequence of sentences, not a single string")
    if X is None:
        raise TypeError(f"{name} must be a sequence of sentences, got None")
    arr = np.asarray(X, dtype=object)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-d (or a single column), got shape {arr.shape}")
    out = []
    for i, item in enumerate(arr):
        if not isinstance(item, str):
            raise TypeError(f"{name}[{i}] is {type(item).__name__}, expected str")
        out.append(item)
    return out


def check_consistent_length(*seqs) -> None:
    lengths = {len(s) for s in seqs if s is not None}
    if len(lengths) > 1:
        raise ValueError(f"inconsistent numbers of sentences: {sorted(lengths)}")


def check_scalar(value, name, kind=numbers.Real, min_val=None, include_min=True):
    if isinstance(value, bool) or not isinstance(value, kind):
        raise TypeError(f"{name} must be {kind.__name__}, got {type(value).__name__}")
    if min_val is not None:
        bad = value < min_val if include_min else value <= min_val
        if bad:
            op = ">=" if include_min else ">"
            raise ValueError(f"{name} must be {op} {min_val}, got {value}")
    return value


def effective_n_jobs(n_jobs) -> int:
    if n_jobs is None:
        return 1
    if n_jobs < 0:
        return max(1, (os.cpu_count() or 1) + 1 + n_jobs)
    if n_jobs == 0:
        raise ValueError("n_jobs == 0 has no meaning")
    return n_jobs
