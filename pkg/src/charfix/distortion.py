"""Typed, weighted edit distances between an input sentence and a candidate output.

Edits are classified into keep / substitution classes / insert / delete, each
class carrying a cost.  Substitutions are typed with confusion tables (shared
or similar pronunciation, similar glyph shape) so that plausible typos are
cheaper than arbitrary replacements.

Conventions used throughout: ``x`` is the source (the text being corrected),
``y`` or ``t`` the target.  ``Insert`` adds a target character absent from the
source, ``Delete`` drops a source character.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .exceptions import IndexOutOfRange, LengthMismatch


class EditType(str, Enum):
    KEEP = "Keep"
    SUB_SAME_PINYIN = "SubSamePinyin"
    SUB_SIMILAR_PINYIN = "SubSimilarPinyin"
    SUB_SIMILAR_SHAPE = "SubSimilarShape"
    SUB_OTHER = "SubOther"
    INSERT = "Insert"
    DELETE = "Delete"

    @property
    def is_substitution(self) -> bool:
        return self in _SUBSTITUTIONS

    def __str__(self) -> str:
        return self.value


_SUBSTITUTIONS = frozenset(
    {
        EditType.SUB_SAME_PINYIN,
        EditType.SUB_SIMILAR_PINYIN,
        EditType.SUB_SIMILAR_SHAPE,
        EditType.SUB_OTHER,
    }
)

DEFAULT_WEIGHTS: Mapping[EditType, float] = {
    EditType.KEEP: 0.04,
    EditType.SUB_SAME_PINYIN: 3.75,
    EditType.SUB_SIMILAR_PINYIN: 4.85,
    EditType.SUB_SIMILAR_SHAPE: 5.40,
    EditType.SUB_OTHER: 8.91,
    EditType.INSERT: 8.50,
    EditType.DELETE: 9.00,
}


def _pairs(items: Iterable[Sequence[str]]) -> frozenset:
    out = set()
    for pair in items:
        a, b = pair
        if a != b:
            out.add(frozenset((a, b)))
    return frozenset(out)


@dataclass(frozen=True, eq=False)
class EditWeightConfig:
    """Per-edit-type costs plus the confusion tables that type substitutions.

    ``weights`` may be partial; missing edit types fall back to
    :data:`DEFAULT_WEIGHTS`.  Relations are symmetric and stored as unordered
    pairs.
    """

    weights: Mapping[EditType, float] = field(default_factory=dict)
    pinyin_table: Mapping[str, frozenset] = field(default_factory=dict)
    pinyin_similarity: frozenset = frozenset()
    shape_table: frozenset = frozenset()

    def __post_init__(self):
        merged = dict(DEFAULT_WEIGHTS)
        for key, value in self.weights.items():
            merged[EditType(key)] = float(value)
        for kind, value in merged.items():
            if not value >= 0:
                raise ValueError(f"weight for {kind} must be non-negative, got {value}")
        keep = merged[EditType.KEEP]
        for kind in _SUBSTITUTIONS:
            if not keep < merged[kind]:
                raise ValueError(f"Keep weight {keep} must be below {kind} weight {merged[kind]}")
        object.__setattr__(self, "weights", merged)
        object.__setattr__(
            self,
            "pinyin_table",
            {ch: frozenset(prons) for ch, prons in self.pinyin_table.items()},
        )
        object.__setattr__(self, "pinyin_similarity", _pairs(self.pinyin_similarity))
        object.__setattr__(self, "shape_table", _pairs(self.shape_table))
        object.__setattr__(self, "_sub_cache", {})
        object.__setattr__(self, "_neighbors", None)

    @classmethod
    def uniform(cls, keep=0.0, sub=1.0, insert=1.0, delete=1.0, **tables) -> "EditWeightConfig":
        """Config with a single substitution cost, handy for classic Levenshtein."""
        weights = {kind: sub for kind in _SUBSTITUTIONS}
        weights.update({EditType.KEEP: keep, EditType.INSERT: insert, EditType.DELETE: delete})
        return cls(weights=weights, **tables)

    @classmethod
    def from_files(cls, weights=None, tables=None) -> "EditWeightConfig":
        """Build from a weight JSON file and/or a confusion-table JSON file.

        Either argument may be a path, an already-parsed mapping, or None.
        Without a table file the bundled demonstration table is used.
        """
        w = load_weights(weights) if weights is not None else {}
        t = load_tables(tables) if tables is not None else bundled_tables()
        return cls(weights=w, **t)

    def replace(self, **weights) -> "EditWeightConfig":
        """Copy with some weights overridden, e.g. ``cfg.replace(Insert=7.0)``."""
        merged = dict(self.weights)
        for key, value in weights.items():
            merged[EditType(key)] = value
        return EditWeightConfig(
            weights=merged,
            pinyin_table=self.pinyin_table,
            pinyin_similarity=[tuple(p) for p in self.pinyin_similarity],
            shape_table=[tuple(p) for p in self.shape_table],
        )

    def weight(self, kind: EditType) -> float:
        return self.weights[kind]

    def substitution_cost(self, src: str, tgt: str) -> float:
        cache = self._sub_cache
        key = (src, tgt)
        cost = cache.get(key)
        if cost is None:
            cost = self.weights[classify_edit(src, tgt, self)]
            cache[key] = cost
        return cost

    def neighbors(self, char: str) -> tuple:
        """Characters one confusable substitution away from ``char``, sorted."""
        if self._neighbors is None:
            object.__setattr__(self, "_neighbors", _build_neighbor_index(self))
        return self._neighbors.get(char, ())

    def to_dict(self) -> dict:
        return {
            "weights": {kind.value: value for kind, value in self.weights.items()},
            "pinyin": {ch: sorted(p) for ch, p in sorted(self.pinyin_table.items())},
            "pinyin_similar": sorted(sorted(p) for p in self.pinyin_similarity),
            "shape_similar": sorted(sorted(p) for p in self.shape_table),
        }


def _build_neighbor_index(cfg: EditWeightConfig) -> dict:
    by_pron: dict = {}
    for ch, prons in cfg.pinyin_table.items():
        for p in prons:
            by_pron.setdefault(p, set()).add(ch)
    similar_prons: dict = {}
    for pair in cfg.pinyin_similarity:
        a, b = tuple(pair)
        similar_prons.setdefault(a, set()).add(b)
        similar_prons.setdefault(b, set()).add(a)

    index: dict = {}
    for ch, prons in cfg.pinyin_table.items():
        related = set()
        for p in prons:
            related |= by_pron.get(p, set())
            for q in similar_prons.get(p, ()):
                related |= by_pron.get(q, set())
        index.setdefault(ch, set()).update(related)
    for pair in cfg.shape_table:
        a, b = tuple(pair)
        index.setdefault(a, set()).add(b)
        index.setdefault(b, set()).add(a)
    return {ch: tuple(sorted(rel - {ch})) for ch, rel in index.items()}


def load_tables(source) -> dict:
    """Parse a confusion-table file into ``EditWeightConfig`` keyword arguments."""
    data = _read_json(source)
    return {
        "pinyin_table": {ch: frozenset(prons) for ch, prons in data.get("pinyin", {}).items()},
        "pinyin_similarity": [tuple(p) for p in data.get("pinyin_similar", [])],
        "shape_table": [tuple(p) for p in data.get("shape_similar", [])],
    }


def load_weights(source) -> dict:
    data = _read_json(source)
    out = {}
    for key, value in data.items():
        try:
            kind = EditType(key)
        except ValueError:
            raise ValueError(f"unknown edit type {key!r} in weight file") from None
        out[kind] = float(value)
    return out


def _read_json(source):
    if isinstance(source, Mapping):
        return source
    return json.loads(Path(source).read_text(encoding="utf-8"))


@lru_cache(maxsize=None)
def bundled_tables() -> dict:
    text = resources.files("charfix.data").joinpath("confusion_demo.json").read_text(encoding="utf-8")
    return load_tables(json.loads(text))


@lru_cache(maxsize=None)
def default_config() -> EditWeightConfig:
    """Default weights with the bundled demonstration confusion table."""
    return EditWeightConfig(**bundled_tables())


# --- edit typing -------------------------------------------------------------


def classify_edit(src: Optional[str], tgt: Optional[str], cfg: EditWeightConfig) -> EditType:
    if src is None and tgt is None:
        raise ValueError("classify_edit needs at least one character")
    if src is None:
        return EditType.INSERT
    if tgt is None:
        return EditType.DELETE
    if src == tgt:
        return EditType.KEEP
    src_prons = cfg.pinyin_table.get(src, frozenset())
    tgt_prons = cfg.pinyin_table.get(tgt, frozenset())
    if src_prons & tgt_prons:
        return EditType.SUB_SAME_PINYIN
    if cfg.pinyin_similarity and any(
        frozenset((p, q)) in cfg.pinyin_similarity for p in src_prons for q in tgt_prons
    ):
        return EditType.SUB_SIMILAR_PINYIN
    if frozenset((src, tgt)) in cfg.shape_table:
        return EditType.SUB_SIMILAR_SHAPE
    return EditType.SUB_OTHER


def edit_weight(kind: EditType, cfg: EditWeightConfig) -> float:
    return cfg.weights[kind]


@dataclass(frozen=True)
class EditOp:
    """One typed edit.  For inserts ``src_index`` is the source position the
    character is inserted before."""

    kind: EditType
    src_index: int
    src_char: Optional[str] = None
    tgt_char: Optional[str] = None

    def __post_init__(self):
        if self.kind is EditType.INSERT:
            if self.src_char is not None or self.tgt_char is None:
                raise ValueError("Insert takes only a target character")
        elif self.kind is EditType.DELETE:
            if self.tgt_char is not None or self.src_char is None:
                raise ValueError("Delete takes only a source character")
        elif self.src_char is None or self.tgt_char is None:
            raise ValueError(f"{self.kind} needs both characters")

    def as_tuple(self) -> tuple:
        return (self.kind.value, self.src_index, self.src_char, self.tgt_char)


# --- distances ---------------------------------------------------------------


def weighted_hamming(x: Sequence[str], y: Sequence[str], cfg: EditWeightConfig) -> float:
    if len(x) != len(y):
        raise LengthMismatch(
            f"Hamming distance needs equal lengths, got {len(x)} and {len(y)}"
        )
    total = 0.0
    for a, b in zip(x, y):
        total += cfg.substitution_cost(a, b)
    return total


@dataclass(frozen=True)
class DistanceMatrix:
    """``costs[i][j]`` is the distance between ``x[:i]`` and ``y[:j]``."""

    costs: list

    @property
    def shape(self) -> tuple:
        return len(self.costs), len(self.costs[0])

    def __getitem__(self, idx):
        return self.costs[idx]


def _dp(x: Sequence[str], y: Sequence[str], cfg: EditWeightConfig) -> list:
    w_ins = cfg.weights[EditType.INSERT]
    w_del = cfg.weights[EditType.DELETE]
    sub = cfg.substitution_cost
    n = len(y)
    row = [0.0] * (n + 1)
    for j in range(1, n + 1):
        row[j] = row[j - 1] + w_ins
    costs = [row]
    for i in range(1, len(x) + 1):
        xi = x[i - 1]
        prev = row
        row = [prev[0] + w_del] + [0.0] * n
        for j in range(1, n + 1):
            best = prev[j - 1] + sub(xi, y[j - 1])
            d = prev[j] + w_del
            if d < best:
                best = d
            ins = row[j - 1] + w_ins
            if ins < best:
                best = ins
            row[j] = best
        costs.append(row)
    return costs


def weighted_levenshtein(x: Sequence[str], y: Sequence[str], cfg: EditWeightConfig):
    """Return ``(cost, DistanceMatrix)``; keep is a zero-change substitution."""
    costs = _dp(x, y, cfg)
    return costs[len(x)][len(y)], DistanceMatrix(costs)


def align(x: Sequence[str], y: Sequence[str], cfg: EditWeightConfig, matrix=None) -> list:
    """Backtrace one optimal edit script, keeps included, in source order.

    Walking back from the bottom-right cell, a substitution (or keep) is
    preferred over a delete, and a delete over an insert.
    """
    costs = (matrix or weighted_levenshtein(x, y, cfg)[1]).costs
    w_ins = cfg.weights[EditType.INSERT]
    w_del = cfg.weights[EditType.DELETE]
    ops = []
    i, j = len(x), len(y)
    while i > 0 or j > 0:
        here = costs[i][j]
        if i > 0 and j > 0 and here == costs[i - 1][j - 1] + cfg.substitution_cost(x[i - 1], y[j - 1]):
            ops.append(EditOp(classify_edit(x[i - 1], y[j - 1], cfg), i - 1, x[i - 1], y[j - 1]))
            i, j = i - 1, j - 1
        elif i > 0 and here == costs[i - 1][j] + w_del:
            ops.append(EditOp(EditType.DELETE, i - 1, x[i - 1], None))
            i -= 1
        else:
            ops.append(EditOp(EditType.INSERT, i, None, y[j - 1]))
            j -= 1
    ops.reverse()
    return ops


def incremental_distance(x: Sequence[str], a: int, b: int, t: Sequence[str], cfg: EditWeightConfig) -> float:
    """Distance charged for emitting ``t`` while consuming ``x[a:b]``."""
    if not 0 <= a <= b <= len(x):
        raise IndexOutOfRange(f"need 0 <= a <= b <= {len(x)}, got a={a}, b={b}")
    return _dp(x[a:b], t, cfg)[b - a][len(t)]


def best_end_index(x: Sequence[str], a: int, t: Sequence[str], max_extra_deletes: int, cfg: EditWeightConfig):
    """Pick the end index ``b`` minimising ``incremental_distance(x, a, b, t)``.

    Candidates run from ``a`` to ``a + len(t) + max_extra_deletes`` (clipped to
    the input).  Ties go to the smallest ``b``.  One DP covers every candidate
    since each ``b`` reads a different row of the same matrix.
    """
    if not 0 <= a <= len(x):
        raise IndexOutOfRange(f"consumed index {a} outside 0..{len(x)}")
    if max_extra_deletes < 0:
        raise ValueError("max_extra_deletes must be >= 0")
    hi = min(len(x), a + len(t) + max_extra_deletes)
    costs = _dp(x[a:hi], t, cfg)
    n = len(t)
    best_b, best_cost = a, costs[0][n]
    for i in range(1, hi - a + 1):
        c = costs[i][n]
        if c < best_cost:
            best_b, best_cost = a + i, c
    return best_b, best_cost


def initial_row(x: Sequence[str], cfg: EditWeightConfig) -> tuple:
    """Distances from each prefix of ``x`` to the empty output."""
    w_del = cfg.weights[EditType.DELETE]
    row = [0.0]
    for _ in x:
        row.append(row[-1] + w_del)
    return tuple(row)


def extend_row(row: Sequence[float], x: Sequence[str], chars: Sequence[str], cfg: EditWeightConfig) -> tuple:
    """Advance ``row[i] = dist(x[:i], y)`` to ``dist(x[:i], y + chars)``."""
    w_ins = cfg.weights[EditType.INSERT]
    w_del = cfg.weights[EditType.DELETE]
    sub = cfg.substitution_cost
    for c in chars:
        new = [row[0] + w_ins]
        for i in range(1, len(row)):
            best = row[i - 1] + sub(x[i - 1], c)
            ins = row[i] + w_ins
            if ins < best:
                best = ins
            d = new[i - 1] + w_del
            if d < best:
                best = d
            new.append(best)
        row = new
    return tuple(row)


def row_argmin(row: Sequence[float]) -> int:
    """Index of the smallest entry, first one on ties."""
    best = 0
    for i in range(1, len(row)):
        if row[i] < row[best]:
            best = i
    return best
