"""Correction metrics: normalisation, edit extraction, P/R/F1 and corpus statistics."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .distortion import EditOp, EditType, EditWeightConfig, align
from .exceptions import ParseError

# 、。「」【】 have no ASCII forms in the U+FF01 block
_EXTRA_HALF = {
    "、": ",",
    "。": ".",
    "「": "｢",
    "」": "｣",
    "【": "[",
    "】": "]",
}
_HALF_TABLE = {cp: cp - 0xFEE0 for cp in range(0xFF01, 0xFF5F)}
_HALF_TABLE.update({ord(k): v for k, v in _EXTRA_HALF.items()})

_UNIT = EditWeightConfig.uniform()

ERROR_TYPES = ("SUB", "RED", "MIS")
_KIND_TO_TYPE = {EditType.DELETE: "RED", EditType.INSERT: "MIS"}


def normalize(text: str) -> str:
    """Drop whitespace and fold full-width punctuation to half-width."""
    return "".join(ch for ch in text if not ch.isspace()).translate(_HALF_TABLE)


def extract_edits(src: str, tgt: str) -> list:
    """Non-keep edits of one unit-cost optimal alignment of ``src`` to ``tgt``."""
    return [op for op in align(src, tgt, _UNIT) if op.kind is not EditType.KEEP]


def apply_edits(src: str, edits: Sequence[EditOp]) -> str:
    """Rebuild the target from ``src`` and its edit list."""
    by_pos: dict = {}
    for op in edits:
        by_pos.setdefault(op.src_index, []).append(op)
    out = []
    for i in range(len(src) + 1):
        ops = by_pos.get(i, [])
        out.extend(op.tgt_char for op in ops if op.kind is EditType.INSERT)
        if i == len(src):
            break
        change = [op for op in ops if op.kind is not EditType.INSERT]
        if not change:
            out.append(src[i])
        elif change[0].kind is not EditType.DELETE:
            out.append(change[0].tgt_char)
    return "".join(out)


def error_type(op: EditOp) -> str:
    return _KIND_TO_TYPE.get(op.kind, "SUB")


def _prf(tp: int, system: int, gold: int) -> tuple:
    p = tp / system if system else 0.0
    r = tp / gold if gold else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f


@dataclass
class MetricReport:
    char_precision: float = 0.0
    char_recall: float = 0.0
    char_f1: float = 0.0
    sent_precision: float = 0.0
    sent_recall: float = 0.0
    sent_f1: float = 0.0
    counts: dict = field(default_factory=dict)
    per_type: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2, sort_keys=True)

    def format_table(self) -> str:
        rows = [
            ("level", "P", "R", "F1"),
            ("char", *(f"{v * 100:.2f}" for v in (self.char_precision, self.char_recall, self.char_f1))),
            ("sentence", *(f"{v * 100:.2f}" for v in (self.sent_precision, self.sent_recall, self.sent_f1))),
        ]
        lines = [f"{a:<10}{b:>8}{c:>8}{d:>8}" for a, b, c, d in rows]
        lines.append("")
        lines.extend(f"{k:<14}{v:>8}" for k, v in self.counts.items())
        if self.per_type:
            lines.append("gold edits by type: " + "  ".join(f"{k}={self.per_type[k]}" for k in ERROR_TYPES))
        return "\n".join(lines)


def char_metrics(triples: Iterable[Sequence[str]]) -> MetricReport:
    """Micro-averaged character-level correction P/R/F1.

    ``triples`` are (source, reference, prediction), already normalised.  A
    system edit counts when an identical gold edit (kind, position, chars)
    exists; each gold edit matches at most once.
    """
    tp = system = gold = 0
    per_type = Counter({k: 0 for k in ERROR_TYPES})
    triples = list(triples)
    for src, ref, pred in triples:
        gold_edits = extract_edits(src, ref)
        sys_edits = extract_edits(src, pred)
        per_type.update(error_type(op) for op in gold_edits)
        remaining = Counter(op.as_tuple() for op in gold_edits)
        for op in sys_edits:
            key = op.as_tuple()
            if remaining[key] > 0:
                remaining[key] -= 1
                tp += 1
        system += len(sys_edits)
        gold += len(gold_edits)
    p, r, f = _prf(tp, system, gold)
    sp, sr, sf, scounts = _sentence_counts(triples)
    return MetricReport(
        char_precision=p,
        char_recall=r,
        char_f1=f,
        sent_precision=sp,
        sent_recall=sr,
        sent_f1=sf,
        counts={"char_tp": tp, "char_system": system, "char_gold": gold, **scounts},
        per_type=dict(per_type),
    )


def _sentence_counts(triples) -> tuple:
    tp = system = gold = 0
    for src, ref, pred in triples:
        if pred != src:
            system += 1
        if ref != src:
            gold += 1
            if pred == ref:
                tp += 1
    p, r, f = _prf(tp, system, gold)
    return p, r, f, {"sent_tp": tp, "sent_system": system, "sent_gold": gold}


def sentence_metrics(triples: Iterable[Sequence[str]]) -> tuple:
    """Sentence-level (P, R, F1): a hit needs an exact match on an erroneous sentence."""
    p, r, f, _ = _sentence_counts(list(triples))
    return p, r, f


evaluate = char_metrics


def corpus_stats(pairs: Iterable[Sequence[str]]) -> dict:
    """Table-style corpus statistics over (source, reference) pairs."""
    counts = Counter({k: 0 for k in ERROR_TYPES})
    n = err = total_len = 0
    for src, ref in pairs:
        n += 1
        total_len += len(src)
        edits = extract_edits(src, ref)
        if edits:
            err += 1
        counts.update(error_type(op) for op in edits)
    total = sum(counts.values())
    return {
        "sentences": n,
        "erroneous_sentences": err,
        "erroneous_ratio": err / n if n else 0.0,
        "avg_length": total_len / n if n else 0.0,
        "edits": total,
        **{k: counts[k] for k in ERROR_TYPES},
        **{f"{k}_pct": (counts[k] / total if total else 0.0) for k in ERROR_TYPES},
    }


def format_stats(stats: dict) -> str:
    if not stats["sentences"]:
        return "0 sentences"
    head = f"{'#Sent':>7}{'%Err.Sent':>11}{'Avg.Len.':>10}" + "".join(f"{k:>12}" for k in ERROR_TYPES)
    cells = "".join(f"{stats[k]:>5} ({stats[k + '_pct'] * 100:4.1f}%)" for k in ERROR_TYPES)
    row = f"{stats['sentences']:>7}{stats['erroneous_ratio'] * 100:>10.2f}%{stats['avg_length']:>10.2f}" + cells
    return head + "\n" + row


@dataclass(frozen=True)
class CorpusPair:
    source: str
    reference: str
    id: int = 0

    @property
    def normalized(self) -> tuple:
        return normalize(self.source), normalize(self.reference)


def load_corpus(path, format: str = None) -> list:
    """Read ``source<TAB>reference`` lines (tsv) or ``{"source","target"}`` objects (jsonl)."""
    path = Path(path)
    fmt = format or ("jsonl" if path.suffix in (".jsonl", ".json") else "tsv")
    if fmt not in ("tsv", "jsonl"):
        raise ValueError(f"unknown corpus format {fmt!r}")
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path} is not valid UTF-8") from exc
    pairs = []
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        if fmt == "tsv":
            cols = line.split("\t")
            if len(cols) != 2:
                raise ParseError(f"expected 2 tab-separated columns, found {len(cols)}", lineno)
            src, ref = cols
        else:
            try:
                obj = json.loads(line)
                src, ref = obj["source"], obj["target"]
            except (ValueError, KeyError, TypeError) as exc:
                raise ParseError(f"bad jsonl record ({exc})", lineno) from None
            if not isinstance(src, str) or not isinstance(ref, str):
                raise ParseError("source and target must be strings", lineno)
        pairs.append(CorpusPair(src, ref, len(pairs)))
    return pairs


def read_lines(path) -> list:
    return Path(path).read_text(encoding="utf-8").splitlines()
