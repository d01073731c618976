"""Command-line interface: ``charfix {correct,evaluate,stats,tune,fit-lm}``.

Exit codes: 0 success, 1 usage error, 2 backend failure, 3 data error.
The decoder config file may also be given through ``CHARFIX_CONFIG``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

from sklearn.model_selection import ParameterGrid

from .decoder import DecoderConfig
from .estimator import Corrector
from .evaluation import (
    char_metrics,
    corpus_stats,
    format_stats,
    load_corpus,
    normalize,
    read_lines,
)
from .exceptions import BackendUnavailable, CharfixError, LineCountMismatch
from .lm import NgramLM, open_backend

logger = logging.getLogger("charfix")

EXIT_OK, EXIT_USAGE, EXIT_BACKEND, EXIT_DATA = 0, 1, 2, 3
CONFIG_ENV = "CHARFIX_CONFIG"
TUNABLE = ("alpha", "delete_weight", "gamma", "insert_weight", "prompt_temperature")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_decoder_flags(p):
    g = p.add_argument_group("decoder")
    g.add_argument("--lm", required=True, help="ngram:<path> or http:<url>")
    g.add_argument("--prompt-lm", help="separate backend for the prompt channel")
    g.add_argument("--config", help=f"decoder config JSON (default: ${CONFIG_ENV})")
    g.add_argument("--mode", choices=("c2ec", "tfpf"))
    g.add_argument("--beam-size", type=int)
    g.add_argument("--alpha", type=float)
    g.add_argument("--gamma", type=float)
    g.add_argument("--prompt-temperature", type=float)
    g.add_argument("--max-extra-deletes", type=int)
    g.add_argument("--lm-topk", type=int)
    g.add_argument("--entropy-source", choices=("pure", "prompt"))
    g.add_argument("--incremental", choices=("substring", "exact"))
    g.add_argument("--normalize-entropy", action="store_true", default=None)
    g.add_argument("--temperature-both", action="store_true", default=None)
    g.add_argument("--no-length-reward", dest="enable_length_reward", action="store_false", default=None)
    g.add_argument("--no-faithfulness-reward", dest="enable_faithfulness", action="store_false", default=None)
    g.add_argument("--template", default="minimal", help="minimal, detailed, or a template file")
    g.add_argument("--weights", help="edit-weight JSON file")
    g.add_argument("--tables", help="confusion-table JSON file")
    g.add_argument("--workers", type=int, default=os.cpu_count() or 1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="charfix", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("correct", help="correct one sentence per line")
    p.add_argument("input", nargs="?", help="input file (default: stdin)")
    p.add_argument("-o", "--output", help="output file (default: stdout)")
    p.add_argument("--strict", action="store_true", help="abort on the first failing line")
    p.add_argument("--manifest", help="write a run manifest JSON here")
    _add_decoder_flags(p)

    p = sub.add_parser("evaluate", help="score predictions against a corpus")
    p.add_argument("corpus")
    p.add_argument("predictions")
    p.add_argument("--format", choices=("tsv", "jsonl"))
    p.add_argument("--json", action="store_true")
    p.add_argument("--exclude-length-changed", action="store_true",
                   help="drop pairs whose source and reference lengths differ")

    p = sub.add_parser("stats", help="error-type statistics of a corpus")
    p.add_argument("corpus")
    p.add_argument("--format", choices=("tsv", "jsonl"))
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("tune", help="grid-search decoder settings on a dev corpus")
    p.add_argument("corpus")
    p.add_argument("--grid", required=True,
                   help='JSON file or inline spec such as "gamma=0.5,1;alpha=2.5"')
    p.add_argument("--format", choices=("tsv", "jsonl"))
    p.add_argument("--json", action="store_true")
    _add_decoder_flags(p)

    p = sub.add_parser("fit-lm", help="train a character n-gram model")
    p.add_argument("texts", help="one sentence per line")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--smoothing", type=float, default=0.01)
    return parser


# --- helpers -----------------------------------------------------------------


def _decoder_config(args) -> DecoderConfig:
    path = args.config or os.environ.get(CONFIG_ENV)
    base = DecoderConfig.load(path).to_dict() if path else DecoderConfig().to_dict()
    for name in base:
        value = getattr(args, name, None)
        if value is not None:
            base[name] = value
    return DecoderConfig.from_dict(base)


def _corrector(args, cfg: DecoderConfig, **overrides) -> Corrector:
    lm = open_backend(args.lm)
    prompt_lm = open_backend(args.prompt_lm) if args.prompt_lm else None
    params = dict(cfg.to_dict(), weights=args.weights, tables=args.tables, template=args.template)
    params.update(overrides)
    return Corrector(lm, prompt_lm, **params).fit()


def _probe(corrector: Corrector) -> None:
    for lm in {id(b): b for b in (corrector.backends_.pure, corrector.backends_.prompt)}.values():
        lm.tokenize("ok")


def _digest(path) -> str:
    if not path or not Path(path).is_file():
        return None
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _read_input(path) -> list:
    if path is None or path == "-":
        return sys.stdin.read().splitlines()
    return read_lines(path)


def _write_output(path, lines) -> None:
    text = "".join(line + "\n" for line in lines)
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(path).write_text(text, encoding="utf-8")


def parse_grid(spec: str) -> dict:
    """Parse a grid from a JSON file/object or ``name=v1,v2;name2=v3``."""
    if Path(spec).is_file():
        grid = json.loads(Path(spec).read_text(encoding="utf-8"))
    elif spec.lstrip().startswith("{"):
        grid = json.loads(spec)
    else:
        grid = {}
        for part in filter(None, (s.strip() for s in spec.split(";"))):
            name, _, values = part.partition("=")
            if not values:
                raise UsageError(f"grid entry {part!r} has no values")
            grid[name.strip()] = [float(v) for v in values.split(",")]
    unknown = set(grid) - set(TUNABLE)
    if unknown:
        raise UsageError(f"untunable grid parameters {sorted(unknown)}; choose from {list(TUNABLE)}")
    for name, values in grid.items():
        if not isinstance(values, list) or not values:
            raise UsageError(f"grid values for {name} must be a non-empty list")
    return {name: sorted(float(v) for v in values) for name, values in grid.items()}


def _triples(pairs, predictions, exclude_length_changed=False):
    out = []
    for pair, pred in zip(pairs, predictions):
        src, ref = normalize(pair.source), normalize(pair.reference)
        if exclude_length_changed and len(src) != len(ref):
            continue
        out.append((src, ref, normalize(pred)))
    return out


# --- commands ----------------------------------------------------------------


def cmd_correct(args) -> int:
    cfg = _decoder_config(args)
    corrector = _corrector(args, cfg, n_jobs=max(1, args.workers),
                           on_error="raise" if args.strict else "keep")
    _probe(corrector)
    lines = _read_input(args.input)
    start = time.perf_counter()
    out = corrector.transform(lines)
    elapsed_ms = (time.perf_counter() - start) * 1000
    _write_output(args.output, out)
    if args.manifest:
        n_chars = sum(len(s) for s in lines)
        manifest = {
            "config": cfg.to_dict(),
            "weights": {k.value: v for k, v in corrector.weights_.weights.items()},
            "files": {
                "weights": _digest(args.weights),
                "tables": _digest(args.tables),
                "template": _digest(args.template),
                "lm": _digest(args.lm.partition(":")[2]) if args.lm.startswith("ngram:") else None,
                "template_sha256": hashlib.sha256(corrector.template_.encode("utf-8")).hexdigest(),
            },
            "backend": corrector.backends_.pure.describe(),
            "prompt_backend": corrector.backends_.prompt.describe(),
            "timing": {
                "sentences": len(lines),
                "chars": n_chars,
                "total_ms": elapsed_ms,
                "ms_per_sentence": elapsed_ms / len(lines) if lines else 0.0,
                "ms_per_char": elapsed_ms / n_chars if n_chars else 0.0,
            },
        }
        Path(args.manifest).write_text(json.dumps(manifest, ensure_ascii=False, indent=2), encoding="utf-8")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    pairs = load_corpus(args.corpus, args.format)
    preds = read_lines(args.predictions)
    if len(preds) != len(pairs):
        raise LineCountMismatch(f"{len(pairs)} corpus pairs but {len(preds)} prediction lines")
    report = char_metrics(_triples(pairs, preds, args.exclude_length_changed))
    print(report.to_json() if args.json else report.format_table())
    return EXIT_OK


def cmd_stats(args) -> int:
    pairs = load_corpus(args.corpus, args.format)
    stats = corpus_stats(p.normalized for p in pairs)
    print(json.dumps(stats, indent=2, sort_keys=True) if args.json else format_stats(stats))
    return EXIT_OK


def cmd_tune(args) -> int:
    grid = parse_grid(args.grid)
    cfg = _decoder_config(args)
    pairs = load_corpus(args.corpus, args.format)
    sources = [p.source for p in pairs]
    corrector = _corrector(args, cfg, n_jobs=max(1, args.workers))
    _probe(corrector)
    rows = []
    # ParameterGrid walks names in sorted order, values as given (sorted above)
    for point in ParameterGrid(grid):
        corrector.set_params(**point).fit()
        report = char_metrics(_triples(pairs, corrector.transform(sources)))
        rows.append({"params": point, "precision": report.char_precision,
                     "recall": report.char_recall, "f1": report.char_f1})
    best = max(rows, key=lambda r: r["f1"]) if rows else None  # max keeps the first of equals
    if args.json:
        print(json.dumps({"best": best, "points": rows}, indent=2, sort_keys=True))
    else:
        names = sorted(grid)
        print("".join(f"{n:>20}" for n in names) + f"{'P':>8}{'R':>8}{'F1':>8}")
        for r in rows:
            print("".join(f"{r['params'][n]:>20g}" for n in names)
                  + "".join(f"{r[k] * 100:>8.2f}" for k in ("precision", "recall", "f1")))
        if best:
            print("best: " + ", ".join(f"{n}={best['params'][n]:g}" for n in names) + f"  F1={best['f1'] * 100:.2f}")
    return EXIT_OK


def cmd_fit_lm(args) -> int:
    texts = [line for line in read_lines(args.texts) if line]
    NgramLM(order=args.order, smoothing=args.smoothing).fit(texts).save(args.output)
    return EXIT_OK


COMMANDS = {
    "correct": cmd_correct,
    "evaluate": cmd_evaluate,
    "stats": cmd_stats,
    "tune": cmd_tune,
    "fit-lm": cmd_fit_lm,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"charfix: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BackendUnavailable as exc:
        print(f"charfix: backend failure: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (CharfixError, OSError, ValueError) as exc:
        print(f"charfix: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
