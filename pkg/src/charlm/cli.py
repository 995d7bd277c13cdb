"""``charlm`` command line: extract, stats, train, generate.

Exit status is 0 on success, 1 for usage errors and 2 for runtime errors.
Every failure prints a single ``error: ...`` line to stderr.
"""
from __future__ import annotations

import argparse
import sys
from collections import Counter
from pathlib import Path

from . import corpus
from .generate import GenerationRequest, generate
from .text import build_vocabulary
from .train import ConfigError, TrainConfig, train

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="charlm", description="Character-level stacked-LSTM language model.")
    sub = parser.add_subparsers(dest="command", metavar="{extract,stats,train,generate}",
                                parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("extract", help="build CSV and TXT datasets from an HTML fixture tree")
    p.add_argument("fixture_dir", help="directory laid out as genre/collection/item/page-NN.html")
    p.add_argument("--rules", help="cleaning rules file (pattern<TAB>replacement per line); "
                                   "default: built-in rules")
    p.add_argument("--out-csv", required=True, help="destination CSV path")
    p.add_argument("--out-txt", required=True, help="destination TXT path")
    p.add_argument("--separator", default="\n", help="text placed between items in the TXT "
                                                     "(default: one newline)")

    p = sub.add_parser("stats", help="character counts and the first vocabulary entries")
    p.add_argument("corpus_txt", help="UTF-8 corpus text file")
    p.add_argument("--top", type=int, default=20, help="vocabulary entries to list (default 20)")

    p = sub.add_parser("train", help="train a model; options override the config file")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--resume", help="checkpoint to continue from")
    p.add_argument("--quiet", action="store_true", help="do not echo the epoch log to stdout")
    for name, typ in TrainConfig.field_types().items():
        p.add_argument("--" + name.replace("_", "-"), dest=name, metavar=typ.__name__.upper(),
                       help=f"override config key {name}")

    p = sub.add_parser("generate", help="sample text from a checkpoint")
    p.add_argument("--checkpoint", required=True, help="checkpoint file")
    p.add_argument("--seed-text", required=True, help="text to warm the model up with")
    p.add_argument("--num-chars", type=_positive_int, required=True, help="characters to generate")
    p.add_argument("--temperature", type=float, default=1.0, help="sampling temperature > 0 "
                                                                  "(default 1.0)")
    p.add_argument("--rng-seed", type=int, default=0, help="sampling seed (default 0)")
    p.add_argument("--greedy", action="store_true", help="always take the most likely character")
    return parser


def cmd_extract(args) -> int:
    rules = corpus.CleaningRuleSet.from_file(args.rules) if args.rules else None
    items = corpus.extract_tree(args.fixture_dir, rules)
    if not items:
        raise ValueError("empty corpus")
    corpus.emit_csv(items, args.out_csv)
    corpus.emit_txt(items, args.out_txt, args.separator)
    counts = Counter(item.genre.value for item in items)
    for genre in corpus.Genre:
        if counts[genre.value]:
            print(f"{genre.value}: {counts[genre.value]}")
    print(f"total: {len(items)}")
    return EXIT_OK


def cmd_stats(args) -> int:
    text = Path(args.corpus_txt).read_text(encoding="utf-8")
    if not text:
        raise ValueError(f"{args.corpus_txt} is empty")
    vocab = build_vocabulary(text)
    print(f"total_chars: {len(text)}")
    print(f"unique_chars: {len(vocab)}")
    for i, ch in enumerate(vocab.chars[: args.top]):
        print(f"  {ch!r:>6} : {i:3d},")
    return EXIT_OK


def cmd_train(args) -> int:
    skip = {"config", "resume", "quiet", "command"}
    overrides = {k: v for k, v in vars(args).items() if k not in skip and v is not None}
    config = (TrainConfig.from_file(args.config, overrides) if args.config
              else TrainConfig.from_mapping(overrides))
    report, _ = train(config, resume=args.resume, echo=not args.quiet)
    print(f"final_loss={report.final_loss:.6f} steps={report.final_step} "
          f"total_elapsed_s={report.total_elapsed_s:.3f}")
    return EXIT_OK


def cmd_generate(args) -> int:
    request = GenerationRequest(args.seed_text, args.num_chars, args.temperature,
                                args.rng_seed, args.greedy)
    sys.stdout.write(generate(args.checkpoint, request) + "\n")
    return EXIT_OK


COMMANDS = {"extract": cmd_extract, "stats": cmd_stats, "train": cmd_train,
            "generate": cmd_generate}


def main(argv=None) -> int:
    for stream in (sys.stdout, sys.stderr):
        if hasattr(stream, "reconfigure"):
            stream.reconfigure(encoding="utf-8")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
