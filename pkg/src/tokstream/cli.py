"""Command-line surface: validate bytes, audit vocabularies, replay
token streams, and run constrained-generation simulations.

Standard output carries only payload; diagnostics and traces go to
standard error, so the commands are pipe-safe. Raw ill-formed bytes
never appear in any report: they are always rendered as uppercase hex
pairs, keeping the tool's own output well-formed UTF-8.

Exit codes: 0 success / well-formed input; 1 domain failure
(ill-formed input, unsatisfiable constraint); 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import constraints, streaming, vocab as vocab_mod
from .tokens import UnknownTokenError, Vocabulary
from .utf8 import Strategy, decode, ill_formed_subparts

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2


def _hex(data: bytes) -> str:
    return data.hex(" ").upper()


def cmd_validate(args: argparse.Namespace) -> int:
    data = sys.stdin.buffer.read()
    strategy = Strategy(args.strategy)
    subparts = ill_formed_subparts(data)
    if strategy is Strategy.FAIL:
        if not subparts:
            sys.stdout.write(decode(data, Strategy.REPLACE).text)
            sys.stdout.flush()
    else:
        sys.stdout.write(decode(data, strategy).text)
        sys.stdout.flush()
    for part in subparts:
        print(f"offset {part.start}: {_hex(part.subpart)} ({part.reason})", file=sys.stderr)
    return EXIT_DOMAIN if subparts else EXIT_OK


def _load_vocab(path: str, fmt_flag: str | None) -> Vocabulary:
    if fmt_flag:
        fmt = vocab_mod.VocabFormat(fmt_flag)
    else:
        fmt = vocab_mod.sniff_format(path)
    return vocab_mod.load_vocabulary(path, fmt)


def cmd_audit(args: argparse.Namespace) -> int:
    vocabulary = _load_vocab(args.vocab_file, args.format)
    report = vocab_mod.classify_vocabulary(vocabulary)
    if args.out == "structured":
        doc = {
            "total": report.total,
            "classes": {cls.value: n for cls, n in report.class_counts.items()},
            "style": report.style.value,
            "witness": list(report.witness) if report.witness else None,
            "ill_formed_sample": [
                {"id": tid, "bytes_hex": _hex(data), "class": cls.value}
                for tid, data, cls in report.ill_formed_sample
            ],
        }
        print(json.dumps(doc, indent=2))
        return EXIT_OK
    counts = report.class_counts
    print(f"total tokens:          {report.total}")
    print(f"well-formed:           {counts[vocab_mod.TokenClass.WELL_FORMED]}")
    print(f"ill-formed extendable: {counts[vocab_mod.TokenClass.ILL_FORMED_EXTENDABLE]}")
    print(f"ill-formed never:      {counts[vocab_mod.TokenClass.ILL_FORMED_NEVER]}")
    print(f"style:                 {report.style.value}")
    if report.witness is not None:
        ids = ", ".join(str(t) for t in report.witness)
        shown = _hex(b"".join(vocabulary.bytes_of(t) for t in report.witness))
        print(f"ill-formed witness:    ids [{ids}] detokenizing to {shown}")
    else:
        print("ill-formed witness:    none (all tokens well-formed)")
    for tid, data, cls in report.ill_formed_sample:
        print(f"  id {tid}: {_hex(data)} ({cls.value})")
    return EXIT_OK


def _read_ids(source: str) -> list[int]:
    if source == "-":
        raw = sys.stdin.read()
    else:
        raw = Path(source).read_text(encoding="utf-8")
    try:
        return [int(field) for field in raw.split()]
    except ValueError as exc:
        raise SystemExit(_usage_error(f"token ids must be integers: {exc}"))


def cmd_decode(args: argparse.Namespace) -> int:
    vocabulary = _load_vocab(args.vocab, args.format)
    ids = _read_ids(args.ids_source)
    mode = streaming.Mode(args.mode)
    state, events = streaming.generate(streaming.MockLm(ids), vocabulary, mode)
    for event in events:
        sys.stdout.write(event.new_text)
        sys.stdout.flush()
        if args.trace:
            if event.token_id is not None:
                token_hex = _hex(vocabulary.bytes_of(event.token_id))
            else:
                token_hex = "-"  # end-of-stream flush, no token consumed
            print(
                f"{token_hex}\t{event.new_text}\t{event.prefix_after}\t{event.read_after}",
                file=sys.stderr,
            )
    return EXIT_OK


def cmd_constrain(args: argparse.Namespace) -> int:
    grammar = constraints.load_grammar(args.grammar)
    dfa = constraints.compile_grammar(grammar)
    vocabulary = _load_vocab(args.vocab, args.format)
    rankings = []
    for line in Path(args.script).read_text(encoding="utf-8").splitlines():
        if line.strip():
            rankings.append([int(field) for field in line.split()])
    proposer = constraints.ScriptedProposer(rankings)
    output, log = constraints.run_constrained(proposer, dfa, vocabulary)
    for entry in log:
        chosen = "stop" if entry.chosen is None else str(entry.chosen)
        print(
            f"state {entry.state_before}: mask size {entry.mask_size}, chose {chosen}",
            file=sys.stderr,
        )
    sys.stdout.buffer.write(output)
    sys.stdout.buffer.flush()
    return EXIT_OK


def _usage_error(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_USAGE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tokstream",
        description="UTF-8 safe streaming for byte-level tokenizer output",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="check bytes from stdin")
    p_validate.add_argument(
        "--strategy", choices=["fail", "drop", "replace"], default="replace"
    )
    p_validate.set_defaults(func=cmd_validate)

    p_audit = sub.add_parser("audit", help="classify a vocabulary file")
    p_audit.add_argument("vocab_file")
    p_audit.add_argument("--format", choices=["gpt2", "tokenizer", "tsv"])
    p_audit.add_argument("--out", choices=["text", "structured"], default="text")
    p_audit.set_defaults(func=cmd_audit)

    p_decode = sub.add_parser("decode", help="replay a token id stream")
    p_decode.add_argument("--vocab", required=True)
    p_decode.add_argument("--format", choices=["gpt2", "tokenizer", "tsv"])
    p_decode.add_argument("--mode", choices=["reference", "robust"], default="reference")
    p_decode.add_argument("--trace", action="store_true")
    p_decode.add_argument("ids_source", nargs="?", default="-")
    p_decode.set_defaults(func=cmd_decode)

    p_constrain = sub.add_parser("constrain", help="simulate constrained generation")
    p_constrain.add_argument("--grammar", required=True)
    p_constrain.add_argument("--vocab", required=True)
    p_constrain.add_argument("--format", choices=["gpt2", "tokenizer", "tsv"])
    p_constrain.add_argument("--script", required=True)
    p_constrain.set_defaults(func=cmd_constrain)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except constraints.UnsatisfiableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except UnknownTokenError as exc:
        return _usage_error(str(exc))
    except (vocab_mod.VocabLoadError, constraints.GrammarError) as exc:
        return _usage_error(str(exc))
    except OSError as exc:
        return _usage_error(str(exc))
    except ValueError as exc:
        return _usage_error(str(exc))


if __name__ == "__main__":
    sys.exit(main())
