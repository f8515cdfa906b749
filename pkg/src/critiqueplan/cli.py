"""Command line entry point.

Subcommands:
  plan    run one case file and print its messages
  corpus  run a directory of case files, or a generated batch, with a table
  gen     emit a random case file for fixtures or stress runs
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .focus import load_state, save_state
from .generator import generate_bundle
from .merge import MergeWeights
from .model import bundle_to_dict, load_bundle
from .pipeline import (
    ValidationFailure,
    corpus_table,
    dump_plans,
    run_case,
    run_corpus_files,
    run_corpus_generated,
)


def _add_weight_args(parser: argparse.ArgumentParser) -> None:
    defaults = MergeWeights()
    parser.add_argument("--w1", type=float, default=defaults.w1, help="goal spread weight")
    parser.add_argument("--w2", type=float, default=defaults.w2, help="action dedup weight")
    parser.add_argument("--w3", type=float, default=defaults.w3, help="goal repetition weight")
    parser.add_argument("--w4", type=float, default=defaults.w4, help="merge count weight")


def _weights(args: argparse.Namespace) -> MergeWeights:
    return MergeWeights(w1=args.w1, w2=args.w2, w3=args.w3, w4=args.w4)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="critiqueplan",
        description="Plan integrated advisory messages from individual critiques.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", help="plan one case file")
    plan.add_argument("case", type=Path, help="case JSON file")
    plan.add_argument("--state", type=Path, help="discourse state JSON, read and rewritten")
    plan.add_argument("--dump-plans", action="store_true", help="print plan trees")
    plan.add_argument("--explain", action="store_true", help="print fired rules and scores")
    plan.add_argument("--metrics", action="store_true", help="print a metrics trailer")
    plan.add_argument("--json-metrics", action="store_true", help="print metrics as JSON")
    _add_weight_args(plan)

    corpus = sub.add_parser("corpus", help="run many case files")
    corpus.add_argument("directory", type=Path, nargs="?", help="directory of case JSON files")
    corpus.add_argument("--generate", type=int, metavar="N", help="run N generated cases instead")
    corpus.add_argument("--seed", type=int, default=0)
    corpus.add_argument("--overlap", type=float, default=0.5)
    _add_weight_args(corpus)

    gen = sub.add_parser("gen", help="emit a random case file")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--overlap", type=float, default=0.5)
    gen.add_argument("--critiques", type=int, help="fixed critique count")
    gen.add_argument("--out", type=Path, help="output path (stdout when omitted)")
    return parser


def _cmd_plan(args: argparse.Namespace) -> int:
    try:
        bundle = load_bundle(args.case)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    prior = None
    if args.state and args.state.exists():
        prior = load_state(args.state)

    try:
        result = run_case(bundle, weights=_weights(args), prior_state=prior)
    except ValidationFailure as exc:
        for violation in exc.violations:
            print(f"error: {violation.location}: {violation.message}", file=sys.stderr)
        return 2

    print(result.output_text)
    if args.dump_plans:
        print()
        print(dump_plans(result))
    if args.explain:
        print()
        for line in result.explain:
            print(line)
    if args.json_metrics:
        print()
        print(json.dumps(result.report.to_dict(), indent=2))
    elif args.metrics:
        r = result.report
        print()
        print(f"messages     {r.message_count_before} -> {r.message_count_after}")
        print(f"noun phrases {r.np_count_before} -> {r.np_count_after}")
        print(f"focus shifts {r.focus_shifts_before} -> {r.focus_shifts_after}")
        print(f"rules fired  {', '.join(r.rules_fired) or '-'}")
    if args.state:
        save_state(result.state, args.state)
    return 0


def _cmd_corpus(args: argparse.Namespace) -> int:
    if args.generate is not None:
        entries = run_corpus_generated(
            args.generate, seed=args.seed, overlap=args.overlap, weights=_weights(args)
        )
    else:
        if args.directory is None:
            print("error: give a directory or --generate N", file=sys.stderr)
            return 2
        paths = sorted(args.directory.glob("*.json"))
        if not paths:
            print(f"error: no case files in {args.directory}", file=sys.stderr)
            return 2
        entries = run_corpus_files(paths, weights=_weights(args))
        for entry in entries:
            if entry.error is not None:
                print(f"warning: {entry.name} skipped: {entry.error}", file=sys.stderr)
    print(corpus_table(entries))
    if all(entry.report is None for entry in entries):
        return 1
    return 0


def _cmd_gen(args: argparse.Namespace) -> int:
    bundle = generate_bundle(args.seed, overlap=args.overlap, n_critiques=args.critiques)
    text = json.dumps(bundle_to_dict(bundle), indent=2, ensure_ascii=False) + "\n"
    if args.out:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "plan":
        return _cmd_plan(args)
    if args.command == "corpus":
        return _cmd_corpus(args)
    return _cmd_gen(args)


if __name__ == "__main__":
    raise SystemExit(main())
