"""zuco-convert command line: MATLAB v7.3 sentence files -> JSONL corpus.

    zuco-convert --task SR1 --in subj1.mat subj2.mat --out corpus_sr1.jsonl \
                 --log manifest.json

Exit codes: 0 success, 1 unreadable input or bad arguments.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .convert import VALID_TASKS, convert
from .reader import ZucoFormatError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zuco-convert", description=__doc__)
    parser.add_argument("--task", required=True, choices=VALID_TASKS, help="reading-task label for every record")
    parser.add_argument("--in", dest="inputs", nargs="+", required=True, help="MATLAB v7.3 input files")
    parser.add_argument("--out", required=True, help="output JSONL corpus path")
    parser.add_argument("--log", default=None, help="manifest log path (default: <out>.manifest.json)")
    parser.add_argument("--measure", default="GD", help="eye-tracking window prefix of the band fields (default GD)")
    parser.add_argument("--subject", default=None, help="optional subject label recorded in the manifest")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    for path in args.inputs:
        if not Path(path).exists():
            print(f"error: input file not found: {path}", file=sys.stderr)
            return 1
    try:
        manifest = convert(
            inputs=args.inputs,
            task=args.task,
            output_path=args.out,
            log_path=args.log,
            measure=args.measure,
            subject=args.subject,
        )
    except (ZucoFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{args.task}: kept {manifest.kept}, dropped {manifest.dropped} -> {args.out}")
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
