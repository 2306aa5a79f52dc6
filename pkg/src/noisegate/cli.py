"""Command-line interface.

Subcommands:
    ingest   validate, NaN-filter, and merge corpus files into one canonical file
    matrix   run the full 8-cell evaluation matrix from a TOML config
    score    score a hypothesis file against a reference file
    report   re-render report.md/report.csv from a run directory

Configuration lives in a TOML file (see `desk.toml` in the repository root
for the documented schema); command-line flags override file values, and the
NOISEGATE_RUNS_DIR environment variable overrides the output root. Exit
codes: 0 success, 1 usage/config/data error, 2 training divergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .corpus import (
    Corpus,
    CorpusError,
    filter_invalid,
    gen_synthetic_control,
    load_corpus,
    merge_tasks,
    save_corpus,
    split_corpus_by_task,
)
from .decoding import DecodeConfig
from .harness import (
    CSV_HEADER,
    HarnessConfig,
    MATRIX_CELLS,
    MatrixReport,
    CellResult,
    _compute_gap,
    render_report,
    run_matrix,
    SEED_OFFSET_EVAL_NOISE,
)
from .metrics import score_cell
from .model import DivergenceError, ModelConfig, TrainConfig

# The master seed drives three derived seeds; offsets keep the streams apart.
SEED_OFFSET_CONTROL = 0
SEED_OFFSET_SPLIT = 10
SEED_OFFSET_TRAIN = 20


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    corpus_paths: list[str] = field(default_factory=list)
    control: str | None = None  # "informative" | "uninformative"
    tasks: list[str] | None = None
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0
    n_sentences: int = 400
    control_vocab_size: int = 24
    control_n_distinct: int | None = None
    feature_dim: int = 840
    d_model: int = 64
    n_layers_enc: int = 2
    n_heads: int = 4
    n_layers_dec: int = 2
    d_ff: int | None = None
    max_len: int = 64
    batch_size: int = 4
    learning_rate: float = 0.03
    epochs: int = 30
    beam_size: int = 5
    repetition_penalty: float = 5.0
    no_repeat_ngram: int = 2
    decode_max_len: int = 24
    min_freq: int = 1
    parity_threshold: float = 3.0
    learning_threshold: float = 30.0
    sample_count: int = 3
    out_dir: str = "runs"

    def model_config(self, vocab_size: int) -> ModelConfig:
        return ModelConfig(
            vocab_size=vocab_size,
            feature_dim=self.feature_dim,
            d_model=self.d_model,
            n_layers_enc=self.n_layers_enc,
            n_heads=self.n_heads,
            n_layers_dec=self.n_layers_dec,
            d_ff=self.d_ff,
            max_len=self.max_len,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            seed=self.seed + SEED_OFFSET_TRAIN,
        )

    def decode_config(self) -> DecodeConfig:
        return DecodeConfig(
            beam_size=self.beam_size,
            repetition_penalty=self.repetition_penalty,
            no_repeat_ngram=self.no_repeat_ngram,
            max_len=self.decode_max_len,
        )


_SECTION_KEYS = {
    "data": {"corpus": "corpus_paths", "control": "control", "tasks": "tasks", "ratios": "ratios", "seed": "seed", "min_freq": "min_freq"},
    "control": {"n_sentences": "n_sentences", "vocab_size": "control_vocab_size", "n_distinct": "control_n_distinct"},
    "model": {
        "feature_dim": "feature_dim",
        "d_model": "d_model",
        "n_layers_enc": "n_layers_enc",
        "n_heads": "n_heads",
        "n_layers_dec": "n_layers_dec",
        "d_ff": "d_ff",
        "max_len": "max_len",
    },
    "train": {"batch_size": "batch_size", "learning_rate": "learning_rate", "epochs": "epochs"},
    "decode": {
        "beam_size": "beam_size",
        "repetition_penalty": "repetition_penalty",
        "no_repeat_ngram": "no_repeat_ngram",
        "max_len": "decode_max_len",
    },
    "harness": {
        "parity_threshold": "parity_threshold",
        "learning_threshold": "learning_threshold",
        "sample_count": "sample_count",
        "out_dir": "out_dir",
    },
}


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    rc = RunConfig()
    for section, keys in _SECTION_KEYS.items():
        table = raw.get(section, {})
        if not isinstance(table, dict):
            raise ConfigError(f"{path}: [{section}] must be a table")
        for key, value in table.items():
            if key not in keys:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            setattr(rc, keys[key], value)
    if rc.ratios is not None:
        rc.ratios = tuple(rc.ratios)  # type: ignore[assignment]
    unknown = set(raw) - set(_SECTION_KEYS)
    if unknown:
        raise ConfigError(f"{path}: unknown sections {sorted(unknown)}")
    return rc


def _resolve_corpus(rc: RunConfig) -> Corpus:
    if rc.control is not None:
        return gen_synthetic_control(
            kind=rc.control,
            n_sentences=rc.n_sentences,
            vocab_size=rc.control_vocab_size,
            feature_dim=rc.feature_dim,
            seed=rc.seed + SEED_OFFSET_CONTROL,
            n_distinct=rc.control_n_distinct,
        )
    if not rc.corpus_paths:
        raise ConfigError("no corpus configured: set data.corpus or use --control")
    corpora = []
    for p in rc.corpus_paths:
        corpus = filter_invalid(load_corpus(p))
        if rc.tasks:
            corpus = Corpus(
                [pair for pair in corpus.pairs if pair.source_task.value in rc.tasks],
                corpus.feature_dim,
            )
        corpora.append(corpus)
    merged = merge_tasks(corpora)
    if not merged.pairs:
        raise ConfigError("corpus is empty after filtering")
    return merged


def cmd_ingest(args: argparse.Namespace) -> int:
    corpora = []
    kept: dict[str, int] = {}
    dropped: dict[str, int] = {}
    for path in args.inputs:
        if not Path(path).exists():
            print(f"error: input file not found: {path}", file=sys.stderr)
            return 1
        try:
            corpus = load_corpus(path)
        except CorpusError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        filtered = filter_invalid(corpus)
        for pair in corpus.pairs:
            task = pair.source_task.value
            dropped[task] = dropped.get(task, 0) + 1
            kept.setdefault(task, 0)
        for pair in filtered.pairs:
            task = pair.source_task.value
            kept[task] += 1
            dropped[task] -= 1
        corpora.append(filtered)
    try:
        merged = merge_tasks(corpora)
        save_corpus(merged, args.output)
    except CorpusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for task in sorted(kept):
        print(f"{task}: kept {kept[task]}, dropped {dropped[task]}")
    print(f"wrote {len(merged.pairs)} pairs to {args.output}")
    return 0


def _apply_overrides(rc: RunConfig, args: argparse.Namespace) -> None:
    if args.control is not None:
        rc.control = args.control
    if args.corpus:
        rc.corpus_paths = args.corpus
        rc.control = args.control  # an explicit corpus clears a file-configured control
    if args.seed is not None:
        rc.seed = args.seed
    if args.epochs is not None:
        rc.epochs = args.epochs
    if args.out_dir is not None:
        rc.out_dir = args.out_dir
    env_dir = os.environ.get("NOISEGATE_RUNS_DIR")
    if env_dir and args.out_dir is None:
        rc.out_dir = env_dir


def cmd_matrix(args: argparse.Namespace) -> int:
    try:
        rc = load_run_config(args.config) if args.config else RunConfig()
        _apply_overrides(rc, args)
        corpus = _resolve_corpus(rc)
    except (ConfigError, CorpusError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    tc = rc.train_config()
    if args.dry_run:
        print(f"planned cells ({len(MATRIX_CELLS)}):")
        for cell in MATRIX_CELLS:
            print(f"  {cell.key()}")
        print("resolved seeds:")
        print(f"  split: {rc.seed + SEED_OFFSET_SPLIT}")
        print(f"  train: {tc.seed}")
        print(f"  eval_noise: {tc.seed + SEED_OFFSET_EVAL_NOISE}")
        return 0
    try:
        split = split_corpus_by_task(corpus, rc.ratios, rc.seed + SEED_OFFSET_SPLIT)
        hc = HarnessConfig(
            parity_threshold=rc.parity_threshold,
            learning_threshold=rc.learning_threshold,
            sample_count=rc.sample_count,
            out_dir=rc.out_dir,
            run_id=args.run_id,
            min_freq=rc.min_freq,
        )
        report = run_matrix(split, rc.model_config(vocab_size=4), tc, rc.decode_config(), hc)
    except DivergenceError as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return 2
    except (CorpusError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(render_report(report, "markdown"), end="")
    print(f"[artifacts under {Path(rc.out_dir) / report.run_id}]", file=sys.stderr)
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    try:
        hyps = Path(args.hypotheses).read_text(encoding="utf-8").splitlines()
        refs = Path(args.references).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if len(hyps) != len(refs):
        print(f"error: {len(hyps)} hypotheses vs {len(refs)} references", file=sys.stderr)
        return 1
    try:
        report = score_cell(hyps, refs)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    row = report.as_row()
    keys = CSV_HEADER.split(",")[3:]
    print(",".join(keys))
    print(",".join(f"{row[k]:.2f}" for k in keys))
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    run_dir = Path(args.run_dir)
    config_path = run_dir / "config.json"
    if not config_path.exists():
        print(f"error: {config_path} not found", file=sys.stderr)
        return 1
    config = json.loads(config_path.read_text(encoding="utf-8"))
    hc = HarnessConfig(**{k: config["harness"][k] for k in ("parity_threshold", "learning_threshold", "sample_count", "min_freq")})
    cells = []
    for cell in MATRIX_CELLS:
        cell_path = run_dir / "cells" / f"{cell.key()}.jsonl"
        if not cell_path.exists():
            print(f"error: missing cell file {cell_path}", file=sys.stderr)
            return 1
        refs = []
        hyps = []
        with cell_path.open(encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    record = json.loads(line)
                    refs.append(record["reference"])
                    hyps.append(record["hypothesis"])
        metrics = score_cell(hyps, refs)
        samples = list(zip(refs, hyps))[: hc.sample_count]
        cells.append(CellResult(cell=cell, metrics=metrics, samples=samples, hypotheses=hyps, references=refs))
    gap = _compute_gap(cells, hc)
    report = MatrixReport(run_id=config.get("run_id", run_dir.name), config=config, cells=cells, gap=gap)
    (run_dir / "report.md").write_text(render_report(report, "markdown"), encoding="utf-8")
    (run_dir / "report.csv").write_text(render_report(report, "csv"), encoding="utf-8")
    print(render_report(report, args.format), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noisegate", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="validate, filter, and merge corpus files")
    p_ingest.add_argument("inputs", nargs="+", help="input corpus JSONL files")
    p_ingest.add_argument("-o", "--output", required=True, help="canonical output corpus path")
    p_ingest.set_defaults(func=cmd_ingest)

    p_matrix = sub.add_parser("matrix", help="run the 8-cell evaluation matrix")
    p_matrix.add_argument("--config", help="TOML run configuration")
    p_matrix.add_argument("--corpus", nargs="*", help="corpus files (overrides config)")
    p_matrix.add_argument("--control", choices=["informative", "uninformative"], help="use a synthetic control corpus")
    p_matrix.add_argument("--seed", type=int, help="master seed override")
    p_matrix.add_argument("--epochs", type=int, help="training epochs override")
    p_matrix.add_argument("--run-id", help="fixed run id (for reproducible artifact paths)")
    p_matrix.add_argument("--out-dir", help="output root (overrides NOISEGATE_RUNS_DIR and config)")
    p_matrix.add_argument("--dry-run", action="store_true", help="print planned cells and seeds, run nothing")
    p_matrix.set_defaults(func=cmd_matrix)

    p_score = sub.add_parser("score", help="score hypotheses against references")
    p_score.add_argument("hypotheses", help="text file, one hypothesis per line")
    p_score.add_argument("references", help="text file, one reference per line")
    p_score.set_defaults(func=cmd_score)

    p_report = sub.add_parser("report", help="re-render reports from a run directory")
    p_report.add_argument("run_dir", help="runs/<run_id> directory")
    p_report.add_argument("--format", choices=["markdown", "csv"], default="markdown")
    p_report.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
