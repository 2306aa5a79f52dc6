"""The 8-cell evaluation matrix: {signal, noise} training x {signal, noise}
evaluation x {teacher-forced, free-running} decoding.

One matrix run trains exactly two models (signal-trained and noise-trained);
each is evaluated in four cells. The gap summary quantifies the two questions
the matrix is built to answer: does the score drop when the input is replaced
by noise (if not, the model is not reading its input), and how much does
teacher forcing inflate the score.

Run artifacts land under <out_dir>/<run_id>/:
    config.json                     full config snapshot with resolved seeds
    model_signal.bin, model_noise.bin   checkpoints (+ .history.json sidecars)
    cells/<train>_<eval>_<mode>.jsonl   one {"reference","hypothesis"} per line
    report.md, report.csv
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .checkpoint import save_checkpoint
from .corpus import InputKind, SplitDataset, make_noise_like
from .decoding import DecodeConfig, DecodingMode, beam_search_generate, teacher_forced_generate
from .metrics import MetricsReport, score_cell
from .model import ModelConfig, TrainConfig, TrainedModel, train
from .vocab import Vocabulary, build_vocab, decode, encode

SEED_OFFSET_EVAL_NOISE = 4

METRIC_KEYS = ("bleu1", "bleu2", "bleu3", "bleu4", "rouge1_p", "rouge1_r", "rouge1_f", "wer")
CSV_HEADER = "train_input,eval_input,mode," + ",".join(METRIC_KEYS)


@dataclass(frozen=True)
class ScenarioCell:
    train_input: InputKind
    eval_input: InputKind
    mode: DecodingMode

    def key(self) -> str:
        return f"{self.train_input.value}_{self.eval_input.value}_{self.mode.value}"


MATRIX_CELLS: tuple[ScenarioCell, ...] = tuple(
    ScenarioCell(t, e, m)
    for t in (InputKind.SIGNAL, InputKind.NOISE)
    for e in (InputKind.SIGNAL, InputKind.NOISE)
    for m in (DecodingMode.TEACHER_FORCED, DecodingMode.FREE_RUNNING)
)


@dataclass
class CellResult:
    cell: ScenarioCell
    metrics: MetricsReport
    samples: list[tuple[str, str]]  # first K (reference, hypothesis) pairs
    hypotheses: list[str]
    references: list[str]


@dataclass
class GapSummary:
    # mode -> metric -> signal-minus-noise difference
    delta_eval: dict[str, dict[str, float]]
    delta_train: dict[str, dict[str, float]]
    tf_inflation: float
    parity: dict[str, bool]  # |delta| < parity_threshold for BLEU-1, per mode
    learns_from_input: bool  # free-running delta_train BLEU-1 > learning threshold


@dataclass
class HarnessConfig:
    parity_threshold: float = 3.0
    learning_threshold: float = 30.0
    sample_count: int = 3
    out_dir: str = "runs"
    run_id: str | None = None
    persist: bool = True
    min_freq: int = 1


@dataclass
class MatrixReport:
    run_id: str
    config: dict
    cells: list[CellResult]
    gap: GapSummary

    def cell(self, train_input: InputKind, eval_input: InputKind, mode: DecodingMode) -> CellResult:
        for result in self.cells:
            c = result.cell
            if (c.train_input, c.eval_input, c.mode) == (train_input, eval_input, mode):
                return result
        raise KeyError((train_input, eval_input, mode))


def run_cell(
    split: SplitDataset,
    cell: ScenarioCell,
    mc: ModelConfig,
    tc: TrainConfig,
    dc: DecodeConfig,
    trained_cache: dict[InputKind, TrainedModel],
    vocab: Vocabulary,
    sample_count: int = 3,
) -> CellResult:
    """Evaluate one matrix cell, training (or reusing) the model for its
    training-input kind. Eval-noise features use a seed distinct from the
    training-noise seed, so a noise-evaluated model never sees the noise it
    was trained on."""
    try:
        if cell.train_input not in trained_cache:
            trained_cache[cell.train_input] = train(mc, tc, split, cell.train_input, vocab)
        trained = trained_cache[cell.train_input]
        if cell.eval_input is InputKind.NOISE:
            eval_corpus = make_noise_like(split.test, tc.seed + SEED_OFFSET_EVAL_NOISE)
        else:
            eval_corpus = split.test
        refs = []
        hyps = []
        for pair in eval_corpus.pairs:
            refs.append(pair.text)
            if cell.mode is DecodingMode.TEACHER_FORCED:
                gold = np.array(encode(vocab, pair.text), dtype=np.int64)
                out = teacher_forced_generate(trained.params, pair.features, gold)
            else:
                out = beam_search_generate(trained.params, pair.features, dc)
            hyps.append(decode(vocab, list(int(t) for t in out)))
        metrics = score_cell(hyps, refs)
    except Exception as exc:
        exc.args = (f"cell {cell.key()}: {exc.args[0] if exc.args else exc}",) + exc.args[1:]
        raise
    samples = list(zip(refs, hyps))[:sample_count]
    return CellResult(cell=cell, metrics=metrics, samples=samples, hypotheses=hyps, references=refs)


def _config_snapshot(mc: ModelConfig, tc: TrainConfig, dc: DecodeConfig, hc: HarnessConfig) -> dict:
    return {
        "model": asdict(mc),
        "train": asdict(tc),
        "decode": asdict(dc),
        "harness": {
            "parity_threshold": hc.parity_threshold,
            "learning_threshold": hc.learning_threshold,
            "sample_count": hc.sample_count,
            "min_freq": hc.min_freq,
        },
        "seeds": {
            "train": tc.seed,
            "eval_noise": tc.seed + SEED_OFFSET_EVAL_NOISE,
        },
    }


def make_run_id(config: dict) -> str:
    digest = hashlib.sha256(json.dumps(config, sort_keys=True).encode("utf-8")).hexdigest()[:8]
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    return f"{stamp}-{digest}"


def _compute_gap(report_cells: list[CellResult], hc: HarnessConfig) -> GapSummary:
    def metric(train_k: InputKind, eval_k: InputKind, mode: DecodingMode, key: str) -> float:
        for result in report_cells:
            c = result.cell
            if (c.train_input, c.eval_input, c.mode) == (train_k, eval_k, mode):
                return result.metrics.as_row()[key]
        raise KeyError((train_k, eval_k, mode))

    delta_eval: dict[str, dict[str, float]] = {}
    delta_train: dict[str, dict[str, float]] = {}
    parity: dict[str, bool] = {}
    for mode in (DecodingMode.TEACHER_FORCED, DecodingMode.FREE_RUNNING):
        delta_eval[mode.value] = {
            k: metric(InputKind.SIGNAL, InputKind.SIGNAL, mode, k)
            - metric(InputKind.SIGNAL, InputKind.NOISE, mode, k)
            for k in METRIC_KEYS
        }
        delta_train[mode.value] = {
            k: metric(InputKind.SIGNAL, InputKind.SIGNAL, mode, k)
            - metric(InputKind.NOISE, InputKind.SIGNAL, mode, k)
            for k in METRIC_KEYS
        }
        parity[mode.value] = (
            abs(delta_eval[mode.value]["bleu1"]) < hc.parity_threshold
            and abs(delta_train[mode.value]["bleu1"]) < hc.parity_threshold
        )
    tf_bleu1 = metric(InputKind.SIGNAL, InputKind.SIGNAL, DecodingMode.TEACHER_FORCED, "bleu1")
    fr_bleu1 = metric(InputKind.SIGNAL, InputKind.SIGNAL, DecodingMode.FREE_RUNNING, "bleu1")
    tf_inflation = tf_bleu1 / max(fr_bleu1, 1e-9)
    learns = delta_train[DecodingMode.FREE_RUNNING.value]["bleu1"] > hc.learning_threshold
    return GapSummary(
        delta_eval=delta_eval,
        delta_train=delta_train,
        tf_inflation=tf_inflation,
        parity=parity,
        learns_from_input=learns,
    )


def run_matrix(
    split: SplitDataset,
    mc: ModelConfig,
    tc: TrainConfig,
    dc: DecodeConfig,
    hc: HarnessConfig | None = None,
) -> MatrixReport:
    """Execute all 8 cells (two trainings, each reused across four cells),
    compute the gap summary, and persist run artifacts incrementally so a
    failing cell leaves partial artifacts behind."""
    hc = hc or HarnessConfig()
    vocab = build_vocab(split.train, min_freq=hc.min_freq)
    mc = ModelConfig(**{**asdict(mc), "vocab_size": len(vocab)})
    config = _config_snapshot(mc, tc, dc, hc)
    run_id = hc.run_id or make_run_id(config)
    config["run_id"] = run_id

    run_dir: Path | None = None
    if hc.persist:
        run_dir = Path(hc.out_dir) / run_id
        (run_dir / "cells").mkdir(parents=True, exist_ok=True)
        (run_dir / "config.json").write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")

    trained_cache: dict[InputKind, TrainedModel] = {}
    cells: list[CellResult] = []
    for cell in MATRIX_CELLS:
        result = run_cell(split, cell, mc, tc, dc, trained_cache, vocab, hc.sample_count)
        cells.append(result)
        if run_dir is not None:
            with (run_dir / "cells" / f"{cell.key()}.jsonl").open("w", encoding="utf-8") as fh:
                for ref, hyp in zip(result.references, result.hypotheses):
                    fh.write(json.dumps({"reference": ref, "hypothesis": hyp}) + "\n")
    gap = _compute_gap(cells, hc)
    report = MatrixReport(run_id=run_id, config=config, cells=cells, gap=gap)
    if run_dir is not None:
        for kind, name in ((InputKind.SIGNAL, "model_signal.bin"), (InputKind.NOISE, "model_noise.bin")):
            save_checkpoint(run_dir / name, trained_cache[kind], vocab.sha256())
        (run_dir / "report.md").write_text(render_report(report, "markdown"), encoding="utf-8")
        (run_dir / "report.csv").write_text(render_report(report, "csv"), encoding="utf-8")
    return report


def mode_collapse_scan(report: MatrixReport) -> dict[str, tuple[str, float]]:
    """For each free-running cell: the modal first-two-token prefix of the
    hypotheses and the fraction sharing it. Near-1.0 fractions are the
    memorization signature (every output opens the same way)."""
    scan: dict[str, tuple[str, float]] = {}
    for result in report.cells:
        if result.cell.mode is not DecodingMode.FREE_RUNNING:
            continue
        prefixes = [" ".join(h.split()[:2]) for h in result.hypotheses]
        if not prefixes:
            scan[result.cell.key()] = ("", 0.0)
            continue
        counts: dict[str, int] = {}
        for p in prefixes:
            counts[p] = counts.get(p, 0) + 1
        modal = max(counts, key=lambda p: (counts[p], p))
        scan[result.cell.key()] = (modal, counts[modal] / len(prefixes))
    return scan


def render_report(report: MatrixReport, format: str = "markdown") -> str:
    if format == "csv":
        lines = [CSV_HEADER]
        for result in report.cells:
            c = result.cell
            row = result.metrics.as_row()
            values = ",".join(f"{row[k]:.2f}" for k in METRIC_KEYS)
            lines.append(f"{c.train_input.value},{c.eval_input.value},{c.mode.value},{values}")
        return "\n".join(lines) + "\n"
    if format != "markdown":
        raise ValueError(f"unknown report format {format!r}")

    lines = [f"# Evaluation matrix — run {report.run_id}", ""]
    lines.append("| Train | Eval | Mode | BLEU-1 | BLEU-2 | BLEU-3 | BLEU-4 | ROUGE-1 P | ROUGE-1 R | ROUGE-1 F | WER |")
    lines.append("|---|---|---|---|---|---|---|---|---|---|---|")
    for result in report.cells:
        c = result.cell
        row = result.metrics.as_row()
        cells = " | ".join(f"{row[k]:.2f}" for k in METRIC_KEYS)
        lines.append(f"| {c.train_input.value} | {c.eval_input.value} | {c.mode.value} | {cells} |")
    lines.append("")

    lines.append("## Signal-vs-noise gap")
    lines.append("")
    for mode in (DecodingMode.TEACHER_FORCED, DecodingMode.FREE_RUNNING):
        de = report.gap.delta_eval[mode.value]["bleu1"]
        dt = report.gap.delta_train[mode.value]["bleu1"]
        par = "yes" if report.gap.parity[mode.value] else "no"
        lines.append(
            f"- {mode.value}: delta_eval(BLEU-1) = {de:+.2f}, delta_train(BLEU-1) = {dt:+.2f}, signal≈noise parity: {par}"
        )
    lines.append(f"- teacher-forcing inflation (BLEU-1, signal/signal): {report.gap.tf_inflation:.2f}x")
    verdict = "yes" if report.gap.learns_from_input else "no"
    lines.append(f"- model appears to learn from input: {verdict}")
    lines.append("")

    scan = mode_collapse_scan(report)
    if scan:
        lines.append("## Mode collapse scan (free-running cells)")
        lines.append("")
        lines.append("| Cell | Modal 2-token prefix | Frequency |")
        lines.append("|---|---|---|")
        for key, (prefix, freq) in scan.items():
            lines.append(f"| {key} | {prefix} | {freq:.2f} |")
        lines.append("")

    n_samples = max((len(r.samples) for r in report.cells), default=0)
    if n_samples:
        lines.append("## Decoding samples")
        lines.append("")
        for i in range(n_samples):
            ref = next((r.samples[i][0] for r in report.cells if len(r.samples) > i), "")
            lines.append(f"### Sentence {i + 1}")
            lines.append("")
            lines.append(f"- ground truth: {ref}")
            for result in report.cells:
                if len(result.samples) > i:
                    c = result.cell
                    lines.append(
                        f"- {c.train_input.value}/{c.eval_input.value} {c.mode.value}: {result.samples[i][1]}"
                    )
            lines.append("")
    return "\n".join(lines) + "\n"
