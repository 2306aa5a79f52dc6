"""Corpus-level BLEU-1..4, ROUGE-1 P/R/F, and WER, from first principles.

Conventions (fixed across the harness so runs are comparable):
  * BLEU is corpus-pooled: modified n-gram precisions use clipped counts
    summed over all pairs, combined by a uniform-weight geometric mean and a
    pooled brevity penalty. No smoothing — a zero pooled precision zeroes
    the score.
  * ROUGE-1 is sentence-averaged: per-pair precision/recall/F1 from clipped
    unigram overlap, then an unweighted mean over pairs.
  * WER is pooled: total edit distance over total reference length. It can
    exceed 100%.
All scores are percentages. Scoring tokenization is lowercased whitespace
splitting, applied by :func:`score_cell`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass
class ScoredPair:
    hypothesis: list[str]
    reference: list[str]

    def __post_init__(self) -> None:
        if not self.reference:
            raise ValueError("reference must be non-empty")


@dataclass
class MetricsReport:
    bleu: tuple[float, float, float, float]
    rouge1_p: float
    rouge1_r: float
    rouge1_f: float
    wer: float

    def as_row(self) -> dict[str, float]:
        return {
            "bleu1": self.bleu[0],
            "bleu2": self.bleu[1],
            "bleu3": self.bleu[2],
            "bleu4": self.bleu[3],
            "rouge1_p": self.rouge1_p,
            "rouge1_r": self.rouge1_r,
            "rouge1_f": self.rouge1_f,
            "wer": self.wer,
        }


def _ngram_counts(tokens: list[str], n: int) -> dict[tuple[str, ...], int]:
    counts: dict[tuple[str, ...], int] = {}
    for i in range(len(tokens) - n + 1):
        gram = tuple(tokens[i : i + n])
        counts[gram] = counts.get(gram, 0) + 1
    return counts


def bleu_corpus(pairs: list[ScoredPair], n: int) -> float:
    """Cumulative corpus BLEU-n as a percentage.

    p_k = (clipped k-gram matches pooled over pairs) / (total hypothesis
    k-grams); score = BP * exp(mean_k log p_k), BP = exp(min(0, 1 - r/c))
    with r, c the pooled reference and hypothesis lengths.
    """
    if not pairs:
        raise ValueError("bleu_corpus needs at least one pair")
    if not 1 <= n <= 4:
        raise ValueError(f"n must be in 1..4, got {n}")
    hyp_len = sum(len(p.hypothesis) for p in pairs)
    ref_len = sum(len(p.reference) for p in pairs)
    if hyp_len == 0:
        return 0.0
    log_sum = 0.0
    for k in range(1, n + 1):
        matched = 0
        total = 0
        for p in pairs:
            hyp_counts = _ngram_counts(p.hypothesis, k)
            ref_counts = _ngram_counts(p.reference, k)
            matched += sum(min(c, ref_counts.get(g, 0)) for g, c in hyp_counts.items())
            total += max(0, len(p.hypothesis) - k + 1)
        if matched == 0 or total == 0:
            return 0.0
        log_sum += math.log(matched / total)
    bp = math.exp(min(0.0, 1.0 - ref_len / hyp_len))
    return 100.0 * bp * math.exp(log_sum / n)


def rouge1_corpus(pairs: list[ScoredPair]) -> tuple[float, float, float]:
    """Sentence-averaged unigram-overlap precision, recall, F1 (percent)."""
    if not pairs:
        raise ValueError("rouge1_corpus needs at least one pair")
    p_sum = r_sum = f_sum = 0.0
    for pair in pairs:
        hyp_counts = _ngram_counts(pair.hypothesis, 1)
        ref_counts = _ngram_counts(pair.reference, 1)
        overlap = sum(min(c, ref_counts.get(g, 0)) for g, c in hyp_counts.items())
        p = overlap / len(pair.hypothesis) if pair.hypothesis else 0.0
        r = overlap / len(pair.reference)
        f = 2 * p * r / (p + r) if (p + r) > 0 else 0.0
        p_sum += p
        r_sum += r
        f_sum += f
    n = len(pairs)
    return 100.0 * p_sum / n, 100.0 * r_sum / n, 100.0 * f_sum / n


def levenshtein(a: list[str], b: list[str]) -> int:
    """Minimum insertions + deletions + substitutions turning a into b."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, tok_a in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, tok_b in enumerate(b, start=1):
            sub = prev[j - 1] + (tok_a != tok_b)
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, sub)
        prev = cur
    return prev[len(b)]


def wer_corpus(pairs: list[ScoredPair]) -> float:
    """Pooled word error rate: 100 * sum(edit distances) / sum(ref lengths)."""
    if not pairs:
        raise ValueError("wer_corpus needs at least one pair")
    total_dist = sum(levenshtein(p.hypothesis, p.reference) for p in pairs)
    total_ref = sum(len(p.reference) for p in pairs)
    return 100.0 * total_dist / total_ref


def score_cell(hyps: list[str], refs: list[str]) -> MetricsReport:
    """Lowercase, whitespace-tokenize, and compute all metrics for one cell."""
    if len(hyps) != len(refs):
        raise ValueError(f"{len(hyps)} hypotheses vs {len(refs)} references")
    if not hyps:
        raise ValueError("score_cell needs at least one pair")
    pairs = [
        ScoredPair(hypothesis=h.lower().split(), reference=r.lower().split())
        for h, r in zip(hyps, refs)
    ]
    p, r, f = rouge1_corpus(pairs)
    return MetricsReport(
        bleu=tuple(bleu_corpus(pairs, k) for k in (1, 2, 3, 4)),
        rouge1_p=p,
        rouge1_r=r,
        rouge1_f=f,
        wer=wer_corpus(pairs),
    )
