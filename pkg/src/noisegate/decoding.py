"""Evaluation-time generation: teacher-forced argmax and free-running beam
search with repetition penalty and no-repeat n-gram blocking.

Teacher forcing feeds the gold prefix at every step, so its output quality
reflects next-token prediction under perfect context, not autonomous
generation. The free-running path is length-normalized beam search over the
model's own outputs, with the two anti-repetition adjustments applied to the
logits before log-softmax (penalty first, hard n-gram ban last so banned
tokens stay at -inf).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import Params, _log_softmax_rows, decoder_logits, encode_memory, forward
from .vocab import BOS, EOS, PAD


class DecodingMode(Enum):
    TEACHER_FORCED = "teacher_forced"
    FREE_RUNNING = "free_running"


@dataclass
class DecodeConfig:
    beam_size: int = 5
    repetition_penalty: float = 5.0
    no_repeat_ngram: int = 2
    max_len: int = 64

    def __post_init__(self) -> None:
        if self.beam_size < 1:
            raise ValueError("beam_size must be >= 1")
        if self.repetition_penalty < 1.0:
            raise ValueError("repetition_penalty must be >= 1")
        if self.no_repeat_ngram < 0:
            raise ValueError("no_repeat_ngram must be >= 0 (0 disables it)")
        if self.max_len < 1:
            raise ValueError("max_len must be >= 1")


def teacher_forced_generate(params: Params, features: np.ndarray, gold) -> np.ndarray:
    """Per-position argmax given the gold prefix.

    gold must be a full BOS...EOS encoding; the output has length
    len(gold) - 1, one prediction per gold continuation. Ties go to the
    lowest token id.
    """
    gold = np.asarray(gold, dtype=np.int64)
    if gold.shape[0] < 2 or gold[0] != BOS or gold[-1] != EOS:
        raise ValueError("gold sequence must start with BOS and end with EOS")
    logits = forward(params, features, gold[:-1])
    return logits.argmax(axis=1)


def apply_repetition_penalty(logits: np.ndarray, history, penalty: float) -> np.ndarray:
    """Discount logits of already-generated tokens: positive logits are
    divided by the penalty, non-positive ones multiplied by it."""
    if penalty < 1.0:
        raise ValueError("penalty must be >= 1")
    out = np.array(logits, dtype=np.float64, copy=True)
    for tok in set(int(t) for t in history):
        if out[tok] > 0:
            out[tok] /= penalty
        else:
            out[tok] *= penalty
    return out


def ban_repeated_ngrams(logits: np.ndarray, history, n: int) -> np.ndarray:
    """Set to -inf any token that would complete an n-gram already present in
    the history. n=0 disables the ban."""
    if n < 0:
        raise ValueError("n must be >= 0")
    out = np.array(logits, dtype=np.float64, copy=True)
    history = [int(t) for t in history]
    if n == 0 or len(history) < n - 1:
        return out
    context = tuple(history[len(history) - (n - 1) :]) if n > 1 else ()
    for i in range(len(history) - n + 1):
        if tuple(history[i : i + n - 1]) == context:
            out[history[i + n - 1]] = -np.inf
    return out


def _adjusted_log_probs(params: Params, memory, generated: list[int], dc: DecodeConfig) -> np.ndarray:
    logits = decoder_logits(params, memory, np.array([BOS] + generated, dtype=np.int64))[-1]
    logits = np.array(logits, copy=True)
    logits[PAD] = -np.inf
    logits[BOS] = -np.inf
    logits = apply_repetition_penalty(logits, generated, dc.repetition_penalty)
    logits = ban_repeated_ngrams(logits, generated, dc.no_repeat_ngram)
    return _log_softmax_rows(logits[None, :])[0]


def beam_search_generate(params: Params, features: np.ndarray, dc: DecodeConfig) -> np.ndarray:
    """Length-normalized beam search from BOS.

    Hypotheses finalize on EOS or at max_len; the winner maximizes
    sum-log-prob / generated length. All ties break toward the
    lexicographically smallest token sequence, making the search fully
    deterministic. Outputs never contain PAD or BOS; a terminal EOS is kept
    when the hypothesis ended on one.
    """
    memory = encode_memory(params, features)
    max_steps = min(dc.max_len, params.config.max_len - 1)
    live: list[tuple[list[int], float]] = [([], 0.0)]
    finalized: list[tuple[list[int], float, int]] = []  # (tokens, cum logprob, length)
    for _ in range(max_steps):
        if not live:
            break
        expansions: list[tuple[float, tuple[int, ...], list[int]]] = []
        for generated, cum in live:
            logp = _adjusted_log_probs(params, memory, generated, dc)
            for tok in range(logp.shape[0]):
                if logp[tok] == -np.inf:
                    continue
                expansions.append((cum + float(logp[tok]), tuple(generated) + (tok,), generated))
        if not expansions:
            break
        expansions.sort(key=lambda e: (-e[0], e[1]))
        live = []
        for cum, seq, _ in expansions[: dc.beam_size]:
            if seq[-1] == EOS:
                finalized.append((list(seq), cum, len(seq)))
            else:
                live.append((list(seq), cum))
    for generated, cum in live:
        finalized.append((generated, cum, len(generated)))
    if not finalized:
        return np.array([], dtype=np.int64)
    best = min(finalized, key=lambda f: (-(f[1] / f[2]), tuple(f[0])))
    return np.array(best[0], dtype=np.int64)
