"""noisegate: a noise-baseline benchmarking harness for seq2seq brain-to-text
decoders.

The harness answers one question about a decoder: does it learn from its
input features, or does it only memorize label statistics? It runs a 2x2
matrix of {signal, noise} training and evaluation inputs, each under
teacher-forced and free-running decoding, and scores every cell with
corpus-level BLEU, ROUGE-1, and WER.
"""

from .corpus import (
    Corpus,
    CorpusError,
    InputKind,
    SentencePair,
    SplitDataset,
    Task,
    filter_invalid,
    gen_synthetic_control,
    load_corpus,
    make_noise_like,
    merge_tasks,
    save_corpus,
    split_corpus,
    split_corpus_by_task,
)
from .decoding import (
    DecodeConfig,
    DecodingMode,
    apply_repetition_penalty,
    ban_repeated_ngrams,
    beam_search_generate,
    teacher_forced_generate,
)
from .harness import (
    CellResult,
    GapSummary,
    HarnessConfig,
    MATRIX_CELLS,
    MatrixReport,
    ScenarioCell,
    mode_collapse_scan,
    render_report,
    run_cell,
    run_matrix,
)
from .metrics import (
    MetricsReport,
    ScoredPair,
    bleu_corpus,
    levenshtein,
    rouge1_corpus,
    score_cell,
    wer_corpus,
)
from .model import (
    DivergenceError,
    ModelConfig,
    Params,
    TrainConfig,
    TrainedModel,
    forward,
    grad,
    init_model,
    loss,
    published_model_config,
    published_train_config,
    sgd_step,
    train,
)
from .vocab import Vocabulary, build_vocab, decode, encode

__version__ = "0.1.0"
