"""From-scratch transformer encoder-decoder with analytic gradients.

Everything is float64 numpy and single-threaded: at desk scale the model is
small enough that exactness and reproducibility matter more than speed.
Layers are pre-norm residual blocks; the feed-forward activation is GELU
(smooth, which keeps finite-difference gradient checks clean). Positional
encodings are a fixed sinusoidal table, stored with the parameters but not
trained: `grad` and `sgd_step` cover exactly the tensors in `Params.tensors`.

Shapes: a sentence is processed alone. Encoder input is (n_words,
feature_dim); decoder input is a token-id prefix; logits row t is the
pre-softmax distribution for the token after prefix position t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, InputKind, SplitDataset, make_noise_like
from .vocab import PAD, Vocabulary, encode

LN_EPS = 1e-5
_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_A = 0.044715

# Seed offsets so one training seed drives several independent streams.
SEED_OFFSET_SHUFFLE = 1
SEED_OFFSET_TRAIN_NOISE = 2
SEED_OFFSET_DEV_NOISE = 3

Gradients = dict[str, np.ndarray]


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss or gradient."""

    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message)
        self.epoch = epoch


@dataclass
class ModelConfig:
    vocab_size: int
    feature_dim: int = 840
    d_model: int = 64
    n_layers_enc: int = 2
    n_heads: int = 4
    n_layers_dec: int = 2
    d_ff: int | None = None
    max_len: int = 64

    def __post_init__(self) -> None:
        if self.d_ff is None:
            self.d_ff = 4 * self.d_model
        for name in ("vocab_size", "feature_dim", "d_model", "n_layers_enc", "n_heads", "n_layers_dec", "d_ff", "max_len"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.d_model % self.n_heads != 0:
            raise ValueError(f"d_model {self.d_model} not divisible by n_heads {self.n_heads}")
        if self.d_model % 2 != 0:
            raise ValueError("d_model must be even (sin/cos positional pairs)")


def published_model_config(vocab_size: int, feature_dim: int = 840, **overrides) -> ModelConfig:
    """The published architecture shape: 6 encoder layers, 8 heads."""
    kwargs = dict(vocab_size=vocab_size, feature_dim=feature_dim, n_layers_enc=6, n_heads=8)
    kwargs.update(overrides)
    return ModelConfig(**kwargs)


@dataclass
class TrainConfig:
    batch_size: int = 8
    learning_rate: float = 1e-2
    epochs: int = 30
    seed: int = 0

    def __post_init__(self) -> None:
        if self.batch_size <= 0 or self.learning_rate <= 0 or self.epochs <= 0:
            raise ValueError("batch_size, learning_rate, and epochs must be positive")


def published_train_config(**overrides) -> TrainConfig:
    """The published training recipe: batch 32, lr 2e-5, 30 epochs, plain SGD."""
    kwargs = dict(batch_size=32, learning_rate=2e-5, epochs=30)
    kwargs.update(overrides)
    return TrainConfig(**kwargs)


@dataclass
class Params:
    config: ModelConfig
    tensors: dict[str, np.ndarray]
    pos_table: np.ndarray  # fixed sinusoidal buffer, (max_len, d_model)

    def copy(self) -> "Params":
        return Params(self.config, {k: v.copy() for k, v in self.tensors.items()}, self.pos_table)


@dataclass
class EpochStats:
    train_loss: float
    dev_loss: float


@dataclass
class TrainedModel:
    params: Params
    history: list[EpochStats]
    best_epoch: int  # 1-based epoch index of the stored snapshot

    @property
    def best_dev_loss(self) -> float:
        return self.history[self.best_epoch - 1].dev_loss


def sinusoidal_table(max_len: int, d_model: int) -> np.ndarray:
    pos = np.arange(max_len, dtype=np.float64)[:, None]
    idx = np.arange(0, d_model, 2, dtype=np.float64)[None, :]
    angles = pos / np.power(10000.0, idx / d_model)
    table = np.zeros((max_len, d_model))
    table[:, 0::2] = np.sin(angles)
    table[:, 1::2] = np.cos(angles)
    return table


def _tensor_specs(c: ModelConfig) -> list[tuple[str, tuple[int, ...], str]]:
    """(name, shape, init kind) for every trainable tensor, in a fixed order."""
    specs: list[tuple[str, tuple[int, ...], str]] = [
        ("enc_in.W", (c.feature_dim, c.d_model), "xavier"),
        ("enc_in.b", (c.d_model,), "zeros"),
    ]
    for l in range(c.n_layers_enc):
        p = f"enc.{l}."
        specs += [
            (p + "ln1.g", (c.d_model,), "ones"),
            (p + "ln1.b", (c.d_model,), "zeros"),
            (p + "attn.Wq", (c.d_model, c.d_model), "xavier"),
            (p + "attn.Wk", (c.d_model, c.d_model), "xavier"),
            (p + "attn.Wv", (c.d_model, c.d_model), "xavier"),
            (p + "attn.Wo", (c.d_model, c.d_model), "xavier"),
            (p + "ln2.g", (c.d_model,), "ones"),
            (p + "ln2.b", (c.d_model,), "zeros"),
            (p + "ff.W1", (c.d_model, c.d_ff), "xavier"),
            (p + "ff.b1", (c.d_ff,), "zeros"),
            (p + "ff.W2", (c.d_ff, c.d_model), "xavier"),
            (p + "ff.b2", (c.d_model,), "zeros"),
        ]
    specs += [("enc.ln_f.g", (c.d_model,), "ones"), ("enc.ln_f.b", (c.d_model,), "zeros")]
    specs.append(("dec.embed", (c.vocab_size, c.d_model), "xavier"))
    for l in range(c.n_layers_dec):
        p = f"dec.{l}."
        specs += [
            (p + "ln1.g", (c.d_model,), "ones"),
            (p + "ln1.b", (c.d_model,), "zeros"),
            (p + "self.Wq", (c.d_model, c.d_model), "xavier"),
            (p + "self.Wk", (c.d_model, c.d_model), "xavier"),
            (p + "self.Wv", (c.d_model, c.d_model), "xavier"),
            (p + "self.Wo", (c.d_model, c.d_model), "xavier"),
            (p + "ln2.g", (c.d_model,), "ones"),
            (p + "ln2.b", (c.d_model,), "zeros"),
            (p + "cross.Wq", (c.d_model, c.d_model), "xavier"),
            (p + "cross.Wk", (c.d_model, c.d_model), "xavier"),
            (p + "cross.Wv", (c.d_model, c.d_model), "xavier"),
            (p + "cross.Wo", (c.d_model, c.d_model), "xavier"),
            (p + "ln3.g", (c.d_model,), "ones"),
            (p + "ln3.b", (c.d_model,), "zeros"),
            (p + "ff.W1", (c.d_model, c.d_ff), "xavier"),
            (p + "ff.b1", (c.d_ff,), "zeros"),
            (p + "ff.W2", (c.d_ff, c.d_model), "xavier"),
            (p + "ff.b2", (c.d_model,), "zeros"),
        ]
    specs += [("dec.ln_f.g", (c.d_model,), "ones"), ("dec.ln_f.b", (c.d_model,), "zeros")]
    specs += [("out.W", (c.d_model, c.vocab_size), "xavier"), ("out.b", (c.vocab_size,), "zeros")]
    return specs


def init_model(config: ModelConfig, seed: int) -> Params:
    """Xavier-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases,
    layer-norm scale 1 / offset 0. Deterministic per seed."""
    rng = np.random.default_rng(seed)
    tensors: dict[str, np.ndarray] = {}
    for name, shape, kind in _tensor_specs(config):
        if kind == "xavier":
            bound = math.sqrt(6.0 / (shape[0] + shape[1]))
            tensors[name] = rng.uniform(-bound, bound, size=shape)
        elif kind == "ones":
            tensors[name] = np.ones(shape)
        else:
            tensors[name] = np.zeros(shape)
    return Params(config=config, tensors=tensors, pos_table=sinusoidal_table(config.max_len, config.d_model))


# ---------------------------------------------------------------------------
# forward/backward primitives; each forward returns (value, cache) and each
# backward consumes its cache


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _ln_fwd(x, g, b):
    mu = x.mean(axis=1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = xc * inv
    return g * xhat + b, (xhat, inv, g)


def _ln_bwd(dy, cache):
    xhat, inv, g = cache
    dg = (dy * xhat).sum(axis=0)
    db = dy.sum(axis=0)
    dxhat = dy * g
    m1 = dxhat.mean(axis=1, keepdims=True)
    m2 = (dxhat * xhat).mean(axis=1, keepdims=True)
    dx = (dxhat - m1 - xhat * m2) * inv
    return dx, dg, db


def _gelu_fwd(x):
    t = np.tanh(_GELU_C * (x + _GELU_A * x**3))
    return 0.5 * x * (1.0 + t), (x, t)


def _gelu_bwd(dy, cache):
    x, t = cache
    du = _GELU_C * (1.0 + 3.0 * _GELU_A * x * x)
    return dy * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du)


def _mha_fwd(xq, xkv, wq, wk, wv, wo, n_heads, causal):
    q = xq @ wq
    k = xkv @ wk
    v = xkv @ wv
    t = q.shape[0]
    dh = q.shape[1] // n_heads
    scale = 1.0 / math.sqrt(dh)
    concat = np.empty_like(q)
    attns = []
    for h in range(n_heads):
        sl = slice(h * dh, (h + 1) * dh)
        scores = (q[:, sl] @ k[:, sl].T) * scale
        if causal:
            scores[np.triu_indices(t, k=1)] = -np.inf
        attn = _softmax_rows(scores)
        concat[:, sl] = attn @ v[:, sl]
        attns.append(attn)
    out = concat @ wo
    return out, (xq, xkv, q, k, v, concat, attns, wq, wk, wv, wo, n_heads, scale)


def _mha_bwd(dout, cache):
    xq, xkv, q, k, v, concat, attns, wq, wk, wv, wo, n_heads, scale = cache
    dwo = concat.T @ dout
    dconcat = dout @ wo.T
    dq = np.empty_like(q)
    dk = np.empty_like(k)
    dv = np.empty_like(v)
    dh = q.shape[1] // n_heads
    for h in range(n_heads):
        sl = slice(h * dh, (h + 1) * dh)
        attn = attns[h]
        dctx = dconcat[:, sl]
        dattn = dctx @ v[:, sl].T
        dv[:, sl] = attn.T @ dctx
        dscores = attn * (dattn - (dattn * attn).sum(axis=1, keepdims=True))
        dq[:, sl] = (dscores @ k[:, sl]) * scale
        dk[:, sl] = (dscores.T @ q[:, sl]) * scale
    dwq = xq.T @ dq
    dwk = xkv.T @ dk
    dwv = xkv.T @ dv
    dxq = dq @ wq.T
    dxkv = dk @ wk.T + dv @ wv.T
    return dxq, dxkv, dwq, dwk, dwv, dwo


def _ff_fwd(x, w1, b1, w2, b2):
    pre = x @ w1 + b1
    h, gelu_cache = _gelu_fwd(pre)
    out = h @ w2 + b2
    return out, (x, gelu_cache, h, w1, w2)


def _ff_bwd(dout, cache):
    x, gelu_cache, h, w1, w2 = cache
    dw2 = h.T @ dout
    db2 = dout.sum(axis=0)
    dh = dout @ w2.T
    dpre = _gelu_bwd(dh, gelu_cache)
    dw1 = x.T @ dpre
    db1 = dpre.sum(axis=0)
    dx = dpre @ w1.T
    return dx, dw1, db1, dw2, db2


# ---------------------------------------------------------------------------
# encoder / decoder


def encode_memory(params: Params, features: np.ndarray):
    """Run the encoder once; the returned memory can be reused across many
    decoder calls (teacher forcing rows, beam search steps)."""
    memory, _ = _encode_fwd(params, features)
    return memory


def _encode_fwd(params: Params, features: np.ndarray):
    c = params.config
    t = params.tensors
    features = np.asarray(features, dtype=np.float64)
    n = features.shape[0]
    if features.ndim != 2 or features.shape[1] != c.feature_dim:
        raise ValueError(f"features must be (n_words, {c.feature_dim}), got {features.shape}")
    if n > c.max_len:
        raise ValueError(f"feature sequence length {n} exceeds max_len {c.max_len}")
    x = features @ t["enc_in.W"] + t["enc_in.b"] + params.pos_table[:n]
    layers = []
    for l in range(c.n_layers_enc):
        p = f"enc.{l}."
        a_in, ln1 = _ln_fwd(x, t[p + "ln1.g"], t[p + "ln1.b"])
        attn_out, attn = _mha_fwd(a_in, a_in, t[p + "attn.Wq"], t[p + "attn.Wk"], t[p + "attn.Wv"], t[p + "attn.Wo"], c.n_heads, causal=False)
        x = x + attn_out
        f_in, ln2 = _ln_fwd(x, t[p + "ln2.g"], t[p + "ln2.b"])
        ff_out, ff = _ff_fwd(f_in, t[p + "ff.W1"], t[p + "ff.b1"], t[p + "ff.W2"], t[p + "ff.b2"])
        x = x + ff_out
        layers.append((ln1, attn, ln2, ff))
    memory, ln_f = _ln_fwd(x, t["enc.ln_f.g"], t["enc.ln_f.b"])
    return memory, (features, layers, ln_f)


def _encode_bwd(params: Params, dmemory, cache, g: Gradients):
    c = params.config
    t = params.tensors
    features, layers, ln_f = cache
    dx, dgf, dbf = _ln_bwd(dmemory, ln_f)
    g["enc.ln_f.g"] += dgf
    g["enc.ln_f.b"] += dbf
    for l in reversed(range(c.n_layers_enc)):
        p = f"enc.{l}."
        ln1, attn, ln2, ff = layers[l]
        df_in, dw1, db1, dw2, db2 = _ff_bwd(dx, ff)
        g[p + "ff.W1"] += dw1
        g[p + "ff.b1"] += db1
        g[p + "ff.W2"] += dw2
        g[p + "ff.b2"] += db2
        dres, dg2, db2_ = _ln_bwd(df_in, ln2)
        g[p + "ln2.g"] += dg2
        g[p + "ln2.b"] += db2_
        dx = dx + dres
        dxq, dxkv, dwq, dwk, dwv, dwo = _mha_bwd(dx, attn)
        g[p + "attn.Wq"] += dwq
        g[p + "attn.Wk"] += dwk
        g[p + "attn.Wv"] += dwv
        g[p + "attn.Wo"] += dwo
        dres, dg1, db1_ = _ln_bwd(dxq + dxkv, ln1)
        g[p + "ln1.g"] += dg1
        g[p + "ln1.b"] += db1_
        dx = dx + dres
    g["enc_in.W"] += features.T @ dx
    g["enc_in.b"] += dx.sum(axis=0)


def decoder_logits(params: Params, memory: np.ndarray, prefix: np.ndarray) -> np.ndarray:
    """Logits over the vocabulary for each prefix position, given a
    precomputed encoder memory."""
    logits, _ = _decode_fwd(params, memory, np.asarray(prefix, dtype=np.int64))
    return logits


def _decode_fwd(params: Params, memory, prefix):
    c = params.config
    t = params.tensors
    prefix = np.asarray(prefix, dtype=np.int64)
    tlen = prefix.shape[0]
    if tlen == 0:
        raise ValueError("decoder prefix must be non-empty")
    if tlen > c.max_len:
        raise ValueError(f"decoder prefix length {tlen} exceeds max_len {c.max_len}")
    if prefix.min() < 0 or prefix.max() >= c.vocab_size:
        raise ValueError("token id out of range")
    y = t["dec.embed"][prefix] + params.pos_table[:tlen]
    layers = []
    for l in range(c.n_layers_dec):
        p = f"dec.{l}."
        s_in, ln1 = _ln_fwd(y, t[p + "ln1.g"], t[p + "ln1.b"])
        self_out, self_c = _mha_fwd(s_in, s_in, t[p + "self.Wq"], t[p + "self.Wk"], t[p + "self.Wv"], t[p + "self.Wo"], c.n_heads, causal=True)
        y = y + self_out
        c_in, ln2 = _ln_fwd(y, t[p + "ln2.g"], t[p + "ln2.b"])
        cross_out, cross_c = _mha_fwd(c_in, memory, t[p + "cross.Wq"], t[p + "cross.Wk"], t[p + "cross.Wv"], t[p + "cross.Wo"], c.n_heads, causal=False)
        y = y + cross_out
        f_in, ln3 = _ln_fwd(y, t[p + "ln3.g"], t[p + "ln3.b"])
        ff_out, ff = _ff_fwd(f_in, t[p + "ff.W1"], t[p + "ff.b1"], t[p + "ff.W2"], t[p + "ff.b2"])
        y = y + ff_out
        layers.append((ln1, self_c, ln2, cross_c, ln3, ff))
    h, ln_f = _ln_fwd(y, t["dec.ln_f.g"], t["dec.ln_f.b"])
    logits = h @ t["out.W"] + t["out.b"]
    return logits, (prefix, layers, h, ln_f)


def _decode_bwd(params: Params, dlogits, cache, g: Gradients):
    """Backprop the decoder; returns the gradient w.r.t. the encoder memory."""
    c = params.config
    t = params.tensors
    prefix, layers, h, ln_f = cache
    g["out.W"] += h.T @ dlogits
    g["out.b"] += dlogits.sum(axis=0)
    dh = dlogits @ t["out.W"].T
    dy, dgf, dbf = _ln_bwd(dh, ln_f)
    g["dec.ln_f.g"] += dgf
    g["dec.ln_f.b"] += dbf
    dmemory = None
    for l in reversed(range(c.n_layers_dec)):
        p = f"dec.{l}."
        ln1, self_c, ln2, cross_c, ln3, ff = layers[l]
        df_in, dw1, db1, dw2, db2 = _ff_bwd(dy, ff)
        g[p + "ff.W1"] += dw1
        g[p + "ff.b1"] += db1
        g[p + "ff.W2"] += dw2
        g[p + "ff.b2"] += db2
        dres, dg3, db3 = _ln_bwd(df_in, ln3)
        g[p + "ln3.g"] += dg3
        g[p + "ln3.b"] += db3
        dy = dy + dres
        dxq, dxkv, dwq, dwk, dwv, dwo = _mha_bwd(dy, cross_c)
        g[p + "cross.Wq"] += dwq
        g[p + "cross.Wk"] += dwk
        g[p + "cross.Wv"] += dwv
        g[p + "cross.Wo"] += dwo
        dmemory = dxkv if dmemory is None else dmemory + dxkv
        dres, dg2, db2_ = _ln_bwd(dxq, ln2)
        g[p + "ln2.g"] += dg2
        g[p + "ln2.b"] += db2_
        dy = dy + dres
        dxq, dxkv, dwq, dwk, dwv, dwo = _mha_bwd(dy, self_c)
        g[p + "self.Wq"] += dwq
        g[p + "self.Wk"] += dwk
        g[p + "self.Wv"] += dwv
        g[p + "self.Wo"] += dwo
        dres, dg1, db1_ = _ln_bwd(dxq + dxkv, ln1)
        g[p + "ln1.g"] += dg1
        g[p + "ln1.b"] += db1_
        dy = dy + dres
    np.add.at(g["dec.embed"], prefix, dy)
    return dmemory


def forward(params: Params, features: np.ndarray, target_prefix) -> np.ndarray:
    """Logits matrix of shape (len(target_prefix), vocab_size); row t scores
    the token following prefix position t. Decoder self-attention is causal;
    cross-attention sees every encoder position."""
    memory, _ = _encode_fwd(params, features)
    logits, _ = _decode_fwd(params, memory, np.asarray(target_prefix, dtype=np.int64))
    return logits


def _log_softmax_rows(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def _loss_and_dlogits(logits: np.ndarray, targets: np.ndarray):
    targets = np.asarray(targets, dtype=np.int64)
    if targets.shape[0] != logits.shape[0]:
        raise ValueError(f"{targets.shape[0]} targets vs {logits.shape[0]} logit rows")
    valid = targets != PAD
    n_valid = int(valid.sum())
    if n_valid == 0:
        raise ValueError("loss needs at least one non-PAD target")
    logp = _log_softmax_rows(logits)
    rows = np.arange(targets.shape[0])
    value = float(-logp[rows, targets][valid].mean())
    dlogits = np.exp(logp)
    dlogits[rows, targets] -= 1.0
    dlogits[~valid] = 0.0
    dlogits /= n_valid
    return value, dlogits


def loss(logits: np.ndarray, targets) -> float:
    """Mean token-level cross-entropy; PAD targets are excluded from the mean."""
    value, _ = _loss_and_dlogits(np.asarray(logits, dtype=np.float64), targets)
    return value


def _zero_gradients(params: Params) -> Gradients:
    return {k: np.zeros_like(v) for k, v in params.tensors.items()}


def _sentence_loss_and_grad(params: Params, features, target_ids, g: Gradients) -> float:
    target_ids = np.asarray(target_ids, dtype=np.int64)
    if target_ids.shape[0] < 2:
        raise ValueError("target id sequence needs at least BOS and one token")
    prefix, targets = target_ids[:-1], target_ids[1:]
    memory, enc_cache = _encode_fwd(params, features)
    logits, dec_cache = _decode_fwd(params, memory, prefix)
    value, dlogits = _loss_and_dlogits(logits, targets)
    dmemory = _decode_bwd(params, dlogits, dec_cache, g)
    _encode_bwd(params, dmemory, enc_cache, g)
    return value


def _batch_loss_and_grad(params: Params, batch) -> tuple[float, Gradients]:
    if not batch:
        raise ValueError("batch must be non-empty")
    g = _zero_gradients(params)
    total = 0.0
    # overflow on a diverging model is detected below, not warned about
    with np.errstate(over="ignore", invalid="ignore"):
        for features, target_ids in batch:
            total += _sentence_loss_and_grad(params, features, target_ids, g)
    inv = 1.0 / len(batch)
    for k in g:
        g[k] *= inv
        if not np.isfinite(g[k]).all():
            raise ValueError(f"non-finite gradient in tensor {k}")
    return total / len(batch), g


def grad(params: Params, batch) -> Gradients:
    """Analytic gradient of the mean batch loss for every trainable tensor.

    ``batch`` is a list of (features, target_ids) pairs where target_ids is a
    full BOS...EOS encoding; the loss is the mean over sentences of each
    sentence's token-mean cross-entropy.
    """
    _, g = _batch_loss_and_grad(params, batch)
    return g


def batch_loss(params: Params, batch) -> float:
    """Forward-only mean loss over (features, target_ids) pairs."""
    if not batch:
        raise ValueError("batch must be non-empty")
    total = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for features, target_ids in batch:
            target_ids = np.asarray(target_ids, dtype=np.int64)
            logits = forward(params, features, target_ids[:-1])
            value, _ = _loss_and_dlogits(logits, target_ids[1:])
            total += value
    return total / len(batch)


def sgd_step(params: Params, grads: Gradients, lr: float) -> Params:
    """Plain SGD: theta <- theta - lr * g, elementwise. Returns new Params."""
    if set(grads) != set(params.tensors):
        raise ValueError("gradient keys do not match parameter tensors")
    tensors = {k: v - lr * grads[k] for k, v in params.tensors.items()}
    return Params(config=params.config, tensors=tensors, pos_table=params.pos_table)


def _prepare_examples(corpus: Corpus, vocab: Vocabulary, max_len: int):
    examples = []
    for pair in corpus.pairs:
        ids = np.array(encode(vocab, pair.text), dtype=np.int64)
        if pair.n_words > max_len or ids.shape[0] - 1 > max_len:
            raise ValueError(
                f"sentence too long for max_len={max_len}: {pair.text[:60]!r}"
            )
        examples.append((pair.features, ids))
    return examples


def train(
    mc: ModelConfig,
    tc: TrainConfig,
    split: SplitDataset,
    train_input: InputKind,
    vocab: Vocabulary,
) -> TrainedModel:
    """Seeded mini-batch SGD with dev-loss model selection.

    When train_input is NOISE the training and dev features are replaced by
    shape-matched standard-normal corpora (seeds derived from tc.seed by
    fixed offsets). Snapshots are taken after every epoch; the returned
    params are the snapshot with the lowest dev loss.
    """
    if len(vocab) != mc.vocab_size:
        raise ValueError(f"vocab size {len(vocab)} != model vocab_size {mc.vocab_size}")
    if not split.train.pairs:
        raise ValueError("training split is empty")
    if not split.dev.pairs:
        raise ValueError("development split is empty (needed for model selection)")
    if train_input is InputKind.NOISE:
        train_corpus = make_noise_like(split.train, tc.seed + SEED_OFFSET_TRAIN_NOISE)
        dev_corpus = make_noise_like(split.dev, tc.seed + SEED_OFFSET_DEV_NOISE)
    else:
        train_corpus, dev_corpus = split.train, split.dev
    examples = _prepare_examples(train_corpus, vocab, mc.max_len)
    dev_examples = _prepare_examples(dev_corpus, vocab, mc.max_len)

    params = init_model(mc, tc.seed)
    shuffle_rng = np.random.default_rng(tc.seed + SEED_OFFSET_SHUFFLE)
    history: list[EpochStats] = []
    best_params: Params | None = None
    best_dev = math.inf
    best_epoch = 0
    for epoch in range(1, tc.epochs + 1):
        order = shuffle_rng.permutation(len(examples))
        losses = []
        for start in range(0, len(order), tc.batch_size):
            chunk = order[start : start + tc.batch_size]
            batch = [examples[i] for i in chunk]
            try:
                value, g = _batch_loss_and_grad(params, batch)
            except ValueError as exc:
                raise DivergenceError(f"epoch {epoch}: {exc}", epoch=epoch) from exc
            if not math.isfinite(value):
                raise DivergenceError(f"epoch {epoch}: non-finite training loss", epoch=epoch)
            params = sgd_step(params, g, tc.learning_rate)
            losses.append(value)
        train_loss = float(np.mean(losses))
        dev_loss = batch_loss(params, dev_examples)
        if not math.isfinite(dev_loss):
            raise DivergenceError(f"epoch {epoch}: non-finite dev loss", epoch=epoch)
        history.append(EpochStats(train_loss=train_loss, dev_loss=dev_loss))
        if dev_loss < best_dev:
            best_dev = dev_loss
            best_params = params.copy()
            best_epoch = epoch
    assert best_params is not None
    return TrainedModel(params=best_params, history=history, best_epoch=best_epoch)
