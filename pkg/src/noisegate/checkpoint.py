"""Model checkpoint files.

Binary layout (all integers little-endian):
    magic  b"NGCP"
    u32    format version (currently 1)
    u32    JSON header length
    bytes  header JSON: {"config": {...}, "vocab_sha256": str, "tensors": N}
    N entries, sorted by tensor name ("pos_table" holds the positional buffer):
        u32      name length, then name (UTF-8)
        u32      ndim, then ndim * u32 dims
        float64  row-major data

A JSON sidecar at <path>.history.json stores the per-epoch train/dev losses
and the selected epoch.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .model import EpochStats, ModelConfig, Params, TrainedModel, sinusoidal_table

MAGIC = b"NGCP"
VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path: str | Path, trained: TrainedModel, vocab_sha256: str) -> None:
    path = Path(path)
    params = trained.params
    entries = dict(params.tensors)
    entries["pos_table"] = params.pos_table
    header = json.dumps(
        {"config": asdict(params.config), "vocab_sha256": vocab_sha256, "tensors": len(entries)}
    ).encode("utf-8")
    with path.open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(header)))
        fh.write(header)
        for name in sorted(entries):
            arr = np.ascontiguousarray(entries[name], dtype="<f8")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes(order="C"))
    sidecar = {
        "best_epoch": trained.best_epoch,
        "history": [{"train_loss": h.train_loss, "dev_loss": h.dev_loss} for h in trained.history],
    }
    Path(str(path) + ".history.json").write_text(json.dumps(sidecar, indent=2) + "\n", encoding="utf-8")


def load_checkpoint(path: str | Path) -> tuple[TrainedModel, str]:
    """Read a checkpoint; returns (TrainedModel, vocab_sha256). The history
    sidecar is optional (empty history when absent)."""
    path = Path(path)
    data = path.read_bytes()
    if data[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    version, header_len = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    offset = 12
    header = json.loads(data[offset : offset + header_len].decode("utf-8"))
    offset += header_len
    config = ModelConfig(**header["config"])
    entries: dict[str, np.ndarray] = {}
    for _ in range(header["tensors"]):
        (name_len,) = struct.unpack_from("<I", data, offset)
        offset += 4
        name = data[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = struct.unpack_from("<I", data, offset)
        offset += 4
        shape = struct.unpack_from(f"<{ndim}I", data, offset)
        offset += 4 * ndim
        count = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(shape)
        offset += 8 * count
        entries[name] = arr.astype(np.float64)
    pos_table = entries.pop("pos_table", None)
    if pos_table is None:
        pos_table = sinusoidal_table(config.max_len, config.d_model)
    params = Params(config=config, tensors=entries, pos_table=pos_table)
    history: list[EpochStats] = []
    best_epoch = 0
    sidecar_path = Path(str(path) + ".history.json")
    if sidecar_path.exists():
        sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
        history = [EpochStats(h["train_loss"], h["dev_loss"]) for h in sidecar["history"]]
        best_epoch = sidecar["best_epoch"]
    return TrainedModel(params=params, history=history, best_epoch=best_epoch), header["vocab_sha256"]
