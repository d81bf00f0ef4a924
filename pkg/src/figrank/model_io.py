"""Versioned on-disk container for trained neural scorers.

A single JSON file holds hyperparameters, the vocabulary and all parameter
tensors (float64, base64) plus a SHA-256 content checksum that is verified
on load.
"""

from __future__ import annotations

import base64
import hashlib
import json
from pathlib import Path

import numpy as np

from .neural import ModelConfig, NeuralScorerParams
from .tokenizer import Vocabulary
from .training import TrainedModel

FORMAT_NAME = "figrank-neural"
FORMAT_VERSION = 1


def _params_digest(payload: dict) -> str:
    digest = hashlib.sha256()
    for name in sorted(payload):
        entry = payload[name]
        digest.update(name.encode("utf-8"))
        digest.update(json.dumps(entry["shape"]).encode("ascii"))
        digest.update(entry["data"].encode("ascii"))
    return digest.hexdigest()


def save_model(model: TrainedModel, path: Path | str) -> None:
    cfg = model.params.config
    tensors = {}
    for name, tensor in model.params.tensors.items():
        # ascontiguousarray promotes 0-d tensors to 1-d, so record the
        # original shape rather than the buffer's.
        data = np.ascontiguousarray(tensor, dtype=np.float64)
        tensors[name] = {
            "shape": list(tensor.shape),
            "data": base64.b64encode(data.tobytes()).decode("ascii"),
        }
    payload = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "config": {
            "vocab_size": cfg.vocab_size,
            "embed_dim": cfg.embed_dim,
            "n_layers": cfg.n_layers,
            "n_heads": cfg.n_heads,
            "ff_dim": cfg.ff_dim,
            "max_len": cfg.max_len,
        },
        "vocab": list(model.vocab.id_to_token),
        "params": tensors,
        "checksum": _params_digest(tensors),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload), encoding="utf-8")


def load_model(path: Path | str) -> TrainedModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != FORMAT_NAME:
        raise ValueError(f"{path}: not a {FORMAT_NAME} file")
    if payload.get("version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported version {payload.get('version')}")
    if _params_digest(payload["params"]) != payload["checksum"]:
        raise ValueError(f"{path}: checksum mismatch (corrupt model file)")

    cfg = ModelConfig(**payload["config"])
    tensors = {}
    for name, entry in payload["params"].items():
        raw = base64.b64decode(entry["data"])
        tensors[name] = np.frombuffer(raw, dtype=np.float64).reshape(entry["shape"]).copy()
    vocab = Vocabulary.from_tokens(payload["vocab"])
    if vocab.size != cfg.vocab_size:
        raise ValueError(f"{path}: vocabulary size {vocab.size} != config {cfg.vocab_size}")
    return TrainedModel(params=NeuralScorerParams(config=cfg, tensors=tensors), vocab=vocab)
