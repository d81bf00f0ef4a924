"""Margin-loss training of the neural scorer on mined triplets.

One sentence is sampled (seeded) per paragraph per triplet per epoch; the
batch loss is the mean of max(s_p - s_n + alpha, 0) over the batch.  The
global gradient norm is clipped before an Adam step.  Identical triplets
and seed produce bit-identical final parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .ingest import split_sentences
from .neural import (
    ModelConfig,
    NeuralScorerParams,
    backward,
    forward,
    init_params,
    zero_grads,
)
from .pairs import TrainingTriplet
from .tokenizer import Vocabulary, encode_pair


class TrainingDiverged(RuntimeError):
    """Raised when a batch produces a non-finite loss."""

    def __init__(self, epoch: int, batch: int, loss: float):
        super().__init__(f"non-finite loss {loss} in epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


@dataclass(frozen=True)
class TrainConfig:
    alpha: float = 1.0
    learning_rate: float = 1e-3  # the paper-scale 1e-6 presumes a pretrained encoder
    batch_size: int = 32
    epochs: int = 1
    dropout_rate: float = 0.2
    grad_clip_norm: float = 5.0
    rng_seed: int = 0
    freeze_encoder: bool = False
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if not 0 < self.learning_rate:
            raise ValueError("learning_rate must be > 0")
        if not 0 <= self.dropout_rate < 1:
            raise ValueError("dropout_rate must be in [0, 1)")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ValueError("Adam decay rates must be in (0, 1)")
        if self.grad_clip_norm <= 0:
            raise ValueError("grad_clip_norm must be > 0")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be >= 1")


def margin_loss(s_p: float, s_n: float, alpha: float) -> float:
    """max(s_p - s_n + alpha, 0): zero iff the negative pair's score
    exceeds the positive's by at least the margin."""
    return max(s_p - s_n + alpha, 0.0)


@dataclass
class BatchLogEntry:
    epoch: int
    batch: int
    loss: float
    grad_norm: float
    clipped_norm: float

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "batch": self.batch,
            "loss": self.loss,
            "grad_norm": self.grad_norm,
            "clipped_norm": self.clipped_norm,
        }


@dataclass
class TrainedModel:
    params: NeuralScorerParams
    vocab: Vocabulary
    log: list[BatchLogEntry] = field(default_factory=list)


def sample_sentence(text: str, rng: np.random.Generator) -> str:
    """Pick one sentence uniformly from a paragraph (the whole text when
    segmentation finds a single sentence)."""
    spans = split_sentences(text)
    if not spans:
        return text
    if len(spans) == 1:
        return spans[0].text
    return spans[int(rng.integers(0, len(spans)))].text


def global_grad_norm(grads: dict[str, np.ndarray], names: Sequence[str]) -> float:
    total = 0.0
    for name in names:
        g = grads[name]
        total += float(np.sum(g * g))
    return math.sqrt(total)


def clip_grads_(grads: dict[str, np.ndarray], names: Sequence[str], max_norm: float) -> tuple[float, float]:
    """Scale gradients in place so their global norm is at most ``max_norm``.
    Returns (pre-clip norm, post-clip norm)."""
    norm = global_grad_norm(grads, names)
    if norm > max_norm:
        factor = max_norm / norm
        for name in names:
            grads[name] *= factor
        return norm, global_grad_norm(grads, names)
    return norm, norm


class AdamState:
    """Adaptive-moment estimates per parameter tensor."""

    def __init__(self, params: NeuralScorerParams, names: Sequence[str]):
        self.m = {n: np.zeros_like(params.tensors[n]) for n in names}
        self.v = {n: np.zeros_like(params.tensors[n]) for n in names}
        self.step = 0

    def update(
        self,
        params: NeuralScorerParams,
        grads: dict[str, np.ndarray],
        cfg: TrainConfig,
    ) -> None:
        self.step += 1
        b1, b2 = cfg.adam_beta1, cfg.adam_beta2
        bias1 = 1.0 - b1**self.step
        bias2 = 1.0 - b2**self.step
        for name in self.m:
            g = grads[name]
            self.m[name] = b1 * self.m[name] + (1.0 - b1) * g
            self.v[name] = b2 * self.v[name] + (1.0 - b2) * g * g
            m_hat = self.m[name] / bias1
            v_hat = self.v[name] / bias2
            params.tensors[name] -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)


def triplet_texts(triplets: Sequence[TrainingTriplet]) -> list[str]:
    texts: list[str] = []
    for t in triplets:
        texts.append(t.caption)
        texts.append(t.positive_text)
        texts.append(t.negative_text)
    return texts


def _triplet_loss_and_grads(
    params: NeuralScorerParams,
    pos_pair: tuple[list[int], list[int]],
    neg_pair: tuple[list[int], list[int]],
    alpha: float,
    weight: float,
    grads: dict[str, np.ndarray],
    *,
    train: bool,
    dropout_rate: float,
    rng: Optional[np.random.Generator],
) -> float:
    s_p, cache_p, _ = forward(
        params, pos_pair[0], pos_pair[1],
        train=train, dropout_rate=dropout_rate, rng=rng, need_cache=True,
    )
    s_n, cache_n, _ = forward(
        params, neg_pair[0], neg_pair[1],
        train=train, dropout_rate=dropout_rate, rng=rng, need_cache=True,
    )
    loss = margin_loss(s_p, s_n, alpha)
    if loss > 0.0:
        backward(params, cache_p, weight, grads)
        backward(params, cache_n, -weight, grads)
    return loss


def train_neural(
    triplets: Sequence[TrainingTriplet],
    cfg: TrainConfig,
    model_config: Optional[ModelConfig] = None,
    min_token_freq: int = 2,
) -> TrainedModel:
    """Train a scorer from scratch on mined triplets.

    The vocabulary is built from the triplet texts; ``model_config`` may
    pin hyperparameters (its vocab_size is overridden by the actual
    vocabulary size).
    """
    if not triplets:
        raise ValueError("no training triplets")
    vocab = Vocabulary.build(triplet_texts(triplets), min_freq=min_token_freq)
    if model_config is None:
        model_config = ModelConfig(vocab_size=vocab.size)
    else:
        model_config = ModelConfig(
            vocab_size=vocab.size,
            embed_dim=model_config.embed_dim,
            n_layers=model_config.n_layers,
            n_heads=model_config.n_heads,
            ff_dim=model_config.ff_dim,
            max_len=model_config.max_len,
        )

    rng = np.random.default_rng(cfg.rng_seed)
    params = init_params(model_config, seed=int(rng.integers(0, 2**31 - 1)))
    trainable = ["head.b", "head.w"] if cfg.freeze_encoder else params.names()
    adam = AdamState(params, trainable)
    log: list[BatchLogEntry] = []

    max_len = model_config.max_len
    n = len(triplets)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for batch_idx, start in enumerate(range(0, n, cfg.batch_size)):
            batch = order[start : start + cfg.batch_size]
            grads = zero_grads(params)
            weight = 1.0 / len(batch)
            batch_loss = 0.0
            for idx in batch:
                t = triplets[int(idx)]
                pos_sent = sample_sentence(t.positive_text, rng)
                neg_sent = sample_sentence(t.negative_text, rng)
                pos_ids, pos_segs, _ = encode_pair(vocab, pos_sent, t.caption, max_len)
                neg_ids, neg_segs, _ = encode_pair(vocab, neg_sent, t.caption, max_len)
                batch_loss += _triplet_loss_and_grads(
                    params, (pos_ids, pos_segs), (neg_ids, neg_segs),
                    cfg.alpha, weight, grads,
                    train=True, dropout_rate=cfg.dropout_rate, rng=rng,
                )
            batch_loss *= weight
            if not math.isfinite(batch_loss):
                raise TrainingDiverged(epoch, batch_idx, batch_loss)
            pre_norm, post_norm = clip_grads_(grads, trainable, cfg.grad_clip_norm)
            adam.update(params, grads, cfg)
            log.append(BatchLogEntry(epoch, batch_idx, batch_loss, pre_norm, post_norm))

    params.check_finite()
    return TrainedModel(params=params, vocab=vocab, log=log)


# -- gradient verification ---------------------------------------------------


def batch_loss_value(
    params: NeuralScorerParams,
    encoded: Sequence[tuple[tuple[list[int], list[int]], tuple[list[int], list[int]]]],
    alpha: float,
) -> float:
    """Mean margin loss of pre-encoded (positive, negative) pairs, dropout off."""
    total = 0.0
    for pos_pair, neg_pair in encoded:
        s_p, _, _ = forward(params, pos_pair[0], pos_pair[1])
        s_n, _, _ = forward(params, neg_pair[0], neg_pair[1])
        total += margin_loss(s_p, s_n, alpha)
    return total / len(encoded)


def batch_loss_grads(
    params: NeuralScorerParams,
    encoded: Sequence[tuple[tuple[list[int], list[int]], tuple[list[int], list[int]]]],
    alpha: float,
) -> tuple[float, dict[str, np.ndarray]]:
    grads = zero_grads(params)
    weight = 1.0 / len(encoded)
    total = 0.0
    for pos_pair, neg_pair in encoded:
        total += _triplet_loss_and_grads(
            params, pos_pair, neg_pair, alpha, weight, grads,
            train=False, dropout_rate=0.0, rng=None,
        )
    return total * weight, grads


def grad_check(
    params: NeuralScorerParams,
    encoded: Sequence[tuple[tuple[list[int], list[int]], tuple[list[int], list[int]]]],
    alpha: float,
    epsilon: float = 1e-5,
    n_coords: int = 200,
    seed: int = 0,
    min_signal: float = 1e-6,
) -> float:
    """Compare analytic gradients against central finite differences.

    Samples coordinates uniformly across all parameter tensors until
    ``n_coords`` informative comparisons are collected and returns
    max |g_a - g_n| / max(1e-8, |g_a| + |g_n|).  A draw where BOTH
    gradients fall below ``min_signal`` is redrawn: such coordinates sit
    under the float64 finite-difference noise floor, where agreement or
    disagreement is meaningless (this also covers directions the margin
    loss provably cannot see, e.g. parameters that shift every score
    equally).  A mismatch with signal on either side is always kept.
    Dropout is disabled; parameters must be float64.
    """
    _, grads = batch_loss_grads(params, encoded, alpha)
    rng = np.random.default_rng(seed)
    names = params.names()
    sizes = np.array([params.tensors[n].size for n in names])
    cum = np.cumsum(sizes)
    total = int(cum[-1])

    worst = 0.0
    kept = 0
    for _attempt in range(50 * n_coords):
        if kept >= n_coords:
            break
        flat_idx = int(rng.integers(0, total))
        tensor_pos = int(np.searchsorted(cum, flat_idx, side="right"))
        name = names[tensor_pos]
        offset = int(flat_idx - (cum[tensor_pos] - sizes[tensor_pos]))
        tensor = params.tensors[name]
        flat = tensor.reshape(-1)
        original = flat[offset]

        flat[offset] = original + epsilon
        loss_plus = batch_loss_value(params, encoded, alpha)
        flat[offset] = original - epsilon
        loss_minus = batch_loss_value(params, encoded, alpha)
        flat[offset] = original

        numeric = (loss_plus - loss_minus) / (2.0 * epsilon)
        analytic = grads[name].reshape(-1)[offset]
        if abs(analytic) < min_signal and abs(numeric) < min_signal:
            continue
        kept += 1
        rel = abs(analytic - numeric) / max(1e-8, abs(analytic) + abs(numeric))
        worst = max(worst, rel)
    return worst
