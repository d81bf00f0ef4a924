"""Miniature transformer cross-encoder scoring (text, caption) pairs.

The pair is fed as ``[CLS] text [SEP] caption [SEP]`` with segment ids 0/1;
the transformed CLS vector goes through a linear head to a scalar cost
(lower = better match).  Forward and reverse-mode gradients are written by
hand in numpy at float64 so training is dependency-free and exactly
checkable against finite differences.

Architecture per layer (post-norm, BERT style):
    x = LayerNorm(x + MultiHeadSelfAttention(x))
    x = LayerNorm(x + FFN(x))        FFN = Linear -> GELU -> Linear
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .tokenizer import Vocabulary, encode_pair

LN_EPS = 1e-12
_GELU_C = float(np.sqrt(2.0 / np.pi))
_GELU_A = 0.044715


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    embed_dim: int = 64
    n_layers: int = 2
    n_heads: int = 2
    ff_dim: int = 128
    max_len: int = 128

    def __post_init__(self) -> None:
        if self.embed_dim % self.n_heads != 0:
            raise ValueError(
                f"embed_dim {self.embed_dim} not divisible by n_heads {self.n_heads}"
            )

    @property
    def head_dim(self) -> int:
        return self.embed_dim // self.n_heads


@dataclass
class NeuralScorerParams:
    """All trainable tensors, keyed by dotted names.

    Embeddings: ``tok_emb`` (V,E), ``pos_emb`` (max_len,E), ``seg_emb`` (2,E).
    Per layer i: ``layers.i.attn.{wq,wk,wv,wo}`` (E,E) with biases
    ``{bq,bv,bo}`` (E,), ``layers.i.ln1.{gamma,beta}``,
    ``layers.i.ffn.{w1,b1,w2,b2}``, ``layers.i.ln2.{gamma,beta}``.
    Regressor: ``head.w`` (E,), ``head.b`` ().

    There is deliberately no key bias: softmax is invariant to per-query
    constant shifts, so a key bias could never influence the output (its
    gradient is identically zero).
    """

    config: ModelConfig
    tensors: dict[str, np.ndarray]

    def names(self) -> list[str]:
        return sorted(self.tensors)

    def encoder_names(self) -> list[str]:
        return [n for n in self.names() if not n.startswith("head.")]

    def n_parameters(self) -> int:
        return sum(t.size for t in self.tensors.values())

    def checksum(self, names: Optional[list[str]] = None) -> str:
        """SHA-256 over the named tensors (all of them by default)."""
        digest = hashlib.sha256()
        for name in sorted(names if names is not None else self.tensors):
            tensor = self.tensors[name]
            digest.update(name.encode("utf-8"))
            digest.update(str(tensor.shape).encode("ascii"))
            digest.update(np.ascontiguousarray(tensor, dtype=np.float64).tobytes())
        return digest.hexdigest()

    def copy(self) -> "NeuralScorerParams":
        return NeuralScorerParams(self.config, {k: v.copy() for k, v in self.tensors.items()})

    def check_finite(self) -> None:
        for name, tensor in self.tensors.items():
            if not np.all(np.isfinite(tensor)):
                raise ValueError(f"non-finite values in parameter {name!r}")


def init_params(
    config: ModelConfig, seed: int = 0, init_std: float = 0.02
) -> NeuralScorerParams:
    """BERT-style init: N(0, init_std) weights, zero biases, identity
    layer-norm."""
    rng = np.random.default_rng(seed)

    def normal(*shape: int) -> np.ndarray:
        return rng.normal(0.0, init_std, size=shape)

    t: dict[str, np.ndarray] = {
        "tok_emb": normal(config.vocab_size, config.embed_dim),
        "pos_emb": normal(config.max_len, config.embed_dim),
        "seg_emb": normal(2, config.embed_dim),
    }
    for i in range(config.n_layers):
        p = f"layers.{i}"
        for part in ("wq", "wk", "wv", "wo"):
            t[f"{p}.attn.{part}"] = normal(config.embed_dim, config.embed_dim)
        for part in ("bq", "bv", "bo"):
            t[f"{p}.attn.{part}"] = np.zeros(config.embed_dim)
        t[f"{p}.ln1.gamma"] = np.ones(config.embed_dim)
        t[f"{p}.ln1.beta"] = np.zeros(config.embed_dim)
        t[f"{p}.ffn.w1"] = normal(config.embed_dim, config.ff_dim)
        t[f"{p}.ffn.b1"] = np.zeros(config.ff_dim)
        t[f"{p}.ffn.w2"] = normal(config.ff_dim, config.embed_dim)
        t[f"{p}.ffn.b2"] = np.zeros(config.embed_dim)
        t[f"{p}.ln2.gamma"] = np.ones(config.embed_dim)
        t[f"{p}.ln2.beta"] = np.zeros(config.embed_dim)
    t["head.w"] = normal(config.embed_dim)
    t["head.b"] = np.zeros(())
    return NeuralScorerParams(config=config, tensors=t)


def zero_grads(params: NeuralScorerParams) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(tensor) for name, tensor in params.tensors.items()}


@dataclass(frozen=True)
class AttentionRecord:
    """Softmax attention maps from one scored pair.

    ``attentions[l][h]`` is the (T, T) query-by-key matrix of layer l,
    head h; every row sums to 1.
    """

    attentions: tuple[np.ndarray, ...]
    tokens: tuple[str, ...]
    segments: tuple[int, ...]

    @property
    def n_layers(self) -> int:
        return len(self.attentions)

    @property
    def seq_len(self) -> int:
        return len(self.tokens)


def _gelu(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Tanh-form GELU; returns (value, exact derivative of this form)."""
    u = _GELU_C * (x + _GELU_A * x**3)
    t = np.tanh(u)
    value = 0.5 * x * (1.0 + t)
    grad = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t**2) * _GELU_C * (1.0 + 3.0 * _GELU_A * x**2)
    return value, grad


def _layer_norm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray):
    mu = x.mean(axis=-1, keepdims=True)
    var = ((x - mu) ** 2).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = (x - mu) * inv
    return gamma * xhat + beta, (xhat, inv)


def _layer_norm_backward(dy: np.ndarray, cache, gamma: np.ndarray):
    xhat, inv = cache
    dxhat = dy * gamma
    dx = inv * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    )
    dgamma = (dy * xhat).sum(axis=0)
    dbeta = dy.sum(axis=0)
    return dx, dgamma, dbeta


def _split_heads(x: np.ndarray, n_heads: int) -> np.ndarray:
    seq_len, dim = x.shape
    return x.reshape(seq_len, n_heads, dim // n_heads).transpose(1, 0, 2)


def _merge_heads(x: np.ndarray) -> np.ndarray:
    n_heads, seq_len, head_dim = x.shape
    return x.transpose(1, 0, 2).reshape(seq_len, n_heads * head_dim)


def forward(
    params: NeuralScorerParams,
    token_ids: list[int],
    segment_ids: list[int],
    *,
    train: bool = False,
    dropout_rate: float = 0.0,
    rng: Optional[np.random.Generator] = None,
    need_cache: bool = False,
    need_trace: bool = False,
    tokens: Optional[list[str]] = None,
):
    """Run the model on one encoded sequence.

    Returns (score, cache, trace).  ``cache`` (when requested) holds every
    intermediate needed by :func:`backward`; ``trace`` is an
    :class:`AttentionRecord` of post-softmax maps.  Dropout (inverted, on
    embeddings and both sublayer outputs) is applied only in train mode.
    """
    cfg = params.config
    t = params.tensors
    ids = np.asarray(token_ids, dtype=np.intp)
    segs = np.asarray(segment_ids, dtype=np.intp)
    seq_len = ids.shape[0]
    if seq_len > cfg.max_len:
        raise ValueError(f"sequence length {seq_len} exceeds max_len {cfg.max_len}")
    use_dropout = train and dropout_rate > 0.0
    if use_dropout and rng is None:
        raise ValueError("train-mode dropout requires an rng")

    def dropout_mask(shape) -> np.ndarray:
        return (rng.random(shape) >= dropout_rate) / (1.0 - dropout_rate)

    x = t["tok_emb"][ids] + t["pos_emb"][:seq_len] + t["seg_emb"][segs]
    emb_mask = None
    if use_dropout:
        emb_mask = dropout_mask(x.shape)
        x = x * emb_mask

    layer_caches = []
    attn_maps: list[np.ndarray] = []
    scale = 1.0 / np.sqrt(cfg.head_dim)
    for i in range(cfg.n_layers):
        p = f"layers.{i}"
        x_in = x
        q = x_in @ t[f"{p}.attn.wq"] + t[f"{p}.attn.bq"]
        k = x_in @ t[f"{p}.attn.wk"]
        v = x_in @ t[f"{p}.attn.wv"] + t[f"{p}.attn.bv"]
        qh = _split_heads(q, cfg.n_heads)
        kh = _split_heads(k, cfg.n_heads)
        vh = _split_heads(v, cfg.n_heads)
        scores = (qh @ kh.transpose(0, 2, 1)) * scale
        scores = scores - scores.max(axis=-1, keepdims=True)
        exp = np.exp(scores)
        probs = exp / exp.sum(axis=-1, keepdims=True)
        ctx = _merge_heads(probs @ vh)
        attn_out = ctx @ t[f"{p}.attn.wo"] + t[f"{p}.attn.bo"]
        attn_mask = None
        if use_dropout:
            attn_mask = dropout_mask(attn_out.shape)
            attn_out = attn_out * attn_mask
        res1 = x_in + attn_out
        x1, ln1_cache = _layer_norm(res1, t[f"{p}.ln1.gamma"], t[f"{p}.ln1.beta"])

        h_pre = x1 @ t[f"{p}.ffn.w1"] + t[f"{p}.ffn.b1"]
        h, h_grad = _gelu(h_pre)
        ff_out = h @ t[f"{p}.ffn.w2"] + t[f"{p}.ffn.b2"]
        ff_mask = None
        if use_dropout:
            ff_mask = dropout_mask(ff_out.shape)
            ff_out = ff_out * ff_mask
        res2 = x1 + ff_out
        x2, ln2_cache = _layer_norm(res2, t[f"{p}.ln2.gamma"], t[f"{p}.ln2.beta"])

        if need_trace:
            attn_maps.append(probs)
        if need_cache:
            layer_caches.append(
                {
                    "x_in": x_in,
                    "qh": qh,
                    "kh": kh,
                    "vh": vh,
                    "probs": probs,
                    "ctx": ctx,
                    "attn_mask": attn_mask,
                    "ln1_cache": ln1_cache,
                    "x1": x1,
                    "h_pre": h_pre,
                    "h": h,
                    "h_grad": h_grad,
                    "ff_mask": ff_mask,
                    "ln2_cache": ln2_cache,
                }
            )
        x = x2

    score = float(x[0] @ t["head.w"]) + float(t["head.b"])

    cache = None
    if need_cache:
        cache = {
            "ids": ids,
            "segs": segs,
            "emb_mask": emb_mask,
            "layers": layer_caches,
            "x_final": x,
        }
    trace = None
    if need_trace:
        trace = AttentionRecord(
            attentions=tuple(attn_maps),
            tokens=tuple(tokens) if tokens is not None else tuple(str(i) for i in token_ids),
            segments=tuple(int(s) for s in segment_ids),
        )
    return score, cache, trace


def backward(
    params: NeuralScorerParams,
    cache: dict,
    dscore: float,
    grads: dict[str, np.ndarray],
) -> None:
    """Accumulate d(dscore * score)/d(params) into ``grads``."""
    cfg = params.config
    t = params.tensors
    seq_len = cache["ids"].shape[0]
    scale = 1.0 / np.sqrt(cfg.head_dim)

    x_final = cache["x_final"]
    grads["head.w"] += dscore * x_final[0]
    grads["head.b"] += np.asarray(dscore)
    dx = np.zeros_like(x_final)
    dx[0] = dscore * t["head.w"]

    for i in reversed(range(cfg.n_layers)):
        p = f"layers.{i}"
        lc = cache["layers"][i]

        dres2, dg2, db2 = _layer_norm_backward(dx, lc["ln2_cache"], t[f"{p}.ln2.gamma"])
        grads[f"{p}.ln2.gamma"] += dg2
        grads[f"{p}.ln2.beta"] += db2
        dff_out = dres2 if lc["ff_mask"] is None else dres2 * lc["ff_mask"]
        grads[f"{p}.ffn.w2"] += lc["h"].T @ dff_out
        grads[f"{p}.ffn.b2"] += dff_out.sum(axis=0)
        dh = dff_out @ t[f"{p}.ffn.w2"].T
        dh_pre = dh * lc["h_grad"]
        grads[f"{p}.ffn.w1"] += lc["x1"].T @ dh_pre
        grads[f"{p}.ffn.b1"] += dh_pre.sum(axis=0)
        dx1 = dres2 + dh_pre @ t[f"{p}.ffn.w1"].T

        dres1, dg1, db1 = _layer_norm_backward(dx1, lc["ln1_cache"], t[f"{p}.ln1.gamma"])
        grads[f"{p}.ln1.gamma"] += dg1
        grads[f"{p}.ln1.beta"] += db1
        dattn_out = dres1 if lc["attn_mask"] is None else dres1 * lc["attn_mask"]
        grads[f"{p}.attn.wo"] += lc["ctx"].T @ dattn_out
        grads[f"{p}.attn.bo"] += dattn_out.sum(axis=0)
        dctx = dattn_out @ t[f"{p}.attn.wo"].T
        dctx_h = _split_heads(dctx, cfg.n_heads)

        probs = lc["probs"]
        dprobs = dctx_h @ lc["vh"].transpose(0, 2, 1)
        dvh = probs.transpose(0, 2, 1) @ dctx_h
        dscores = (dprobs - (dprobs * probs).sum(axis=-1, keepdims=True)) * probs
        dqh = (dscores @ lc["kh"]) * scale
        dkh = (dscores.transpose(0, 2, 1) @ lc["qh"]) * scale

        dq = _merge_heads(dqh)
        dk = _merge_heads(dkh)
        dv = _merge_heads(dvh)
        x_in = lc["x_in"]
        grads[f"{p}.attn.wq"] += x_in.T @ dq
        grads[f"{p}.attn.bq"] += dq.sum(axis=0)
        grads[f"{p}.attn.wk"] += x_in.T @ dk
        grads[f"{p}.attn.wv"] += x_in.T @ dv
        grads[f"{p}.attn.bv"] += dv.sum(axis=0)

        dx = (
            dres1
            + dq @ t[f"{p}.attn.wq"].T
            + dk @ t[f"{p}.attn.wk"].T
            + dv @ t[f"{p}.attn.wv"].T
        )

    demb = dx if cache["emb_mask"] is None else dx * cache["emb_mask"]
    np.add.at(grads["tok_emb"], cache["ids"], demb)
    grads["pos_emb"][:seq_len] += demb
    np.add.at(grads["seg_emb"], cache["segs"], demb)


def neural_cost(
    params: NeuralScorerParams,
    vocab: Vocabulary,
    text: str,
    caption: str,
    mode: str = "infer",
    rng: Optional[np.random.Generator] = None,
    dropout_rate: float = 0.0,
    need_trace: bool = False,
) -> tuple[float, Optional[AttentionRecord]]:
    """Score one (text, caption) pair; lower cost means better match.

    ``infer`` mode is deterministic (dropout disabled); ``train`` mode
    applies dropout at ``dropout_rate`` using ``rng``.  Raises ValueError
    when either input yields no tokens.
    """
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    ids, segments, tokens = encode_pair(vocab, text, caption, params.config.max_len)
    score, _, trace = forward(
        params,
        ids,
        segments,
        train=(mode == "train"),
        dropout_rate=dropout_rate if mode == "train" else 0.0,
        rng=rng,
        need_trace=need_trace,
        tokens=tokens,
    )
    return score, trace
