"""Self-adversarial margin loss and its analytic gradients.

For a positive triple with score s and negatives with scores s'_i the loss is

    L = -log sigmoid(margin - s) - sum_i w_i log sigmoid(s'_i - margin)

where the weights w_i are a softmax of temperature * (margin - s'_i) over the
per-positive negative set (the margin shift cancels inside the softmax). The
weights are treated as constants: no gradient flows through them.

Scores here are "distance-like" (lower = more plausible): the Lp distances
directly, or negated similarities for the cos kinds, so one loss expression
serves every model. Gradients with respect to entity components and relation
parameters are computed in closed form through the block matrices and are
checked against central finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError
from .groups import GroupKind, build_blocks_with_grads
from .model import EmbeddingTables, ModelConfig


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _softplus(z):
    # -log sigmoid(-z) = log(1 + e^z), numerically stable
    return np.logaddexp(0.0, z)


@dataclass(frozen=True)
class LossParams:
    """Margin, adversarial temperature, and negatives per positive."""

    margin: float
    temperature: float = 1.0
    n_neg: int = 128

    def __post_init__(self):
        if self.temperature <= 0:
            raise ConfigError(f"temperature must be > 0, got {self.temperature}")
        if self.n_neg < 1:
            raise ConfigError(f"n_neg must be positive, got {self.n_neg}")


@dataclass
class NegativeBatch:
    """Corrupted triples for one positive; scores/weights filled by the loss."""

    triples: np.ndarray  # (n_neg, 3) int64
    corrupts_head: np.ndarray  # (n_neg,) bool
    scores: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None


@dataclass
class GradientBuffer:
    """Sparse gradients: unique touched row ids with dense gradient rows."""

    entity_ids: np.ndarray
    entity_grads: np.ndarray
    relation_ids: np.ndarray
    relation_grads: np.ndarray

    def entity_row(self, idx: int) -> np.ndarray:
        pos = np.searchsorted(self.entity_ids, idx)
        if pos == len(self.entity_ids) or self.entity_ids[pos] != idx:
            raise KeyError(f"entity {idx} not touched by this batch")
        return self.entity_grads[pos]

    def relation_row(self, idx: int) -> np.ndarray:
        pos = np.searchsorted(self.relation_ids, idx)
        if pos == len(self.relation_ids) or self.relation_ids[pos] != idx:
            raise KeyError(f"relation {idx} not touched by this batch")
        return self.relation_grads[pos]


def sample_negatives(rng, triple, n_neg: int, n_entities: int) -> NegativeBatch:
    """Corrupt head or tail (50/50 per sample), replacement uniform over the
    other entities. Not filtered against known true triples."""
    if n_entities < 2:
        raise ConfigError("negative sampling needs at least 2 entities")
    h, r, t = (int(v) for v in triple)
    corrupts_head = rng.random(n_neg) < 0.5
    draws = rng.integers(0, n_entities - 1, size=n_neg)
    original = np.where(corrupts_head, h, t)
    replacement = draws + (draws >= original)
    triples = np.empty((n_neg, 3), dtype=np.int64)
    triples[:, 0] = np.where(corrupts_head, replacement, h)
    triples[:, 1] = r
    triples[:, 2] = np.where(corrupts_head, t, replacement)
    return NegativeBatch(triples=triples, corrupts_head=corrupts_head)


def sample_negative_batch(rng, triples: np.ndarray, n_neg: int, n_entities: int) -> list:
    """Vectorized :func:`sample_negatives` for a whole positive batch."""
    if n_entities < 2:
        raise ConfigError("negative sampling needs at least 2 entities")
    triples = np.asarray(triples, dtype=np.int64)
    b = triples.shape[0]
    corrupts_head = rng.random((b, n_neg)) < 0.5
    draws = rng.integers(0, n_entities - 1, size=(b, n_neg))
    original = np.where(corrupts_head, triples[:, 0, None], triples[:, 2, None])
    replacement = draws + (draws >= original)
    neg = np.empty((b, n_neg, 3), dtype=np.int64)
    neg[:, :, 0] = np.where(corrupts_head, replacement, triples[:, 0, None])
    neg[:, :, 1] = triples[:, 1, None]
    neg[:, :, 2] = np.where(corrupts_head, triples[:, 2, None], replacement)
    return [NegativeBatch(triples=neg[i], corrupts_head=corrupts_head[i]) for i in range(b)]


def adversarial_weights(neg_scores, temperature: float) -> np.ndarray:
    """Softmax of temperature * (margin - score) over the last axis.

    The margin shifts every logit equally and cancels, so it does not appear
    here. ``temperature = 0`` yields the uniform limit. The result is meant
    to be used as a constant (no gradient flows through it).
    """
    neg_scores = np.asarray(neg_scores, dtype=np.float64)
    z = -temperature * neg_scores
    z = z - z.max(axis=-1, keepdims=True)
    w = np.exp(z)
    return w / w.sum(axis=-1, keepdims=True)


def triple_loss(pos_score: float, neg_scores, weights, margin: float) -> float:
    """Loss of one positive with its weighted negatives; always positive."""
    neg_scores = np.asarray(neg_scores, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    return float(_softplus(pos_score - margin) + (weights * _softplus(margin - neg_scores)).sum())


# ---------------------------------------------------------------------------
# batched forward / backward
# ---------------------------------------------------------------------------


def _stack_negatives(negatives: Sequence[NegativeBatch]):
    neg_triples = np.stack([nb.triples for nb in negatives])
    corrupts_head = np.stack([nb.corrupts_head for nb in negatives])
    return neg_triples, corrupts_head


def _forward(config: ModelConfig, tables: EmbeddingTables, positives, neg_triples, want_grads):
    """Transform heads and score positives and negatives in one pass.

    Returns loss-facing (distance-like) scores plus the intermediates the
    backward pass needs.
    """
    kind = config.kind
    n_b, p, q = config.n_blocks, kind.rep_dim, kind.param_count
    h_pos, r_pos, t_pos = positives[:, 0], positives[:, 1], positives[:, 2]

    x_pos = tables.entities[h_pos]
    tv_pos = tables.entities[t_pos]
    x_neg = tables.entities[neg_triples[:, :, 0]]
    tv_neg = tables.entities[neg_triples[:, :, 2]]

    blocks = grads = None
    if kind is GroupKind.TRANSLATION:
        delta = tables.relations[r_pos]
        u_pos = x_pos + delta
        u_neg = x_neg + delta[:, None, :]
    else:
        rel_params = tables.relations[r_pos].reshape(-1, n_b, q)
        blocks, grads = build_blocks_with_grads(kind, rel_params)
        if not want_grads:
            grads = None
        xb_pos = x_pos.reshape(-1, n_b, p)
        xb_neg = x_neg.reshape(x_neg.shape[0], x_neg.shape[1], n_b, p)
        u_pos = np.einsum("bnij,bnj->bni", blocks, xb_pos).reshape(x_pos.shape)
        u_neg = np.einsum("bnij,bknj->bkni", blocks, xb_neg).reshape(x_neg.shape)

    if config.similarity == "cos":
        s_pos = -(u_pos * tv_pos).sum(axis=-1)
        s_neg = -(u_neg * tv_neg).sum(axis=-1)
        d_pos = d_neg = None
    else:
        d_pos = u_pos - tv_pos
        d_neg = u_neg - tv_neg
        if config.similarity == "l1":
            s_pos = np.abs(d_pos).sum(axis=-1)
            s_neg = np.abs(d_neg).sum(axis=-1)
        else:
            s_pos = np.sqrt((d_pos * d_pos).sum(axis=-1))
            s_neg = np.sqrt((d_neg * d_neg).sum(axis=-1))
    return {
        "x_pos": x_pos, "x_neg": x_neg, "tv_pos": tv_pos, "tv_neg": tv_neg,
        "u_pos": u_pos, "u_neg": u_neg, "d_pos": d_pos, "d_neg": d_neg,
        "s_pos": s_pos, "s_neg": s_neg, "blocks": blocks, "grads": grads,
    }


def _score_grads(config, fwd):
    """d score / d u and d score / d tail for every scored row."""
    if config.similarity == "cos":
        gu_pos, gt_pos = -fwd["tv_pos"], -fwd["u_pos"]
        gu_neg, gt_neg = -fwd["tv_neg"], -fwd["u_neg"]
    elif config.similarity == "l1":
        gu_pos = np.sign(fwd["d_pos"])
        gu_neg = np.sign(fwd["d_neg"])
        gt_pos, gt_neg = -gu_pos, -gu_neg
    else:
        gu_pos = fwd["d_pos"] / np.maximum(fwd["s_pos"], 1e-300)[:, None]
        gu_neg = fwd["d_neg"] / np.maximum(fwd["s_neg"], 1e-300)[:, :, None]
        gt_pos, gt_neg = -gu_pos, -gu_neg
    return gu_pos, gt_pos, gu_neg, gt_neg


def batch_loss(
    config: ModelConfig,
    tables: EmbeddingTables,
    positives,
    negatives: Sequence[NegativeBatch],
    params: LossParams,
    frozen_weights: Optional[np.ndarray] = None,
) -> float:
    """Mean loss over a batch, without gradients.

    ``frozen_weights`` (batch, n_neg) overrides the adversarial softmax;
    finite-difference checks use it to keep the weights constant while
    parameters are perturbed.
    """
    positives = np.asarray(positives, dtype=np.int64)
    neg_triples, _ = _stack_negatives(negatives)
    fwd = _forward(config, tables, positives, neg_triples, want_grads=False)
    if frozen_weights is None:
        weights = adversarial_weights(fwd["s_neg"], params.temperature)
    else:
        weights = np.asarray(frozen_weights, dtype=np.float64)
    per_triple = _softplus(fwd["s_pos"] - params.margin) + (
        weights * _softplus(params.margin - fwd["s_neg"])
    ).sum(axis=1)
    return float(per_triple.mean())


def loss_and_gradients(
    config: ModelConfig,
    tables: EmbeddingTables,
    positives,
    negatives: Sequence[NegativeBatch],
    params: LossParams,
):
    """Mean batch loss and its gradient w.r.t. every touched embedding row.

    Fills ``scores`` and ``weights`` on each :class:`NegativeBatch`. Returns
    ``(loss, GradientBuffer)``; the buffer holds gradients of the mean loss,
    so rows touched by several batch members accumulate.
    """
    positives = np.asarray(positives, dtype=np.int64)
    if positives.ndim != 2 or positives.shape[1] != 3:
        raise ConfigError(f"positives must have shape (batch, 3), got {positives.shape}")
    if len(negatives) != positives.shape[0]:
        raise ConfigError("one NegativeBatch is required per positive triple")
    neg_triples, _ = _stack_negatives(negatives)
    b = positives.shape[0]
    kind = config.kind
    n_b, p, q = config.n_blocks, kind.rep_dim, kind.param_count

    fwd = _forward(config, tables, positives, neg_triples, want_grads=True)
    s_pos, s_neg = fwd["s_pos"], fwd["s_neg"]
    weights = adversarial_weights(s_neg, params.temperature)
    per_triple = _softplus(s_pos - params.margin) + (weights * _softplus(params.margin - s_neg)).sum(axis=1)
    loss = float(per_triple.mean())
    for i, nb in enumerate(negatives):
        nb.scores = s_neg[i].copy()
        nb.weights = weights[i].copy()

    # d loss / d score, including the 1/batch factor of the mean
    f_pos = _sigmoid(s_pos - params.margin) / b
    f_neg = -weights * _sigmoid(params.margin - s_neg) / b

    gu_pos, gt_pos, gu_neg, gt_neg = _score_grads(config, fwd)
    gu_pos = gu_pos * f_pos[:, None]
    gt_pos = gt_pos * f_pos[:, None]
    gu_neg = gu_neg * f_neg[:, :, None]
    gt_neg = gt_neg * f_neg[:, :, None]

    if kind is GroupKind.TRANSLATION:
        head_pos_grad = gu_pos
        head_neg_grad = gu_neg
        rel_grads = gu_pos + gu_neg.sum(axis=1)
    else:
        blocks, dblocks = fwd["blocks"], fwd["grads"]
        gub_pos = gu_pos.reshape(b, n_b, p)
        gub_neg = gu_neg.reshape(b, gu_neg.shape[1], n_b, p)
        head_pos_grad = np.einsum("bnji,bnj->bni", blocks, gub_pos).reshape(b, -1)
        head_neg_grad = np.einsum("bnji,bknj->bkni", blocks, gub_neg).reshape(gu_neg.shape)
        # relation gradient through dM: <dM/dtheta, sum_rows gu x^T>
        outer = np.einsum("bni,bnj->bnij", gub_pos, fwd["x_pos"].reshape(b, n_b, p))
        outer += np.einsum("bkni,bknj->bnij", gub_neg, fwd["x_neg"].reshape(b, -1, n_b, p))
        rel_grads = np.einsum("bnqij,bnij->bnq", dblocks, outer).reshape(b, n_b * q)

    # scatter-add into unique rows
    ent_ids = np.concatenate([
        positives[:, 0], positives[:, 2],
        neg_triples[:, :, 0].ravel(), neg_triples[:, :, 2].ravel(),
    ])
    ent_rows = np.concatenate([
        head_pos_grad, gt_pos,
        head_neg_grad.reshape(-1, head_neg_grad.shape[-1]),
        gt_neg.reshape(-1, gt_neg.shape[-1]),
    ])
    uniq_e, inv_e = np.unique(ent_ids, return_inverse=True)
    acc_e = np.zeros((uniq_e.size, ent_rows.shape[1]))
    np.add.at(acc_e, inv_e, ent_rows)

    uniq_r, inv_r = np.unique(positives[:, 1], return_inverse=True)
    acc_r = np.zeros((uniq_r.size, rel_grads.shape[1]))
    np.add.at(acc_r, inv_r, rel_grads)

    return loss, GradientBuffer(uniq_e, acc_e, uniq_r, acc_r)
