"""Embedding tables and the triple score function.

A model is a group kind plus a block count: every relation row holds
``n_blocks * q`` group parameters and every entity row ``n_blocks * p`` real
components. Scoring transforms the head entity by the relation's
block-diagonal action and compares against the tail, either with an Lp
distance (lower is more plausible) or, for the GL(1) kinds, with the dot
product of the transformed head and the tail (higher is more plausible); the
latter equals the usual trilinear real-part similarity under the complex
encoding. :func:`to_plausibility` maps both onto one "higher is better"
ordering for ranking.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .groups import GroupKind, build_blocks, canonicalize_params

SIMILARITIES = ("l1", "l2", "cos")
COS_KINDS = (GroupKind.GL1R, GroupKind.GL1C)

CHECKPOINT_MAGIC = b"NAGE"
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<4sIBIQQ")
_KIND_TAGS = {kind: tag for tag, kind in enumerate(GroupKind)}
_TAG_KINDS = {tag: kind for kind, tag in _KIND_TAGS.items()}


def default_similarity(kind: GroupKind) -> str:
    return "cos" if kind in COS_KINDS else "l2"


@dataclass(frozen=True)
class ModelConfig:
    """Group kind, block count, similarity measure, and loss margin."""

    kind: GroupKind
    n_blocks: int
    similarity: str = "l2"
    margin: float = 12.0

    def __post_init__(self):
        if self.n_blocks < 1:
            raise ConfigError(f"n_blocks must be positive, got {self.n_blocks}")
        if self.similarity not in SIMILARITIES:
            raise ConfigError(f"similarity must be one of {SIMILARITIES}, got {self.similarity!r}")
        if self.similarity == "cos" and self.kind not in COS_KINDS:
            raise ConfigError(f"cos similarity requires a GL(1) kind, got {self.kind.value}")
        if self.margin < 0:
            raise ConfigError(f"margin must be >= 0, got {self.margin}")

    @property
    def entity_dim(self) -> int:
        return self.n_blocks * self.kind.rep_dim

    @property
    def relation_dim(self) -> int:
        return self.n_blocks * self.kind.param_count


@dataclass
class EmbeddingTables:
    """Dense entity and relation parameter tables for one model."""

    kind: GroupKind
    n_blocks: int
    entities: np.ndarray  # (n_entities, n_blocks * rep_dim), float64
    relations: np.ndarray  # (n_relations, n_blocks * param_count), float64

    @property
    def n_entities(self) -> int:
        return self.entities.shape[0]

    @property
    def n_relations(self) -> int:
        return self.relations.shape[0]

    def copy(self) -> "EmbeddingTables":
        return EmbeddingTables(self.kind, self.n_blocks, self.entities.copy(), self.relations.copy())

    def relation_params(self, rel: int) -> np.ndarray:
        """Relation row reshaped to (n_blocks, q)."""
        return self.relations[rel].reshape(self.n_blocks, self.kind.param_count)

    def entity_blocks(self, rows: np.ndarray) -> np.ndarray:
        """Entity rows reshaped to (..., n_blocks, p)."""
        return rows.reshape(rows.shape[:-1] + (self.n_blocks, self.kind.rep_dim))


def init_relation_params(kind: GroupKind, shape, rng) -> np.ndarray:
    """Random relation parameters over their canonical ranges.

    Angles are uniform on [0, 2pi) (the SU2 polar angle on [0, pi]),
    translation offsets uniform on [-1, 1], GL1R scalars uniform on [-1, 1]
    away from zero, and GL1C moduli uniform on [0.5, 1.5].
    """
    n_rows, n_blocks = shape
    q = kind.param_count
    out = np.empty((n_rows, n_blocks, q))
    if kind is GroupKind.TRANSLATION:
        out[..., 0] = rng.uniform(-1.0, 1.0, (n_rows, n_blocks))
    elif kind is GroupKind.GL1R:
        out[..., 0] = rng.uniform(0.05, 1.0, (n_rows, n_blocks)) * rng.choice([-1.0, 1.0], (n_rows, n_blocks))
    elif kind is GroupKind.GL1C:
        out[..., 0] = rng.uniform(0.5, 1.5, (n_rows, n_blocks))
        out[..., 1] = rng.uniform(0.0, 2 * np.pi, (n_rows, n_blocks))
    elif kind is GroupKind.SU2:
        out[..., 0] = rng.uniform(0.0, 2 * np.pi, (n_rows, n_blocks))
        out[..., 1] = rng.uniform(0.0, np.pi, (n_rows, n_blocks))
        out[..., 2] = rng.uniform(0.0, 2 * np.pi, (n_rows, n_blocks))
    else:
        out[...] = rng.uniform(0.0, 2 * np.pi, (n_rows, n_blocks, q))
    return out.reshape(n_rows, n_blocks * q)


def init_tables(config: ModelConfig, n_entities: int, n_relations: int, seed: int) -> EmbeddingTables:
    """Fresh tables: entities uniform in +-margin/sqrt(entity_dim), relations
    uniform over their canonical parameter ranges. Deterministic in ``seed``."""
    if n_entities < 1 or n_relations < 1:
        raise ConfigError(f"need at least one entity and one relation, got {n_entities}, {n_relations}")
    rng = np.random.default_rng(seed)
    bound = config.margin / np.sqrt(config.entity_dim)
    entities = rng.uniform(-bound, bound, (n_entities, config.entity_dim))
    relations = init_relation_params(config.kind, (n_relations, config.n_blocks), rng)
    return EmbeddingTables(config.kind, config.n_blocks, entities, relations)


# ---------------------------------------------------------------------------
# scoring
# ---------------------------------------------------------------------------


def relation_blocks(config: ModelConfig, tables: EmbeddingTables, rel: int) -> np.ndarray:
    """Block matrices (n_blocks, p, p) of one relation."""
    return build_blocks(config.kind, tables.relation_params(rel))


def transform(config: ModelConfig, tables: EmbeddingTables, rel: int, vecs: np.ndarray) -> np.ndarray:
    """Apply a relation's block-diagonal action to entity rows (..., entity_dim)."""
    kind = config.kind
    if kind is GroupKind.TRANSLATION:
        return vecs + tables.relations[rel]
    blocks = relation_blocks(config, tables, rel)
    parts = tables.entity_blocks(vecs)
    moved = np.einsum("nij,...nj->...ni", blocks, parts)
    return moved.reshape(vecs.shape)


def _compare(config: ModelConfig, moved: np.ndarray, tails: np.ndarray) -> np.ndarray:
    """Raw scores of a transformed head against a (m, entity_dim) tail stack."""
    if config.similarity == "cos":
        return (tails * moved).sum(axis=1)
    diff = moved - tails
    if config.similarity == "l1":
        return np.abs(diff).sum(axis=1)
    return np.sqrt((diff * diff).sum(axis=1))


def _check_ids(tables, head=None, rel=None, tail=None):
    for name, idx, size in (("head", head, tables.n_entities), ("relation", rel, tables.n_relations), ("tail", tail, tables.n_entities)):
        if idx is not None and not 0 <= idx < size:
            raise IndexError(f"{name} id {idx} out of range [0, {size})")


def score(config: ModelConfig, tables: EmbeddingTables, head: int, rel: int, tail: int) -> float:
    """Raw score of one triple: Lp distance (lower = more plausible) or cos
    similarity (higher = more plausible), depending on ``config.similarity``."""
    _check_ids(tables, head, rel, tail)
    moved = transform(config, tables, rel, tables.entities[head])
    return float(_compare(config, moved, tables.entities[tail][np.newaxis, :])[0])


def score_batch_all_tails(config: ModelConfig, tables: EmbeddingTables, head: int, rel: int) -> np.ndarray:
    """Scores of (head, rel, j) for every entity j.

    The head is transformed once and compared against the whole entity
    table with the same kernel as :func:`score`, so entry j is bit-identical
    to the pointwise call.
    """
    _check_ids(tables, head=head, rel=rel)
    moved = transform(config, tables, rel, tables.entities[head])
    return _compare(config, moved, tables.entities)


def score_batch_all_heads(config: ModelConfig, tables: EmbeddingTables, rel: int, tail: int) -> np.ndarray:
    """Scores of (j, rel, tail) for every entity j (every candidate transformed)."""
    _check_ids(tables, rel=rel, tail=tail)
    moved = transform(config, tables, rel, tables.entities)
    tail_row = tables.entities[tail]
    if config.similarity == "cos":
        return (moved * tail_row).sum(axis=1)
    diff = moved - tail_row
    if config.similarity == "l1":
        return np.abs(diff).sum(axis=1)
    return np.sqrt((diff * diff).sum(axis=1))


def to_plausibility(config: ModelConfig, raw_scores):
    """Map raw scores onto the shared "higher = more plausible" ordering."""
    raw_scores = np.asarray(raw_scores)
    return raw_scores if config.similarity == "cos" else -raw_scores


def canonicalize_tables(tables: EmbeddingTables, rows=None) -> None:
    """Wrap relation angles back into canonical ranges, in place."""
    kind = tables.kind
    q = kind.param_count
    target = tables.relations if rows is None else tables.relations[rows]
    shaped = target.reshape(-1, q)
    shaped[:] = canonicalize_params(kind, shaped)
    if rows is not None:
        tables.relations[rows] = target


# ---------------------------------------------------------------------------
# checkpoint file format
# ---------------------------------------------------------------------------
#
# little-endian: magic "NAGE", format version u32, kind tag u8, n_blocks u32,
# n_entities u64, n_relations u64, then the row-major float64 entity array
# followed by the relation array.


def save_checkpoint(path, tables: EmbeddingTables) -> None:
    header = _HEADER.pack(
        CHECKPOINT_MAGIC,
        CHECKPOINT_VERSION,
        _KIND_TAGS[tables.kind],
        tables.n_blocks,
        tables.n_entities,
        tables.n_relations,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(tables.entities, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(tables.relations, dtype="<f8").tobytes())


def load_checkpoint(path) -> EmbeddingTables:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) < _HEADER.size:
            raise DataError(f"{path}: truncated checkpoint header")
        magic, version, tag, n_blocks, n_ent, n_rel = _HEADER.unpack(raw)
        if magic != CHECKPOINT_MAGIC:
            raise DataError(f"{path}: not a checkpoint file (bad magic {magic!r})")
        if version != CHECKPOINT_VERSION:
            raise DataError(f"{path}: unsupported checkpoint version {version}")
        if tag not in _TAG_KINDS:
            raise DataError(f"{path}: unknown group kind tag {tag}")
        kind = _TAG_KINDS[tag]
        ent_count = n_ent * n_blocks * kind.rep_dim
        rel_count = n_rel * n_blocks * kind.param_count
        body = np.frombuffer(fh.read(), dtype="<f8")
        if body.size != ent_count + rel_count:
            raise DataError(
                f"{path}: checkpoint body has {body.size} values, expected {ent_count + rel_count}"
            )
    entities = body[:ent_count].reshape(n_ent, n_blocks * kind.rep_dim).copy()
    relations = body[ent_count:].reshape(n_rel, n_blocks * kind.param_count).copy()
    return EmbeddingTables(kind, n_blocks, entities, relations)
