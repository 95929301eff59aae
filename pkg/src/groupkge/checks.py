"""Randomized verification of the group axioms for every block kind.

Backs the ``check`` CLI subcommand and the acceptance suite: draws random
block parameters, builds the matrices, and verifies closure, identity,
inverse, associativity, and action compatibility to a tight tolerance. It
also classifies the kind as abelian or non-abelian from the largest
commutator observed over the sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .groups import (
    GroupKind,
    apply_blocks,
    build_blocks,
    compose_blocks,
    decode_complex,
    identity_block,
    inverse_block,
)

AXIOM_TOL = 1e-9
COMMUTATOR_WITNESS = 0.1


@dataclass
class CheckReport:
    """Outcome of one axiom run: per-axiom worst violations and the verdict."""

    kind: GroupKind
    n_samples: int
    violations: dict = field(default_factory=dict)  # axiom name -> worst violation
    failures: list = field(default_factory=list)  # human-readable diagnostics
    max_commutator: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def abelian_label(self) -> str:
        return "Abelian" if self.max_commutator <= AXIOM_TOL else "non-Abelian"

    def lines(self):
        yield f"group={self.kind.value} samples={self.n_samples}"
        for name, worst in self.violations.items():
            status = "ok" if worst <= AXIOM_TOL else "FAIL"
            yield f"  {name:<22} worst={worst:.3e}  {status}"
        yield f"  commutator max |ab-ba| = {self.max_commutator:.3e} -> {self.abelian_label}"
        for msg in self.failures:
            yield f"  FAIL: {msg}"


def _sample(kind: GroupKind, n: int, rng) -> np.ndarray:
    q = kind.param_count
    if kind is GroupKind.TRANSLATION:
        return rng.uniform(-2.0, 2.0, (n, 1))
    if kind is GroupKind.GL1R:
        return rng.uniform(0.1, 2.0, (n, 1)) * rng.choice([-1.0, 1.0], (n, 1))
    if kind is GroupKind.GL1C:
        return np.column_stack([rng.uniform(0.1, 2.0, n), rng.uniform(0.0, 2 * np.pi, n)])
    return rng.uniform(0.0, 2 * np.pi, (n, q))


def matrix_violation(kind: GroupKind, blocks: np.ndarray) -> np.ndarray:
    """Per-block worst deviation from the kind's structural constraints.

    Orthogonality and unit determinant for SO3, unitarity (checked on the
    real encoding) and unit complex determinant for SU2, unit column norms
    for U1, and invertibility for the GL kinds. Translations have no
    constraint beyond finiteness.
    """
    blocks = np.asarray(blocks, dtype=np.float64)
    n = blocks.shape[0]
    if kind is GroupKind.TRANSLATION:
        return np.where(np.isfinite(blocks).all(axis=(-1, -2)), 0.0, np.inf)
    if kind is GroupKind.GL1R:
        return np.where(blocks[:, 0, 0] != 0.0, 0.0, np.inf)
    if kind is GroupKind.GL1C:
        det = blocks[:, 0, 0] ** 2 + blocks[:, 1, 0] ** 2
        # the real encoding of a nonzero complex scalar: also check symmetry
        enc = np.abs(blocks[:, 0, 0] - blocks[:, 1, 1]) + np.abs(blocks[:, 0, 1] + blocks[:, 1, 0])
        return np.where(det > 0.0, enc, np.inf)
    if kind is GroupKind.U1:
        col_norms = np.linalg.norm(blocks, axis=-2)
        return np.abs(col_norms - 1.0).max(axis=-1)
    p = kind.rep_dim
    gram_err = np.abs(blocks @ np.swapaxes(blocks, -1, -2) - np.eye(p)).reshape(n, -1).max(axis=-1)
    if kind is GroupKind.SO3:
        det_err = np.abs(np.linalg.det(blocks) - 1.0)
    else:
        det_err = np.abs(np.linalg.det(decode_complex(blocks)) - 1.0)
    return np.maximum(gram_err, det_err)


def run_group_checks(kind: GroupKind, n_samples: int, seed: int = 0, corrupt=None) -> CheckReport:
    """Draw ``n_samples`` random elements and verify the group axioms.

    ``corrupt``, if given, is applied to the built matrix stack before
    checking; it exists so tests can verify that broken elements are caught.
    """
    rng = np.random.default_rng(seed)
    report = CheckReport(kind=kind, n_samples=n_samples)
    params_a = _sample(kind, n_samples, rng)
    params_b = _sample(kind, n_samples, rng)
    params_c = _sample(kind, n_samples, rng)
    a = build_blocks(kind, params_a)
    b = build_blocks(kind, params_b)
    c = build_blocks(kind, params_c)
    if corrupt is not None:
        a = corrupt(a)
    ident = identity_block(kind)

    def record(name, errs, params):
        worst = float(np.max(errs))
        report.violations[name] = worst
        if worst > AXIOM_TOL:
            at = int(np.argmax(errs))
            report.failures.append(f"{name}: violation {worst:.3e} at params {params[at].tolist()}")

    record("element validity", matrix_violation(kind, a), params_a)
    ab = compose_blocks(kind, a, b)
    record("closure", matrix_violation(kind, ab), params_a)
    left = np.abs(compose_blocks(kind, np.broadcast_to(ident, a.shape), a) - a)
    right = np.abs(compose_blocks(kind, a, np.broadcast_to(ident, a.shape)) - a)
    record("identity", np.maximum(left, right).reshape(n_samples, -1).max(axis=-1), params_a)
    inv_err = np.abs(compose_blocks(kind, a, inverse_block(kind, a)) - ident)
    record("inverse", inv_err.reshape(n_samples, -1).max(axis=-1), params_a)
    assoc = np.abs(
        compose_blocks(kind, compose_blocks(kind, a, b), c)
        - compose_blocks(kind, a, compose_blocks(kind, b, c))
    )
    record("associativity", assoc.reshape(n_samples, -1).max(axis=-1), params_a)

    x = rng.normal(size=(n_samples, kind.rep_dim))
    compat = np.abs(apply_blocks(kind, ab, x) - apply_blocks(kind, a, apply_blocks(kind, b, x)))
    record("action compatibility", compat.max(axis=-1), params_a)

    comm = np.abs(compose_blocks(kind, a, b) - compose_blocks(kind, b, a))
    report.max_commutator = float(comm.max())
    expected_abelian = kind.is_abelian
    if expected_abelian and report.max_commutator > AXIOM_TOL:
        report.failures.append(
            f"commutativity: {kind.value} should be abelian, commutator {report.max_commutator:.3e}"
        )
    if not expected_abelian and report.max_commutator <= COMMUTATOR_WITNESS:
        report.failures.append(
            f"commutativity: no non-abelian witness above {COMMUTATOR_WITNESS} "
            f"(max {report.max_commutator:.3e})"
        )
    return report
