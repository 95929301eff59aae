"""Continuous-group blocks for relation embeddings.

Relations are embedded as elements of a small matrix group and entities as
vectors in stacked copies of the group's standard representation space. This
module implements the per-block algebra: building a block matrix from group
parameters, identity / inverse / composition, the action on representation
vectors, and the parameter derivatives needed for gradient-based training.

Supported groups, with q = parameters per block and p = real components per
representation block:

    ===========  ===  ===  =============================================
    kind          q    p   block parameters
    ===========  ===  ===  =============================================
    TRANSLATION   1    1   offset (unbounded real)
    U1            1    2   phase, radians
    GL1R          1    1   nonzero scalar
    GL1C          2    2   modulus > 0, phase
    SO3           3    3   Euler angles (phi, theta, psi), Z-X-Z order
    SU2           3    4   rotation angle alpha, axis angles (theta, phi)
    ===========  ===  ===  =============================================

Complex arithmetic is encoded over the reals: a complex component x + iy is
stored as the pair (x, y), and a complex matrix entry c acts as the 2x2 real
block [[Re c, -Im c], [Im c, Re c]]. Under this encoding a unitary complex
matrix becomes an orthogonal real matrix and the conjugate transpose becomes
the plain transpose, so all six kinds share one real-matrix code path.

SO(3) blocks are the product Rz(phi) Rx(theta) Rz(psi) of elementary
rotations. SU(2) blocks come from the exponential form

    cos(alpha) I + i sin(alpha) (n . J),   n = (sin t cos f, sin t sin f, cos t)

with J the Pauli generators [[0,1],[1,0]], [[0,-i],[i,0]], [[1,0],[0,-1]].
Both constructions are orthogonal/unitary with unit determinant for any
finite angles, so the group constraints hold by construction.

Translation blocks are affine rather than linear: their "matrix" is the 1x1
offset itself, composition adds offsets, and the action is vector addition.
All functions here are pure and accept arbitrary leading batch dimensions on
the parameter arrays.
"""

from __future__ import annotations

import enum

import numpy as np

from .errors import InvalidParameterError

TWO_PI = 2.0 * np.pi


class GroupKind(enum.Enum):
    """The relation-embedding group of a model."""

    TRANSLATION = "t"
    U1 = "u1"
    GL1R = "gl1r"
    GL1C = "gl1c"
    SO3 = "so3"
    SU2 = "su2"

    @property
    def param_count(self) -> int:
        """Number of real parameters per block (q)."""
        return _SHAPES[self][0]

    @property
    def rep_dim(self) -> int:
        """Real components per representation block (p)."""
        return _SHAPES[self][1]

    @property
    def is_abelian(self) -> bool:
        return self not in (GroupKind.SO3, GroupKind.SU2)

    @classmethod
    def from_name(cls, name: str) -> "GroupKind":
        try:
            return cls(name.strip().lower())
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise InvalidParameterError(f"unknown group kind {name!r}; expected one of: {valid}")


_SHAPES = {
    GroupKind.TRANSLATION: (1, 1),
    GroupKind.U1: (1, 2),
    GroupKind.GL1R: (1, 1),
    GroupKind.GL1C: (2, 2),
    GroupKind.SO3: (3, 3),
    GroupKind.SU2: (3, 4),
}


def validate_params(kind: GroupKind, params: np.ndarray) -> np.ndarray:
    """Check shape and domain of block parameters; return them as float64.

    Angles may take any finite value (the block matrices are periodic in
    them); only structural constraints are enforced: finiteness everywhere,
    a nonzero scalar for GL1R, and a positive modulus for GL1C.
    """
    params = np.asarray(params, dtype=np.float64)
    q = kind.param_count
    if params.shape[-1:] != (q,):
        raise InvalidParameterError(
            f"{kind.value} blocks take {q} parameters, got shape {params.shape}"
        )
    if not np.all(np.isfinite(params)):
        raise InvalidParameterError(f"non-finite {kind.value} block parameter")
    if kind is GroupKind.GL1R and np.any(params[..., 0] == 0.0):
        raise InvalidParameterError("GL1R scalar must be nonzero (group element must be invertible)")
    if kind is GroupKind.GL1C and np.any(params[..., 0] <= 0.0):
        raise InvalidParameterError("GL1C modulus must be positive")
    return params


def identity_params(kind: GroupKind) -> np.ndarray:
    """Parameters of the group identity element."""
    if kind is GroupKind.GL1R:
        return np.array([1.0])
    if kind is GroupKind.GL1C:
        return np.array([1.0, 0.0])
    return np.zeros(kind.param_count)


def canonicalize_params(kind: GroupKind, params: np.ndarray) -> np.ndarray:
    """Map parameters to their canonical ranges without changing the element.

    Angles wrap into [0, 2pi). A negative GL1C modulus flips to
    (-m, phase + pi), and an SU2 polar angle beyond pi reflects through
    (theta, phi) -> (2pi - theta, phi + pi); both leave the built matrix
    unchanged. Offsets and GL1R scalars pass through untouched.
    """
    params = np.asarray(params, dtype=np.float64)
    if kind in (GroupKind.TRANSLATION, GroupKind.GL1R):
        return params.copy()
    out = params.copy()
    if kind is GroupKind.U1:
        out[..., 0] %= TWO_PI
    elif kind is GroupKind.GL1C:
        neg = out[..., 0] < 0.0
        out[..., 0] = np.abs(out[..., 0])
        out[..., 1] = np.where(neg, out[..., 1] + np.pi, out[..., 1]) % TWO_PI
    elif kind is GroupKind.SO3:
        out %= TWO_PI
    elif kind is GroupKind.SU2:
        out[..., 0] %= TWO_PI
        theta = out[..., 1] % TWO_PI
        over = theta > np.pi
        out[..., 1] = np.where(over, TWO_PI - theta, theta)
        out[..., 2] = np.where(over, out[..., 2] + np.pi, out[..., 2]) % TWO_PI
    return out


# ---------------------------------------------------------------------------
# block construction
# ---------------------------------------------------------------------------


def _rot2(angle):
    """2x2 rotation [[c,-s],[s,c]] for a (...,)-shaped angle array."""
    c, s = np.cos(angle), np.sin(angle)
    out = np.empty(angle.shape + (2, 2))
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


def _rot2_deriv(angle):
    c, s = np.cos(angle), np.sin(angle)
    out = np.empty(angle.shape + (2, 2))
    out[..., 0, 0] = -s
    out[..., 0, 1] = -c
    out[..., 1, 0] = c
    out[..., 1, 1] = -s
    return out


def _rz(angle, deriv=False):
    """Rotation about z (3x3), or its angle derivative."""
    c, s = np.cos(angle), np.sin(angle)
    out = np.zeros(angle.shape + (3, 3))
    if deriv:
        out[..., 0, 0] = -s
        out[..., 0, 1] = -c
        out[..., 1, 0] = c
        out[..., 1, 1] = -s
    else:
        out[..., 0, 0] = c
        out[..., 0, 1] = -s
        out[..., 1, 0] = s
        out[..., 1, 1] = c
        out[..., 2, 2] = 1.0
    return out


def _rx(angle, deriv=False):
    """Rotation about x (3x3), or its angle derivative."""
    c, s = np.cos(angle), np.sin(angle)
    out = np.zeros(angle.shape + (3, 3))
    if deriv:
        out[..., 1, 1] = -s
        out[..., 1, 2] = -c
        out[..., 2, 1] = c
        out[..., 2, 2] = -s
    else:
        out[..., 0, 0] = 1.0
        out[..., 1, 1] = c
        out[..., 1, 2] = -s
        out[..., 2, 1] = s
        out[..., 2, 2] = c
    return out


def _encode_complex(entries: np.ndarray) -> np.ndarray:
    """Real encoding of a complex matrix.

    ``entries`` has shape (..., n, n, 2) with (re, im) pairs in the last
    axis; the result has shape (..., 2n, 2n) with each complex entry c
    expanded to [[Re c, -Im c], [Im c, Re c]].
    """
    n = entries.shape[-2]
    re = entries[..., 0]
    im = entries[..., 1]
    out = np.empty(entries.shape[:-3] + (2 * n, 2 * n))
    out[..., 0::2, 0::2] = re
    out[..., 0::2, 1::2] = -im
    out[..., 1::2, 0::2] = im
    out[..., 1::2, 1::2] = re
    return out


def decode_complex(block: np.ndarray) -> np.ndarray:
    """Inverse of the real encoding: (..., 2n, 2n) -> complex (..., n, n)."""
    return block[..., 0::2, 0::2] + 1j * block[..., 1::2, 0::2]


def _su2_entries(params):
    """Complex entries (..., 2, 2, 2) of the SU(2) block for (alpha, theta, phi)."""
    alpha, theta, phi = params[..., 0], params[..., 1], params[..., 2]
    ca, sa = np.cos(alpha), np.sin(alpha)
    st, ct = np.sin(theta), np.cos(theta)
    cf, sf = np.cos(phi), np.sin(phi)
    nx, ny, nz = st * cf, st * sf, ct
    ent = np.empty(alpha.shape + (2, 2, 2))
    ent[..., 0, 0, 0] = ca
    ent[..., 0, 0, 1] = sa * nz
    ent[..., 0, 1, 0] = sa * ny
    ent[..., 0, 1, 1] = sa * nx
    ent[..., 1, 0, 0] = -sa * ny
    ent[..., 1, 0, 1] = sa * nx
    ent[..., 1, 1, 0] = ca
    ent[..., 1, 1, 1] = -sa * nz
    return ent


def _su2_entry_derivs(params):
    """Derivatives of the SU(2) complex entries w.r.t. (alpha, theta, phi).

    Returns shape (..., 3, 2, 2, 2): derivative index before the entry grid.
    """
    alpha, theta, phi = params[..., 0], params[..., 1], params[..., 2]
    ca, sa = np.cos(alpha), np.sin(alpha)
    st, ct = np.sin(theta), np.cos(theta)
    cf, sf = np.cos(phi), np.sin(phi)
    nx, ny, nz = st * cf, st * sf, ct
    # axis derivatives: d n / d theta and d n / d phi
    dnx_t, dny_t, dnz_t = ct * cf, ct * sf, -st
    dnx_f, dny_f = -st * sf, st * cf

    out = np.zeros(alpha.shape + (3, 2, 2, 2))
    # d/d alpha
    out[..., 0, 0, 0, 0] = -sa
    out[..., 0, 0, 0, 1] = ca * nz
    out[..., 0, 0, 1, 0] = ca * ny
    out[..., 0, 0, 1, 1] = ca * nx
    out[..., 0, 1, 0, 0] = -ca * ny
    out[..., 0, 1, 0, 1] = ca * nx
    out[..., 0, 1, 1, 0] = -sa
    out[..., 0, 1, 1, 1] = -ca * nz
    # d/d theta
    out[..., 1, 0, 0, 1] = sa * dnz_t
    out[..., 1, 0, 1, 0] = sa * dny_t
    out[..., 1, 0, 1, 1] = sa * dnx_t
    out[..., 1, 1, 0, 0] = -sa * dny_t
    out[..., 1, 1, 0, 1] = sa * dnx_t
    out[..., 1, 1, 1, 1] = -sa * dnz_t
    # d/d phi (diagonal entries do not depend on phi)
    out[..., 2, 0, 1, 0] = sa * dny_f
    out[..., 2, 0, 1, 1] = sa * dnx_f
    out[..., 2, 1, 0, 0] = -sa * dny_f
    out[..., 2, 1, 0, 1] = sa * dnx_f
    return out


def build_blocks(kind: GroupKind, params) -> np.ndarray:
    """Build block matrices for a stack of parameter vectors.

    ``params`` has shape (..., q); the result has shape (..., p, p). For
    TRANSLATION the 1x1 "matrix" holds the offset itself.
    """
    params = validate_params(kind, params)
    if kind in (GroupKind.TRANSLATION, GroupKind.GL1R):
        return params[..., np.newaxis]
    if kind is GroupKind.U1:
        return _rot2(params[..., 0])
    if kind is GroupKind.GL1C:
        return params[..., 0, np.newaxis, np.newaxis] * _rot2(params[..., 1])
    if kind is GroupKind.SO3:
        return _rz(params[..., 0]) @ _rx(params[..., 1]) @ _rz(params[..., 2])
    return _encode_complex(_su2_entries(params))


def build_blocks_with_grads(kind: GroupKind, params):
    """Blocks plus their parameter derivatives.

    Returns ``(blocks, grads)`` with shapes (..., p, p) and (..., q, p, p);
    ``grads[..., k, :, :]`` is the derivative of the block with respect to
    its k-th parameter.
    """
    params = validate_params(kind, params)
    blocks = build_blocks(kind, params)
    lead = params.shape[:-1]
    if kind in (GroupKind.TRANSLATION, GroupKind.GL1R):
        grads = np.ones(lead + (1, 1, 1))
    elif kind is GroupKind.U1:
        grads = _rot2_deriv(params[..., 0])[..., np.newaxis, :, :]
    elif kind is GroupKind.GL1C:
        grads = np.empty(lead + (2, 2, 2))
        grads[..., 0, :, :] = _rot2(params[..., 1])
        grads[..., 1, :, :] = params[..., 0, np.newaxis, np.newaxis] * _rot2_deriv(params[..., 1])
    elif kind is GroupKind.SO3:
        a, b, c = params[..., 0], params[..., 1], params[..., 2]
        rz_a, rx_b, rz_c = _rz(a), _rx(b), _rz(c)
        grads = np.empty(lead + (3, 3, 3))
        grads[..., 0, :, :] = _rz(a, deriv=True) @ rx_b @ rz_c
        grads[..., 1, :, :] = rz_a @ _rx(b, deriv=True) @ rz_c
        grads[..., 2, :, :] = rz_a @ rx_b @ _rz(c, deriv=True)
    else:
        grads = _encode_complex(_su2_entry_derivs(params))
    return blocks, grads


def build_block(kind: GroupKind, params) -> np.ndarray:
    """Single-block convenience wrapper around :func:`build_blocks`."""
    params = np.asarray(params, dtype=np.float64)
    if params.ndim != 1:
        raise InvalidParameterError(f"expected a single parameter vector, got shape {params.shape}")
    return build_blocks(kind, params)


def identity_block(kind: GroupKind) -> np.ndarray:
    """The block of the group identity (zero offset / identity matrix)."""
    return build_block(kind, identity_params(kind))


def inverse_block(kind: GroupKind, block: np.ndarray) -> np.ndarray:
    """Group inverse of a built block.

    Orthogonal and unitary kinds invert by transposition (the real encoding
    turns the conjugate transpose into a plain transpose), translations by
    negation, and GL(1) kinds by the scalar/complex reciprocal.
    """
    block = np.asarray(block, dtype=np.float64)
    if kind is GroupKind.TRANSLATION:
        return -block
    if kind is GroupKind.GL1R:
        return 1.0 / block
    if kind is GroupKind.GL1C:
        # reciprocal of m e^{i phase}: transpose over squared modulus
        det = block[..., 0, 0] ** 2 + block[..., 1, 0] ** 2
        return np.swapaxes(block, -1, -2) / det[..., np.newaxis, np.newaxis]
    return np.swapaxes(block, -1, -2)


def compose_blocks(kind: GroupKind, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Group product a * b: apply b first, then a. Offsets add for TRANSLATION."""
    if kind is GroupKind.TRANSLATION:
        return np.asarray(a) + np.asarray(b)
    return np.asarray(a) @ np.asarray(b)


def apply_block(kind: GroupKind, block: np.ndarray, vec) -> np.ndarray:
    """Act on a representation-space vector: block @ vec (vec + offset for T)."""
    vec = np.asarray(vec, dtype=np.float64)
    p = kind.rep_dim
    if vec.shape != (p,):
        raise ValueError(f"{kind.value} blocks act on {p}-vectors, got shape {vec.shape}")
    if kind is GroupKind.TRANSLATION:
        return vec + np.asarray(block).reshape(1)
    return np.asarray(block) @ vec


def apply_blocks(kind: GroupKind, blocks: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """Vectorized action: (..., p, p) blocks on (..., p) vectors."""
    if kind is GroupKind.TRANSLATION:
        return vecs + blocks[..., 0]
    return np.einsum("...ij,...j->...i", blocks, vecs)
