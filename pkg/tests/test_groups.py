"""Block algebra tests: construction, axioms, canonicalization, derivatives."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from groupkge.errors import InvalidParameterError
from groupkge.groups import (
    GroupKind,
    apply_block,
    build_block,
    build_blocks,
    build_blocks_with_grads,
    canonicalize_params,
    compose_blocks,
    decode_complex,
    identity_block,
    identity_params,
    inverse_block,
)

ALL_KINDS = list(GroupKind)
TOL = 1e-9


def sample_params(kind, n, rng):
    """Random valid block parameters, wide enough to exercise the domain."""
    q = kind.param_count
    if kind is GroupKind.GL1R:
        return (rng.uniform(0.1, 2.0, (n, 1)) * rng.choice([-1.0, 1.0], (n, 1)))
    if kind is GroupKind.GL1C:
        return np.column_stack([rng.uniform(0.1, 2.0, n), rng.uniform(0.0, 2 * np.pi, n)])
    if kind is GroupKind.TRANSLATION:
        return rng.uniform(-2.0, 2.0, (n, 1))
    return rng.uniform(0.0, 2 * np.pi, (n, q))


def rotz(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotx(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


class TestShapes:
    def test_param_and_rep_dims(self):
        expected = {"t": (1, 1), "u1": (1, 2), "gl1r": (1, 1), "gl1c": (2, 2), "so3": (3, 3), "su2": (3, 4)}
        for kind in ALL_KINDS:
            assert (kind.param_count, kind.rep_dim) == expected[kind.value]

    def test_from_name_round_trip(self):
        for kind in ALL_KINDS:
            assert GroupKind.from_name(kind.value) is kind
        with pytest.raises(InvalidParameterError):
            GroupKind.from_name("so4")


class TestBuildBlock:
    def test_so3_identity_params(self):
        np.testing.assert_allclose(build_block(GroupKind.SO3, [0.0, 0.0, 0.0]), np.eye(3), atol=0)

    def test_su2_identity_angle(self):
        # alpha = 0 is the identity regardless of the axis angles
        for theta, phi in [(0.0, 0.0), (1.0, 2.0), (np.pi / 3, 5.0)]:
            np.testing.assert_allclose(build_block(GroupKind.SU2, [0.0, theta, phi]), np.eye(4), atol=1e-15)

    def test_su2_quarter_turn_about_z(self):
        # cos(pi/2) I + i sin(pi/2) Jz = diag(i, -i); frozen real encoding
        m = build_block(GroupKind.SU2, [np.pi / 2, 0.0, 0.0])
        expected = np.array(
            [
                [0.0, -1.0, 0.0, 0.0],
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
                [0.0, 0.0, -1.0, 0.0],
            ]
        )
        np.testing.assert_allclose(m, expected, atol=1e-15)
        c = decode_complex(m)
        np.testing.assert_allclose(c, np.diag([1j, -1j]), atol=1e-15)

    def test_so3_matches_euler_product(self):
        # oracle: multiply elementary rotations built independently above
        rng = np.random.default_rng(7)
        for _ in range(50):
            phi, theta, psi = rng.uniform(0, 2 * np.pi, 3)
            expected = rotz(phi) @ rotx(theta) @ rotz(psi)
            np.testing.assert_allclose(build_block(GroupKind.SO3, [phi, theta, psi]), expected, atol=1e-14)

    def test_so3_rotations_about_distinct_axes_do_not_commute(self):
        # 3x3 matrix-multiply oracle: Rz(pi/2) and Rx(pi/2) in both orders
        a = build_block(GroupKind.SO3, [np.pi / 2, 0.0, 0.0])
        b = build_block(GroupKind.SO3, [0.0, np.pi / 2, 0.0])
        np.testing.assert_allclose(a, rotz(np.pi / 2), atol=1e-15)
        np.testing.assert_allclose(b, rotx(np.pi / 2), atol=1e-15)
        assert np.abs(a @ b - b @ a).max() > 0.5

    def test_u1_column_norms(self):
        rng = np.random.default_rng(3)
        blocks = build_blocks(GroupKind.U1, sample_params(GroupKind.U1, 100, rng))
        norms = np.linalg.norm(blocks, axis=-2)
        np.testing.assert_allclose(norms, 1.0, atol=TOL)

    def test_gl1c_is_scaled_rotation(self):
        m = build_block(GroupKind.GL1C, [2.0, np.pi / 2])
        np.testing.assert_allclose(m, np.array([[0.0, -2.0], [2.0, 0.0]]), atol=1e-15)

    def test_invalid_parameters(self):
        with pytest.raises(InvalidParameterError):
            build_block(GroupKind.SO3, [np.nan, 0.0, 0.0])
        with pytest.raises(InvalidParameterError):
            build_block(GroupKind.GL1R, [0.0])
        with pytest.raises(InvalidParameterError):
            build_block(GroupKind.GL1C, [-1.0, 0.5])
        with pytest.raises(InvalidParameterError):
            build_block(GroupKind.U1, [0.0, 0.0])  # wrong arity


class TestIdentityInverseCompose:
    def test_identity_blocks(self):
        assert identity_block(GroupKind.TRANSLATION) == np.zeros((1, 1))
        np.testing.assert_allclose(identity_block(GroupKind.U1), np.eye(2), atol=0)
        np.testing.assert_allclose(identity_block(GroupKind.SO3), np.eye(3), atol=0)
        np.testing.assert_allclose(identity_block(GroupKind.SU2), np.eye(4), atol=0)
        np.testing.assert_allclose(identity_block(GroupKind.GL1R), np.eye(1), atol=0)
        np.testing.assert_allclose(identity_block(GroupKind.GL1C), np.eye(2), atol=0)

    def test_translation_inverse_negates(self):
        m = build_block(GroupKind.TRANSLATION, [0.7])
        np.testing.assert_allclose(inverse_block(GroupKind.TRANSLATION, m), [[-0.7]], atol=0)

    def test_gl1r_inverse_is_reciprocal(self):
        m = build_block(GroupKind.GL1R, [2.0])
        np.testing.assert_allclose(inverse_block(GroupKind.GL1R, m), [[0.5]], atol=0)

    def test_so3_inverse_is_transpose(self):
        m = build_block(GroupKind.SO3, [np.pi / 2, 0.0, 0.0])
        inv = inverse_block(GroupKind.SO3, m)
        np.testing.assert_allclose(inv, m.T, atol=0)
        np.testing.assert_allclose(compose_blocks(GroupKind.SO3, inv, m), np.eye(3), atol=TOL)

    @pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.value)
    def test_inverse_axiom(self, kind):
        rng = np.random.default_rng(11)
        blocks = build_blocks(kind, sample_params(kind, 200, rng))
        prod = compose_blocks(kind, blocks, inverse_block(kind, blocks))
        np.testing.assert_allclose(prod, np.broadcast_to(identity_block(kind), prod.shape), atol=TOL)

    @pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.value)
    def test_identity_axiom(self, kind):
        rng = np.random.default_rng(12)
        blocks = build_blocks(kind, sample_params(kind, 100, rng))
        ident = identity_block(kind)
        np.testing.assert_allclose(compose_blocks(kind, ident, blocks), blocks, atol=TOL)
        np.testing.assert_allclose(compose_blocks(kind, blocks, ident), blocks, atol=TOL)

    @pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.value)
    def test_associativity(self, kind):
        rng = np.random.default_rng(13)
        a = build_blocks(kind, sample_params(kind, 100, rng))
        b = build_blocks(kind, sample_params(kind, 100, rng))
        c = build_blocks(kind, sample_params(kind, 100, rng))
        left = compose_blocks(kind, compose_blocks(kind, a, b), c)
        right = compose_blocks(kind, a, compose_blocks(kind, b, c))
        np.testing.assert_allclose(left, right, atol=TOL)

    def test_u1_phases_add(self):
        a = build_block(GroupKind.U1, [0.4])
        b = build_block(GroupKind.U1, [1.1])
        np.testing.assert_allclose(compose_blocks(GroupKind.U1, a, b), build_block(GroupKind.U1, [1.5]), atol=1e-12)

    def test_su2_composition_matches_complex_multiplication(self):
        # oracle: decode to complex 2x2, multiply with numpy complex arithmetic
        rng = np.random.default_rng(5)
        a = build_blocks(GroupKind.SU2, sample_params(GroupKind.SU2, 50, rng))
        b = build_blocks(GroupKind.SU2, sample_params(GroupKind.SU2, 50, rng))
        composed = compose_blocks(GroupKind.SU2, a, b)
        expected = decode_complex(a) @ decode_complex(b)
        np.testing.assert_allclose(decode_complex(composed), expected, atol=1e-12)

    @pytest.mark.parametrize("kind", [GroupKind.SO3, GroupKind.SU2], ids=lambda k: k.value)
    def test_non_abelian_witness(self, kind):
        rng = np.random.default_rng(14)
        a = build_blocks(kind, sample_params(kind, 100, rng))
        b = build_blocks(kind, sample_params(kind, 100, rng))
        comm = np.abs(compose_blocks(kind, a, b) - compose_blocks(kind, b, a)).max()
        assert comm > 0.1

    @pytest.mark.parametrize(
        "kind",
        [GroupKind.TRANSLATION, GroupKind.U1, GroupKind.GL1R, GroupKind.GL1C],
        ids=lambda k: k.value,
    )
    def test_abelian_kinds_commute(self, kind):
        rng = np.random.default_rng(15)
        a = build_blocks(kind, sample_params(kind, 100, rng))
        b = build_blocks(kind, sample_params(kind, 100, rng))
        comm = np.abs(compose_blocks(kind, a, b) - compose_blocks(kind, b, a)).max()
        assert comm < TOL


class TestApply:
    def test_translation_moves_point(self):
        m = build_block(GroupKind.TRANSLATION, [1.0])
        np.testing.assert_allclose(apply_block(GroupKind.TRANSLATION, m, [0.0]), [1.0], atol=0)

    def test_so3_identity_fixes_vectors(self):
        rng = np.random.default_rng(16)
        for _ in range(10):
            x = rng.normal(size=3)
            np.testing.assert_allclose(apply_block(GroupKind.SO3, identity_block(GroupKind.SO3), x), x, atol=0)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            apply_block(GroupKind.SO3, identity_block(GroupKind.SO3), [1.0, 2.0])

    @pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.value)
    def test_action_compatibility(self, kind):
        # apply(compose(a, b), x) == apply(a, apply(b, x))
        rng = np.random.default_rng(17)
        for _ in range(30):
            a = build_block(kind, sample_params(kind, 1, rng)[0])
            b = build_block(kind, sample_params(kind, 1, rng)[0])
            x = rng.normal(size=kind.rep_dim)
            lhs = apply_block(kind, compose_blocks(kind, a, b), x)
            rhs = apply_block(kind, a, apply_block(kind, b, x))
            np.testing.assert_allclose(lhs, rhs, atol=TOL)


class TestClosureInvariants:
    def test_so3_products_stay_orthogonal(self):
        rng = np.random.default_rng(18)
        a = build_blocks(GroupKind.SO3, sample_params(GroupKind.SO3, 200, rng))
        b = build_blocks(GroupKind.SO3, sample_params(GroupKind.SO3, 200, rng))
        prod = a @ b
        gram = prod @ np.swapaxes(prod, -1, -2)
        np.testing.assert_allclose(gram, np.broadcast_to(np.eye(3), gram.shape), atol=TOL)
        np.testing.assert_allclose(np.linalg.det(prod), 1.0, atol=TOL)

    def test_su2_products_stay_special_unitary(self):
        rng = np.random.default_rng(19)
        a = build_blocks(GroupKind.SU2, sample_params(GroupKind.SU2, 200, rng))
        b = build_blocks(GroupKind.SU2, sample_params(GroupKind.SU2, 200, rng))
        prod = a @ b
        gram = prod @ np.swapaxes(prod, -1, -2)
        np.testing.assert_allclose(gram, np.broadcast_to(np.eye(4), gram.shape), atol=TOL)
        np.testing.assert_allclose(np.linalg.det(decode_complex(prod)), 1.0, atol=TOL)


class TestCanonicalize:
    @pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.value)
    def test_canonical_form_builds_same_element(self, kind):
        rng = np.random.default_rng(20)
        q = kind.param_count
        raw = rng.uniform(-10.0, 10.0, (200, q))
        if kind is GroupKind.GL1R:
            raw[raw == 0.0] = 1.0
        if kind is GroupKind.GL1C:
            raw[:, 0] = np.where(raw[:, 0] == 0.0, 1.0, raw[:, 0])
            canon = canonicalize_params(kind, raw)
            raw_m = np.abs(raw[:, 0, None, None]) * build_blocks(GroupKind.U1, (raw[:, 1:] + np.pi * (raw[:, :1] < 0)))
            np.testing.assert_allclose(build_blocks(kind, canon), raw_m, atol=1e-12)
            return
        canon = canonicalize_params(kind, raw)
        np.testing.assert_allclose(build_blocks(kind, canon), build_blocks(kind, raw), atol=1e-12)

    def test_canonical_ranges(self):
        rng = np.random.default_rng(21)
        so3 = canonicalize_params(GroupKind.SO3, rng.uniform(-20, 20, (500, 3)))
        assert np.all((so3 >= 0.0) & (so3 < 2 * np.pi))
        su2 = canonicalize_params(GroupKind.SU2, rng.uniform(-20, 20, (500, 3)))
        assert np.all((su2[:, 0] >= 0.0) & (su2[:, 0] < 2 * np.pi))
        assert np.all((su2[:, 1] >= 0.0) & (su2[:, 1] <= np.pi))
        assert np.all((su2[:, 2] >= 0.0) & (su2[:, 2] < 2 * np.pi))
        glc = canonicalize_params(GroupKind.GL1C, np.array([[-2.0, 0.3], [1.5, 7.0]]))
        assert np.all(glc[:, 0] > 0.0)
        assert np.all((glc[:, 1] >= 0.0) & (glc[:, 1] < 2 * np.pi))

    @given(
        phi=st.floats(-1e6, 1e6, allow_nan=False),
        theta=st.floats(-1e6, 1e6, allow_nan=False),
        psi=st.floats(-1e6, 1e6, allow_nan=False),
    )
    @settings(max_examples=60, deadline=None)
    def test_so3_canonicalization_preserves_rotation(self, phi, theta, psi):
        raw = np.array([phi, theta, psi])
        canon = canonicalize_params(GroupKind.SO3, raw)
        # wrapping huge angles loses ~|angle| * eps of phase; scale tolerance
        scale = max(1.0, np.abs(raw).max())
        np.testing.assert_allclose(
            build_block(GroupKind.SO3, canon), build_block(GroupKind.SO3, raw), atol=1e-9 * scale
        )


class TestDerivatives:
    @pytest.mark.parametrize("kind", ALL_KINDS, ids=lambda k: k.value)
    def test_block_grads_match_finite_differences(self, kind):
        rng = np.random.default_rng(22)
        params = sample_params(kind, 20, rng)
        _, grads = build_blocks_with_grads(kind, params)
        h = 1e-6
        for k in range(kind.param_count):
            plus, minus = params.copy(), params.copy()
            plus[:, k] += h
            minus[:, k] -= h
            fd = (build_blocks(kind, plus) - build_blocks(kind, minus)) / (2 * h)
            np.testing.assert_allclose(grads[:, k], fd, atol=1e-8)
