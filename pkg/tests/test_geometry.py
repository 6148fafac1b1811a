from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import box_iou
from seatrack.errors import SingularTransform
from seatrack.geometry import (
    AffineTransform2D,
    Box2D,
    Point2D,
    apply_affine_box,
    apply_affine_point,
    apply_affine_points,
    compose,
    invert,
    iou,
    iou_matrix,
)

coord = st.floats(-1e3, 1e3, allow_nan=False)
# sizes far below the coordinate resolution vanish in x + w - x
size = st.one_of(st.just(0.0), st.floats(1e-3, 200))
boxes = st.builds(Box2D, coord, coord, size, size)
entry = st.floats(-3, 3, allow_nan=False)


@st.composite
def invertible(draw):
    m = np.array([[draw(entry), draw(entry)], [draw(entry), draw(entry)]])
    det = lambda a: a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]  # noqa: E731
    if abs(det(m)) < 0.1:
        m = m + 2 * np.eye(2)
    if abs(det(m)) < 0.1:
        m = np.eye(2)
    return AffineTransform2D(m, [draw(coord), draw(coord)])


@pytest.mark.parametrize(
    "a, b, expected",
    [
        ((0, 0, 10, 10), (0, 0, 10, 10), 1.0),
        ((0, 0, 1, 1), (5, 5, 1, 1), 0.0),
        ((0, 0, 2, 2), (1, 1, 2, 2), 1 / 7),
        ((0, 0, 0, 0), (0, 0, 0, 0), 0.0),
        ((0, 0, 10, 0), (0, 0, 10, 10), 0.0),
    ],
)
def test_iou_examples(a, b, expected):
    assert iou(Box2D(*a), Box2D(*b)) == pytest.approx(expected, abs=1e-12)


def test_box_rejects_negative_size():
    with pytest.raises(ValueError):
        Box2D(0, 0, -1, 1)


def test_box_center_roundtrip():
    b = Box2D(3, 4, 10, 6)
    assert b.center == Point2D(8, 7)
    assert Box2D.from_center(*b.to_xyah()) == b
    assert Box2D.from_center(0, 0, -5, 2).w == 0.0


@given(boxes, boxes)
def test_iou_symmetric_and_bounded(a, b):
    v = iou(a, b)
    assert v == iou(b, a)
    assert 0.0 <= v <= 1.0


@given(boxes)
def test_iou_self_is_one(a):
    if a.area > 0:
        assert iou(a, a) == pytest.approx(1.0)


@given(st.lists(boxes, max_size=5), st.lists(boxes, max_size=5))
@settings(max_examples=50)
def test_iou_matrix_matches_scalar(a, b):
    A = np.array([x.to_array() for x in a]).reshape(-1, 4)
    B = np.array([x.to_array() for x in b]).reshape(-1, 4)
    M = iou_matrix(A, B)
    assert M.shape == (len(a), len(b))
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            assert M[i, j] == pytest.approx(box_iou(x.to_array(), y.to_array()), abs=1e-12)


@pytest.mark.parametrize(
    "T, p, expected",
    [
        (AffineTransform2D.identity(), (3, 4), (3, 4)),
        (AffineTransform2D.translation(1, -2), (0, 0), (1, -2)),
        (AffineTransform2D([[0, -1], [1, 0]], [0, 0]), (1, 0), (0, 1)),
    ],
)
def test_apply_affine_point(T, p, expected):
    q = apply_affine_point(T, Point2D(*p))
    assert (q.x, q.y) == pytest.approx(expected)


def test_apply_affine_points_vectorised():
    T = AffineTransform2D([[1, 2], [3, 4]], [5, 6])
    pts = np.array([[1.0, 0.0], [0.0, 1.0], [2.0, -1.0]])
    expected = [[6, 9], [7, 10], [5, 8]]
    np.testing.assert_allclose(apply_affine_points(T, pts), expected)


def test_apply_affine_box_examples():
    b = Box2D(0, 0, 4, 4)
    assert apply_affine_box(AffineTransform2D.identity(), b) == b
    assert apply_affine_box(AffineTransform2D.translation(10, 0), b) == Box2D(10, 0, 4, 4)
    scaled = apply_affine_box(AffineTransform2D(2 * np.eye(2), [0, 0]), b)
    assert scaled.center == Point2D(4, 4)
    assert (scaled.w, scaled.h) == (8, 8)


def test_compose_and_invert_examples():
    T = AffineTransform2D([[1, 2], [0, 1]], [3, 4])
    assert compose(AffineTransform2D.identity(), T).allclose(T)
    assert invert(AffineTransform2D.translation(3, -7)).allclose(AffineTransform2D.translation(-3, 7))
    half = invert(AffineTransform2D(2 * np.eye(2), [0, 0]))
    np.testing.assert_allclose(half.m, 0.5 * np.eye(2))


def test_invert_singular():
    with pytest.raises(SingularTransform):
        invert(AffineTransform2D([[1, 2], [2, 4]], [0, 0]))


def test_rotation_about_center_fixes_center():
    T = AffineTransform2D.rotation(0.3, center=(5, 7))
    q = apply_affine_point(T, Point2D(5, 7))
    assert (q.x, q.y) == pytest.approx((5, 7))
    assert np.linalg.det(T.m) == pytest.approx(1.0)


def test_transform_is_immutable():
    T = AffineTransform2D.identity()
    with pytest.raises(ValueError):
        T.m[0, 0] = 2.0


@given(invertible(), coord, coord)
def test_invert_roundtrip(T, x, y):
    p = apply_affine_point(invert(T), apply_affine_point(T, Point2D(x, y)))
    scale = 1 + abs(x) + abs(y) + float(np.abs(T.t).max())
    assert math.isclose(p.x, x, abs_tol=1e-9 * scale)
    assert math.isclose(p.y, y, abs_tol=1e-9 * scale)


@given(invertible(), invertible(), invertible())
def test_compose_associative(a, b, c):
    left = compose(compose(a, b), c)
    right = compose(a, compose(b, c))
    scale = 1 + max(np.abs(left.as_matrix()).max(), np.abs(right.as_matrix()).max())
    assert left.allclose(right, atol=1e-9 * scale)
