"""Boxes, points, IoU and 2-D affine transforms.

Boxes use the MOTChallenge top-left + size convention ``(x, y, w, h)``.
Array helpers take ``(N, 4)`` arrays in the same layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SingularTransform


@dataclass(frozen=True)
class Point2D:
    x: float
    y: float


@dataclass(frozen=True)
class Box2D:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.w, self.h)):
            raise ValueError(f"non-finite box {self!r}")
        if self.w < 0 or self.h < 0:
            raise ValueError(f"negative box size {self!r}")

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def center(self) -> Point2D:
        return Point2D(self.x + self.w / 2.0, self.y + self.h / 2.0)

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.w, self.h], dtype=float)

    def to_xyah(self) -> np.ndarray:
        """Center + size form ``[xc, yc, w, h]``."""
        return np.array(
            [self.x + self.w / 2.0, self.y + self.h / 2.0, self.w, self.h], dtype=float
        )

    @classmethod
    def from_center(cls, xc: float, yc: float, w: float, h: float) -> Box2D:
        w = max(float(w), 0.0)
        h = max(float(h), 0.0)
        return cls(float(xc) - w / 2.0, float(yc) - h / 2.0, w, h)

    @classmethod
    def from_array(cls, a) -> Box2D:
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))


def _identity_m() -> np.ndarray:
    return np.eye(2)


@dataclass(frozen=True, eq=False)
class AffineTransform2D:
    """The map ``p -> m @ p + t``."""

    m: np.ndarray = field(default_factory=_identity_m)
    t: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        m = np.array(self.m, dtype=float).reshape(2, 2)
        t = np.array(self.t, dtype=float).reshape(2)
        if not (np.all(np.isfinite(m)) and np.all(np.isfinite(t))):
            raise ValueError("non-finite affine transform")
        m.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "t", t)

    @classmethod
    def identity(cls) -> AffineTransform2D:
        return cls()

    @classmethod
    def translation(cls, tx: float, ty: float) -> AffineTransform2D:
        return cls(np.eye(2), np.array([tx, ty]))

    @classmethod
    def rotation(cls, angle: float, center=(0.0, 0.0)) -> AffineTransform2D:
        c, s = math.cos(angle), math.sin(angle)
        m = np.array([[c, -s], [s, c]])
        center = np.asarray(center, dtype=float)
        return cls(m, center - m @ center)

    @classmethod
    def from_matrix(cls, a) -> AffineTransform2D:
        """From a 2x3 ``[m | t]`` matrix."""
        a = np.asarray(a, dtype=float)
        return cls(a[:, :2], a[:, 2])

    def as_matrix(self) -> np.ndarray:
        return np.hstack([self.m, self.t[:, None]])

    def is_identity(self, tol: float = 0.0) -> bool:
        return bool(
            np.all(np.abs(self.m - np.eye(2)) <= tol) and np.all(np.abs(self.t) <= tol)
        )

    def allclose(self, other: AffineTransform2D, atol: float = 1e-9) -> bool:
        return bool(
            np.allclose(self.m, other.m, rtol=0, atol=atol)
            and np.allclose(self.t, other.t, rtol=0, atol=atol)
        )

    def __repr__(self):
        return f"AffineTransform2D(m={self.m.tolist()}, t={self.t.tolist()})"


def iou(a: Box2D, b: Box2D) -> float:
    iw = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    ih = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    inter = max(iw, 0.0) * max(ih, 0.0)
    union = a.w * a.h + b.w * b.h - inter
    if union <= 0.0:
        return 0.0
    # x + w - x can round above w; keep the ratio in range
    return min(inter / union, 1.0)


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IoU between ``(N, 4)`` and ``(M, 4)`` tlwh arrays."""
    a = np.asarray(a, dtype=float).reshape(-1, 4)
    b = np.asarray(b, dtype=float).reshape(-1, 4)
    if len(a) == 0 or len(b) == 0:
        return np.zeros((len(a), len(b)))
    ax2 = a[:, 0] + a[:, 2]
    ay2 = a[:, 1] + a[:, 3]
    bx2 = b[:, 0] + b[:, 2]
    by2 = b[:, 1] + b[:, 3]
    iw = np.minimum(ax2[:, None], bx2[None, :]) - np.maximum(a[:, 0][:, None], b[:, 0][None, :])
    ih = np.minimum(ay2[:, None], by2[None, :]) - np.maximum(a[:, 1][:, None], b[:, 1][None, :])
    inter = np.clip(iw, 0, None) * np.clip(ih, 0, None)
    union = (a[:, 2] * a[:, 3])[:, None] + (b[:, 2] * b[:, 3])[None, :] - inter
    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=union > 0)
    return np.minimum(out, 1.0)


def apply_affine_point(T: AffineTransform2D, p: Point2D) -> Point2D:
    q = T.m @ np.array([p.x, p.y]) + T.t
    return Point2D(float(q[0]), float(q[1]))


def apply_affine_points(T: AffineTransform2D, pts: np.ndarray) -> np.ndarray:
    """Vectorised form for an ``(N, 2)`` array."""
    pts = np.asarray(pts, dtype=float).reshape(-1, 2)
    return pts @ T.m.T + T.t


def apply_affine_box(T: AffineTransform2D, b: Box2D) -> Box2D:
    # (w, h) goes through the same linear part as the Kalman size pair; abs keeps
    # the box valid under reflections or large rotations.
    c = T.m @ np.array([b.x + b.w / 2.0, b.y + b.h / 2.0]) + T.t
    wh = np.abs(T.m @ np.array([b.w, b.h]))
    return Box2D.from_center(c[0], c[1], wh[0], wh[1])


def compose(T1: AffineTransform2D, T2: AffineTransform2D) -> AffineTransform2D:
    """``compose(T1, T2)(p) == T1(T2(p))``."""
    return AffineTransform2D(T1.m @ T2.m, T1.m @ T2.t + T1.t)


def invert(T: AffineTransform2D) -> AffineTransform2D:
    det = T.m[0, 0] * T.m[1, 1] - T.m[0, 1] * T.m[1, 0]
    scale = max(float(np.max(np.abs(T.m))), 1e-300)
    if det == 0.0 or abs(det) < 1e-14 * scale * scale:
        raise SingularTransform(f"cannot invert transform with det(m)={det}")
    mi = np.array([[T.m[1, 1], -T.m[0, 1]], [-T.m[1, 0], T.m[0, 0]]]) / det
    return AffineTransform2D(mi, -mi @ T.t)
