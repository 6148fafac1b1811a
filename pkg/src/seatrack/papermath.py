"""Small numeric kernels for the detector / embedding-network algebra.

* the reversible column update and its exact inverse;
* attention logits with a relative-position bias table;
* the angular-margin triplet loss and its analytic gradient.

None of this runs a network. ``phi`` stands in for the learned fusion block
with a fixed 3x3 cross-correlation followed by SiLU; reversibility does not
depend on what ``phi`` is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IndexOutOfRange, NonUnitVector, NumericalSingularity, ShapeMismatch, ZeroAlpha

UNIT_TOL = 1e-9
SINGULAR_MARGIN = 1e-6


def avg_pool2(x: np.ndarray) -> np.ndarray:
    """2x average-pool downsample; odd trailing rows/cols are dropped."""
    h, w = x.shape[0] // 2, x.shape[1] // 2
    return x[: 2 * h, : 2 * w].reshape(h, 2, w, 2).mean(axis=(1, 3))


def nearest_up2(x: np.ndarray) -> np.ndarray:
    return np.repeat(np.repeat(x, 2, axis=0), 2, axis=1)


def silu(x: np.ndarray) -> np.ndarray:
    return x / (1.0 + np.exp(-x))


def correlate3x3(x: np.ndarray, kernel: np.ndarray, bias: float = 0.0) -> np.ndarray:
    """Zero-padded 'same' 3x3 cross-correlation."""
    p = np.pad(x, 1)
    h, w = x.shape
    out = np.full((h, w), float(bias))
    for di in range(3):
        for dj in range(3):
            out += kernel[di, dj] * p[di : di + h, dj : dj + w]
    return out


@dataclass
class RevColOps:
    alpha: float = 1.0
    kernel: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    bias: float = 0.0

    def __post_init__(self):
        self.kernel = np.asarray(self.kernel, dtype=float).reshape(3, 3)

    @classmethod
    def random(cls, rng: np.random.Generator, alpha: float) -> RevColOps:
        return cls(alpha, rng.normal(scale=0.5, size=(3, 3)), float(rng.normal(scale=0.1)))

    def phi(self, x: np.ndarray) -> np.ndarray:
        return silu(correlate3x3(x, self.kernel, self.bias))

    g = staticmethod(avg_pool2)
    h = staticmethod(nearest_up2)


@dataclass
class ColumnFeature:
    grid: np.ndarray
    level: int = 0
    column: int = 1

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        if self.grid.ndim != 2:
            raise ShapeMismatch("feature grid must be 2-D")


def _fusion(shape, below: ColumnFeature | None, above: ColumnFeature | None, ops: RevColOps):
    """``g(below) + h(above)`` at the target resolution; absent inputs are zero."""
    fused = np.zeros(shape)
    if below is not None:
        down = ops.g(below.grid)
        if down.shape != shape:
            raise ShapeMismatch(f"downsampled finer level {down.shape} != {shape}")
        fused += down
    if above is not None:
        up = ops.h(above.grid)
        if up.shape != shape:
            raise ShapeMismatch(f"upsampled coarser level {up.shape} != {shape}")
        fused += up
    return fused


def revcol_forward(
    x_prev_col_same: ColumnFeature,
    x_same_col_below: ColumnFeature | None,
    x_prev_col_above: ColumnFeature | None,
    ops: RevColOps,
) -> ColumnFeature:
    """One reversible column step at level n of column m.

    ``x_prev_col_same`` is the same level in column m-1; ``x_same_col_below``
    the finer level n-1 of column m; ``x_prev_col_above`` the coarser level
    n+1 of column m-1, or ``None`` at the top-level boundary.
    """
    x = x_prev_col_same.grid
    fused = _fusion(x.shape, x_same_col_below, x_prev_col_above, ops)
    return ColumnFeature(ops.alpha * x + ops.phi(fused), x_prev_col_same.level, x_prev_col_same.column + 1)


def revcol_inverse(
    x_out: ColumnFeature,
    x_same_col_below: ColumnFeature | None,
    x_prev_col_above: ColumnFeature | None,
    ops: RevColOps,
) -> ColumnFeature:
    """Recover the previous column's feature from the output and the same side inputs."""
    if ops.alpha == 0:
        raise ZeroAlpha("the column update is not invertible with alpha == 0")
    fused = _fusion(x_out.grid.shape, x_same_col_below, x_prev_col_above, ops)
    return ColumnFeature((x_out.grid - ops.phi(fused)) / ops.alpha, x_out.level, x_out.column - 1)


def revcol_roundtrip_error(rng: np.random.Generator, size: int = 16, alpha: float | None = None) -> float:
    """Max abs error of inverse(forward(x)) over one random three-level case."""
    if alpha is None:
        alpha = float(rng.uniform(0.1, 10.0))
    ops = RevColOps.random(rng, alpha)
    x = ColumnFeature(rng.normal(size=(size, size)), level=1, column=1)
    below = ColumnFeature(rng.normal(size=(2 * size, 2 * size)), level=0, column=2)
    above = ColumnFeature(rng.normal(size=(size // 2, size // 2)), level=2, column=1)
    y = revcol_forward(x, below, above, ops)
    back = revcol_inverse(y, below, above, ops)
    return float(np.max(np.abs(back.grid - x.grid)))


@dataclass
class AttentionBiasTable:
    """``b[head, |dx|, |dy|]``."""

    b: np.ndarray

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float)
        if self.b.ndim != 3 or not np.all(np.isfinite(self.b)):
            raise ValueError("bias table must be a finite (heads, dx, dy) array")

    @classmethod
    def zeros(cls, heads: int, extent_x: int, extent_y: int) -> AttentionBiasTable:
        return cls(np.zeros((heads, extent_x, extent_y)))


def attention_score(q, k, pos_q, pos_k, head: int, bias: AttentionBiasTable) -> float:
    dx = abs(int(pos_q[0]) - int(pos_k[0]))
    dy = abs(int(pos_q[1]) - int(pos_k[1]))
    nh, nx, ny = bias.b.shape
    if not (0 <= head < nh and dx < nx and dy < ny):
        raise IndexOutOfRange(f"bias index (head={head}, dx={dx}, dy={dy}) outside table {bias.b.shape}")
    return float(np.dot(q, k) + bias.b[head, dx, dy])


@dataclass
class TripletSample:
    a: np.ndarray
    p: np.ndarray
    n: np.ndarray
    theta: float = 0.0
    alpha_margin: float = 0.0

    def __post_init__(self):
        for name in ("a", "p", "n"):
            v = np.asarray(getattr(self, name), dtype=float)
            if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
                raise NonUnitVector(f"{name} has norm {np.linalg.norm(v)}")
            setattr(self, name, v)


def _angles(s: TripletSample):
    u = float(np.clip(s.a @ s.p, -1.0, 1.0))
    v = float(np.clip(s.a @ s.n, -1.0, 1.0))
    raw1 = math.acos(u) + s.theta
    theta1 = min(max(raw1, 0.0), math.pi)
    theta2 = math.acos(v)
    return u, v, raw1, theta1, theta2


def ada_loss_terms(s: TripletSample) -> tuple[float, float, float]:
    """``(d1, d2, hinge)`` where ``hinge = d1 - d2 + alpha_margin``."""
    _, _, _, t1, t2 = _angles(s)
    d1 = 1.0 - math.cos(t1)
    d2 = 1.0 - math.cos(t2)
    return d1, d2, d1 - d2 + s.alpha_margin


def ada_loss(s: TripletSample) -> float:
    _, _, hinge = ada_loss_terms(s)
    return max(hinge, 0.0) ** 2


def ada_loss_gradient(s: TripletSample) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Euclidean gradient of the loss with respect to ``(a, p, n)``.

    The dot products are differentiated as plain functions of the three
    vectors (no projection onto the sphere). Zero when the hinge is inactive.
    """
    u, v, raw1, t1, t2 = _angles(s)
    hinge = (1.0 - math.cos(t1)) - (1.0 - math.cos(t2)) + s.alpha_margin
    zero = (np.zeros_like(s.a), np.zeros_like(s.p), np.zeros_like(s.n))
    if hinge <= 0.0:
        return zero
    if 1.0 - abs(u) < SINGULAR_MARGIN:
        raise NumericalSingularity("a.p is too close to +-1 for arccos to be differentiable")
    # d/du [1 - cos(acos(u) + theta)] = -sin(theta1) / sqrt(1 - u^2); flat where clamped
    dd1_du = 0.0 if not 0.0 < raw1 < math.pi else -math.sin(t1) / math.sqrt(1.0 - u * u)
    # d2 = 1 - v exactly
    dd2_dv = -1.0
    c = 2.0 * hinge
    grad_a = c * (dd1_du * s.p - dd2_dv * s.n)
    grad_p = c * dd1_du * s.a
    grad_n = -c * dd2_dv * s.a
    return grad_a, grad_p, grad_n
