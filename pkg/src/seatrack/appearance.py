"""Appearance side of the association cost.

Per-track embeddings are smoothed with a bias-corrected exponential moving
average. Cosine distances are amplified by ``beta`` and clipped to 1, forced
to 1 when the boxes barely overlap, and multiplied by the IoU distance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigInvalid, DimensionMismatch, NoObservations, ZeroVector
from .geometry import iou_matrix


@dataclass
class CoffConfig:
    beta: float = 800.0
    theta_iou: float = 0.3
    alpha: float = 0.9

    def __post_init__(self):
        if not self.beta > 0:
            raise ConfigInvalid("beta must be > 0")
        if not 0.0 <= self.theta_iou <= 1.0:
            raise ConfigInvalid("theta_iou must lie in [0, 1]")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigInvalid("alpha must lie in (0, 1)")


def l2_normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if not np.isfinite(n) or n == 0.0:
        raise ZeroVector("cannot normalise a zero or non-finite embedding")
    return v / n


@dataclass
class TrackAppearance:
    """Running EMA of a track's embeddings; ``ema`` starts at zero."""

    ema: np.ndarray | None = None
    frame_count: int = 0
    alpha: float = 0.9

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ConfigInvalid("alpha must lie in (0, 1)")


def uema_update(app: TrackAppearance, f) -> TrackAppearance:
    f = np.asarray(f, dtype=float)
    ema = np.zeros_like(f) if app.ema is None else app.ema
    if ema.shape != f.shape:
        raise DimensionMismatch(f"embedding size {f.shape} != track size {ema.shape}")
    return TrackAppearance(app.alpha * ema + (1.0 - app.alpha) * f, app.frame_count + 1, app.alpha)


def uema_unbiased(app: TrackAppearance) -> np.ndarray:
    if app.frame_count == 0 or app.ema is None:
        raise NoObservations("track has no appearance observations")
    return app.ema / (1.0 - app.alpha**app.frame_count)


def cosine_distance(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine distance of a zero vector")
    return float(min(max(1.0 - (a @ b) / (na * nb), 0.0), 2.0))


def cosine_distance_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        return np.zeros((len(a), len(b)))
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(f"embedding sizes differ: {a.shape[1]} vs {b.shape[1]}")
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    if np.any(na == 0) or np.any(nb == 0):
        raise ZeroVector("cosine distance of a zero vector")
    d = 1.0 - (a / na[:, None]) @ (b / nb[:, None]).T
    return np.clip(d, 0.0, 2.0)


def amplify_distance(d, beta: float):
    """``min(d * beta, 1)``; works elementwise on arrays."""
    if np.ndim(d):
        return np.minimum(np.asarray(d, dtype=float) * beta, 1.0)
    return min(float(d) * beta, 1.0)


def spatial_gate(d_cos, iou, theta_iou: float):
    """Strict ``iou < theta_iou`` forces maximum dissimilarity."""
    if np.ndim(d_cos) or np.ndim(iou):
        return np.where(np.asarray(iou) < theta_iou, 1.0, d_cos)
    return 1.0 if iou < theta_iou else d_cos


def fused_cost(d_cos_gated, iou):
    # IoU enters as a distance; multiplying by raw overlap would reward misalignment.
    if np.ndim(d_cos_gated) or np.ndim(iou):
        return np.asarray(d_cos_gated, dtype=float) * (1.0 - np.asarray(iou, dtype=float))
    return float(d_cos_gated) * (1.0 - float(iou))


@dataclass
class CostBreakdown:
    """Intermediate matrices kept for gating decisions and diagnostics."""

    cost: np.ndarray
    iou: np.ndarray
    raw_cos: np.ndarray
    has_appearance: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), bool))


def build_cost_matrix(
    track_boxes: np.ndarray,
    track_embeddings: Sequence[np.ndarray | None],
    det_boxes: np.ndarray,
    det_embeddings: Sequence[np.ndarray | None],
    cfg: CoffConfig | None = None,
) -> CostBreakdown:
    """Fused track x detection cost.

    ``track_boxes`` are predicted (tlwh) boxes, ``track_embeddings`` the
    bias-corrected EMA of each track. Pairs where either side has no embedding
    use maximal appearance dissimilarity, which reduces the cost to the IoU
    distance.
    """
    cfg = cfg or CoffConfig()
    n, m = len(track_boxes), len(det_boxes)
    if len(track_embeddings) != n or len(det_embeddings) != m:
        raise DimensionMismatch("embeddings must align with boxes")
    ious = iou_matrix(track_boxes, det_boxes)
    raw = np.ones((n, m))
    has = np.zeros((n, m), dtype=bool)
    if n and m:
        ti = [i for i, e in enumerate(track_embeddings) if e is not None]
        dj = [j for j, e in enumerate(det_embeddings) if e is not None]
        if ti and dj:
            dims = {np.shape(track_embeddings[i])[0] for i in ti} | {
                np.shape(det_embeddings[j])[0] for j in dj
            }
            if len(dims) > 1:
                raise DimensionMismatch(f"embedding sizes differ: {sorted(dims)}")
            sub = cosine_distance_matrix(
                np.stack([track_embeddings[i] for i in ti]),
                np.stack([det_embeddings[j] for j in dj]),
            )
            raw[np.ix_(ti, dj)] = sub
            has[np.ix_(ti, dj)] = True
    d = np.where(has, amplify_distance(raw, cfg.beta), 1.0)
    d = spatial_gate(d, ious, cfg.theta_iou)
    return CostBreakdown(fused_cost(d, ious), ious, raw, has)
