"""Platform (camera) motion estimation.

Transforms map frame ``k-1`` image coordinates into frame ``k`` image
coordinates. Feature extraction is not done here; callers supply point
correspondences (e.g. tracked background keypoints) or a transforms file.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    ConfigInvalid,
    DegenerateConfiguration,
    InsufficientCorrespondences,
    MissingFrame,
    NoConsensus,
)
from .geometry import AffineTransform2D, Point2D

log = logging.getLogger(__name__)

MIN_SAMPLE = 3


@dataclass
class CmcConfig:
    ransac_iterations: int = 200
    inlier_threshold: float = 3.0
    min_inlier_fraction: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if int(self.ransac_iterations) < 1:
            raise ConfigInvalid("ransac_iterations must be a positive integer")
        if not self.inlier_threshold > 0:
            raise ConfigInvalid("inlier_threshold must be > 0")
        if not 0.0 <= self.min_inlier_fraction <= 1.0:
            raise ConfigInvalid("min_inlier_fraction must lie in [0, 1]")


@dataclass
class PointCorrespondenceSet:
    """Matched points ``source`` (frame k-1) -> ``target`` (frame k)."""

    source: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    target: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    frame_index: int = 1

    def __post_init__(self):
        self.source = np.asarray(self.source, dtype=float).reshape(-1, 2)
        self.target = np.asarray(self.target, dtype=float).reshape(-1, 2)
        if self.source.shape != self.target.shape:
            raise ValueError("source and target must have the same number of points")
        if not (np.all(np.isfinite(self.source)) and np.all(np.isfinite(self.target))):
            raise ValueError("non-finite correspondence")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[Point2D, Point2D]], frame_index: int = 1):
        pairs = list(pairs)
        src = [(s.x, s.y) for s, _ in pairs]
        dst = [(d.x, d.y) for _, d in pairs]
        return cls(np.array(src).reshape(-1, 2), np.array(dst).reshape(-1, 2), frame_index)

    def __len__(self):
        return len(self.source)

    def subset(self, mask) -> PointCorrespondenceSet:
        return PointCorrespondenceSet(self.source[mask], self.target[mask], self.frame_index)


def _check_spread(src: np.ndarray) -> np.ndarray:
    """Return centred sources; raise if they are (numerically) collinear."""
    centred = src - src.mean(axis=0)
    sv = np.linalg.svd(centred, compute_uv=False)
    if sv.size < 2 or sv[1] <= 1e-9 * max(sv[0], 1.0):
        raise DegenerateConfiguration("correspondence sources are collinear")
    return centred


def fit_affine_lsq(pairs: PointCorrespondenceSet) -> AffineTransform2D:
    """Least-squares affine fit, solved through centred 2x2 normal equations."""
    if len(pairs) < MIN_SAMPLE:
        raise InsufficientCorrespondences(f"need >= 3 pairs, got {len(pairs)}")
    src, dst = pairs.source, pairs.target
    sc = _check_spread(src)
    dc = dst - dst.mean(axis=0)
    # m @ (S^T S) = D^T S
    sts = sc.T @ sc
    dts = dc.T @ sc
    m = np.linalg.solve(sts, dts.T).T
    t = dst.mean(axis=0) - m @ src.mean(axis=0)
    return AffineTransform2D(m, t)


def _residuals(T: AffineTransform2D, pairs: PointCorrespondenceSet) -> np.ndarray:
    return np.linalg.norm(pairs.source @ T.m.T + T.t - pairs.target, axis=1)


def estimate_affine_ransac(
    pairs: PointCorrespondenceSet, cfg: CmcConfig | None = None
) -> tuple[AffineTransform2D, np.ndarray]:
    """Robust affine fit. Moving targets among the correspondences act as outliers.

    Returns the refit transform and a boolean inlier mask. The sample sequence
    is drawn from ``(cfg.seed, pairs.frame_index)`` so results are reproducible
    per frame.
    """
    cfg = cfg or CmcConfig()
    n = len(pairs)
    if n < MIN_SAMPLE:
        raise InsufficientCorrespondences(f"need >= 3 pairs, got {n}")
    rng = np.random.default_rng([int(cfg.seed) & 0xFFFFFFFFFFFFFFFF, int(pairs.frame_index)])
    idx = np.stack([rng.choice(n, size=MIN_SAMPLE, replace=False) for _ in range(int(cfg.ransac_iterations))])

    # Every hypothesis is an exact 3-point fit: [x y 1] @ X = [x' y'].
    A = np.concatenate([pairs.source[idx], np.ones(idx.shape + (1,))], axis=2)
    scale = max(float(np.abs(pairs.source).max()), 1.0)
    ok = np.abs(np.linalg.det(A)) > 1e-9 * scale * scale
    best_mask = None
    best_count = -1
    if ok.any():
        X = np.linalg.solve(A[ok], pairs.target[idx[ok]])
        pred = pairs.source[None] @ X[:, :2] + X[:, 2:3]
        masks = np.linalg.norm(pred - pairs.target[None], axis=2) < cfg.inlier_threshold
        counts = masks.sum(axis=1)
        best = int(np.argmax(counts))  # first hypothesis with the most inliers
        best_count, best_mask = int(counts[best]), masks[best]

    if best_mask is None or best_count / n < cfg.min_inlier_fraction:
        frac = 0.0 if best_mask is None else best_count / n
        raise NoConsensus(
            f"frame {pairs.frame_index}: best inlier fraction {frac:.3f} "
            f"< {cfg.min_inlier_fraction}"
        )
    T = fit_affine_lsq(pairs.subset(best_mask))
    mask = _residuals(T, pairs) < cfg.inlier_threshold
    if mask.sum() >= MIN_SAMPLE and not np.array_equal(mask, best_mask):
        try:
            T = fit_affine_lsq(pairs.subset(mask))
        except DegenerateConfiguration:
            mask = best_mask
    return T, mask


def transform_source(
    kind: str,
    frames: Sequence[int],
    *,
    transforms: Mapping[int, AffineTransform2D] | None = None,
    correspondences: Mapping[int, PointCorrespondenceSet] | None = None,
    cfg: CmcConfig | None = None,
) -> Iterator[tuple[int, AffineTransform2D]]:
    """Yield ``(frame, transform)`` for every requested frame.

    kind:
        ``"identity"`` -- CMC disabled.
        ``"file"`` -- look frames up in ``transforms`` (as read from a
        transforms file); a missing frame raises ``MissingFrame``.
        ``"correspondences"`` -- RANSAC per frame; frames without enough
        correspondences or without consensus fall back to identity.
    """
    if kind == "identity":
        for f in frames:
            yield f, AffineTransform2D.identity()
    elif kind == "file":
        if transforms is None:
            raise ValueError("file kind needs transforms")
        for f in frames:
            if f not in transforms:
                raise MissingFrame(f)
            yield f, transforms[f]
    elif kind == "correspondences":
        if correspondences is None:
            raise ValueError("correspondences kind needs correspondences")
        for f in frames:
            pairs = correspondences.get(f)
            if f == 1 or pairs is None:
                yield f, AffineTransform2D.identity()
                continue
            try:
                T, _ = estimate_affine_ransac(pairs, cfg)
            except (InsufficientCorrespondences, NoConsensus, DegenerateConfiguration) as e:
                log.warning("frame %d: %s; using identity", f, e)
                T = AffineTransform2D.identity()
            yield f, T
    else:
        raise ValueError(f"unknown transform source kind {kind!r}")
