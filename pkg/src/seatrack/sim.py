"""Synthetic maritime scenes with known ground truth.

Targets move at constant velocity in a world frame and bounce off its edges.
A platform pose ``P_k`` (world -> image at frame k) sways with correlated
translation/rotation increments; the per-frame transform handed to the
tracker is ``T_k = P_k o P_{k-1}^-1``. Detections are noisy projected boxes
with misses and Poisson false positives. Each identity owns a prototype
embedding; observations are the prototype rotated by a fixed small angle in a
random direction, which pins the raw cosine distance of same-identity pairs
near ``sin(angle)**2``.
"""

from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .appearance import amplify_distance, cosine_distance_matrix
from .cmc import PointCorrespondenceSet
from .errors import ConfigInvalid, UnknownPreset
from .formats import (
    MotEntry,
    write_correspondences,
    write_embeddings,
    write_mot_file,
    write_transforms,
)
from .geometry import AffineTransform2D, Box2D, apply_affine_box, apply_affine_points, compose, invert
from .tracker import DetectionObservation

PLATFORM_MOTIONS = ("none", "translation_jitter", "rotation_jitter", "composite")


@dataclass
class ScenarioConfig:
    n_targets: int = 5
    frames: int = 300
    image_size: tuple[int, int] = (1920, 1080)
    target_size_range: tuple[float, float] = (24.0, 96.0)
    speed_range: tuple[float, float] = (0.5, 3.0)
    lane_fraction: float = 1.0
    platform_motion: str = "none"
    translation_sigma: float = 8.0
    rotation_sigma: float = 0.01
    jitter_correlation: float = 0.7
    jitter_restoring: float = 0.05
    detection_noise_sigma: float = 0.5
    miss_rate: float = 0.02
    false_positive_rate: float = 0.1
    low_conf_fraction: float = 0.1
    occlusion_events: tuple[tuple[int, int, int], ...] = ()
    embedding_dim: int = 512
    embedding_noise_angle: float = 0.01
    identity_spread_angle: float = 0.1
    n_background_points: int = 60
    correspondence_outlier_fraction: float = 0.0
    seed: int = 0

    def validate(self) -> ScenarioConfig:
        def bad(msg):
            raise ConfigInvalid(msg)

        if self.n_targets < 0:
            bad("n_targets must be >= 0")
        if self.frames < 1:
            bad("frames must be >= 1")
        if min(self.image_size) <= 0:
            bad("image_size must be positive")
        lo, hi = self.target_size_range
        if not 0 < lo <= hi:
            bad("target_size_range must satisfy 0 < min <= max")
        if not 0 <= self.speed_range[0] <= self.speed_range[1]:
            bad("speed_range must satisfy 0 <= min <= max")
        if not 0 < self.lane_fraction <= 1:
            bad("lane_fraction must lie in (0, 1]")
        if self.platform_motion not in PLATFORM_MOTIONS:
            bad(f"platform_motion must be one of {PLATFORM_MOTIONS}")
        if self.translation_sigma < 0 or self.rotation_sigma < 0 or self.detection_noise_sigma < 0:
            bad("sigmas must be >= 0")
        if not 0 <= self.jitter_correlation < 1:
            bad("jitter_correlation must lie in [0, 1)")
        if not 0 <= self.jitter_restoring < 1:
            bad("jitter_restoring must lie in [0, 1)")
        for name in ("miss_rate", "low_conf_fraction", "correspondence_outlier_fraction"):
            if not 0 <= getattr(self, name) <= 1:
                bad(f"{name} must lie in [0, 1]")
        if self.false_positive_rate < 0:
            bad("false_positive_rate must be >= 0")
        if self.embedding_dim < 2:
            bad("embedding_dim must be >= 2")
        if self.n_background_points < 0:
            bad("n_background_points must be >= 0")
        for ev in self.occlusion_events:
            t, start, dur = ev
            if not (0 <= t < self.n_targets and start >= 1 and dur >= 1):
                bad(f"invalid occlusion event {ev}")
        return self


def preset(name: str) -> ScenarioConfig:
    calm = ScenarioConfig()
    if name == "calm":
        return calm
    if name == "jitter":
        return replace(
            calm,
            platform_motion="composite",
            translation_sigma=8.0,
            rotation_sigma=0.01,
            correspondence_outlier_fraction=0.2,
        )
    if name == "occlusion":
        return replace(calm, occlusion_events=((0, 60, 12), (1, 120, 25), (2, 200, 18)))
    if name == "crowded":
        return replace(calm, n_targets=20, miss_rate=0.08, lane_fraction=0.4, frames=200)
    raise UnknownPreset(f"unknown preset {name!r}; choose from calm, jitter, occlusion, crowded")


PRESETS = ("calm", "jitter", "occlusion", "crowded")


@dataclass
class ScenarioBundle:
    config: ScenarioConfig
    gt: list[MotEntry]
    detections: list[DetectionObservation]
    # ground-truth identity per detection; 0 marks a false positive
    det_identity: list[int]
    transforms: list[tuple[int, AffineTransform2D]]
    poses: list[AffineTransform2D]
    correspondences: dict[int, PointCorrespondenceSet]
    correspondence_inliers: dict[int, np.ndarray]
    world_boxes: dict[tuple[int, int], Box2D] = field(default_factory=dict)

    @property
    def embeddings(self) -> list[np.ndarray | None]:
        return [d.embedding for d in self.detections]


def _random_unit_orthogonal(rng, base: np.ndarray) -> np.ndarray:
    """Random unit vector orthogonal to unit ``base``."""
    w = rng.normal(size=base.shape)
    w -= (w @ base) * base
    return w / np.linalg.norm(w)


def _rotate_towards_random(rng, base: np.ndarray, angle: float) -> np.ndarray:
    if angle == 0:
        return base.copy()
    return math.cos(angle) * base + math.sin(angle) * _random_unit_orthogonal(rng, base)


def _pose(shift: np.ndarray, rot: float, center: np.ndarray) -> AffineTransform2D:
    R = AffineTransform2D.rotation(rot, center)
    return AffineTransform2D(R.m, R.t + shift)


def _platform_poses(cfg: ScenarioConfig, rng) -> list[AffineTransform2D]:
    W, H = cfg.image_size
    center = np.array([W / 2.0, H / 2.0])
    use_t = cfg.platform_motion in ("translation_jitter", "composite")
    use_r = cfg.platform_motion in ("rotation_jitter", "composite")
    rho = cfg.jitter_correlation
    innov = math.sqrt(1.0 - rho * rho)
    shift = np.zeros(2)
    rot = 0.0
    d_shift = np.zeros(2)
    d_rot = 0.0
    poses = [AffineTransform2D.identity()]
    for _ in range(1, cfg.frames):
        # AR(1) increments (stationary std = sigma) plus a weak pull back to rest
        e_t = rng.normal(size=2)
        e_r = rng.normal()
        if use_t:
            d_shift = rho * d_shift + innov * cfg.translation_sigma * e_t
            shift = (1.0 - cfg.jitter_restoring) * shift + d_shift
        if use_r:
            d_rot = rho * d_rot + innov * cfg.rotation_sigma * e_r
            rot = (1.0 - cfg.jitter_restoring) * rot + d_rot
        poses.append(_pose(shift, rot, center) if (use_t or use_r) else AffineTransform2D.identity())
    return poses


def generate(cfg: ScenarioConfig) -> ScenarioBundle:
    cfg.validate()
    ss = np.random.SeedSequence(int(cfg.seed) & 0xFFFFFFFFFFFFFFFF)
    r_targets, r_platform, r_det, r_emb, r_corr = (np.random.default_rng(s) for s in ss.spawn(5))
    W, H = cfg.image_size
    D = cfg.embedding_dim

    poses = _platform_poses(cfg, r_platform)
    transforms = [(1, AffineTransform2D.identity())]
    for k in range(1, cfg.frames):
        transforms.append((k + 1, compose(poses[k], invert(poses[k - 1]))))

    lane_h = H * cfg.lane_fraction
    lane_y0 = (H - lane_h) / 2.0
    n = cfg.n_targets
    w = r_targets.uniform(*cfg.target_size_range, size=n)
    h = w * r_targets.uniform(0.5, 1.0, size=n)
    pos = np.column_stack(
        [
            r_targets.uniform(w / 2, W - w / 2, size=n) if n else np.zeros(0),
            r_targets.uniform(lane_y0 + h / 2, lane_y0 + lane_h - h / 2, size=n) if n else np.zeros(0),
        ]
    ).reshape(n, 2)
    speed = r_targets.uniform(*cfg.speed_range, size=n)
    heading = r_targets.uniform(0, 2 * math.pi, size=n)
    vel = np.column_stack([speed * np.cos(heading), speed * np.sin(heading)]).reshape(n, 2)
    lo = np.column_stack([w / 2, lane_y0 + h / 2]).reshape(n, 2)
    hi = np.column_stack([W - w / 2, lane_y0 + lane_h - h / 2]).reshape(n, 2)

    base = np.zeros(D)
    base[0] = 1.0
    base = _rotate_towards_random(r_emb, base, math.pi / 3)
    prototypes = [_rotate_towards_random(r_emb, base, cfg.identity_spread_angle) for _ in range(n)]

    occluded = set()
    for t, start, dur in cfg.occlusion_events:
        occluded.update((t, f) for f in range(start, start + dur))

    bg = np.column_stack(
        [r_corr.uniform(0, W, cfg.n_background_points), r_corr.uniform(0, H, cfg.n_background_points)]
    )

    gt: list[MotEntry] = []
    dets: list[DetectionObservation] = []
    det_ids: list[int] = []
    world_boxes: dict[tuple[int, int], Box2D] = {}
    corr: dict[int, PointCorrespondenceSet] = {}
    corr_inliers: dict[int, np.ndarray] = {}

    for k in range(cfg.frames):
        frame = k + 1
        P = poses[k]
        if k > 0:
            pos = pos + vel
            over = pos > hi
            under = pos < lo
            pos = np.where(over, 2 * hi - pos, np.where(under, 2 * lo - pos, pos))
            vel = np.where(over | under, -vel, vel)

        frame_dets: list[tuple[DetectionObservation, int]] = []
        for i in range(n):
            wb = Box2D.from_center(pos[i, 0], pos[i, 1], w[i], h[i])
            world_boxes[(frame, i + 1)] = wb
            ib = apply_affine_box(P, wb)
            visible = (i, frame) not in occluded
            gt.append(MotEntry(frame, i + 1, ib.x, ib.y, ib.w, ib.h, 1.0, 1, 1.0 if visible else 0.0))
            # draws happen unconditionally so misses do not shift later samples
            missed = r_det.random() < cfg.miss_rate
            noise = r_det.normal(scale=cfg.detection_noise_sigma, size=4)
            low = r_det.random() < cfg.low_conf_fraction
            # 6 decimals, as written to disk, so the high/low split survives a file round trip
            conf = round(r_det.uniform(0.1, 0.6) if low else r_det.uniform(0.6, 1.0), 6)
            emb = _rotate_towards_random(r_emb, prototypes[i], cfg.embedding_noise_angle)
            if not visible or missed:
                continue
            x1, y1 = ib.x + noise[0], ib.y + noise[1]
            x2, y2 = ib.x + ib.w + noise[2], ib.y + ib.h + noise[3]
            box = Box2D(x1, y1, max(x2 - x1, 1.0), max(y2 - y1, 1.0))
            frame_dets.append((DetectionObservation(frame, box, float(conf), 1, emb), i + 1))

        for _ in range(r_det.poisson(cfg.false_positive_rate)):
            fw = r_det.uniform(*cfg.target_size_range)
            fh = fw * r_det.uniform(0.5, 1.0)
            box = Box2D(r_det.uniform(0, W - fw), r_det.uniform(0, H - fh), fw, fh)
            v = r_emb.normal(size=D)
            frame_dets.append(
                (DetectionObservation(frame, box, round(r_det.uniform(0.1, 0.9), 6), 1, v / np.linalg.norm(v)), 0)
            )
        for j in r_det.permutation(len(frame_dets)):
            dets.append(frame_dets[j][0])
            det_ids.append(frame_dets[j][1])

        if k > 0 and cfg.n_background_points:
            src = apply_affine_points(poses[k - 1], bg)
            dst = apply_affine_points(P, bg)
            n_out = int(round(cfg.correspondence_outlier_fraction * len(bg)))
            inl = np.ones(len(bg), dtype=bool)
            if n_out:
                idx = r_corr.choice(len(bg), size=n_out, replace=False)
                dst = dst.copy()
                dst[idx] = src[idx] + r_corr.uniform(-60, 60, size=(n_out, 2))
                inl[idx] = False
            corr[frame] = PointCorrespondenceSet(src, dst, frame)
            corr_inliers[frame] = inl

    return ScenarioBundle(cfg, gt, dets, det_ids, transforms, poses, corr, corr_inliers, world_boxes)


def embedding_distance_histogram(bundle: ScenarioBundle, beta: float = 800.0):
    """Scaled cosine distances between detections of consecutive frames.

    Returns ``(positive, negative)``: same-identity and cross-identity pairs.
    False positives are left out.
    """
    by_frame: dict[int, list[tuple[int, np.ndarray]]] = {}
    for d, ident in zip(bundle.detections, bundle.det_identity):
        if ident and d.embedding is not None:
            by_frame.setdefault(d.frame, []).append((ident, d.embedding))
    pos, neg = [], []
    for f in sorted(by_frame):
        if f - 1 not in by_frame:
            continue
        prev, cur = by_frame[f - 1], by_frame[f]
        dist = amplify_distance(
            cosine_distance_matrix(np.stack([e for _, e in prev]), np.stack([e for _, e in cur])), beta
        )
        same = np.array([i for i, _ in prev])[:, None] == np.array([i for i, _ in cur])[None, :]
        pos.append(dist[same])
        neg.append(dist[~same])
    cat = lambda xs: np.concatenate(xs) if xs else np.zeros(0)  # noqa: E731
    return cat(pos), cat(neg)


def write_bundle(bundle: ScenarioBundle, out_dir, detection_threshold: float = 0.6) -> dict[str, str]:
    """Write gt/det/emb/transforms/correspondences files; returns the paths.

    Embeddings are stored only for detections at or above
    ``detection_threshold``, the ones the first association stage uses.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "gt": os.path.join(out_dir, "gt.txt"),
        "det": os.path.join(out_dir, "det.txt"),
        "emb": os.path.join(out_dir, "emb.txt"),
        "transforms": os.path.join(out_dir, "transforms.txt"),
        "correspondences": os.path.join(out_dir, "correspondences.txt"),
        "scenario": os.path.join(out_dir, "scenario.txt"),
    }
    write_mot_file(paths["gt"], bundle.gt, "gt")
    det_rows = [
        MotEntry(d.frame, -1, d.box.x, d.box.y, d.box.w, d.box.h, d.confidence, d.class_id, -1)
        for d in bundle.detections
    ]
    write_mot_file(paths["det"], det_rows, "det")
    emb = {}
    counters: dict[int, int] = {}
    for d in bundle.detections:
        idx = counters.get(d.frame, 0)
        counters[d.frame] = idx + 1
        if d.embedding is not None and d.confidence >= detection_threshold:
            emb[(d.frame, idx)] = d.embedding
    write_embeddings(paths["emb"], emb)
    write_transforms(paths["transforms"], bundle.transforms)
    write_correspondences(paths["correspondences"], bundle.correspondences)
    with open(paths["scenario"], "w", encoding="utf-8") as fh:
        for k, v in asdict(bundle.config).items():
            fh.write(f"{k}={v}\n")
    return paths
