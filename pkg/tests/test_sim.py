from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from seatrack import sim
from seatrack.cmc import estimate_affine_ransac
from seatrack.errors import ConfigInvalid, UnknownPreset
from seatrack.geometry import apply_affine_box, apply_affine_points, invert

SHORT = replace(sim.preset("calm"), frames=40)


def test_empty_scenario():
    b = sim.generate(replace(SHORT, n_targets=0, false_positive_rate=0.0))
    assert b.gt == [] and b.detections == []


def test_no_platform_motion_gives_identity():
    b = sim.generate(SHORT)
    assert all(T.is_identity() for _, T in b.transforms)
    assert [f for f, _ in b.transforms] == list(range(1, 41))


def test_same_seed_same_bytes(tmp_path):
    cfg = replace(sim.preset("jitter"), frames=30, seed=123)
    a = sim.write_bundle(sim.generate(cfg), tmp_path / "a")
    b = sim.write_bundle(sim.generate(cfg), tmp_path / "b")
    for key in a:
        with open(a[key], "rb") as fa, open(b[key], "rb") as fb:
            assert fa.read() == fb.read(), key


def test_different_seed_differs():
    a = sim.generate(replace(SHORT, seed=1))
    b = sim.generate(replace(SHORT, seed=2))
    assert a.gt[0].x != b.gt[0].x


def test_presets():
    assert sim.preset("calm").n_targets == 5
    assert sim.preset("calm").miss_rate == 0.02
    assert sim.preset("jitter").platform_motion != "none"
    occ = sim.preset("occlusion").occlusion_events
    assert len(occ) == 3 and all(10 <= d <= 25 for _, _, d in occ)
    crowded = sim.preset("crowded")
    assert (crowded.n_targets, crowded.miss_rate) == (20, 0.08)
    with pytest.raises(UnknownPreset):
        sim.preset("stormy")


@pytest.mark.parametrize(
    "field, value",
    [
        ("n_targets", -1),
        ("frames", 0),
        ("miss_rate", 1.5),
        ("false_positive_rate", -0.1),
        ("platform_motion", "tsunami"),
        ("jitter_correlation", 1.0),
        ("occlusion_events", ((9, 1, 5),)),
    ],
)
def test_invalid_config(field, value):
    with pytest.raises(ConfigInvalid):
        sim.generate(replace(SHORT, **{field: value}))


def test_occluded_targets_keep_gt_without_detections():
    cfg = replace(SHORT, occlusion_events=((0, 5, 10),), miss_rate=0.0, false_positive_rate=0.0)
    b = sim.generate(cfg)
    hidden = [e for e in b.gt if e.visibility == 0]
    assert {(e.id, e.frame) for e in hidden} == {(1, f) for f in range(5, 15)}
    for f in range(5, 15):
        assert 1 not in [i for d, i in zip(b.detections, b.det_identity) if d.frame == f]
    assert len(b.detections) == 5 * 40 - 10


@pytest.mark.parametrize("motion", ["translation_jitter", "rotation_jitter", "composite"])
def test_gt_consistent_with_inverse_pose(motion):
    cfg = replace(SHORT, platform_motion=motion, detection_noise_sigma=0.0)
    b = sim.generate(cfg)
    worst = 0.0
    for e in b.gt:
        back = apply_affine_box(invert(b.poses[e.frame - 1]), e.box)
        world = b.world_boxes[(e.frame, e.id)]
        worst = max(worst, np.max(np.abs(back.to_array() - world.to_array())))
    assert worst <= 1e-6


def test_transforms_are_pose_increments():
    b = sim.generate(replace(sim.preset("jitter"), frames=20))
    pts = np.array([[0.0, 0.0], [960.0, 540.0], [1900.0, 20.0]])
    for (f, T), P0, P1 in zip(b.transforms[1:], b.poses, b.poses[1:]):
        np.testing.assert_allclose(apply_affine_points(T, apply_affine_points(P0, pts)), apply_affine_points(P1, pts), atol=1e-9)


def test_detections_follow_noise_model():
    cfg = replace(SHORT, miss_rate=0.0, false_positive_rate=0.0, detection_noise_sigma=0.0)
    b = sim.generate(cfg)
    gt = {(e.frame, e.id): e.box for e in b.gt}
    for d, ident in zip(b.detections, b.det_identity):
        assert np.allclose(d.box.to_array(), gt[(d.frame, ident)].to_array(), atol=1e-9)


def test_correspondences_exact_without_outliers():
    b = sim.generate(replace(sim.preset("jitter"), frames=25, correspondence_outlier_fraction=0.0))
    for f, T in b.transforms[1:]:
        est, _ = estimate_affine_ransac(b.correspondences[f])
        assert est.allclose(T, atol=1e-6)


def test_correspondences_with_outliers_within_half_pixel():
    b = sim.generate(replace(sim.preset("jitter"), frames=25, correspondence_outlier_fraction=0.3))
    for f, T in b.transforms[1:]:
        c = b.correspondences[f]
        inl = b.correspondence_inliers[f]
        assert inl.mean() == pytest.approx(0.7)
        est, _ = estimate_affine_ransac(c)
        truth = apply_affine_points(T, c.source[inl])
        assert np.linalg.norm(apply_affine_points(est, c.source[inl]) - truth, axis=1).mean() <= 0.5


def test_histogram_zero_noise():
    pos, neg = sim.embedding_distance_histogram(sim.generate(replace(SHORT, embedding_noise_angle=0.0)))
    # identical unit vectors can dot to 1 - ulp; scaled that is ~1e-13
    assert len(pos) and np.all(pos <= 1e-12)
    assert len(neg)


def test_histogram_orthogonal_identities_clip_to_one():
    b = sim.generate(replace(SHORT, identity_spread_angle=math.pi / 2))
    _, neg = sim.embedding_distance_histogram(b, beta=800)
    assert np.all(neg == 1.0)


def test_histogram_calibrated_bands():
    pos, neg = sim.embedding_distance_histogram(sim.generate(sim.preset("calm")))
    assert np.mean(pos <= 0.28) >= 0.95
    assert np.mean(neg >= 0.95) >= 0.95
