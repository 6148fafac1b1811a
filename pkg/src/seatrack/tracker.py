"""Per-frame tracking pipeline and track lifecycle.

Each frame joins two independent inputs: the detections with their
embeddings, and the platform transform for the frame. Tracks are predicted,
moved by the platform transform, then associated in two stages (fused
appearance/IoU cost for high-confidence detections, IoU alone for the
low-confidence remainder). Unconfirmed tracks get a final IoU-only pass.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from . import motion
from .appearance import CoffConfig, TrackAppearance, build_cost_matrix, l2_normalize, uema_unbiased, uema_update
from .association import AssociationConfig, first_stage, second_stage, tentative_stage
from .errors import ConfigInvalid, NonMonotonicFrame, StreamMisalignment
from .geometry import AffineTransform2D, Box2D
from .motion import KalmanConfig, KalmanState


class TrackStatus(enum.Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    LOST = "lost"
    REMOVED = "removed"


_ALLOWED = {
    TrackStatus.TENTATIVE: {TrackStatus.CONFIRMED, TrackStatus.REMOVED},
    TrackStatus.CONFIRMED: {TrackStatus.LOST},
    TrackStatus.LOST: {TrackStatus.CONFIRMED, TrackStatus.REMOVED},
    TrackStatus.REMOVED: set(),
}


@dataclass
class DetectionObservation:
    frame: int
    box: Box2D
    confidence: float
    class_id: int = 1
    embedding: np.ndarray | None = None


@dataclass
class Track:
    track_id: int
    state: KalmanState
    appearance: TrackAppearance
    status: TrackStatus = TrackStatus.TENTATIVE
    frames_since_update: int = 0
    hits: int = 1
    class_id: int = 1
    confidence: float = 0.0
    history: list[tuple[int, Box2D]] = field(default_factory=list)

    def transition(self, status: TrackStatus) -> None:
        if status is self.status:
            return
        if status not in _ALLOWED[self.status]:
            raise RuntimeError(f"illegal transition {self.status.value} -> {status.value}")
        self.status = status

    @property
    def box(self) -> np.ndarray:
        return motion.state_to_tlwh(self.state)

    def embedding(self) -> np.ndarray | None:
        if self.appearance.frame_count == 0:
            return None
        return uema_unbiased(self.appearance)


@dataclass
class TrackerConfig:
    buffer_frames: int = 30
    n_init: int = 3
    association: AssociationConfig = field(default_factory=AssociationConfig)
    coff: CoffConfig = field(default_factory=CoffConfig)
    kalman: KalmanConfig = field(default_factory=KalmanConfig)
    cmc_enabled: bool = True
    interpolate: bool = False
    max_gap: int = 20

    def __post_init__(self):
        if int(self.buffer_frames) < 1:
            raise ConfigInvalid("buffer_frames must be >= 1")
        if int(self.n_init) < 1:
            raise ConfigInvalid("n_init must be >= 1")
        if int(self.max_gap) < 0:
            raise ConfigInvalid("max_gap must be >= 0")


class TrackOutput(NamedTuple):
    track_id: int
    box: Box2D
    confidence: float
    class_id: int


@dataclass
class FrameResult:
    frame: int
    outputs: list[TrackOutput] = field(default_factory=list)


def _boxes(items) -> np.ndarray:
    if not items:
        return np.zeros((0, 4))
    return np.stack([x.box if isinstance(x, Track) else x.box.to_array() for x in items])


class Tracker:
    """Online multi-object tracker for one sequence."""

    def __init__(self, cfg: TrackerConfig | None = None):
        self.cfg = cfg or TrackerConfig()
        self.tracks: list[Track] = []
        self.last_frame: int | None = None
        self._next_id = 1

    def _new_track(self, det: DetectionObservation, frame: int) -> Track:
        app = TrackAppearance(alpha=self.cfg.coff.alpha)
        if det.embedding is not None:
            app = uema_update(app, l2_normalize(det.embedding))
        tr = Track(
            self._next_id,
            motion.initiate(det.box, self.cfg.kalman),
            app,
            class_id=det.class_id,
            confidence=det.confidence,
        )
        tr.history.append((frame, motion.state_to_box(tr.state)))
        if self.cfg.n_init <= 1:
            tr.transition(TrackStatus.CONFIRMED)
        self._next_id += 1
        return tr

    def _apply_match(self, tr: Track, det: DetectionObservation, frame: int) -> None:
        tr.state = motion.update(tr.state, det.box, self.cfg.kalman)
        if det.embedding is not None:
            tr.appearance = uema_update(tr.appearance, l2_normalize(det.embedding))
        tr.frames_since_update = 0
        tr.hits += 1
        tr.confidence = det.confidence
        tr.class_id = det.class_id
        tr.history.append((frame, motion.state_to_box(tr.state)))
        if tr.status is TrackStatus.LOST:
            tr.transition(TrackStatus.CONFIRMED)
        elif tr.status is TrackStatus.TENTATIVE and tr.hits >= self.cfg.n_init:
            tr.transition(TrackStatus.CONFIRMED)

    def step(
        self,
        frame: int,
        detections: Sequence[DetectionObservation],
        transform: AffineTransform2D | None = None,
    ) -> FrameResult:
        cfg = self.cfg
        acfg = cfg.association
        if self.last_frame is not None and frame <= self.last_frame:
            raise NonMonotonicFrame(f"frame {frame} after {self.last_frame}")
        self.last_frame = frame

        # Tracks unmatched for a full buffer are dropped before they can match again.
        for tr in self.tracks:
            if tr.frames_since_update >= cfg.buffer_frames:
                tr.transition(TrackStatus.REMOVED)
        self.tracks = [t for t in self.tracks if t.status is not TrackStatus.REMOVED]

        for tr in self.tracks:
            tr.state = motion.predict(tr.state, cfg.kalman)
            if cfg.cmc_enabled and transform is not None:
                tr.state = motion.apply_platform_compensation(tr.state, transform)

        high = [d for d in detections if d.confidence >= acfg.detection_threshold]
        low = [
            d
            for d in detections
            if acfg.low_conf_threshold <= d.confidence < acfg.detection_threshold
        ]
        pool = [t for t in self.tracks if t.status in (TrackStatus.CONFIRMED, TrackStatus.LOST)]
        tentative = [t for t in self.tracks if t.status is TrackStatus.TENTATIVE]
        matched: set[int] = set()

        coff = build_cost_matrix(
            _boxes(pool),
            [t.embedding() for t in pool],
            _boxes(high),
            [None if d.embedding is None else l2_normalize(d.embedding) for d in high],
            cfg.coff,
        )
        a1 = first_stage(coff, acfg)
        for r, c in a1.matches:
            self._apply_match(pool[r], high[c], frame)
            matched.add(pool[r].track_id)
        left_tracks = [pool[r] for r in a1.unmatched_rows]
        left_high = [high[c] for c in a1.unmatched_cols]

        a2 = second_stage(_boxes(left_tracks), _boxes(low), acfg)
        for r, c in a2.matches:
            self._apply_match(left_tracks[r], low[c], frame)
            matched.add(left_tracks[r].track_id)

        a3 = tentative_stage(_boxes(tentative), _boxes(left_high), acfg)
        for r, c in a3.matches:
            self._apply_match(tentative[r], left_high[c], frame)
            matched.add(tentative[r].track_id)
        spawn = [left_high[c] for c in a3.unmatched_cols]

        for tr in self.tracks:
            if tr.track_id in matched:
                continue
            tr.frames_since_update += 1
            if tr.status is TrackStatus.TENTATIVE:
                tr.transition(TrackStatus.REMOVED)
            elif tr.status is TrackStatus.CONFIRMED:
                tr.transition(TrackStatus.LOST)
        self.tracks = [t for t in self.tracks if t.status is not TrackStatus.REMOVED]

        for det in spawn:
            self.tracks.append(self._new_track(det, frame))

        outputs = [
            TrackOutput(t.track_id, motion.state_to_box(t.state), float(t.confidence), t.class_id)
            for t in sorted(self.tracks, key=lambda t: t.track_id)
            if t.status is TrackStatus.CONFIRMED and t.frames_since_update == 0
        ]
        return FrameResult(frame, outputs)


def attach_embeddings(
    detections: Sequence[DetectionObservation],
    embeddings: Mapping[tuple[int, int], np.ndarray],
) -> list[DetectionObservation]:
    """Attach ``(frame, det_index)``-keyed embeddings; ``det_index`` counts within a frame."""
    by_frame: dict[int, list[DetectionObservation]] = {}
    for d in detections:
        by_frame.setdefault(d.frame, []).append(d)
    for frame, idx in embeddings:
        if frame not in by_frame or not 0 <= idx < len(by_frame[frame]):
            raise StreamMisalignment(f"embedding for missing detection (frame {frame}, index {idx})")
    out = []
    for frame in sorted(by_frame):
        for i, d in enumerate(by_frame[frame]):
            emb = embeddings.get((frame, i), d.embedding)
            out.append(DetectionObservation(d.frame, d.box, d.confidence, d.class_id, emb))
    return out


def run_sequence(
    detections: Sequence[DetectionObservation],
    transforms: Iterable[tuple[int, AffineTransform2D]] | None = None,
    cfg: TrackerConfig | None = None,
    embeddings: Mapping[tuple[int, int], np.ndarray] | None = None,
    n_frames: int | None = None,
) -> list[FrameResult]:
    """Run a tracker over frames ``1..n_frames`` (default: last detection frame).

    ``transforms`` yields ``(frame, transform)`` in frame order; ``None``
    means no platform motion.
    """
    cfg = cfg or TrackerConfig()
    if embeddings:
        detections = attach_embeddings(detections, embeddings)
    by_frame: dict[int, list[DetectionObservation]] = {}
    for d in detections:
        by_frame.setdefault(d.frame, []).append(d)
    last = max(by_frame, default=0)
    if n_frames is not None:
        last = max(last, n_frames)
    if last == 0:
        return []
    if min(by_frame, default=1) < 1:
        raise StreamMisalignment("frames are 1-based")

    tf_iter = iter(transforms) if transforms is not None else None
    tracker = Tracker(cfg)
    results = []
    for frame in range(1, last + 1):
        T = None
        if tf_iter is not None:
            try:
                tf_frame, T = next(tf_iter)
            except StopIteration:
                raise StreamMisalignment(f"transform stream ended before frame {frame}") from None
            if tf_frame != frame:
                raise StreamMisalignment(f"transform for frame {tf_frame} where {frame} expected")
        results.append(tracker.step(frame, by_frame.get(frame, []), T))
    if cfg.interpolate:
        results = interpolate_tracklets(results, cfg.max_gap)
    return results


def interpolate_tracklets(results: Sequence[FrameResult], max_gap: int = 20) -> list[FrameResult]:
    """Fill gaps of at most ``max_gap`` frames with linearly interpolated boxes.

    Interpolated rows reuse the confidence and class of the observation that
    opens the gap.
    """
    per_track: dict[int, list[tuple[int, TrackOutput]]] = {}
    frames = {r.frame: list(r.outputs) for r in results}
    for r in results:
        for o in r.outputs:
            per_track.setdefault(o.track_id, []).append((r.frame, o))
    for tid, obs in per_track.items():
        obs.sort(key=lambda fo: fo[0])
        for (f0, o0), (f1, o1) in zip(obs, obs[1:]):
            gap = f1 - f0 - 1
            if gap < 1 or gap > max_gap:
                continue
            a = o0.box.to_array()
            b = o1.box.to_array()
            for f in range(f0 + 1, f1):
                w = (f - f0) / (f1 - f0)
                box = Box2D.from_array(a + w * (b - a))
                frames.setdefault(f, []).append(TrackOutput(tid, box, o0.confidence, o0.class_id))
    return [
        FrameResult(f, sorted(outs, key=lambda o: o.track_id)) for f, outs in sorted(frames.items())
    ]
