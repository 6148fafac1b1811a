"""Multi-object tracking for moving-platform (maritime) video.

Kalman tracking with platform motion compensation, appearance/IoU fused
association, MOT metrics, and a synthetic scenario generator.
"""

from .geometry import AffineTransform2D, Box2D, Point2D, iou
from .tracker import DetectionObservation, FrameResult, Tracker, TrackerConfig, run_sequence

__all__ = [
    "AffineTransform2D",
    "Box2D",
    "DetectionObservation",
    "FrameResult",
    "Point2D",
    "Tracker",
    "TrackerConfig",
    "iou",
    "run_sequence",
]
__version__ = "0.1.0"
