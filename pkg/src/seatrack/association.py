"""Bipartite assignment and the two-stage matching cascade."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .appearance import CostBreakdown
from .errors import ConfigInvalid, ShapeMismatch
from .geometry import iou_matrix


@dataclass
class AssociationConfig:
    high_conf_threshold: float = 0.5
    low_conf_threshold: float = 0.1
    detection_threshold: float = 0.6
    match_cost_threshold: float = 0.85
    second_stage_iou_threshold: float = 0.5
    appearance_sim_threshold: float = 0.25
    linear_iou_threshold: float = 0.75

    def __post_init__(self):
        for name, value in vars(self).items():
            if not 0.0 <= value <= 1.0:
                raise ConfigInvalid(f"{name} must lie in [0, 1], got {value}")
        if self.low_conf_threshold > self.detection_threshold:
            raise ConfigInvalid("low_conf_threshold must not exceed detection_threshold")


@dataclass
class Assignment:
    matches: list[tuple[int, int]] = field(default_factory=list)
    unmatched_rows: list[int] = field(default_factory=list)
    unmatched_cols: list[int] = field(default_factory=list)

    def total_cost(self, costs: np.ndarray) -> float:
        return float(sum(costs[r, c] for r, c in self.matches))


def solve_assignment(costs) -> Assignment:
    """Minimum-cost one-to-one assignment.

    Non-finite entries are forbidden pairs. They are masked with a cost larger
    than any feasible total, so the solver first maximises the number of
    allowed pairs and then minimises their cost; masked pairs are dropped.
    """
    costs = np.asarray(costs, dtype=float)
    if costs.ndim != 2:
        raise ShapeMismatch(f"cost matrix must be 2-D, got shape {costs.shape}")
    n, m = costs.shape
    if n == 0 or m == 0:
        return Assignment([], list(range(n)), list(range(m)))
    allowed = np.isfinite(costs)
    if not allowed.any():
        return Assignment([], list(range(n)), list(range(m)))
    finite = costs[allowed]
    big = (np.abs(finite).sum() + 1.0) * (min(n, m) + 1)
    work = np.where(allowed, costs, big)
    rows, cols = linear_sum_assignment(work)
    matches = sorted((int(r), int(c)) for r, c in zip(rows, cols) if allowed[r, c])
    mr = {r for r, _ in matches}
    mc = {c for _, c in matches}
    return Assignment(
        matches,
        [r for r in range(n) if r not in mr],
        [c for c in range(m) if c not in mc],
    )


def gate_matches(assignment: Assignment, costs, threshold: float) -> Assignment:
    """Drop pairs whose cost exceeds ``threshold`` (a cost equal to it is kept)."""
    costs = np.asarray(costs, dtype=float)
    kept, rows, cols = [], list(assignment.unmatched_rows), list(assignment.unmatched_cols)
    for r, c in assignment.matches:
        if costs[r, c] <= threshold:
            kept.append((r, c))
        else:
            rows.append(r)
            cols.append(c)
    return Assignment(kept, sorted(rows), sorted(cols))


def first_stage(coff: CostBreakdown, cfg: AssociationConfig | None = None) -> Assignment:
    """Match tracks to high-confidence detections on the fused cost.

    Pairs whose raw cosine distance exceeds ``appearance_sim_threshold`` are
    forbidden before solving; the result is then gated at
    ``match_cost_threshold``.
    """
    cfg = cfg or AssociationConfig()
    cost = np.asarray(coff.cost, dtype=float)
    if cost.shape != coff.iou.shape or cost.shape != coff.raw_cos.shape:
        raise ShapeMismatch("cost, IoU and appearance matrices differ in shape")
    has = coff.has_appearance
    if has.shape != cost.shape:
        has = np.zeros(cost.shape, dtype=bool)
    masked = np.where(has & (coff.raw_cos > cfg.appearance_sim_threshold), np.inf, cost)
    return gate_matches(solve_assignment(masked), cost, cfg.match_cost_threshold)


def iou_stage(track_boxes, det_boxes, min_iou: float) -> Assignment:
    """Hungarian on IoU distance; pairs below ``min_iou`` are never matched."""
    ious = iou_matrix(track_boxes, det_boxes)
    dist = np.where(ious >= min_iou, 1.0 - ious, np.inf)
    return solve_assignment(dist)


def second_stage(track_boxes, low_det_boxes, cfg: AssociationConfig | None = None) -> Assignment:
    """Leftover tracks against low-confidence detections by IoU alone.

    Unmatched columns are discarded by the caller; they never start tracks.
    """
    cfg = cfg or AssociationConfig()
    return iou_stage(track_boxes, low_det_boxes, cfg.second_stage_iou_threshold)


def tentative_stage(track_boxes, det_boxes, cfg: AssociationConfig | None = None) -> Assignment:
    """Unconfirmed tracks against leftover high-confidence detections.

    ``linear_iou_threshold`` bounds the IoU distance, so a match needs
    ``IoU >= 1 - linear_iou_threshold``.
    """
    cfg = cfg or AssociationConfig()
    return iou_stage(track_boxes, det_boxes, 1.0 - cfg.linear_iou_threshold)
