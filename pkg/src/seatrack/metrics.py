"""CLEAR MOT, identity and HOTA metrics.

Ground-truth rows with visibility 0 are ignore regions: they are not scored,
and predictions matched to them (IoU >= 0.5) are dropped before scoring.

Per-frame matchings maximise the number of pairs above the IoU threshold and
only then the secondary score (IoU, continuity or association alignment).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .association import solve_assignment
from .errors import EmptyGroundTruth, NoTruePositives
from .formats import MotEntry
from .geometry import iou_matrix

EPS = np.finfo(float).eps
CLEAR_THRESHOLD = 0.5
DEFAULT_ALPHAS = tuple(np.round(np.arange(1, 20) * 0.05, 2))


@dataclass
class _Frame:
    gt_ids: np.ndarray
    gt_boxes: np.ndarray
    pr_ids: np.ndarray
    pr_boxes: np.ndarray

    def sim(self) -> np.ndarray:
        return iou_matrix(self.gt_boxes, self.pr_boxes)


@dataclass
class _Sequence:
    frames: list[_Frame]
    n_gt_ids: int
    n_pr_ids: int
    num_gt: int
    num_pr: int


def _prepare(gt: Sequence[MotEntry], results: Sequence[MotEntry]) -> _Sequence:
    gt_map: dict[int, int] = {}
    pr_map: dict[int, int] = {}
    by_frame: dict[int, tuple[list, list]] = {}
    for e in gt:
        by_frame.setdefault(e.frame, ([], []))[0].append(e)
    for e in results:
        by_frame.setdefault(e.frame, ([], []))[1].append(e)

    frames = []
    num_gt = num_pr = 0
    for f in sorted(by_frame):
        g_rows, p_rows = by_frame[f]
        if p_rows and any(e.ignored for e in g_rows):
            g_all = np.array([[e.x, e.y, e.w, e.h] for e in g_rows])
            p_all = np.array([[e.x, e.y, e.w, e.h] for e in p_rows])
            m = match_frame(g_all, p_all, CLEAR_THRESHOLD)
            drop = {j for i, j in m[0] if g_rows[i].ignored}
            p_rows = [e for j, e in enumerate(p_rows) if j not in drop]
        g_rows = [e for e in g_rows if not e.ignored]
        for e in g_rows:
            gt_map.setdefault(e.id, len(gt_map))
        for e in p_rows:
            pr_map.setdefault(e.id, len(pr_map))
        frames.append(
            _Frame(
                np.array([gt_map[e.id] for e in g_rows], dtype=int),
                np.array([[e.x, e.y, e.w, e.h] for e in g_rows]).reshape(-1, 4),
                np.array([pr_map[e.id] for e in p_rows], dtype=int),
                np.array([[e.x, e.y, e.w, e.h] for e in p_rows]).reshape(-1, 4),
            )
        )
        num_gt += len(g_rows)
        num_pr += len(p_rows)
    if num_gt == 0:
        raise EmptyGroundTruth("no scorable ground-truth boxes")
    return _Sequence(frames, len(gt_map), len(pr_map), num_gt, num_pr)


def match_frame(gt_boxes, pred_boxes, alpha: float = CLEAR_THRESHOLD):
    """One frame's matching: most pairs with IoU >= alpha, then largest total IoU.

    Returns ``(tp_pairs, fp_indices, fn_indices)``.
    """
    sim = iou_matrix(gt_boxes, pred_boxes)
    cost = np.where(sim >= alpha - EPS, 1.0 - sim, np.inf)
    a = solve_assignment(cost)
    return a.matches, a.unmatched_cols, a.unmatched_rows


@dataclass
class ClearResult:
    tp: int
    fp: int
    fn: int
    idsw: int
    frag: int
    iou_sum: float
    num_gt: int

    @property
    def mota(self) -> float:
        return 1.0 - (self.fp + self.fn + self.idsw) / self.num_gt


def _clear(seq: _Sequence) -> ClearResult:
    tp = fp = fn = idsw = 0
    iou_sum = 0.0
    prev_frame_match: dict[int, int] = {}
    last_match: dict[int, int] = {}
    coverage: dict[int, list[bool]] = {}
    for fr in seq.frames:
        sim = fr.sim()
        n, m = sim.shape
        if n and m:
            cont = fr.pr_ids[None, :] == np.array(
                [prev_frame_match.get(g, -1) for g in fr.gt_ids]
            )[:, None]
            # continuity outranks any IoU sum (which is < n + 1)
            score = cont * float(min(n, m) + 1) + sim
            cost = np.where(sim >= CLEAR_THRESHOLD - EPS, -score, np.inf)
            matches = solve_assignment(cost).matches
        else:
            matches = []
        now: dict[int, int] = {}
        for i, j in matches:
            g, p = int(fr.gt_ids[i]), int(fr.pr_ids[j])
            if g in last_match and last_match[g] != p:
                idsw += 1
            last_match[g] = p
            now[g] = p
            iou_sum += sim[i, j]
        prev_frame_match = now
        for g in fr.gt_ids:
            coverage.setdefault(int(g), []).append(int(g) in now)
        tp += len(matches)
        fn += n - len(matches)
        fp += m - len(matches)
    frag = sum(max(_runs(c) - 1, 0) for c in coverage.values())
    return ClearResult(tp, fp, fn, idsw, frag, iou_sum, seq.num_gt)


def _runs(flags: list[bool]) -> int:
    return sum(1 for i, v in enumerate(flags) if v and (i == 0 or not flags[i - 1]))


def mota(gt, results) -> float:
    return _clear(_prepare(gt, results)).mota


def frag(gt, results) -> int:
    """Tracked -> untracked -> tracked transitions over each GT's present frames."""
    return _clear(_prepare(gt, results)).frag


def loca(gt, results) -> float:
    c = _clear(_prepare(gt, results))
    if c.tp == 0:
        raise NoTruePositives("LocA is undefined without true positives")
    return c.iou_sum / c.tp


@dataclass
class IdResult:
    idtp: int
    idfp: int
    idfn: int

    @property
    def idf1(self) -> float:
        denom = 2 * self.idtp + self.idfp + self.idfn
        return 2 * self.idtp / denom if denom else 0.0


def _identity(seq: _Sequence) -> IdResult:
    overlap = np.zeros((seq.n_gt_ids, seq.n_pr_ids))
    for fr in seq.frames:
        if len(fr.gt_ids) and len(fr.pr_ids):
            hit = fr.sim() >= CLEAR_THRESHOLD - EPS
            np.add.at(overlap, (fr.gt_ids[:, None], fr.pr_ids[None, :]), hit)
    idtp = 0
    if overlap.size:
        r, c = linear_sum_assignment(-overlap)
        idtp = int(round(overlap[r, c].sum()))
    return IdResult(idtp, seq.num_pr - idtp, seq.num_gt - idtp)


def idf1(gt, results) -> float:
    return _identity(_prepare(gt, results)).idf1


@dataclass
class HotaResult:
    alphas: np.ndarray
    hota: np.ndarray
    deta: np.ndarray
    assa: np.ndarray
    tp: np.ndarray
    fp: np.ndarray
    fn: np.ndarray

    def at(self, alpha: float) -> tuple[float, float, float]:
        k = int(np.argmin(np.abs(self.alphas - alpha)))
        return float(self.hota[k]), float(self.deta[k]), float(self.assa[k])


def _hota(seq: _Sequence, alphas=DEFAULT_ALPHAS) -> HotaResult:
    alphas = np.asarray(alphas, dtype=float)
    G, P = seq.n_gt_ids, seq.n_pr_ids
    gt_count = np.zeros(G)
    pr_count = np.zeros(P)
    potential = np.zeros((G, P))
    sims = []
    for fr in seq.frames:
        sim = fr.sim()
        sims.append(sim)
        gt_count[fr.gt_ids] += 1
        pr_count[fr.pr_ids] += 1
        if sim.size:
            denom = sim.sum(0)[None, :] + sim.sum(1)[:, None] - sim
            soft = np.zeros_like(sim)
            np.divide(sim, denom, out=soft, where=denom > EPS)
            np.add.at(potential, (fr.gt_ids[:, None], fr.pr_ids[None, :]), soft)
    align = potential / np.maximum(gt_count[:, None] + pr_count[None, :] - potential, EPS)

    k = len(alphas)
    tp = np.zeros(k)
    fp = np.zeros(k)
    fn = np.zeros(k)
    matches = np.zeros((k, G, P))
    for fr, sim in zip(seq.frames, sims):
        n, m = sim.shape
        for a, alpha in enumerate(alphas):
            pairs = []
            if n and m:
                score = align[fr.gt_ids[:, None], fr.pr_ids[None, :]] * sim
                cost = np.where(sim >= alpha - EPS, -score, np.inf)
                pairs = solve_assignment(cost).matches
            for i, j in pairs:
                matches[a, fr.gt_ids[i], fr.pr_ids[j]] += 1
            tp[a] += len(pairs)
            fn[a] += n - len(pairs)
            fp[a] += m - len(pairs)

    deta = tp / np.maximum(tp + fn + fp, 1)
    assa = np.zeros(k)
    for a in range(k):
        tpa = matches[a]
        denom = gt_count[:, None] + pr_count[None, :] - tpa
        score = np.zeros_like(tpa)
        np.divide(tpa, denom, out=score, where=denom > 0)
        # sum over TP detections of A(c) == sum over id pairs of TPA * A
        assa[a] = (tpa * score).sum() / max(tp[a], 1.0)
    return HotaResult(alphas, np.sqrt(deta * assa), deta, assa, tp, fp, fn)


def hota(gt, results, alphas=DEFAULT_ALPHAS) -> tuple[float, float, float, HotaResult]:
    """Return ``(hota, deta, assa, per_alpha)``; headline values average over ``alphas``."""
    r = _hota(_prepare(gt, results), alphas)
    return float(r.hota.mean()), float(r.deta.mean()), float(r.assa.mean()), r


@dataclass
class MetricsReport:
    mota: float
    idf1: float
    hota: float
    deta: float
    assa: float
    loca: float
    hota_05: float
    deta_05: float
    assa_05: float
    fp: int
    fn: int
    idsw: int
    frag: int
    idtp: int
    idfp: int
    idfn: int
    num_gt: int
    num_pred: int
    per_alpha: HotaResult | None = field(default=None, repr=False)

    _KEYS = (
        "mota", "idf1", "hota", "deta", "assa", "loca", "hota_05", "deta_05", "assa_05",
        "fp", "fn", "idsw", "frag", "idtp", "idfp", "idfn", "num_gt", "num_pred",
    )

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self._KEYS}

    def to_kv(self) -> str:
        lines = []
        for k, v in self.as_dict().items():
            lines.append(f"{k}={v:.6f}\n" if isinstance(v, float) else f"{k}={v}\n")
        if self.per_alpha is not None:
            for a, h, d, s in zip(
                self.per_alpha.alphas, self.per_alpha.hota, self.per_alpha.deta, self.per_alpha.assa
            ):
                lines.append(f"hota@{a:.2f}={h:.6f}\ndeta@{a:.2f}={d:.6f}\nassa@{a:.2f}={s:.6f}\n")
        return "".join(lines)

    def to_text(self) -> str:
        pct = ("mota", "idf1", "hota", "deta", "assa", "loca", "hota_05", "deta_05", "assa_05")
        head = "".join(f"{k.upper():>9}" for k in self._KEYS)
        vals = "".join(
            f"{100 * v:>9.2f}" if k in pct else f"{v:>9d}" for k, v in self.as_dict().items()
        )
        return head + "\n" + vals + "\n"


def evaluate(gt: Sequence[MotEntry], results: Sequence[MotEntry], alphas=DEFAULT_ALPHAS) -> MetricsReport:
    seq = _prepare(gt, results)
    c = _clear(seq)
    ident = _identity(seq)
    h = _hota(seq, alphas)
    h05, d05, a05 = h.at(0.5)
    return MetricsReport(
        mota=c.mota,
        idf1=ident.idf1,
        hota=float(h.hota.mean()),
        deta=float(h.deta.mean()),
        assa=float(h.assa.mean()),
        loca=c.iou_sum / c.tp if c.tp else math.nan,
        hota_05=h05,
        deta_05=d05,
        assa_05=a05,
        fp=c.fp,
        fn=c.fn,
        idsw=c.idsw,
        frag=c.frag,
        idtp=ident.idtp,
        idfp=ident.idfp,
        idfn=ident.idfn,
        num_gt=seq.num_gt,
        num_pred=seq.num_pr,
        per_alpha=h,
    )
