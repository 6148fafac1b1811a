"""Plain-text file formats.

MOT rows:          ``frame,id,bb_left,bb_top,bb_width,bb_height,conf,class,visibility``
Embeddings:        ``frame,det_index,v0,...,v(D-1)``  (det_index counts within a frame)
Transforms:        ``frame,a11,a12,a21,a22,tx,ty``    (maps frame k-1 -> frame k)
Correspondences:   ``frame,sx,sy,dx,dy``              (source in k-1, target in k)

Frames are 1-based everywhere. Result files use the usual 10-column layout
``frame,id,x,y,w,h,conf,-1,-1,-1`` with six decimals, so reruns diff cleanly.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .appearance import l2_normalize
from .cmc import PointCorrespondenceSet
from .errors import InconsistentDimension, IoFailure, NegativeDimensions, ParseError, ZeroVector
from .geometry import AffineTransform2D, Box2D

MIN_MOT_FIELDS = 6


@dataclass(frozen=True)
class MotEntry:
    frame: int
    id: int
    x: float
    y: float
    w: float
    h: float
    conf: float = 1.0
    class_id: int = -1
    visibility: float = 1.0

    @property
    def box(self) -> Box2D:
        return Box2D(self.x, self.y, self.w, self.h)

    @property
    def ignored(self) -> bool:
        """GT rows flagged invisible are excluded from scoring."""
        return self.visibility == 0


GtEntry = MotEntry
ResultEntry = MotEntry


def _lines(path):
    try:
        with open(path, encoding="utf-8") as fh:
            yield from enumerate(fh, start=1)
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e


def _float(tok: str, line: int, what: str) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(f"bad {what} {tok!r}", line) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite {what}", line)
    return v


def _int(tok: str, line: int, what: str) -> int:
    v = _float(tok, line, what)
    if v != int(v):
        raise ParseError(f"{what} must be an integer, got {tok!r}", line)
    return int(v)


def read_mot_file(path, kind: str = "gt") -> list[MotEntry]:
    """Parse a MOTChallenge-style file (``kind`` is ``gt``, ``det`` or ``result``).

    Missing trailing fields default to conf=1, class=-1, visibility=1; extra
    trailing fields are ignored. Rows come back stably sorted by frame.
    """
    if kind not in ("gt", "det", "result"):
        raise ValueError(f"unknown kind {kind!r}")
    out = []
    for lineno, raw in _lines(path):
        line = raw.strip()
        if not line:
            continue
        tok = [t.strip() for t in line.split(",")]
        if len(tok) < MIN_MOT_FIELDS:
            raise ParseError(f"expected at least {MIN_MOT_FIELDS} fields, got {len(tok)}", lineno)
        frame = _int(tok[0], lineno, "frame")
        if frame < 1:
            raise ParseError("frames are 1-based", lineno)
        tid = _int(tok[1], lineno, "id")
        x, y, w, h = (_float(t, lineno, "box field") for t in tok[2:6])
        if w < 0 or h < 0:
            raise NegativeDimensions(f"line {lineno}: negative box size ({w}, {h})")
        conf = _float(tok[6], lineno, "conf") if len(tok) > 6 else 1.0
        cls = _int(tok[7], lineno, "class") if len(tok) > 7 else -1
        vis = _float(tok[8], lineno, "visibility") if len(tok) > 8 else 1.0
        out.append(MotEntry(frame, tid, x, y, w, h, conf, cls, vis))
    out.sort(key=lambda e: e.frame)
    return out


def _fmt(v: float) -> str:
    s = f"{v:.6f}"
    return "0.000000" if s == "-0.000000" else s


def _write_text(path, text: str) -> None:
    try:
        d = os.path.dirname(os.fspath(path))
        if d:
            os.makedirs(d, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def results_to_entries(frame_results) -> list[MotEntry]:
    """Flatten tracker ``FrameResult``s into result rows."""
    rows = []
    for fr in frame_results:
        for o in fr.outputs:
            b = o.box
            rows.append(MotEntry(fr.frame, o.track_id, b.x, b.y, b.w, b.h, o.confidence, -1, -1))
    return rows


def format_results(rows: Iterable[MotEntry]) -> str:
    rows = sorted(rows, key=lambda e: (e.frame, e.id))
    return "".join(
        f"{e.frame},{e.id},{_fmt(e.x)},{_fmt(e.y)},{_fmt(e.w)},{_fmt(e.h)},{_fmt(e.conf)},-1,-1,-1\n"
        for e in rows
    )


def write_results(path, results) -> None:
    """Write tracker output (``FrameResult``s or ``MotEntry`` rows)."""
    results = list(results)
    if results and not isinstance(results[0], MotEntry):
        results = results_to_entries(results)
    _write_text(path, format_results(results))


def write_mot_file(path, rows: Iterable[MotEntry], kind: str = "gt") -> None:
    """Write GT (``frame,id,...,1,class,visibility``) or detection rows, in the given order."""
    lines = []
    for e in rows:
        head = f"{e.frame},{e.id if kind != 'det' else -1},{_fmt(e.x)},{_fmt(e.y)},{_fmt(e.w)},{_fmt(e.h)}"
        if kind == "gt":
            lines.append(f"{head},1,{e.class_id},{int(e.visibility)}\n")
        else:
            lines.append(f"{head},{_fmt(e.conf)},{e.class_id},-1\n")
    _write_text(path, "".join(lines))


def read_embeddings(path) -> dict[tuple[int, int], np.ndarray]:
    """Embeddings keyed by ``(frame, det_index)``, L2-normalised on load."""
    out: dict[tuple[int, int], np.ndarray] = {}
    dim = None
    for lineno, raw in _lines(path):
        line = raw.strip()
        if not line:
            continue
        tok = line.split(",")
        if len(tok) < 3:
            raise ParseError("embedding row needs frame, det_index and at least one value", lineno)
        frame = _int(tok[0], lineno, "frame")
        idx = _int(tok[1], lineno, "det_index")
        try:
            v = np.array(tok[2:], dtype=float)
        except ValueError:
            raise ParseError("bad embedding value", lineno) from None
        if not np.all(np.isfinite(v)):
            raise ParseError("non-finite embedding value", lineno)
        if dim is None:
            dim = v.size
        elif v.size != dim:
            raise InconsistentDimension(f"line {lineno}: dimension {v.size}, expected {dim}")
        try:
            out[(frame, idx)] = l2_normalize(v)
        except ZeroVector:
            raise ZeroVector(f"line {lineno}: zero embedding") from None
    return out


def write_embeddings(path, embeddings: Mapping[tuple[int, int], np.ndarray]) -> None:
    lines = []
    for (frame, idx) in sorted(embeddings):
        vals = ",".join(_fmt(v) for v in np.asarray(embeddings[(frame, idx)], dtype=float))
        lines.append(f"{frame},{idx},{vals}\n")
    _write_text(path, "".join(lines))


def read_transforms(path) -> dict[int, AffineTransform2D]:
    out = {}
    for lineno, raw in _lines(path):
        line = raw.strip()
        if not line:
            continue
        tok = line.split(",")
        if len(tok) != 7:
            raise ParseError(f"transform row needs 7 fields, got {len(tok)}", lineno)
        frame = _int(tok[0], lineno, "frame")
        a11, a12, a21, a22, tx, ty = (_float(t, lineno, "transform entry") for t in tok[1:])
        out[frame] = AffineTransform2D(np.array([[a11, a12], [a21, a22]]), np.array([tx, ty]))
    return out


def write_transforms(path, transforms: Iterable[tuple[int, AffineTransform2D]]) -> None:
    lines = []
    for frame, T in transforms:
        vals = [T.m[0, 0], T.m[0, 1], T.m[1, 0], T.m[1, 1], T.t[0], T.t[1]]
        lines.append(f"{frame}," + ",".join(f"{v:.12g}" for v in vals) + "\n")
    _write_text(path, "".join(lines))


def read_correspondences(path) -> dict[int, PointCorrespondenceSet]:
    rows: dict[int, list[list[float]]] = {}
    for lineno, raw in _lines(path):
        line = raw.strip()
        if not line:
            continue
        tok = line.split(",")
        if len(tok) != 5:
            raise ParseError(f"correspondence row needs 5 fields, got {len(tok)}", lineno)
        frame = _int(tok[0], lineno, "frame")
        rows.setdefault(frame, []).append([_float(t, lineno, "coordinate") for t in tok[1:]])
    return {
        f: PointCorrespondenceSet(np.array(r)[:, :2], np.array(r)[:, 2:], f)
        for f, r in sorted(rows.items())
    }


def write_correspondences(path, corr: Mapping[int, PointCorrespondenceSet]) -> None:
    lines = []
    for frame in sorted(corr):
        c = corr[frame]
        for (sx, sy), (dx, dy) in zip(c.source, c.target):
            lines.append(f"{frame},{sx:.12g},{sy:.12g},{dx:.12g},{dy:.12g}\n")
    _write_text(path, "".join(lines))


def read_detections(det_path, emb_path=None) -> list:
    """Detection file (+ optional embeddings file) as tracker observations."""
    from .tracker import DetectionObservation, attach_embeddings

    dets = [
        DetectionObservation(e.frame, e.box, e.conf, e.class_id)
        for e in read_mot_file(det_path, "det")
    ]
    if emb_path is None:
        return dets
    return attach_embeddings(dets, read_embeddings(emb_path))


def entries_by_frame(rows: Sequence[MotEntry]) -> dict[int, list[MotEntry]]:
    out: dict[int, list[MotEntry]] = {}
    for e in rows:
        out.setdefault(e.frame, []).append(e)
    return out
