"""Self-checks for the numeric kernels, used by ``seatrack mathcheck``."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import papermath as pm

SUITES = ("revcol", "adaloss", "attention")


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    value: float = 0.0
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.detail}"


def check_revcol(cases: int = 100, size: int = 16, seed: int = 0, tol: float = 1e-12) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    worst = max(pm.revcol_roundtrip_error(rng, size) for _ in range(cases))
    dt = time.perf_counter() - t0
    return [
        CheckResult(
            "revcol reconstruction",
            worst <= tol,
            f"max |inverse(forward(x)) - x| = {worst:.3e} over {cases} {size}x{size} cases (tol {tol:g})",
            worst,
            dt,
        )
    ]


def _raw_loss(a, p, n, theta, margin) -> float:
    u = np.clip(a @ p, -1.0, 1.0)
    v = np.clip(a @ n, -1.0, 1.0)
    t1 = min(max(math.acos(u) + theta, 0.0), math.pi)
    d1 = 1.0 - math.cos(t1)
    d2 = 1.0 - math.cos(math.acos(v))
    return max(d1 - d2 + margin, 0.0) ** 2


def random_active_triplet(rng: np.random.Generator, dim: int = 16) -> pm.TripletSample:
    """Draw until the hinge is clearly active and away from the arccos/clamp kinks."""
    while True:
        vs = rng.normal(size=(3, dim))
        vs /= np.linalg.norm(vs, axis=1, keepdims=True)
        s = pm.TripletSample(vs[0], vs[1], vs[2], float(rng.uniform(0, 0.5)), float(rng.uniform(0.05, 0.5)))
        u = s.a @ s.p
        v = s.a @ s.n
        raw1 = math.acos(u) + s.theta
        _, _, hinge = pm.ada_loss_terms(s)
        if hinge > 1e-3 and abs(u) < 0.99 and abs(v) < 0.99 and raw1 < math.pi - 1e-2:
            return s


def fd_gradient(s: pm.TripletSample, step: float = 1e-5):
    grads = []
    for which in range(3):
        base = [s.a.copy(), s.p.copy(), s.n.copy()]
        g = np.zeros_like(base[which])
        for i in range(g.size):
            plus = [b.copy() for b in base]
            minus = [b.copy() for b in base]
            plus[which][i] += step
            minus[which][i] -= step
            g[i] = (_raw_loss(*plus, s.theta, s.alpha_margin) - _raw_loss(*minus, s.theta, s.alpha_margin)) / (
                2 * step
            )
        grads.append(g)
    return grads


def check_adaloss(cases: int = 1000, seed: int = 0, tol: float = 1e-4) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(cases):
        s = random_active_triplet(rng)
        ana = np.concatenate(pm.ada_loss_gradient(s))
        num = np.concatenate(fd_gradient(s))
        worst = max(worst, np.linalg.norm(ana - num) / max(np.linalg.norm(num), 1e-12))
    # inactive hinge: a == p, n orthogonal, no margin
    a = np.eye(4)[0]
    inactive = pm.TripletSample(a, a, np.eye(4)[1], 0.0, 0.0)
    zero = all(np.all(g == 0.0) for g in pm.ada_loss_gradient(inactive))
    dt = time.perf_counter() - t0
    return [
        CheckResult(
            "ada-loss gradient",
            worst <= tol,
            f"max relative error vs central differences = {worst:.3e} over {cases} triplets (tol {tol:g})",
            worst,
            dt,
        ),
        CheckResult("ada-loss inactive hinge", zero, "gradient exactly zero" if zero else "nonzero gradient"),
    ]


def check_attention(cases: int = 200, seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    worst_shift = 0.0
    worst_swap = 0.0
    for _ in range(cases):
        heads, ext = 4, 8
        table = pm.AttentionBiasTable(rng.normal(size=(heads, ext, ext)))
        q, k = rng.normal(size=(2, 16))
        pq = rng.integers(0, ext, size=2)
        pk = rng.integers(0, ext, size=2)
        off = rng.integers(-50, 50, size=2)
        h = int(rng.integers(0, heads))
        s0 = pm.attention_score(q, k, pq, pk, h, table)
        s1 = pm.attention_score(q, k, pq + off, pk + off, h, table)
        s2 = pm.attention_score(q, k, pk, pq, h, table)
        worst_shift = max(worst_shift, abs(s0 - s1))
        worst_swap = max(worst_swap, abs(s0 - s2))
    dt = time.perf_counter() - t0
    return [
        CheckResult("attention translation", worst_shift == 0.0, f"max change under offset = {worst_shift:.3e}", worst_shift, dt),
        CheckResult("attention position swap", worst_swap == 0.0, f"max change when swapping = {worst_swap:.3e}", worst_swap),
    ]


def run(suite: str = "all") -> list[CheckResult]:
    names = SUITES if suite == "all" else (suite,)
    out = []
    for name in names:
        if name == "revcol":
            out += check_revcol()
        elif name == "adaloss":
            out += check_adaloss()
        elif name == "attention":
            out += check_attention()
        else:
            raise ValueError(f"unknown suite {name!r}")
    return out
