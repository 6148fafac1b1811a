"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line through the ``acceptance`` fixture; the
lines are printed together at the end of the pytest run.
"""

from __future__ import annotations

import filecmp
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from oracles import brute_min_cost
from seatrack import mathcheck, sim
from seatrack.appearance import CoffConfig, TrackAppearance, uema_unbiased, uema_update
from seatrack.association import solve_assignment
from seatrack.cli import main
from seatrack.cmc import estimate_affine_ransac
from seatrack.formats import results_to_entries
from seatrack.geometry import apply_affine_points
from seatrack.metrics import evaluate
from seatrack.tracker import TrackerConfig, run_sequence
from test_metrics import FIXTURES, load_fixture


def track_and_score(bundle, cfg=None, transforms="truth"):
    tf = bundle.transforms if transforms == "truth" else transforms
    results = run_sequence(bundle.detections, tf, cfg or TrackerConfig(), n_frames=bundle.config.frames)
    return evaluate(bundle.gt, results_to_entries(results))


def test_01_revcol_reversibility(acceptance):
    (r,) = mathcheck.run("revcol")
    ok = r.passed and r.value <= 1e-12 and r.seconds < 5.0
    acceptance("1 revcol reversibility", ok, f"max error {r.value:.2e} over 100 cases in {r.seconds:.2f}s")
    assert ok


def test_02_ada_loss_gradient(acceptance):
    results = mathcheck.run("adaloss")
    ok = all(r.passed for r in results)
    acceptance("2 ada-loss gradient", ok, "; ".join(f"{r.name}: {r.detail}" for r in results))
    assert ok


def test_03_uema(acceptance):
    rng = np.random.default_rng(2024)
    f = rng.normal(size=16)
    one = uema_unbiased(uema_update(TrackAppearance(), f))
    single_err = float(np.max(np.abs(one - f) / np.abs(f)))
    const_err = 0.0
    for k in (1, 2, 5, 50):
        app = TrackAppearance()
        for _ in range(k):
            app = uema_update(app, f)
        const_err = max(const_err, float(np.max(np.abs(uema_unbiased(app) - f) / np.abs(f))))
    # identities hold to the last couple of bits of a double
    identities = single_err <= 4.5e-16 and const_err <= 1e-14

    mu = np.array([0.3, -1.2, 2.0])
    trials = 10_000
    worst_z = 0.0
    for k in (1, 2, 5, 50):
        app = TrackAppearance()
        for _ in range(k):
            app = uema_update(app, mu + rng.normal(size=(trials, 3)))
        est = uema_unbiased(app)
        se = est.std(axis=0, ddof=1) / math.sqrt(trials)
        worst_z = max(worst_z, float(np.max(np.abs(est.mean(axis=0) - mu) / se)))
    ok = identities and worst_z <= 3.0
    acceptance(
        "3 UEMA identities and unbiasedness",
        ok,
        f"single {single_err:.1e}, constant {const_err:.1e}, worst |z| {worst_z:.2f} (k=1,2,5,50; 10000 trials)",
    )
    assert ok


def test_04_hungarian_vs_brute_force(acceptance):
    rng = np.random.default_rng(4)
    mats = [rng.uniform(0, 10, size=rng.integers(1, 8, size=2)) for _ in range(1000)]
    t0 = time.perf_counter()
    totals = [solve_assignment(c).total_cost(c) for c in mats]
    elapsed = time.perf_counter() - t0
    worst = max(abs(t - brute_min_cost(c)) for t, c in zip(totals, mats))
    ok = worst <= 1e-9 and elapsed < 10.0
    acceptance("4 Hungarian optimality", ok, f"max gap {worst:.1e} on 1000 matrices, solver {elapsed:.2f}s")
    assert ok


def test_05_metrics_oracles(acceptance):
    bad = []
    for d in FIXTURES:
        gt, res, expected = load_fixture(d)
        report = evaluate(gt, res).as_dict()
        for key, value in expected.items():
            got = report[key]
            if not (math.isnan(value) and math.isnan(got)) and not abs(got - value) <= 1e-9:
                bad.append(f"{d.name}:{key}")
    for name in sim.PRESETS:
        bundle = sim.generate(sim.preset(name))
        r = evaluate(bundle.gt, bundle.gt)
        scores = (r.mota, r.idf1, r.hota, r.loca)
        if not all(abs(s - 1.0) <= 1e-12 for s in scores) or (r.fp, r.fn, r.idsw, r.frag) != (0, 0, 0, 0):
            bad.append(f"gt-vs-gt {name}")
    ok = len(FIXTURES) >= 10 and not bad
    acceptance(
        "5 metrics oracle equivalence",
        ok,
        f"{len(FIXTURES)} fixtures and {len(sim.PRESETS)} presets" + (f"; mismatches {bad}" if bad else ""),
    )
    assert ok


@pytest.fixture(scope="module")
def jitter():
    return sim.generate(sim.preset("jitter"))


def test_06_cmc_closed_loop(acceptance, jitter):
    residuals = []
    estimated = [jitter.transforms[0]]
    for f, T in jitter.transforms[1:]:
        c = jitter.correspondences[f]
        est, _ = estimate_affine_ransac(c)
        estimated.append((f, est))
        residuals.append(np.linalg.norm(apply_affine_points(est, c.source) - apply_affine_points(T, c.source), axis=1).mean())
    mean_res = float(np.mean(residuals))
    with_cmc = track_and_score(jitter).idf1
    with_ransac = track_and_score(jitter, transforms=estimated).idf1
    without = track_and_score(jitter, replace(TrackerConfig(), cmc_enabled=False), transforms=None).idf1
    gap = 100 * (with_cmc - without)
    ok = mean_res <= 0.5 and gap >= 10 and 100 * (with_ransac - without) >= 10
    acceptance(
        "6 CMC closed loop",
        ok,
        f"mean residual {mean_res:.3f}px; IDF1 {100 * with_cmc:.2f} (true) / {100 * with_ransac:.2f} (ransac)"
        f" vs {100 * without:.2f} (identity), gap {gap:.1f}",
    )
    assert ok


def test_07_coff_separation(acceptance):
    pos, neg = sim.embedding_distance_histogram(sim.generate(sim.preset("calm")), beta=800)
    p, n = float(np.mean(pos <= 0.28)), float(np.mean(neg >= 0.95))
    ok = p >= 0.95 and n >= 0.95
    acceptance("7 COFF separation", ok, f"{100 * p:.1f}% positives <= 0.28, {100 * n:.1f}% negatives >= 0.95")
    assert ok


def test_08_beta_insensitivity(acceptance):
    bundle = sim.generate(sim.preset("calm"))
    scores = {}
    for beta in (200, 400, 800, 1600, 2000):
        cfg = replace(TrackerConfig(), coff=CoffConfig(beta=beta))
        scores[beta] = 100 * track_and_score(bundle, cfg).idf1
    spread = max(scores.values()) - min(scores.values())
    ok = spread <= 2.0
    acceptance(
        "8 beta insensitivity", ok, f"IDF1 spread {spread:.2f} points ({', '.join(f'{b}:{v:.2f}' for b, v in scores.items())})"
    )
    assert ok


def test_09_end_to_end_baseline(acceptance):
    timings = {}
    reports = {}
    for name in sim.PRESETS:
        t0 = time.perf_counter()
        bundle = sim.generate(sim.preset(name))
        reports[name] = track_and_score(bundle)
        timings[name] = time.perf_counter() - t0
    occlusion = sim.generate(sim.preset("occlusion"))
    frag_interp = track_and_score(occlusion, replace(TrackerConfig(), interpolate=True)).frag
    calm = reports["calm"]
    frag_plain = reports["occlusion"].frag
    ok = calm.mota >= 0.95 and calm.idsw == 0 and frag_interp < frag_plain and max(timings.values()) < 60
    acceptance(
        "9 end-to-end baseline",
        ok,
        f"calm MOTA {100 * calm.mota:.2f} IDs {calm.idsw}; occlusion Frag {frag_plain} -> {frag_interp} with"
        f" interpolation; slowest preset {max(timings.values()):.1f}s",
    )
    assert ok


def test_10_cli_determinism(acceptance, tmp_path):
    def pipeline(root):
        data = root / "data"
        assert main(["simulate", "--preset", "jitter", "--seed", "11", "--out", str(data)]) == 0
        base = ["track", "--det", str(data / "det.txt"), "--emb", str(data / "emb.txt")]
        modes = {
            "cmc": ["--cmc", str(data / "transforms.txt")],
            "corr": ["--cmc-corr", str(data / "correspondences.txt")],
            "identity": ["--cmc-identity"],
            "interp": ["--cmc", str(data / "transforms.txt"), "--interpolate"],
        }
        for mode, extra in modes.items():
            res = root / f"res_{mode}.txt"
            assert main(base + extra + ["--out", str(res)]) == 0
            assert main(["eval", "--gt", str(data / "gt.txt"), "--res", str(res), "--report", str(root / f"rep_{mode}.txt")]) == 0
        return sorted(p.relative_to(root) for p in root.rglob("*.txt"))

    a, b = tmp_path / "a", tmp_path / "b"
    files_a, files_b = pipeline(a), pipeline(b)
    differing = [str(p) for p in files_a if not filecmp.cmp(a / p, b / p, shallow=False)]
    ok = files_a == files_b and not differing
    acceptance("10 CLI determinism", ok, f"{len(files_a)} output files compared" + (f"; differ: {differing}" if differing else ""))
    assert ok
