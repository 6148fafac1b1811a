"""Simulate a calm sea, track it, and score the result.

Run with ``python3 demos/calm_pipeline.py``. Everything stays in memory; the
CLI equivalent is ``seatrack simulate`` followed by ``seatrack track`` and
``seatrack eval``.
"""

from __future__ import annotations

from seatrack import run_sequence, sim
from seatrack.formats import results_to_entries
from seatrack.metrics import evaluate


def main() -> None:
    bundle = sim.generate(sim.preset("calm"))
    print(f"{bundle.config.n_targets} targets over {bundle.config.frames} frames, {len(bundle.detections)} detections")

    results = run_sequence(bundle.detections, bundle.transforms, n_frames=bundle.config.frames)
    ids = {o.track_id for r in results for o in r.outputs}
    print(f"tracker reported {len(ids)} identities")

    report = evaluate(bundle.gt, results_to_entries(results))
    print(report.to_text())


if __name__ == "__main__":
    main()
