"""Command line entry point: ``track``, ``eval``, ``simulate``, ``mathcheck``.

Exit codes: 0 success, 1 invalid input or usage, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import mathcheck, sim
from .cmc import transform_source
from .config import RunConfig, dump_config, load_config
from .errors import SeatrackError, ValidationError
from .formats import read_correspondences, read_detections, read_mot_file, read_transforms, write_results
from .metrics import evaluate
from .tracker import run_sequence

log = logging.getLogger("seatrack")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="seatrack", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("track", help="run the tracker over a detection file")
    t.add_argument("--det", help="MOT detection file")
    t.add_argument("--emb", help="embedding file (frame,det_index,v0,...)")
    cmc = t.add_mutually_exclusive_group()
    cmc.add_argument("--cmc", metavar="F", help="transforms file (frame,a11,a12,a21,a22,tx,ty)")
    cmc.add_argument("--cmc-corr", metavar="F", help="point correspondences; transforms estimated by RANSAC")
    cmc.add_argument("--cmc-identity", action="store_true", help="disable platform motion compensation")
    t.add_argument("--config", help="key=value configuration file")
    t.add_argument("--out", help="result file")
    t.add_argument("--interpolate", action="store_true", help="fill short gaps in output tracklets")
    t.add_argument("--print-config", action="store_true", help="print the effective configuration")

    e = sub.add_parser("eval", help="score a result file against ground truth")
    e.add_argument("--gt", required=True)
    e.add_argument("--res", required=True)
    e.add_argument("--report", help="write key=value report here")

    s = sub.add_parser("simulate", help="write a synthetic scenario")
    s.add_argument("--preset", required=True, choices=sim.PRESETS)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="output directory")

    m = sub.add_parser("mathcheck", help="verify the numeric kernels")
    m.add_argument("--suite", default="all", choices=("all",) + mathcheck.SUITES)
    return p


def _cmd_track(args) -> int:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.interpolate:
        cfg.tracker.interpolate = True
    if args.cmc_identity:
        cfg.tracker.cmc_enabled = False
    if args.print_config:
        sys.stdout.write(dump_config(cfg))
        if not args.det:
            return 0
    if not args.det or not args.out:
        raise UsageError("track: --det and --out are required")

    dets = read_detections(args.det, args.emb)
    n_frames = max((d.frame for d in dets), default=0)
    frames = range(1, n_frames + 1)
    if args.cmc:
        stream = transform_source("file", frames, transforms=read_transforms(args.cmc))
    elif args.cmc_corr:
        stream = transform_source(
            "correspondences", frames, correspondences=read_correspondences(args.cmc_corr), cfg=cfg.cmc
        )
    else:
        stream = transform_source("identity", frames)
    results = run_sequence(dets, stream, cfg.tracker, n_frames=n_frames)
    write_results(args.out, results)
    log.info("wrote %d frames to %s", len(results), args.out)
    return 0


def _cmd_eval(args) -> int:
    report = evaluate(read_mot_file(args.gt, "gt"), read_mot_file(args.res, "result"))
    sys.stdout.write(report.to_text())
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(report.to_kv())
    return 0


def _cmd_simulate(args) -> int:
    cfg = sim.preset(args.preset)
    cfg.seed = args.seed
    paths = sim.write_bundle(sim.generate(cfg), args.out)
    for k, v in paths.items():
        print(f"{k}: {v}")
    return 0


def _cmd_mathcheck(args) -> int:
    results = mathcheck.run(args.suite)
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 2


COMMANDS = {"track": _cmd_track, "eval": _cmd_eval, "simulate": _cmd_simulate, "mathcheck": _cmd_mathcheck}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(e, file=sys.stderr)
        return 1
    except ValidationError as e:
        print(f"seatrack: invalid input: {e}", file=sys.stderr)
        return 1
    except (SeatrackError, OSError) as e:
        print(f"seatrack: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
