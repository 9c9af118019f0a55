"""Command-line front end: ``herdtrack run | evaluate | export-tiles``.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from herdtrack.detection import make_tiles
from herdtrack.errors import ConfigError, HerdtrackError
from herdtrack.evaluate import evaluate_files

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

log = logging.getLogger("herdtrack")


class UsageError(Exception):
    pass


def _scenario(args):
    from herdtrack.sim.scenario import builtin_scenario_path, load_scenario

    path = args.config if args.config else builtin_scenario_path("nominal")
    return load_scenario(path, seed=args.seed)


def _out_dir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc.strerror}") from exc
    return out


def _write_lines(path: Path, lines) -> None:
    with open(path, "w", newline="\n") as f:
        for line in lines:
            f.write(line + "\n")


def write_trajectory_csv(path: Path, rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["t", "ex", "ey", "ux", "uy", "phase"])
        for t, ex, ey, ux, uy, phase in rows:
            w.writerow([f"{t:.4f}", f"{ex:.3f}", f"{ey:.3f}", f"{ux:.3f}", f"{uy:.3f}", phase])


def cmd_run(args) -> int:
    from herdtrack import plotting
    from herdtrack.sim.runner import run_closed_loop

    cfg = _scenario(args)
    if args.frames is not None and args.frames < 1:
        raise UsageError("--frames must be >= 1")
    out = _out_dir(args.out)
    result = run_closed_loop(cfg, max_frames=args.frames)

    write_trajectory_csv(out / "trajectory.csv", result.trajectory_rows)
    _write_lines(out / "tracks.jsonl", result.track_lines)
    _write_lines(out / "commands.jsonl", result.command_lines)
    _write_lines(out / "ground_truth.jsonl", result.gt_lines)
    with open(out / "report.json", "w") as f:
        json.dump(asdict(result.report), f, indent=2)
        f.write("\n")

    base_xy = (cfg.base[0], cfg.base[1])
    plotting.save(plotting.plot_trajectory(result.trajectory_rows, cfg.geofence_radius, base_xy), out / "trajectory.png")
    if result.tracked:
        plotting.save(plotting.plot_tracking(result.tracked, cfg.match_margin), out / "tracking.png")
    p = cfg.pipeline
    grid = make_tiles(p.frame_w, p.frame_h, p.tile_cols, p.tile_rows, p.tile_overlap)
    plotting.save(plotting.plot_tiles(grid, p.frame_w, p.frame_h), out / "tiles.png")

    r = result.report
    print(
        f"{r.scenario} seed={r.seed} frames={r.frames} tracked={r.tracked_frames} "
        f"match={r.trajectory_match:.3f} iou={r.mean_track_iou:.3f} phase={r.final_phase} -> {out}"
    )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    for p in (args.tracks, args.ground_truth):
        if not Path(p).is_file():
            raise UsageError(f"no such file: {p}")
    metrics = evaluate_files(args.tracks, args.ground_truth, confirmed_only=args.confirmed_only)
    text = json.dumps(metrics.to_dict(), indent=2)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text + "\n")
    summary = {k: v for k, v in metrics.to_dict().items() if k != "per_frame_iou"}
    print(json.dumps(summary))
    return EXIT_OK


def cmd_export_tiles(args) -> int:
    from herdtrack import plotting

    p = _scenario(args).pipeline
    grid = make_tiles(p.frame_w, p.frame_h, p.tile_cols, p.tile_rows, p.tile_overlap)
    tiles = [
        {"index": i, "tlbr": [t.rect.x_tl, t.rect.y_tl, t.rect.x_br, t.rect.y_br]} for i, t in enumerate(grid.tiles)
    ]
    doc = {"frame": [p.frame_w, p.frame_h], "cols": p.tile_cols, "rows": p.tile_rows, "overlap": p.tile_overlap, "tiles": tiles}
    if args.out:
        out = _out_dir(args.out)
        (out / "tiles.json").write_text(json.dumps(doc, indent=2) + "\n")
        plotting.save(plotting.plot_tiles(grid, p.frame_w, p.frame_h), out / "tiles.png")
    print(json.dumps(doc))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="herdtrack", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a scenario closed-loop and write its outputs")
    run.add_argument("--config", help="scenario YAML (default: built-in nominal scenario)")
    run.add_argument("--seed", type=int, help="override the scenario seed")
    run.add_argument("--out", default="out", help="output directory (default: ./out)")
    run.add_argument("--frames", type=int, help="stop after this many simulated frames")
    run.set_defaults(func=cmd_run)

    ev = sub.add_parser("evaluate", help="score a track stream against ground truth")
    ev.add_argument("tracks", help="track JSONL")
    ev.add_argument("ground_truth", help="ground-truth JSONL in the same format")
    ev.add_argument("--out", help="also write the full metrics (with per-frame IOU) here")
    ev.add_argument("--confirmed-only", action="store_true", help="ignore tentative tracks")
    ev.set_defaults(func=cmd_evaluate)

    tiles = sub.add_parser("export-tiles", help="dump the detection tile layout")
    tiles.add_argument("--config", help="scenario YAML (default: built-in nominal scenario)")
    tiles.add_argument("--seed", type=int, help=argparse.SUPPRESS)
    tiles.add_argument("--out", help="directory for tiles.json and tiles.png")
    tiles.set_defaults(func=cmd_export_tiles)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"herdtrack: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (HerdtrackError, OSError, ValueError) as exc:
        print(f"herdtrack: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # last resort: never a traceback with exit 0
        log.exception("unexpected failure")
        print(f"herdtrack: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
