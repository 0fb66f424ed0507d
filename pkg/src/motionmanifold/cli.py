"""Command-line frontend: cyclify, blend, distmat, cluster, info.

Every command prints one JSON report line on stdout; logs go to stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .applications import (
    DistanceMatrix,
    InvalidMatrixError,
    NotPeriodicError,
    closure_report,
    cluster_labels_csv,
    cut_dendrogram,
    cyclify,
    distance_matrix,
    hierarchical_cluster,
)
from .applications.blend import Blender
from .applications.clustering import DistanceComputationError
from .applications.cyclic import seam_velocity_jump
from .config import METRICS, SPACES, ConfigError, RunConfig
from .curve_core import ImmersionError, ProjectionError
from .mocap_io import BvhParseError, read_bvh, resample_clip, write_bvh

log = logging.getLogger("motionmanifold")

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_CONVERGENCE = 3
EXIT_SANITY = 4
EXIT_SKELETON = 5
EXIT_MATRIX = 6


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _report(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True))


def _load(path) -> tuple:
    try:
        return read_bvh(path)
    except FileNotFoundError:
        raise CliError(EXIT_PARSE, f"{path}: no such file") from None
    except (BvhParseError, ValueError) as e:
        raise CliError(EXIT_PARSE, f"{path}: {e}") from None


def _write(path, data: bytes) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(data)


def cmd_cyclify(args, cfg: RunConfig) -> dict:
    skeleton, clip = _load(args.input)
    try:
        out = cyclify(clip, cfg.epsilon, cfg.seam_smoothing, cfg.sanity_bound, cfg.include_root_translation)
    except NotPeriodicError as e:
        raise CliError(EXIT_SANITY, str(e)) from None
    except (ProjectionError, ImmersionError) as e:
        raise CliError(EXIT_CONVERGENCE, str(e)) from None
    _write(args.output, write_bvh(skeleton, out))
    return {
        "command": "cyclify",
        "input": str(args.input),
        "output": str(args.output),
        "before": {**closure_report(clip), "seam_velocity_jump": seam_velocity_jump(clip)},
        "after": {**closure_report(out), "seam_velocity_jump": seam_velocity_jump(out)},
    }


def cmd_blend(args, cfg: RunConfig) -> dict:
    sk_a, a = _load(args.input_a)
    sk_b, b = _load(args.input_b)
    if sk_a.topology() != sk_b.topology():
        raise CliError(EXIT_SKELETON, "inputs use different skeletons")
    if b.frame_count != a.frame_count:
        log.info("resampling %s from %d to %d frames", args.input_b, b.frame_count, a.frame_count)
        b = resample_clip(b, a.frame_count)
    try:
        blender = Blender(a, b, cfg.space, k=cfg.path_points, seed_count=cfg.seeds, epsilon=cfg.epsilon,
                          include_root_translation=cfg.include_root_translation)
    except (ProjectionError, ImmersionError) as e:
        raise CliError(EXIT_CONVERGENCE, str(e)) from None
    except ValueError as e:
        raise CliError(EXIT_CONVERGENCE, f"geodesic failed: {e}") from None
    if args.sweep:
        if args.sweep < 2:
            raise CliError(EXIT_PARSE, "--sweep needs at least 2 clips")
        values = [float(s) for s in np.linspace(0.0, 1.0, args.sweep)]
        os.makedirs(args.output, exist_ok=True)
        outputs = [os.path.join(args.output, f"blend_{i:03d}.bvh") for i in range(len(values))]
    else:
        if not 0 <= args.s <= 1:
            raise CliError(EXIT_PARSE, "s must lie in [0, 1]")
        values, outputs = [args.s], [args.output]
    for s, path in zip(values, outputs):
        _write(path, write_bvh(sk_a, blender.at(s)))
    return {"command": "blend", "space": cfg.space, "s": values, "outputs": outputs,
            "geodesic_length": blender.length, "status": blender.path.status}


def _collect_inputs(paths) -> list[Path]:
    if len(paths) == 1 and Path(paths[0]).is_dir():
        return sorted(Path(paths[0]).glob("*.bvh"))
    return [Path(p) for p in paths]


def cmd_distmat(args, cfg: RunConfig) -> dict:
    files = _collect_inputs(args.inputs)
    clips, labels, excluded = [], [], []
    for f in files:
        try:
            clips.append(read_bvh(f)[1])
            labels.append(f.stem)
        except (OSError, BvhParseError, ValueError) as e:
            if not cfg.exclude_failures:
                raise CliError(EXIT_CONVERGENCE, f"clip {f.stem!r}: {e}") from None
            log.warning("excluding %s: %s", f, e)
            excluded.append(f.stem)
    if len(clips) < 2:
        raise CliError(EXIT_PARSE, "need at least 2 readable input clips")
    if len({c.skeleton.n for c in clips}) != 1:
        raise CliError(EXIT_SKELETON, "clips have different joint-space dimensions")
    try:
        D = distance_matrix(clips, cfg.metric, cfg.frames, labels, cfg.epsilon, cfg.seeds,
                            cfg.path_points, cfg.exclude_failures, cfg.workers)
    except (DistanceComputationError, ValueError) as e:
        raise CliError(EXIT_CONVERGENCE, str(e)) from None
    excluded += list(D.excluded)
    _write(args.output, D.to_csv().encode())
    sidecar = str(args.output) + ".json"
    meta = {"labels": list(D.labels), "excluded": excluded, "config": cfg.to_dict(),
            "inputs": [str(f) for f in files]}
    _write(sidecar, (json.dumps(meta, indent=2, sort_keys=True) + "\n").encode())
    return {"command": "distmat", "metric": cfg.metric, "size": D.size, "output": str(args.output),
            "sidecar": sidecar, "excluded": excluded}


def cmd_cluster(args, cfg: RunConfig) -> dict:
    try:
        with open(args.matrix) as f:
            D = DistanceMatrix.from_csv(f.read())
    except FileNotFoundError:
        raise CliError(EXIT_PARSE, f"{args.matrix}: no such file") from None
    except InvalidMatrixError as e:
        raise CliError(EXIT_MATRIX, f"{args.matrix}: {e}") from None
    dendrogram = hierarchical_cluster(D)
    newick = str(args.output).endswith((".nwk", ".newick", ".tree"))
    _write(args.output, ((dendrogram.to_newick() if newick else dendrogram.to_json()) + "\n").encode())
    report = {"command": "cluster", "output": str(args.output), "leaves": D.size,
              "heights": [m.height for m in dendrogram.merges]}
    if args.k is not None:
        try:
            labels = cut_dendrogram(dendrogram, args.k)
        except ValueError as e:
            raise CliError(EXIT_PARSE, str(e)) from None
        labels_path = str(args.output) + ".labels.csv"
        _write(labels_path, cluster_labels_csv(D.labels, labels).encode())
        report.update(k=args.k, labels_output=labels_path, clusters=dict(zip(D.labels, labels.tolist())))
    return report


def cmd_info(args, cfg: RunConfig) -> dict:
    skeleton, clip = _load(args.input)
    return {
        "command": "info",
        "input": str(args.input),
        "bones": [b.name for b in skeleton.bones if not b.end_site],
        "n": skeleton.n,
        "frames": clip.frame_count,
        "frame_time": clip.frame_time,
        "duration": clip.duration,
        "closure": closure_report(clip),
    }


def build_parser() -> argparse.ArgumentParser:
    d = RunConfig()

    def common(p, *names):
        if "frames" in names:
            p.add_argument("--frames", type=int, help=f"common frame count (default: {d.frames})")
        if "epsilon" in names:
            p.add_argument("--epsilon", type=float, help=f"closure tolerance (default: {d.epsilon:g})")
        if "seeds" in names:
            p.add_argument("--seeds", type=int, help=f"start-offset seeds for alignment (default: {d.seeds})")
        if "path_points" in names:
            p.add_argument("--path-points", type=int, dest="path_points",
                           help=f"geodesic path discretization k (default: {d.path_points})")
        if "metric" in names:
            p.add_argument("--metric", choices=METRICS, help=f"distance metric (default: {d.metric})")
        if "space" in names:
            p.add_argument("--space", choices=SPACES, help=f"blending space (default: {d.space})")
        if "seam" in names:
            p.add_argument("--seam-smoothing", choices=("on", "off"), dest="seam_smoothing",
                           help="blend the SRV across the loop seam (default: on)")
        if "root" in names:
            p.add_argument("--include-root-translation", action="store_const", const=True,
                           dest="include_root_translation",
                           help="treat root translation as part of the curve (default: off)")
        if "exclude" in names:
            p.add_argument("--exclude-failures", action="store_const", const=True, dest="exclude_failures",
                           help="drop clips that fail to load or project instead of aborting (default: off)")
        if "workers" in names:
            p.add_argument("--workers", type=int, help=f"parallel worker processes (default: {d.workers})")
        p.add_argument("--config", help="JSON file with RunConfig values; flags override it (default: none)")
        p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr (default: off)")

    parser = argparse.ArgumentParser(prog="motionmanifold", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cyclify", help="make a nearly periodic clip loop seamlessly")
    p.add_argument("input", help="input BVH file")
    p.add_argument("output", help="output BVH file")
    p.add_argument("--sanity-bound", type=float, dest="sanity_bound",
                   help=f"largest start/end gap per channel in radians (default: {d.sanity_bound:.6g})")
    common(p, "epsilon", "seam", "root")
    p.set_defaults(func=cmd_cyclify)

    p = sub.add_parser("blend", help="blend two clips along a geodesic")
    p.add_argument("input_a", help="BVH file at s = 0")
    p.add_argument("input_b", help="BVH file at s = 1")
    p.add_argument("output", help="output BVH file, or a directory with --sweep")
    p.add_argument("--s", type=float, default=0.5, help="blend parameter in [0, 1] (default: 0.5)")
    p.add_argument("--sweep", type=int, default=0,
                   help="write N clips with s uniform over [0, 1] into the output directory (default: 0, off)")
    common(p, "epsilon", "seeds", "path_points", "space", "root")
    p.set_defaults(func=cmd_blend)

    p = sub.add_parser("distmat", help="pairwise distance matrix of a clip corpus")
    p.add_argument("inputs", nargs="+", help="BVH files, or a single directory of .bvh files")
    p.add_argument("-o", "--output", required=True, help="output CSV (a .json sidecar is written next to it)")
    common(p, "frames", "epsilon", "seeds", "path_points", "metric", "exclude", "workers")
    p.set_defaults(func=cmd_distmat)

    p = sub.add_parser("cluster", help="average-linkage dendrogram of a distance matrix")
    p.add_argument("matrix", help="distance matrix CSV")
    p.add_argument("output", help="dendrogram file: JSON, or Newick for .nwk/.newick/.tree")
    p.add_argument("--k", type=int, help="also write flat labels for k clusters (default: none)")
    common(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("info", help="summarize a BVH file")
    p.add_argument("input", help="BVH file")
    common(p)
    p.set_defaults(func=cmd_info)
    return parser


def resolve_config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        try:
            with open(args.config) as f:
                cfg = RunConfig.from_json(f.read())
        except OSError as e:
            raise ConfigError(f"cannot read config: {e}") from None
    overrides = {name: getattr(args, name, None) for name in cfg.to_dict()}
    if overrides.get("seam_smoothing") is not None:
        overrides["seam_smoothing"] = overrides["seam_smoothing"] == "on"
    return cfg.updated(**overrides)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        _report(args.func(args, cfg))
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        _report({"command": args.command, "error": str(e), "exit_code": e.code})
        return e.code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
