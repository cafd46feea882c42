"""Command-line front end.

Subcommands:
  train      build a texture codebook from randomly sampled frames
  summarise  produce a keyframe summary (manifest + images) for one video
  evaluate   score summaries against user selections or long-term ground truth
  sweep      grid-search tau and the fusion weight, scoring each point

Exit codes: 0 success, 2 bad usage or malformed input, 1 anything else
that goes wrong inside the pipeline.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from PIL import Image

from . import evaluate as ev
from .codebook import (Codebook, DEFAULT_CODEWORDS, load_codebook,
                       save_codebook, train_codebook)
from .errors import InputError, TexsumError, TrainingError
from .features import frame_features
from .histograms import FusionWeights, write_signatures
from .ingest import (FrameSource, IngestConfig, decode_frames, iter_frames,
                     preprocess_frame)
from .summarize import (FeatureConfig, SummaryConfig, manifest_dict,
                        load_manifest, summarise, write_manifest)

DEFAULT_TRAIN_SAMPLE = 10


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _frame_source(args) -> FrameSource:
    return FrameSource(
        path=args.frames,
        fps=args.fps,
        width=args.width,
        height=args.height,
        video_id=args.video_id or "",
    )


def _ingest_config(args) -> IngestConfig:
    return IngestConfig(target_fps=args.target_fps, sigma_min=args.sigma_min)


def parse_grid(text: str) -> list[float]:
    """Either comma-separated values or an inclusive start:step:stop range."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise InputError(f"grid {text!r}: want start:step:stop")
        try:
            start, step, stop = (float(p) for p in parts)
        except ValueError:
            raise InputError(f"grid {text!r}: non-numeric bound") from None
        if step <= 0 or stop < start:
            raise InputError(f"grid {text!r}: need step > 0 and stop >= start")
        n = int(round((stop - start) / step))
        values = [start + i * step for i in range(n + 1)]
        # half-step tolerance so 0.0:0.1:1.0 lands exactly on 1.0
        return [v for v in values if v <= stop + step / 2]
    try:
        values = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise InputError(f"grid {text!r}: non-numeric entry") from None
    if not values:
        raise InputError(f"grid {text!r}: empty")
    return values


def _save_keyframe_images(source: FrameSource, cfg: IngestConfig,
                          indices: set[int], out_dir: Path) -> dict[int, str]:
    """Re-decode the sampled stream and write each selected frame as PNG.

    Returns frame index -> written file name.
    """
    written = {}
    for frame in iter_frames(source, cfg):
        if frame.index in indices:
            name = f"kf_{frame.index:06d}.png"
            Image.fromarray(frame.pixels).save(out_dir / name)
            written[frame.index] = name
        if len(written) == len(indices):
            break
    missing = indices - set(written)
    if missing:
        raise InputError(f"keyframe indices {sorted(missing)} not found in source")
    return written


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_train(args) -> int:
    source = _frame_source(args)
    cfg = _ingest_config(args)
    seq = decode_frames(source, cfg)
    if len(seq) < args.sample:
        raise TrainingError(
            f"need {args.sample} training frames, source yields {len(seq)}"
        )
    rng = np.random.default_rng(args.seed)
    picked = sorted(rng.choice(len(seq), size=args.sample, replace=False).tolist())
    feats = []
    fc = FeatureConfig()
    for i in picked:
        gray = preprocess_frame(seq.frames[i])
        feats.append(frame_features(gray, fc.block_size, fc.step, fc.n_coeffs))
    cb = train_codebook(np.vstack(feats), size=args.codewords, seed=args.seed)
    save_codebook(cb, args.out)
    print(f"codebook: {cb.size} codewords x {cb.dim} dims from "
          f"{args.sample} frames -> {args.out}")
    return 0


def cmd_summarise(args) -> int:
    source = _frame_source(args)
    ingest_cfg = _ingest_config(args)
    cb = load_codebook(args.codebook)
    summary_cfg = SummaryConfig(
        tau=args.tau, weights=FusionWeights(args.alpha), seed=args.seed
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    summary = summarise(source, ingest_cfg, cb, summary_cfg)

    indices = {kf.frame_index for kf in summary.keyframes}
    _save_keyframe_images(source, ingest_cfg, indices, out_dir)

    config = {"tau": args.tau, "alpha": args.alpha, "G": cb.size, "seed": args.seed}
    doc = manifest_dict(summary, source.video_id, config, storyboard=args.storyboard)
    write_manifest(doc, out_dir / "manifest.json")

    if args.dump_signatures:
        from .summarize import compute_signatures
        sigs, _ = compute_signatures(source, ingest_cfg, cb, FeatureConfig(),
                                     with_hue=summary_cfg.weights.beta > 0)
        write_signatures(sigs, out_dir / "signatures.jsonl")

    for w in summary.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"{source.video_id}: K_initial={summary.k_initial} "
          f"keyframes={summary.n_keyframes} -> {out_dir}")
    return 0


def cmd_evaluate(args) -> int:
    if args.long_term:
        if not args.manifests or not args.ground_truth:
            raise InputError("--long-term needs --manifests and --ground-truth")
        manifest_paths = sorted(Path(args.manifests).glob("**/manifest.json"))
        if not manifest_paths:
            raise InputError(f"no manifest.json files under {args.manifests}")
        times, durations = {}, {}
        for p in manifest_paths:
            doc = load_manifest(p)
            vid = doc["video_id"]
            times[vid] = [kf["timestamp_s"] for kf in doc["keyframes"]]
            durations[vid] = float(doc.get("duration_s", 0.0))
        windows = ev.read_ground_truth(args.ground_truth)
        report = ev.build_longterm_report(times, windows, durations)
    else:
        if not args.tree or not args.codebook:
            raise InputError("evaluation needs --tree and --codebook")
        cb = load_codebook(args.codebook)
        weights = FusionWeights(args.alpha)
        per_video = ev.evaluate_tree(args.tree, cb, FeatureConfig(), args.delta,
                                     weights, hue_norm=args.hue_norm)
        rc_by_video = {}
        for vdir in sorted(Path(args.tree).iterdir()):
            mp = vdir / "auto" / "manifest.json"
            if mp.is_file():
                doc = load_manifest(mp)
                dur, n = doc.get("duration_s", 0.0), len(doc["keyframes"])
                if dur > 0 and n > 0:
                    rc_by_video[vdir.name] = ev.compression_ratio(dur, n)
        report = ev.build_user_report(per_video, rc_by_video or None)

    json_path, csv_path = ev.write_report(report, args.out)
    d = report.to_dict()
    if d["mean"] is not None:
        print(f"mean over videos: acc={d['mean']['acc']:.4f} "
              f"err={d['mean']['err']:.4f} F={d['mean']['F']:.4f}")
    if d["detection_accuracy"] is not None:
        print(f"detection accuracy: {d['detection_accuracy']:.4f}")
    if d["mean_Rc"] is not None:
        print(f"mean compression ratio: {d['mean_Rc']:.2f}")
    print(f"report -> {json_path} and {csv_path}")
    return 0


def _sweep_point(tau: float, alpha: float, args, cb: Codebook,
                 user_sigs_by_dir: dict, points_dir: Path) -> dict:
    """Summarise one grid point through the standard file-based path,
    then score the written images against the cached user signatures."""
    source = _frame_source(args)
    ingest_cfg = _ingest_config(args)
    summary_cfg = SummaryConfig(tau=tau, weights=FusionWeights(alpha), seed=args.seed)
    tag = f"tau_{tau:g}_alpha_{alpha:g}"
    out_dir = points_dir / tag / source.video_id / "auto"
    out_dir.mkdir(parents=True, exist_ok=True)

    summary = summarise(source, ingest_cfg, cb, summary_cfg)
    indices = {kf.frame_index for kf in summary.keyframes}
    _save_keyframe_images(source, ingest_cfg, indices, out_dir)
    config = {"tau": tau, "alpha": alpha, "G": cb.size, "seed": args.seed}
    write_manifest(manifest_dict(summary, source.video_id, config),
                   out_dir / "manifest.json")

    weights = FusionWeights(alpha)
    with_hue = weights.beta > 0
    auto_sigs = ev.signatures_from_dir(out_dir, cb, FeatureConfig(), with_hue)
    bundles = []
    for sigs in user_sigs_by_dir.values():
        if with_hue and any(s.hue is None for s in sigs):
            raise InputError("user signatures were built without hue histograms")
        m = ev.cus_match(auto_sigs, sigs, args.delta, weights, args.hue_norm)
        bundles.append(ev.metrics(m))
    mean = ev._mean_bundle(bundles)
    return {
        "tau": tau, "alpha": alpha,
        "n_keyframes": summary.n_keyframes, "K_initial": summary.k_initial,
        "acc": mean.accuracy, "err": mean.error, "F": mean.f_measure,
    }


def cmd_sweep(args) -> int:
    cb = load_codebook(args.codebook)
    taus = parse_grid(args.tau_grid)
    alphas = parse_grid(args.alpha_grid)
    for a in alphas:
        if not 0.0 <= a <= 1.0:
            raise InputError(f"alpha grid value {a} outside [0, 1]")
    for t in taus:
        if t <= 0:
            raise InputError(f"tau grid value {t} must be > 0")

    users_root = Path(args.users)
    user_dirs = sorted(p for p in users_root.iterdir()
                       if p.is_dir() and p.name.startswith("user"))
    if not user_dirs:
        raise InputError(f"no user*/ directories under {users_root}")
    # hue histograms are cheap next to the texture pass, so compute them
    # once here and reuse across every alpha
    user_sigs = {p.name: ev.signatures_from_dir(p, cb, FeatureConfig(), True)
                 for p in user_dirs}

    out_dir = Path(args.out)
    points_dir = out_dir / "points"
    points_dir.mkdir(parents=True, exist_ok=True)

    grid = [(t, a) for t in taus for a in alphas]
    jobs = max(1, args.jobs)
    if jobs == 1:
        rows = [_sweep_point(t, a, args, cb, user_sigs, points_dir)
                for t, a in grid]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_sweep_point, t, a, args, cb, user_sigs,
                                   points_dir) for t, a in grid]
            rows = [f.result() for f in futures]

    best = max(range(len(rows)), key=lambda i: rows[i]["F"])
    csv_path = out_dir / "sweep.csv"
    lines = ["tau,alpha,K_initial,n_keyframes,acc,err,F,best"]
    for i, r in enumerate(rows):
        lines.append(f"{r['tau']:g},{r['alpha']:g},{r['K_initial']},"
                     f"{r['n_keyframes']},{r['acc']:.6f},{r['err']:.6f},"
                     f"{r['F']:.6f},{'*' if i == best else ''}")
    tmp = csv_path.with_name(csv_path.name + ".tmp")
    tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
    tmp.replace(csv_path)

    json_path = out_dir / "sweep.json"
    tmp = json_path.with_name(json_path.name + ".tmp")
    tmp.write_text(json.dumps({"points": rows, "best": rows[best]},
                              indent=2, sort_keys=True) + "\n", encoding="utf-8")
    tmp.replace(json_path)

    b = rows[best]
    print(f"{len(rows)} grid points -> {csv_path}")
    print(f"best: tau={b['tau']:g} alpha={b['alpha']:g} F={b['F']:.4f} "
          f"acc={b['acc']:.4f}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_source_args(p: argparse.ArgumentParser, required: bool = True):
    p.add_argument("--frames", required=required,
                   help="frame directory (.png/.ppm) or raw RGB24 stream file")
    p.add_argument("--fps", type=float, default=1.0,
                   help="source frame rate (default 1)")
    p.add_argument("--width", type=int, default=None,
                   help="frame width, raw streams only")
    p.add_argument("--height", type=int, default=None,
                   help="frame height, raw streams only")
    p.add_argument("--video-id", default=None,
                   help="identifier for reports (default: source stem)")
    p.add_argument("--target-fps", type=float, default=1.0,
                   help="temporal sampling rate (default 1 frame/s)")
    p.add_argument("--sigma-min", type=float, default=5.0,
                   help="minimum pixel std for a frame to count (default 5)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="texsum",
        description="Texture-histogram keyframe summariser and evaluation harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="build a codebook from sampled frames")
    _add_source_args(p)
    p.add_argument("--sample", type=int, default=DEFAULT_TRAIN_SAMPLE,
                   help=f"training frames to draw (default {DEFAULT_TRAIN_SAMPLE})")
    p.add_argument("--codewords", "-G", type=int, default=DEFAULT_CODEWORDS,
                   help=f"codebook size (default {DEFAULT_CODEWORDS})")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", default="codebook.json")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("summarise", help="summarise one video")
    _add_source_args(p)
    p.add_argument("--codebook", required=True)
    p.add_argument("--tau", type=float, required=True,
                   help="distance threshold for grouping and dedup")
    p.add_argument("--alpha", type=float, default=1.0,
                   help="texture weight; colour weight is 1 - alpha (default 1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--storyboard", action="store_true",
                   help="add per-keyframe display timing to the manifest")
    p.add_argument("--dump-signatures", action="store_true",
                   help="also write signatures.jsonl for every sampled frame")
    p.add_argument("-o", "--out", default="summary_out")
    p.set_defaults(fn=cmd_summarise)

    p = sub.add_parser("evaluate", help="score summaries")
    p.add_argument("--tree", help="root of <video_id>/{auto,user*}/ directories")
    p.add_argument("--codebook")
    p.add_argument("--delta", type=float, default=0.5,
                   help="match threshold on the fused distance (default 0.5)")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--hue-norm", choices=("l1", "l2"), default="l1")
    p.add_argument("--long-term", action="store_true",
                   help="detection-accuracy mode over manifests + ground truth")
    p.add_argument("--manifests", help="directory tree holding manifest.json files")
    p.add_argument("--ground-truth", help="CSV of video_id,start_s,end_s windows")
    p.add_argument("-o", "--out", default="report",
                   help="output base path; .json and .csv are appended")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("sweep", help="grid-search tau and alpha on one video")
    _add_source_args(p)
    p.add_argument("--codebook", required=True)
    p.add_argument("--users", required=True,
                   help="directory holding user*/ summary directories")
    p.add_argument("--tau-grid", required=True,
                   help='"start:step:stop" inclusive, or comma list')
    p.add_argument("--alpha-grid", default="1.0",
                   help='fusion-weight grid, same syntax (default "1.0")')
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--hue-norm", choices=("l1", "l2"), default="l1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel grid points (default 1)")
    p.add_argument("-o", "--out", default="sweep_out")
    p.set_defaults(fn=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except TexsumError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
