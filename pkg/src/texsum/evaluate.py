"""Summary scoring: greedy matching of automatic keyframes against user
summaries, accuracy/error/F metrics with per-user and cross-video
averaging, long-term detection accuracy, and the storyboard compression
ratio.

Matching is greedy and temporal on both sides: automatic keyframes are
visited in order, each takes the first still-unmatched user frame within
the distance threshold, and a matched user frame is consumed for all later
iterations. The distance is the fused form used for evaluation (L2 on
texture histograms, L1 on hue histograms).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import FormatError, InputError
from .histograms import FrameSignature, FusionWeights, fused_distance
from .summarize import KEYFRAME_DISPLAY_S


@dataclass(frozen=True)
class MatchResult:
    n_matched: int
    n_unmatched: int
    n_auto: int
    n_user: int
    pairs: tuple[tuple[int, int], ...] = ()   # (auto position, user position)


@dataclass(frozen=True)
class MetricBundle:
    accuracy: float
    error: float
    precision: float
    recall: float
    f_measure: float


@dataclass(frozen=True)
class GroundTruthWindow:
    video_id: str
    start_s: float
    end_s: float

    def __post_init__(self):
        if not 0 <= self.start_s < self.end_s:
            raise InputError(
                f"window for {self.video_id!r} needs 0 <= start < end, "
                f"got [{self.start_s}, {self.end_s}]"
            )

    def contains(self, t: float) -> bool:
        return self.start_s <= t <= self.end_s


def cus_match(auto: Sequence[FrameSignature], user: Sequence[FrameSignature],
              delta: float, weights: FusionWeights,
              hue_norm: str = "l1") -> MatchResult:
    """Greedy temporal matching; each user frame is consumed at most once.

    Both sequences must already be in temporal order.
    """
    if delta <= 0:
        raise InputError(f"delta must be > 0, got {delta}")
    available = list(range(len(user)))
    pairs = []
    for ai, a in enumerate(auto):
        for pos, ui in enumerate(available):
            if fused_distance(a, user[ui], weights, hue_norm) < delta:
                pairs.append((ai, ui))
                del available[pos]
                break
    return MatchResult(
        n_matched=len(pairs),
        n_unmatched=len(auto) - len(pairs),
        n_auto=len(auto),
        n_user=len(user),
        pairs=tuple(pairs),
    )


def metrics(m: MatchResult) -> MetricBundle:
    """accuracy = matched/user, error = unmatched/user, F from P and R."""
    if m.n_user < 1:
        raise InputError("metrics need at least one user-summary frame")
    if m.n_auto < 1:
        raise InputError("metrics need at least one automatic keyframe")
    precision = m.n_matched / m.n_auto
    recall = m.n_matched / m.n_user
    f = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return MetricBundle(
        accuracy=m.n_matched / m.n_user,
        error=m.n_unmatched / m.n_user,
        precision=precision,
        recall=recall,
        f_measure=f,
    )


def _mean_bundle(bundles: Sequence[MetricBundle]) -> MetricBundle:
    n = len(bundles)
    return MetricBundle(
        accuracy=sum(b.accuracy for b in bundles) / n,
        error=sum(b.error for b in bundles) / n,
        precision=sum(b.precision for b in bundles) / n,
        recall=sum(b.recall for b in bundles) / n,
        f_measure=sum(b.f_measure for b in bundles) / n,
    )


def aggregate(per_video: Mapping[str, Sequence[MetricBundle]],
              ) -> tuple[dict[str, MetricBundle], MetricBundle]:
    """Unweighted mean over each video's users, then over videos."""
    if not per_video:
        raise InputError("aggregate needs at least one video")
    video_means = {}
    for video_id, bundles in per_video.items():
        if not bundles:
            raise InputError(f"video {video_id!r} has no per-user metrics")
        video_means[video_id] = _mean_bundle(bundles)
    overall = _mean_bundle(list(video_means.values()))
    return video_means, overall


def detection_accuracy(keyframe_times: Mapping[str, Sequence[float]],
                       windows: Sequence[GroundTruthWindow]) -> float:
    """Fraction of videos with any keyframe inside any of its windows."""
    if not keyframe_times:
        raise InputError("detection accuracy needs at least one summary")
    by_video: dict[str, list[GroundTruthWindow]] = {}
    for w in windows:
        by_video.setdefault(w.video_id, []).append(w)
    detected = 0
    for video_id, times in keyframe_times.items():
        vid_windows = by_video.get(video_id)
        if not vid_windows:
            raise InputError(f"no ground-truth window for video {video_id!r}")
        if any(w.contains(t) for t in times for w in vid_windows):
            detected += 1
    return detected / len(keyframe_times)


def compression_ratio(video_duration_s: float, n_keyframes: int) -> float:
    """4 x source duration over the storyboard duration at 4 keyframes/s."""
    if n_keyframes < 1:
        raise InputError(f"need at least one keyframe, got {n_keyframes}")
    if video_duration_s <= 0:
        raise InputError(f"video duration must be > 0, got {video_duration_s}")
    summary_duration_s = n_keyframes * KEYFRAME_DISPLAY_S
    return 4.0 * video_duration_s / summary_duration_s


def read_ground_truth(path: str | Path) -> list[GroundTruthWindow]:
    """CSV rows of video_id,start_s,end_s; a header row is tolerated."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read ground truth {path}: {e}") from e
    windows = []
    for lineno, row in enumerate(csv.reader(text.splitlines()), start=1):
        if not row or not "".join(row).strip():
            continue
        if len(row) != 3:
            raise FormatError(f"{path}:{lineno}: expected video_id,start_s,end_s")
        vid, start, end = (c.strip() for c in row)
        try:
            start_f, end_f = float(start), float(end)
        except ValueError:
            if lineno == 1:
                continue    # header row
            raise FormatError(f"{path}:{lineno}: non-numeric start/end") from None
        try:
            windows.append(GroundTruthWindow(vid, start_f, end_f))
        except InputError as e:
            raise FormatError(f"{path}:{lineno}: {e}") from e
    if not windows:
        raise FormatError(f"{path}: no ground-truth windows found")
    return windows


# ---------------------------------------------------------------------------
# Report assembly
# ---------------------------------------------------------------------------

def _bundle_dict(b: MetricBundle) -> dict:
    return {
        "acc": b.accuracy,
        "err": b.error,
        "precision": b.precision,
        "recall": b.recall,
        "F": b.f_measure,
    }


@dataclass
class EvalReport:
    per_video: list[dict] = field(default_factory=list)
    mean: dict | None = None
    detection_accuracy: float | None = None
    mean_rc: float | None = None

    def to_dict(self) -> dict:
        return {
            "per_video": self.per_video,
            "mean": self.mean,
            "detection_accuracy": self.detection_accuracy,
            "mean_Rc": self.mean_rc,
        }


def build_user_report(per_video_bundles: Mapping[str, Sequence[MetricBundle]],
                      rc_by_video: Mapping[str, float] | None = None) -> EvalReport:
    video_means, overall = aggregate(per_video_bundles)
    per_video = []
    for video_id in sorted(per_video_bundles):
        entry = {
            "video_id": video_id,
            "per_user": [_bundle_dict(b) for b in per_video_bundles[video_id]],
            "acc_P": video_means[video_id].accuracy,
            "err_P": video_means[video_id].error,
            "F_P": video_means[video_id].f_measure,
        }
        if rc_by_video and video_id in rc_by_video:
            entry["Rc"] = rc_by_video[video_id]
        per_video.append(entry)
    report = EvalReport(
        per_video=per_video,
        mean={"acc": overall.accuracy, "err": overall.error, "F": overall.f_measure},
    )
    if rc_by_video:
        report.mean_rc = sum(rc_by_video.values()) / len(rc_by_video)
    return report


def build_longterm_report(keyframe_times: Mapping[str, Sequence[float]],
                          windows: Sequence[GroundTruthWindow],
                          durations: Mapping[str, float]) -> EvalReport:
    acc = detection_accuracy(keyframe_times, windows)
    per_video = []
    rcs = []
    for video_id in sorted(keyframe_times):
        rc = compression_ratio(durations[video_id], len(keyframe_times[video_id]))
        rcs.append(rc)
        vid_windows = [w for w in windows if w.video_id == video_id]
        detected = any(w.contains(t) for t in keyframe_times[video_id] for w in vid_windows)
        per_video.append({
            "video_id": video_id,
            "detected": detected,
            "n_keyframes": len(keyframe_times[video_id]),
            "duration_s": durations[video_id],
            "summary_duration_s": len(keyframe_times[video_id]) * KEYFRAME_DISPLAY_S,
            "Rc": rc,
        })
    return EvalReport(
        per_video=per_video,
        detection_accuracy=acc,
        mean_rc=sum(rcs) / len(rcs),
    )


# ---------------------------------------------------------------------------
# Directory-tree harness: <root>/<video_id>/auto/ vs <root>/<video_id>/user*/
# ---------------------------------------------------------------------------

def signatures_from_dir(path: Path, cb, feature_cfg, with_hue: bool,
                        ) -> list[FrameSignature]:
    """Signatures for every image in a summary directory, filename order.

    Summary frames are deliberate picks, so no temporal sampling and no
    noise filtering happens here; each image becomes one signature.
    """
    from .ingest import FrameSource, IngestConfig, decode_frames
    from .summarize import frame_signature

    source = FrameSource(str(path), fps=1.0)
    frames = decode_frames(source, IngestConfig(target_fps=1.0))
    return [frame_signature(f, cb, feature_cfg, with_hue=with_hue) for f in frames]


def evaluate_tree(root: str | Path, cb, feature_cfg, delta: float,
                  weights: FusionWeights, hue_norm: str = "l1",
                  ) -> dict[str, list[MetricBundle]]:
    """Score every video directory under the tree.

    Each video directory needs one auto/ directory and at least one
    user-summary directory whose name starts with "user". Signatures are
    recomputed from the stored keyframe images with the shared codebook.
    """
    root = Path(root)
    if not root.is_dir():
        raise InputError(f"evaluation tree {root} is not a directory")
    video_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not video_dirs:
        raise InputError(f"evaluation tree {root} has no video directories")
    per_video: dict[str, list[MetricBundle]] = {}
    for vdir in video_dirs:
        auto_dir = vdir / "auto"
        if not auto_dir.is_dir():
            raise InputError(f"{vdir} has no auto/ directory")
        user_dirs = sorted(p for p in vdir.iterdir()
                           if p.is_dir() and p.name.startswith("user"))
        if not user_dirs:
            raise InputError(f"{vdir} has no user summary directories")
        auto_sigs = signatures_from_dir(auto_dir, cb, feature_cfg,
                                        with_hue=weights.beta > 0)
        bundles = []
        for udir in user_dirs:
            user_sigs = signatures_from_dir(udir, cb, feature_cfg,
                                            with_hue=weights.beta > 0)
            m = cus_match(auto_sigs, user_sigs, delta, weights, hue_norm)
            bundles.append(metrics(m))
        per_video[vdir.name] = bundles
    return per_video


def write_report(report: EvalReport, out_base: str | Path) -> tuple[Path, Path]:
    """Write <base>.json and a flat <base>.csv; returns both paths."""
    out_base = Path(out_base)
    json_path = out_base.with_suffix(".json")
    csv_path = out_base.with_suffix(".csv")

    tmp = json_path.with_name(json_path.name + ".tmp")
    tmp.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n",
                   encoding="utf-8")
    tmp.replace(json_path)

    rows = []
    for entry in report.per_video:
        if "per_user" in entry:
            for i, b in enumerate(entry["per_user"], start=1):
                rows.append([entry["video_id"], f"user{i}", b["acc"], b["err"],
                             b["precision"], b["recall"], b["F"]])
            rows.append([entry["video_id"], "mean", entry["acc_P"], entry["err_P"],
                         "", "", entry["F_P"]])
        else:
            rows.append([entry["video_id"], "long-term", int(entry["detected"]),
                         entry["n_keyframes"], entry["duration_s"], "", entry["Rc"]])
    tmp = csv_path.with_name(csv_path.name + ".tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["video_id", "user", "acc", "err", "precision", "recall", "F"])
        writer.writerows(rows)
        if report.mean is not None:
            writer.writerow(["__mean__", "", report.mean["acc"], report.mean["err"],
                             "", "", report.mean["F"]])
        if report.detection_accuracy is not None:
            writer.writerow(["__detection_accuracy__", "", report.detection_accuracy,
                             "", "", "", ""])
        if report.mean_rc is not None:
            writer.writerow(["__mean_Rc__", "", report.mean_rc, "", "", "", ""])
    tmp.replace(csv_path)
    return json_path, csv_path
