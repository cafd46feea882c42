"""Keyframe selection pipeline: estimate the cluster count from consecutive
frame distances, cluster frame signatures with seeded k-means, pick the
member nearest each centroid, then drop near-duplicate keyframes and order
the survivors by time.

When colour is fused in (alpha < 1), clustering runs on the concatenation
[sqrt(alpha) * texture ; sqrt(beta) * hue], so plain k-means minimises the
weighted squared objective; with alpha == 1 the texture histograms are
clustered directly, which keeps the fused pipeline bit-identical to the
texture-only pipeline in that limit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .codebook import Codebook, kmeans
from .errors import (FormatError, InputError, NoInformativeFramesError,
                     PipelineError, TexsumError)
from .features import (DEFAULT_BLOCK_SIZE, DEFAULT_N_COEFFS, DEFAULT_OVERLAP,
                       frame_features)
from .histograms import (DEFAULT_HUE_BINS, FrameSignature, FusionWeights,
                         bot_histogram, fused_distance, hue_histogram)
from .ingest import (Frame, FrameSource, IngestConfig, is_informative,
                     iter_frames, preprocess_frame, source_frame_count)


@dataclass(frozen=True)
class FeatureConfig:
    block_size: int = DEFAULT_BLOCK_SIZE
    overlap: int = DEFAULT_OVERLAP
    n_coeffs: int = DEFAULT_N_COEFFS
    hue_bins: int = DEFAULT_HUE_BINS

    @property
    def step(self) -> int:
        return self.block_size - self.overlap

    def __post_init__(self):
        if not 0 <= self.overlap < self.block_size:
            raise InputError(
                f"overlap must be in [0, block_size), got {self.overlap} "
                f"for block_size {self.block_size}"
            )


@dataclass(frozen=True)
class SummaryConfig:
    tau: float
    weights: FusionWeights = FusionWeights(1.0)
    seed: int = 0

    def __post_init__(self):
        if self.tau <= 0:
            raise InputError(f"tau must be > 0, got {self.tau}")


@dataclass(frozen=True)
class Keyframe:
    frame_index: int
    timestamp_s: float
    source_ref: str = ""


@dataclass
class Summary:
    keyframes: list[Keyframe]
    k_initial: int
    duration_s: float = 0.0
    warnings: list[str] = field(default_factory=list)

    @property
    def n_keyframes(self) -> int:
        return len(self.keyframes)


@dataclass(frozen=True)
class ClusterResult:
    centroids: np.ndarray        # (k, dim) in the embedded space
    labels: np.ndarray           # (n,)
    k: int
    warnings: tuple[str, ...] = ()


def frame_signature(frame: Frame, cb: Codebook, feature_cfg: FeatureConfig,
                    with_hue: bool) -> FrameSignature:
    """Signature of one frame: texture histogram of its half-res grayscale
    version, plus (optionally) the hue histogram of the full-res frame."""
    gray = preprocess_frame(frame)
    feats = frame_features(gray, feature_cfg.block_size, feature_cfg.step,
                           feature_cfg.n_coeffs)
    return FrameSignature(
        frame_index=frame.index,
        timestamp_s=frame.timestamp_s,
        bot=bot_histogram(feats, cb),
        hue=hue_histogram(frame, feature_cfg.hue_bins) if with_hue else None,
        source_ref=frame.source_ref,
    )


def estimate_k(sigs: Sequence[FrameSignature], cfg: SummaryConfig) -> int:
    """One group plus one per consecutive distance exceeding tau."""
    if not sigs:
        raise InputError("cannot estimate cluster count from zero signatures")
    k = 1
    for a, b in zip(sigs, sigs[1:]):
        if fused_distance(a, b, cfg.weights, "l2") > cfg.tau:
            k += 1
    return k


def _embed(sigs: Sequence[FrameSignature], weights: FusionWeights) -> np.ndarray:
    """Map signatures to the space where L2 matches the fused objective."""
    if weights.alpha == 1.0:
        return np.stack([s.bot for s in sigs])
    for s in sigs:
        if s.hue is None:
            raise InputError("colour weight is positive but a signature has no hue histogram")
    if weights.alpha == 0.0:
        return np.stack([s.hue for s in sigs])
    ra, rb = math.sqrt(weights.alpha), math.sqrt(weights.beta)
    return np.stack([np.concatenate([ra * s.bot, rb * s.hue]) for s in sigs])


def _centroid_parts(centroid: np.ndarray, weights: FusionWeights,
                    bot_dim: int) -> tuple[np.ndarray | None, np.ndarray | None]:
    """Undo _embed's scaling on a centroid vector."""
    if weights.alpha == 1.0:
        return centroid, None
    if weights.alpha == 0.0:
        return None, centroid
    ra, rb = math.sqrt(weights.alpha), math.sqrt(weights.beta)
    return centroid[:bot_dim] / ra, centroid[bot_dim:] / rb


def cluster_frames(sigs: Sequence[FrameSignature], k: int,
                   cfg: SummaryConfig) -> ClusterResult:
    """Seeded k-means over frame signatures in the fused-weight geometry."""
    if not sigs:
        raise InputError("cannot cluster zero signatures")
    if k < 1:
        raise InputError(f"cluster count must be >= 1, got {k}")
    X = _embed(sigs, cfg.weights)
    warnings = []
    if k > len(sigs):
        warnings.append(f"cluster count {k} clamped to frame count {len(sigs)}")
        k = len(sigs)
    n_distinct = np.unique(X, axis=0).shape[0]
    if k > n_distinct:
        warnings.append(
            f"cluster count {k} clamped to {n_distinct} distinct signatures"
        )
        k = n_distinct
    result = kmeans(X, k, seed=cfg.seed)
    return ClusterResult(centroids=result.centroids, labels=result.labels,
                         k=k, warnings=tuple(warnings))


def select_keyframes(sigs: Sequence[FrameSignature], centroids: np.ndarray,
                     labels: np.ndarray, weights: FusionWeights) -> list[int]:
    """Per cluster, the position of the member with the smallest fused
    distance to the centroid; ties go to the earliest frame."""
    bot_dim = sigs[0].bot.shape[0]
    picks = []
    for g in range(centroids.shape[0]):
        members = np.flatnonzero(labels == g)
        if members.size == 0:
            raise PipelineError("keyframe-select",
                                f"cluster {g} is empty (clustering bug)")
        c_bot, c_hue = _centroid_parts(centroids[g], weights, bot_dim)
        best_pos = -1
        best_d = math.inf
        for pos in members:
            s = sigs[pos]
            d = 0.0
            if c_bot is not None:
                d += weights.alpha * float(np.linalg.norm(s.bot - c_bot))
            if c_hue is not None:
                d += weights.beta * float(np.linalg.norm(s.hue - c_hue))
            if d < best_d:
                best_d = d
                best_pos = int(pos)
        picks.append(best_pos)
    return picks


def dedup_keyframes(positions: Sequence[int], sigs: Sequence[FrameSignature],
                    cfg: SummaryConfig) -> Summary:
    """Scan keyframes in ascending frame order; whenever a surviving pair
    sits closer than tau, the later one is discarded."""
    if not positions:
        raise InputError("cannot deduplicate an empty keyframe set")
    order = sorted(positions)
    alive = [True] * len(order)
    for i in range(len(order)):
        if not alive[i]:
            continue
        for j in range(i + 1, len(order)):
            if not alive[j]:
                continue
            if fused_distance(sigs[order[i]], sigs[order[j]], cfg.weights, "l2") < cfg.tau:
                alive[j] = False
    survivors = [order[i] for i in range(len(order)) if alive[i]]
    keyframes = [
        Keyframe(
            frame_index=sigs[p].frame_index,
            timestamp_s=sigs[p].timestamp_s,
            source_ref=sigs[p].source_ref,
        )
        for p in survivors
    ]
    return Summary(keyframes=keyframes, k_initial=len(positions))


def compute_signatures(source: FrameSource, ingest_cfg: IngestConfig,
                       cb: Codebook, feature_cfg: FeatureConfig,
                       with_hue: bool) -> tuple[list[FrameSignature], int]:
    """Stream the source through preprocessing, noise filtering and
    signature extraction. Returns (signatures, total sampled frames)."""
    sigs: list[FrameSignature] = []
    n_sampled = 0
    for frame in iter_frames(source, ingest_cfg):
        n_sampled += 1
        gray = preprocess_frame(frame)
        if not is_informative(gray, ingest_cfg.sigma_min):
            continue
        feats = frame_features(gray.pixels, feature_cfg.block_size,
                               feature_cfg.step, feature_cfg.n_coeffs)
        sigs.append(FrameSignature(
            frame_index=frame.index,
            timestamp_s=frame.timestamp_s,
            bot=bot_histogram(feats, cb),
            hue=hue_histogram(frame, feature_cfg.hue_bins) if with_hue else None,
            source_ref=frame.source_ref,
        ))
    if n_sampled and not sigs:
        raise NoInformativeFramesError(
            f"all {n_sampled} frames have pixel std below {ingest_cfg.sigma_min}"
        )
    return sigs, n_sampled


def summarise(source: FrameSource, ingest_cfg: IngestConfig, cb: Codebook,
              summary_cfg: SummaryConfig,
              feature_cfg: FeatureConfig = FeatureConfig()) -> Summary:
    """Full pipeline from a frame source to a deduplicated, temporally
    ordered keyframe summary. Deterministic for fixed inputs and seed."""
    with_hue = summary_cfg.weights.alpha < 1.0

    def run_stage(name, fn, *args):
        try:
            return fn(*args)
        except (InputError, PipelineError):
            raise
        except TexsumError as e:
            raise PipelineError(name, str(e)) from e

    sigs, _ = run_stage(
        "signatures", compute_signatures, source, ingest_cfg, cb, feature_cfg, with_hue
    )
    if not sigs:
        raise PipelineError("signatures", "source produced no frames")
    k = run_stage("estimate-k", estimate_k, sigs, summary_cfg)
    clusters = run_stage("cluster", cluster_frames, sigs, k, summary_cfg)
    picks = run_stage("keyframe-select", select_keyframes,
                      sigs, clusters.centroids, clusters.labels, summary_cfg.weights)
    summary = run_stage("dedup", dedup_keyframes, picks, sigs, summary_cfg)
    summary.duration_s = source_frame_count(source) / source.fps
    summary.warnings = list(clusters.warnings)
    return summary


KEYFRAME_DISPLAY_S = 0.25   # storyboard dwell time per keyframe


def manifest_dict(summary: Summary, video_id: str, config: dict,
                  storyboard: bool = False) -> dict:
    keyframes = []
    for kf in summary.keyframes:
        entry = {
            "frame_index": kf.frame_index,
            "timestamp_s": kf.timestamp_s,
            "source_frame_ref": kf.source_ref,
        }
        if storyboard:
            entry["display_duration_s"] = KEYFRAME_DISPLAY_S
        keyframes.append(entry)
    doc = {
        "video_id": video_id,
        "config": config,
        "duration_s": summary.duration_s,
        "K_initial": summary.k_initial,
        "N_as": summary.n_keyframes,
        "keyframes": keyframes,
        "warnings": summary.warnings,
    }
    if storyboard:
        doc["storyboard_duration_s"] = KEYFRAME_DISPLAY_S * summary.n_keyframes
    return doc


def write_manifest(doc: dict, path: str | Path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    tmp.replace(path)


def load_manifest(path: str | Path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise InputError(f"cannot read manifest {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: not valid JSON: {e}") from e
    for key in ("video_id", "config", "keyframes"):
        if key not in doc:
            raise FormatError(f"{path}: manifest missing field {key!r}")
    return doc
