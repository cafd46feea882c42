"""Shared fixture builders: procedural multi-segment frame sets with
distinct textures and hues, plus a codebook trained on them."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from texsum.codebook import Codebook, train_codebook
from texsum.features import frame_features
from texsum.ingest import Frame, preprocess_frame
from texsum.summarize import FeatureConfig

SEG_HUES = [(1.0, 0.3, 0.3), (0.3, 1.0, 0.3), (0.3, 0.3, 1.0), (1.0, 1.0, 0.4)]


def textured_frame(kind: int, hue_rgb, jitter: np.ndarray,
                   height: int = 96, width: int = 128) -> np.ndarray:
    """One synthetic frame: a directional texture tinted by hue_rgb."""
    yy, xx = np.mgrid[0:height, 0:width]
    if kind % 4 == 0:
        base = 128 + 90 * np.sin(xx / 3.0)
    elif kind % 4 == 1:
        base = 128 + 90 * np.sin(yy / 2.5)
    elif kind % 4 == 2:
        base = 128 + 80 * np.sin((xx + yy) / 4.0)
    else:
        base = ((xx // 6 + yy // 6) % 2) * 170.0 + 40.0
    base = base + jitter
    img = np.stack([base * hue_rgb[c] for c in range(3)], axis=-1)
    return np.clip(img, 0, 255).astype(np.uint8)


def segment_frames(n_segments: int = 4, frames_per_segment: int = 5,
                   height: int = 96, width: int = 128,
                   seed: int = 7) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    frames = []
    for seg in range(n_segments):
        hue = SEG_HUES[seg % len(SEG_HUES)]
        for _ in range(frames_per_segment):
            frames.append(textured_frame(seg, hue,
                                         rng.normal(0, 2, (height, width)),
                                         height, width))
    return frames


def write_frame_dir(path: Path, frames: list[np.ndarray]) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    for i, px in enumerate(frames):
        Image.fromarray(px).save(path / f"f_{i:04d}.png")
    return path


def write_raw_stream(path: Path, frames: list[np.ndarray]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        for px in frames:
            fh.write(px.tobytes())
    return path


def codebook_from_frames(frames: list[np.ndarray], size: int = 8,
                         seed: int = 3) -> Codebook:
    fc = FeatureConfig()
    feats = []
    for i, px in enumerate(frames):
        gray = preprocess_frame(Frame(i, float(i), px, f"f_{i:04d}"))
        feats.append(frame_features(gray, fc.block_size, fc.step, fc.n_coeffs))
    return train_codebook(np.vstack(feats), size=size, seed=seed)


@pytest.fixture(scope="session")
def fixture_frames() -> list[np.ndarray]:
    return segment_frames()


@pytest.fixture(scope="session")
def fixture_codebook(fixture_frames) -> Codebook:
    # trained on every other frame so test frames are not all seen verbatim
    return codebook_from_frames(fixture_frames[::2])


@pytest.fixture()
def frame_dir(tmp_path: Path, fixture_frames) -> Path:
    return write_frame_dir(tmp_path / "frames", fixture_frames)


@pytest.fixture(scope="session")
def fixture_tau(fixture_frames, fixture_codebook) -> float:
    from texsum.histograms import FusionWeights
    sigs = fixture_signatures(fixture_frames, fixture_codebook)
    return calibrated_tau(sigs, FusionWeights(1.0))


def random_rgb(rng: np.random.Generator, height: int = 40,
               width: int = 48) -> np.ndarray:
    return rng.integers(0, 256, (height, width, 3), dtype=np.uint8)


def fixture_signatures(frames: list[np.ndarray], cb: Codebook,
                       with_hue: bool = False):
    from texsum.histograms import FrameSignature, bot_histogram, hue_histogram

    fc = FeatureConfig()
    sigs = []
    for i, px in enumerate(frames):
        f = Frame(i, float(i), px, f"f_{i:04d}.png")
        gray = preprocess_frame(f)
        feats = frame_features(gray.pixels, fc.block_size, fc.step, fc.n_coeffs)
        sigs.append(FrameSignature(
            frame_index=i, timestamp_s=float(i),
            bot=bot_histogram(feats, cb),
            hue=hue_histogram(f, fc.hue_bins) if with_hue else None,
            source_ref=f.source_ref,
        ))
    return sigs


def calibrated_tau(sigs, weights, frames_per_segment: int = 5,
                   min_margin: float = 2.0) -> float:
    """Threshold halfway below the smallest cross-segment distance.

    Asserts the fixture is actually separable: every within-segment
    consecutive distance must sit min_margin below the chosen threshold.
    """
    from texsum.histograms import fused_distance

    within, cross = [], []
    for i, a in enumerate(sigs):
        for j in range(i + 1, len(sigs)):
            d = fused_distance(a, sigs[j], weights, "l2")
            if i // frames_per_segment == j // frames_per_segment:
                if j == i + 1:
                    within.append(d)
            else:
                cross.append(d)
    tau = 0.5 * min(cross)
    assert max(within) * min_margin < tau, \
        f"fixture not separable: within={max(within)} tau={tau}"
    return tau
