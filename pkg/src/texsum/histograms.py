"""Per-frame signatures: texture-codeword histograms, hue histograms, and
the weighted texture+colour distance between two signatures.

Counts are tallied in integers and divided once, so every histogram sums
to exactly the tally ratio with no accumulation drift.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels
from .codebook import Codebook, assign
from .errors import FormatError, InputError
from .ingest import Frame

DEFAULT_HUE_BINS = 16


@dataclass(frozen=True)
class FusionWeights:
    """Texture weight alpha; colour weight beta is derived as 1 - alpha."""

    alpha: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InputError(f"alpha must be in [0, 1], got {self.alpha}")

    @property
    def beta(self) -> float:
        return 1.0 - self.alpha


@dataclass(frozen=True)
class FrameSignature:
    frame_index: int
    timestamp_s: float
    bot: np.ndarray                 # texture histogram, sums to 1
    hue: np.ndarray | None = None   # hue histogram, sums to 1 when present
    source_ref: str = ""            # provenance; not part of the dump format


def bot_histogram(block_features: np.ndarray, cb: Codebook) -> np.ndarray:
    """Relative frequency of each codeword over a frame's blocks."""
    X = np.asarray(block_features, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise InputError(f"expected a non-empty (n_blocks, dim) matrix, got shape {X.shape}")
    labels = assign(X, cb)
    counts = np.bincount(labels, minlength=cb.size)
    return counts / X.shape[0]


def hue_histogram(frame: Frame | np.ndarray, bins: int = DEFAULT_HUE_BINS) -> np.ndarray:
    """Normalised hue histogram of a full-resolution RGB frame.

    Hue is taken from the HSV conversion, binned into equal slices of
    [0, 360); achromatic pixels count as hue 0.
    """
    pixels = frame.pixels if isinstance(frame, Frame) else np.asarray(frame)
    if pixels.ndim != 3 or pixels.shape[2] != 3 or pixels.dtype != np.uint8:
        raise InputError(f"expected (H, W, 3) uint8 pixels, got {pixels.shape} {pixels.dtype}")
    if bins < 1:
        raise InputError(f"bins must be >= 1, got {bins}")
    counts = kernels.hue_bin_counts(pixels, bins)
    return counts / pixels.shape[0] / pixels.shape[1]


def fused_distance(a: FrameSignature, b: FrameSignature, weights: FusionWeights,
                   hue_norm: str = "l2") -> float:
    """alpha * L2(texture) + beta * d(hue).

    ``hue_norm`` selects the colour term: "l2" during summarisation, "l1"
    during evaluation. With alpha == 1 the colour term is skipped entirely
    and the result is the plain texture L2 distance.
    """
    if hue_norm not in ("l2", "l1"):
        raise InputError(f"hue_norm must be 'l2' or 'l1', got {hue_norm!r}")
    if a.bot.shape != b.bot.shape:
        raise InputError(f"texture histograms differ in size: {a.bot.shape} vs {b.bot.shape}")
    dist = weights.alpha * float(np.linalg.norm(a.bot - b.bot))
    if weights.beta > 0.0:
        if a.hue is None or b.hue is None:
            raise InputError("colour weight is positive but a signature has no hue histogram")
        if a.hue.shape != b.hue.shape:
            raise InputError(f"hue histograms differ in size: {a.hue.shape} vs {b.hue.shape}")
        diff = a.hue - b.hue
        hue_d = float(np.linalg.norm(diff)) if hue_norm == "l2" else float(np.abs(diff).sum())
        dist += weights.beta * hue_d
    return dist


def write_signatures(sigs: Sequence[FrameSignature], path: str | Path) -> None:
    """Dump signatures as JSON lines for debugging and eval interchange."""
    lines = []
    for s in sigs:
        obj = {
            "frame_index": s.frame_index,
            "timestamp_s": s.timestamp_s,
            "bot": [float(v) for v in s.bot],
            "hue": None if s.hue is None else [float(v) for v in s.hue],
        }
        lines.append(json.dumps(obj, sort_keys=True))
    tmp = Path(path).with_name(Path(path).name + ".tmp")
    tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
    tmp.replace(path)


def read_signatures(path: str | Path) -> list[FrameSignature]:
    sigs = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read signatures {path}: {e}") from e
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            sigs.append(FrameSignature(
                frame_index=int(obj["frame_index"]),
                timestamp_s=float(obj["timestamp_s"]),
                bot=np.array(obj["bot"], dtype=np.float64),
                hue=None if obj.get("hue") is None else np.array(obj["hue"], dtype=np.float64),
            ))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise FormatError(f"{path}:{lineno}: malformed signature line: {e}") from e
    return sigs
