"""Frame ingestion: decode sources, sub-sample in time, grayscale/rescale,
and drop uninformative (near-uniform) frames.

Two source kinds are supported:

* a directory of lexicographically ordered PNG or binary-PPM images, with
  the source frame rate declared by the caller;
* a headerless raw stream of packed 8-bit RGB frames, with width, height
  and frame rate declared by the caller.

Frames that temporal sub-sampling drops are never decoded: directory
sources skip files, raw sources seek.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import FormatError, InputError, NoInformativeFramesError

IMAGE_SUFFIXES = (".png", ".ppm")


@dataclass(frozen=True)
class Frame:
    """One decoded RGB frame of the sampled sequence."""

    index: int                 # position in the sampled sequence, from 0
    timestamp_s: float         # source time of this frame
    pixels: np.ndarray         # (H, W, 3) uint8
    source_ref: str = ""       # file name or raw-stream frame number

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class GrayFrame:
    """Half-resolution luma version of a Frame."""

    index: int
    timestamp_s: float
    pixels: np.ndarray         # (ceil(H/2), ceil(W/2)) uint8

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class IngestConfig:
    target_fps: float = 1.0
    sigma_min: float = 5.0

    def __post_init__(self):
        if self.target_fps <= 0:
            raise InputError(f"target_fps must be > 0, got {self.target_fps}")
        if self.sigma_min < 0:
            raise InputError(f"sigma_min must be >= 0, got {self.sigma_min}")


@dataclass(frozen=True)
class FrameSource:
    """Descriptor of where frames come from.

    ``path`` pointing at a directory selects image-sequence mode; a regular
    file selects raw-stream mode and requires ``width`` and ``height``.
    """

    path: str
    fps: float = 1.0
    width: int | None = None
    height: int | None = None
    video_id: str = ""

    def __post_init__(self):
        if self.fps <= 0:
            raise InputError(f"source fps must be > 0, got {self.fps}")
        if not self.video_id:
            object.__setattr__(self, "video_id", Path(self.path).stem or "video")


@dataclass
class FrameSequence:
    frames: list[Frame] = field(default_factory=list)
    source_fps: float = 1.0
    source_frame_count: int = 0    # frames in the source before sampling

    @property
    def duration_s(self) -> float:
        return self.source_frame_count / self.source_fps

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self) -> Iterator[Frame]:
        return iter(self.frames)


def sample_stride(source_fps: float, target_fps: float) -> int:
    """Every stride-th source frame is kept, starting at frame 0."""
    return max(1, round(source_fps / target_fps))


def _list_image_files(directory: Path) -> list[Path]:
    try:
        names = sorted(
            p for p in directory.iterdir()
            if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
        )
    except OSError as e:
        raise InputError(f"cannot read frame directory {directory}: {e}") from e
    if not names:
        raise InputError(f"no .png/.ppm frames in {directory}")
    return names


def _decode_image(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"))
    except (UnidentifiedImageError, OSError) as e:
        raise InputError(f"cannot decode image {path}: {e}") from e


def _iter_dir_frames(source: FrameSource, stride: int) -> Iterator[Frame]:
    files = _list_image_files(Path(source.path))
    shape = None
    for out_idx, src_idx in enumerate(range(0, len(files), stride)):
        pixels = _decode_image(files[src_idx])
        if shape is None:
            shape = pixels.shape
        elif pixels.shape != shape:
            raise FormatError(
                f"{files[src_idx].name}: frame size {pixels.shape[:2]} differs "
                f"from first frame {shape[:2]}"
            )
        yield Frame(
            index=out_idx,
            timestamp_s=src_idx / source.fps,
            pixels=pixels,
            source_ref=files[src_idx].name,
        )


def _iter_raw_frames(source: FrameSource, stride: int) -> Iterator[Frame]:
    if source.width is None or source.height is None:
        raise InputError("raw stream sources need declared width and height")
    if source.width < 1 or source.height < 1:
        raise InputError("raw stream width/height must be >= 1")
    frame_bytes = source.width * source.height * 3
    try:
        size = os.path.getsize(source.path)
    except OSError as e:
        raise InputError(f"cannot read raw stream {source.path}: {e}") from e
    if size % frame_bytes != 0:
        raise FormatError(
            f"{source.path}: size {size} is not a multiple of "
            f"{source.width}x{source.height}x3 = {frame_bytes} bytes"
        )
    n_frames = size // frame_bytes
    with open(source.path, "rb") as fh:
        for out_idx, src_idx in enumerate(range(0, n_frames, stride)):
            fh.seek(src_idx * frame_bytes)
            buf = fh.read(frame_bytes)
            if len(buf) != frame_bytes:
                raise FormatError(f"{source.path}: truncated frame {src_idx}")
            pixels = np.frombuffer(buf, dtype=np.uint8).reshape(
                source.height, source.width, 3
            )
            yield Frame(
                index=out_idx,
                timestamp_s=src_idx / source.fps,
                pixels=pixels,
                source_ref=str(src_idx),
            )


def source_frame_count(source: FrameSource) -> int:
    """Number of frames in the source before temporal sampling."""
    p = Path(source.path)
    if p.is_dir():
        return len(_list_image_files(p))
    if p.is_file():
        if source.width is None or source.height is None:
            raise InputError("raw stream sources need declared width and height")
        frame_bytes = source.width * source.height * 3
        size = os.path.getsize(p)
        if size % frame_bytes != 0:
            raise FormatError(
                f"{source.path}: size {size} is not a multiple of "
                f"{source.width}x{source.height}x3 = {frame_bytes} bytes"
            )
        return size // frame_bytes
    raise InputError(f"frame source not found: {source.path}")


def iter_frames(source: FrameSource, cfg: IngestConfig) -> Iterator[Frame]:
    """Lazily decode the temporally sub-sampled frame stream."""
    p = Path(source.path)
    stride = sample_stride(source.fps, cfg.target_fps)
    if p.is_dir():
        yield from _iter_dir_frames(source, stride)
    elif p.is_file():
        yield from _iter_raw_frames(source, stride)
    else:
        raise InputError(f"frame source not found: {source.path}")


def decode_frames(source: FrameSource, cfg: IngestConfig) -> FrameSequence:
    """Eager form of iter_frames, with source metadata attached."""
    frames = list(iter_frames(source, cfg))
    return FrameSequence(
        frames=frames,
        source_fps=source.fps,
        source_frame_count=source_frame_count(source),
    )


def rgb_to_luma(pixels: np.ndarray) -> np.ndarray:
    """BT.601 luma, rounded half-up to the nearest 8-bit integer."""
    lum = (
        0.299 * pixels[..., 0].astype(np.float64)
        + 0.587 * pixels[..., 1]
        + 0.114 * pixels[..., 2]
    )
    return np.floor(lum + 0.5).astype(np.uint8)


def downscale_half(gray: np.ndarray) -> np.ndarray:
    """2x2 box average; odd dimensions replicate the last row/column."""
    h, w = gray.shape
    if h % 2:
        gray = np.vstack([gray, gray[-1:, :]])
    if w % 2:
        gray = np.hstack([gray, gray[:, -1:]])
    g = gray.astype(np.float64)
    avg = (g[0::2, 0::2] + g[0::2, 1::2] + g[1::2, 0::2] + g[1::2, 1::2]) / 4.0
    return np.floor(avg + 0.5).astype(np.uint8)


def preprocess_frame(frame: Frame) -> GrayFrame:
    """Grayscale and halve each dimension (quarter of the original area)."""
    if frame.pixels.ndim != 3 or frame.pixels.shape[2] != 3:
        raise InputError(f"frame {frame.index}: expected (H, W, 3) RGB pixels")
    return GrayFrame(
        index=frame.index,
        timestamp_s=frame.timestamp_s,
        pixels=downscale_half(rgb_to_luma(frame.pixels)),
    )


def frame_std(gray: GrayFrame | np.ndarray) -> float:
    pixels = gray.pixels if isinstance(gray, GrayFrame) else gray
    return float(np.std(pixels.astype(np.float64)))


def is_informative(gray: GrayFrame | np.ndarray, sigma_min: float) -> bool:
    return frame_std(gray) >= sigma_min


def filter_noise(frames: Sequence[GrayFrame], sigma_min: float) -> list[GrayFrame]:
    """Drop frames whose pixel standard deviation falls below sigma_min.

    Order is preserved; each surviving GrayFrame keeps its original index.
    """
    if sigma_min < 0:
        raise InputError(f"sigma_min must be >= 0, got {sigma_min}")
    kept = [f for f in frames if is_informative(f, sigma_min)]
    if not kept:
        raise NoInformativeFramesError(
            f"all {len(frames)} frames have pixel std below {sigma_min}"
        )
    return kept
