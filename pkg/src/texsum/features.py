"""Local texture descriptors: overlapping blocks, orthonormal 2D DCT,
zig-zag truncation with the DC term dropped.

The per-block descriptor keeps the lowest-frequency coefficients in JPEG
zig-zag order. The leading (DC) coefficient is omitted because it only
tracks mean brightness, so descriptors are invariant to constant offsets.
The transform is orthonormal, so the full coefficient grid preserves
energy (Parseval), which the tests rely on.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import InputError
from .ingest import GrayFrame

DEFAULT_BLOCK_SIZE = 8
DEFAULT_OVERLAP = 6
DEFAULT_N_COEFFS = 15


@dataclass(frozen=True)
class BlockGrid:
    """Row-major origins of all fully contained block positions."""

    block_size: int
    step: int
    origins: np.ndarray    # (N, 2) int rows of (row, col)

    @property
    def n_blocks(self) -> int:
        return self.origins.shape[0]


def _pixels_of(frame) -> np.ndarray:
    return frame.pixels if isinstance(frame, GrayFrame) else np.asarray(frame)


def grid_shape(height: int, width: int, block_size: int, step: int) -> tuple[int, int]:
    if not 1 <= step <= block_size:
        raise InputError(f"need 1 <= step <= block_size, got step={step}, block_size={block_size}")
    if height < block_size or width < block_size:
        raise InputError(
            f"frame {height}x{width} is smaller than block size {block_size}"
        )
    return (height - block_size) // step + 1, (width - block_size) // step + 1


def extract_blocks(frame, block_size: int = DEFAULT_BLOCK_SIZE,
                   step: int = DEFAULT_BLOCK_SIZE - DEFAULT_OVERLAP) -> BlockGrid:
    """Enumerate origins (r*step, c*step) of every fully contained block."""
    pixels = _pixels_of(frame)
    nr, nc = grid_shape(pixels.shape[0], pixels.shape[1], block_size, step)
    rows = np.repeat(np.arange(nr) * step, nc)
    cols = np.tile(np.arange(nc) * step, nr)
    return BlockGrid(block_size=block_size, step=step,
                     origins=np.stack([rows, cols], axis=1))


@lru_cache(maxsize=None)
def dct_basis(block_size: int) -> np.ndarray:
    """Orthonormal DCT-II basis matrix; row k is the k-th frequency."""
    n = np.arange(block_size)
    k = n[:, None]
    basis = np.cos(np.pi * (2 * n + 1) * k / (2 * block_size))
    basis[0, :] *= np.sqrt(1.0 / block_size)
    basis[1:, :] *= np.sqrt(2.0 / block_size)
    basis.setflags(write=False)
    return basis


@lru_cache(maxsize=None)
def zigzag_order(block_size: int) -> tuple[np.ndarray, np.ndarray]:
    """(rows, cols) of all block coefficients in JPEG zig-zag scan order.

    Anti-diagonals are visited in order of r+c; even diagonals run
    bottom-left to top-right, odd ones the reverse.
    """
    coords = []
    for s in range(2 * block_size - 1):
        diag = [(r, s - r) for r in range(block_size) if 0 <= s - r < block_size]
        if s % 2 == 0:
            diag.reverse()
        coords.extend(diag)
    rows = np.array([r for r, _ in coords], dtype=np.int64)
    cols = np.array([c for _, c in coords], dtype=np.int64)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


def dct2(block: np.ndarray) -> np.ndarray:
    """Full orthonormal 2D DCT-II of one block (no centring, no truncation)."""
    block = np.asarray(block, dtype=np.float64)
    if block.ndim != 2 or block.shape[0] != block.shape[1]:
        raise InputError(f"expected a square block, got shape {block.shape}")
    basis = dct_basis(block.shape[0])
    return basis @ block @ basis.T


def _kept_coords(block_size: int, n_coeffs: int) -> tuple[np.ndarray, np.ndarray]:
    if n_coeffs < 1 or n_coeffs + 1 > block_size * block_size:
        raise InputError(
            f"n_coeffs must be in [1, {block_size * block_size - 1}], got {n_coeffs}"
        )
    zz_r, zz_c = zigzag_order(block_size)
    # first n_coeffs+1 coefficients minus the leading DC term
    return zz_r[1:n_coeffs + 1], zz_c[1:n_coeffs + 1]


def dct_features(block: np.ndarray, n_coeffs: int = DEFAULT_N_COEFFS) -> np.ndarray:
    """Descriptor of one block: low-frequency zig-zag coefficients, DC dropped."""
    block = np.asarray(block, dtype=np.float64)
    if block.ndim != 2 or block.shape[0] != block.shape[1]:
        raise InputError(f"expected a square block, got shape {block.shape}")
    coef = dct2(block - 128.0)
    zz_r, zz_c = _kept_coords(block.shape[0], n_coeffs)
    return coef[zz_r, zz_c]


def frame_features(frame, block_size: int = DEFAULT_BLOCK_SIZE,
                   step: int = DEFAULT_BLOCK_SIZE - DEFAULT_OVERLAP,
                   n_coeffs: int = DEFAULT_N_COEFFS) -> np.ndarray:
    """Descriptors of every block of a frame, rows in block-grid order.

    This is the hot path; it runs on the numba or numpy kernel selected in
    :mod:`texsum.kernels`.
    """
    pixels = _pixels_of(frame)
    grid_shape(pixels.shape[0], pixels.shape[1], block_size, step)  # validates
    gray = pixels.astype(np.float64) - 128.0
    zz_r, zz_c = _kept_coords(block_size, n_coeffs)
    return kernels.block_dct_features(gray, dct_basis(block_size), zz_r, zz_c, step)
