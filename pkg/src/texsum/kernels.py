"""Hot numeric kernels: block DCT descriptors, nearest-centroid assignment,
and hue binning.

Each kernel has two interchangeable implementations:

* a numba ``@njit`` version, used by default when numba imports cleanly;
* a pure-numpy version, selected by setting ``TEXSUM_DISABLE_NUMBA=1``
  (any value other than empty/``0``) or automatically when numba is absent.

The public names (``block_dct_features``, ``assign_nearest``,
``hue_bin_counts``) are bound to one implementation at import time; the
``_*_numpy`` / ``_*_numba`` variants stay importable so the benchmark and
the equivalence tests can compare both paths in one process. Both paths
compute the same quantities with IEEE float64 arithmetic; they may differ
by accumulation order only (bounded by ~1e-12 relative).
"""

import os

import numpy as np

_ENV_FLAG = "TEXSUM_DISABLE_NUMBA"
_disabled = os.environ.get(_ENV_FLAG, "").strip() not in ("", "0")

try:
    if _disabled:
        raise ImportError(f"numba disabled via {_ENV_FLAG}")
    from numba import njit, prange

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

BACKEND = "numba" if HAS_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# Block DCT descriptors
#
# gray: float64 (H, W), already centred by the caller.
# basis: float64 (B, B) orthonormal DCT-II basis (rows = frequencies).
# zz_r, zz_c: int64 (D,) coefficient coordinates to keep, in output order.
# Output row order is row-major over block origins (r*step, c*step).
# ---------------------------------------------------------------------------

def _block_dct_features_numpy(gray, basis, zz_r, zz_c, step):
    B = basis.shape[0]
    win = np.lib.stride_tricks.sliding_window_view(gray, (B, B))[::step, ::step]
    blocks = win.reshape(-1, B, B)
    coef = basis @ blocks @ basis.T
    return np.ascontiguousarray(coef[:, zz_r, zz_c])


if HAS_NUMBA:

    @njit(cache=True, parallel=True)
    def _block_dct_features_jit(gray, basis, zz_r, zz_c, step, out):
        B = basis.shape[0]
        nr = (gray.shape[0] - B) // step + 1
        nc = (gray.shape[1] - B) // step + 1
        D = zz_r.shape[0]
        for ri in prange(nr):
            tmp = np.empty((B, B))
            r0 = ri * step
            for ci in range(nc):
                c0 = ci * step
                for u in range(B):
                    for k in range(B):
                        acc = 0.0
                        for j in range(B):
                            acc += basis[u, j] * gray[r0 + j, c0 + k]
                        tmp[u, k] = acc
                row = ri * nc + ci
                for d in range(D):
                    u = zz_r[d]
                    v = zz_c[d]
                    acc = 0.0
                    for k in range(B):
                        acc += tmp[u, k] * basis[v, k]
                    out[row, d] = acc

    def _block_dct_features_numba(gray, basis, zz_r, zz_c, step):
        B = basis.shape[0]
        nr = (gray.shape[0] - B) // step + 1
        nc = (gray.shape[1] - B) // step + 1
        out = np.empty((nr * nc, zz_r.shape[0]))
        _block_dct_features_jit(gray, basis, zz_r, zz_c, step, out)
        return out


# ---------------------------------------------------------------------------
# Nearest-centroid assignment (squared L2, ties -> lowest index)
# ---------------------------------------------------------------------------

def _assign_nearest_numpy(X, C):
    d2 = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    return labels, d2[np.arange(X.shape[0]), labels]


if HAS_NUMBA:

    @njit(cache=True)
    def _assign_nearest_jit(X, C, labels, best):
        n, dim = X.shape
        k = C.shape[0]
        for i in range(n):
            bj = 0
            bd = np.inf
            for j in range(k):
                d = 0.0
                for m in range(dim):
                    diff = X[i, m] - C[j, m]
                    d += diff * diff
                if d < bd:
                    bd = d
                    bj = j
            labels[i] = bj
            best[i] = bd

    def _assign_nearest_numba(X, C):
        labels = np.empty(X.shape[0], dtype=np.int64)
        best = np.empty(X.shape[0])
        _assign_nearest_jit(X, C, labels, best)
        return labels, best


# ---------------------------------------------------------------------------
# Hue binning
#
# rgb: uint8 (H, W, 3). Returns int64 counts per bin. Hue in [0, 360) from
# the HSV conversion; achromatic pixels (max == min) count as hue 0. Branch
# precedence on channel-max ties is r, then g, then b in both paths.
# ---------------------------------------------------------------------------

def _hue_bin_counts_numpy(rgb, bins):
    r = rgb[..., 0].astype(np.float64)
    g = rgb[..., 1].astype(np.float64)
    b = rgb[..., 2].astype(np.float64)
    mx = np.maximum(np.maximum(r, g), b)
    d = mx - np.minimum(np.minimum(r, g), b)
    h = np.zeros_like(mx)
    chrom = d > 0
    rmax = chrom & (mx == r)
    gmax = chrom & ~rmax & (mx == g)
    bmax = chrom & ~rmax & ~gmax
    h[rmax] = 60.0 * (((g[rmax] - b[rmax]) / d[rmax]) % 6.0)
    h[gmax] = 60.0 * ((b[gmax] - r[gmax]) / d[gmax] + 2.0)
    h[bmax] = 60.0 * ((r[bmax] - g[bmax]) / d[bmax] + 4.0)
    width = 360.0 / bins
    idx = np.minimum((h / width).astype(np.int64), bins - 1)
    return np.bincount(idx.ravel(), minlength=bins)


if HAS_NUMBA:

    @njit(cache=True)
    def _hue_bin_counts_jit(rgb, bins, counts):
        width = 360.0 / bins
        for i in range(rgb.shape[0]):
            for j in range(rgb.shape[1]):
                r = float(rgb[i, j, 0])
                g = float(rgb[i, j, 1])
                b = float(rgb[i, j, 2])
                mx = max(r, g, b)
                d = mx - min(r, g, b)
                if d <= 0.0:
                    h = 0.0
                elif mx == r:
                    h = 60.0 * (((g - b) / d) % 6.0)
                elif mx == g:
                    h = 60.0 * ((b - r) / d + 2.0)
                else:
                    h = 60.0 * ((r - g) / d + 4.0)
                idx = int(h / width)
                if idx >= bins:
                    idx = bins - 1
                counts[idx] += 1

    def _hue_bin_counts_numba(rgb, bins):
        counts = np.zeros(bins, dtype=np.int64)
        _hue_bin_counts_jit(rgb, bins, counts)
        return counts


if HAS_NUMBA:
    block_dct_features = _block_dct_features_numba
    assign_nearest = _assign_nearest_numba
    hue_bin_counts = _hue_bin_counts_numba
else:
    block_dct_features = _block_dct_features_numpy
    assign_nearest = _assign_nearest_numpy
    hue_bin_counts = _hue_bin_counts_numpy
