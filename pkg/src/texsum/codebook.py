"""Texture dictionary: seeded k-means training and nearest-codeword lookup.

The same k-means routine also drives frame clustering during keyframe
selection, so its determinism rules live here: k-means++ seeding from a
caller-supplied seed, Lloyd iterations until the largest centroid shift
drops below ``tol``, and empty clusters re-seeded with the point farthest
from its assigned centroid. Identical inputs and seed give bit-identical
centroids.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import FormatError, InputError, TrainingError

CODEBOOK_FILE_VERSION = "1"
DEFAULT_CODEWORDS = 8


@dataclass(frozen=True)
class Codebook:
    centroids: np.ndarray          # (size, dim) float64
    seed: int = 0
    n_iter: int | None = None      # training metadata, not persisted
    inertia: float | None = None

    @property
    def size(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]


@dataclass(frozen=True)
class KMeansResult:
    centroids: np.ndarray
    labels: np.ndarray
    inertia: float
    n_iter: int
    inertia_history: tuple[float, ...]


def _plus_plus_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers[j] = X[idx]
        d2 = np.minimum(d2, ((X - centers[j]) ** 2).sum(axis=1))
    return centers


def kmeans(X: np.ndarray, k: int, seed: int, max_iter: int = 100,
           tol: float = 1e-6) -> KMeansResult:
    """Seeded Lloyd's k-means with k-means++ initialisation."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise InputError(f"expected a non-empty (n, dim) matrix, got shape {X.shape}")
    if not 1 <= k <= X.shape[0]:
        raise InputError(f"k must be in [1, {X.shape[0]}], got {k}")
    if max_iter < 1:
        raise InputError(f"max_iter must be >= 1, got {max_iter}")
    if tol < 0:
        raise InputError(f"tol must be >= 0, got {tol}")

    rng = np.random.default_rng(seed)
    centroids = _plus_plus_init(X, k, rng)
    history = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        labels, d2 = kernels.assign_nearest(X, centroids)
        history.append(float(d2.sum()))
        updated = centroids.copy()
        counts = np.bincount(labels, minlength=k)
        for g in range(k):
            if counts[g] > 0:
                updated[g] = X[labels == g].mean(axis=0)
        if (counts == 0).any():
            claimable = d2.copy()
            for g in np.flatnonzero(counts == 0):
                far = int(np.argmax(claimable))
                updated[g] = X[far]
                claimable[far] = -1.0
        shift = np.sqrt(((updated - centroids) ** 2).sum(axis=1)).max()
        centroids = updated
        if shift < tol:
            break
    labels, d2 = kernels.assign_nearest(X, centroids)
    inertia = float(d2.sum())
    history.append(inertia)
    return KMeansResult(centroids=centroids, labels=labels, inertia=inertia,
                        n_iter=n_iter, inertia_history=tuple(history))


def train_codebook(features: np.ndarray, size: int = DEFAULT_CODEWORDS,
                   seed: int = 0, max_iter: int = 100, tol: float = 1e-6) -> Codebook:
    """Cluster pooled block descriptors into ``size`` codewords."""
    X = np.ascontiguousarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise InputError(f"expected a non-empty (n, dim) feature matrix, got shape {X.shape}")
    if size < 1:
        raise InputError(f"codebook size must be >= 1, got {size}")
    n_distinct = np.unique(X, axis=0).shape[0]
    if n_distinct < size:
        raise TrainingError(
            f"need at least {size} distinct feature vectors, "
            f"got {n_distinct} distinct of {X.shape[0]} total"
        )
    result = kmeans(X, size, seed=seed, max_iter=max_iter, tol=tol)
    return Codebook(centroids=result.centroids, seed=seed,
                    n_iter=result.n_iter, inertia=result.inertia)


def quantize(x: np.ndarray, cb: Codebook) -> int:
    """Index of the nearest codeword (L2); ties go to the lowest index."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (cb.dim,):
        raise InputError(f"feature has shape {x.shape}, codebook expects ({cb.dim},)")
    labels, _ = kernels.assign_nearest(np.ascontiguousarray(x[None, :]), cb.centroids)
    return int(labels[0])


def assign(features: np.ndarray, cb: Codebook) -> np.ndarray:
    """Vectorised quantize over the rows of a feature matrix."""
    X = np.ascontiguousarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != cb.dim:
        raise InputError(f"features have shape {X.shape}, codebook expects (n, {cb.dim})")
    labels, _ = kernels.assign_nearest(X, cb.centroids)
    return labels


def save_codebook(cb: Codebook, path: str | Path) -> None:
    """Write the dictionary file; centroid values carry 17 significant
    digits so the round trip is bit-exact for 64-bit floats."""
    rows = [", ".join(f"{v:.17g}" for v in row) for row in cb.centroids]
    body = ",\n".join(f"    [{row}]" for row in rows)
    text = (
        "{\n"
        f'  "version": "{CODEBOOK_FILE_VERSION}",\n'
        f'  "G": {cb.size},\n'
        f'  "D": {cb.dim},\n'
        f'  "seed": {cb.seed},\n'
        f'  "centroids": [\n{body}\n  ]\n'
        "}\n"
    )
    tmp = Path(path).with_name(Path(path).name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def load_codebook(path: str | Path) -> Codebook:
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read codebook {path}: {e}") from e
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: expected a JSON object")
    version = doc.get("version")
    if version != CODEBOOK_FILE_VERSION:
        raise FormatError(f"{path}: unknown codebook version tag {version!r}")
    try:
        declared_size = int(doc["G"])
        declared_dim = int(doc["D"])
        seed = int(doc["seed"])
        rows = doc["centroids"]
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"{path}: missing or malformed field: {e}") from e
    if not isinstance(rows, list) or len(rows) != declared_size:
        raise FormatError(
            f"{path}: declared G={declared_size} but file has "
            f"{len(rows) if isinstance(rows, list) else 'no'} centroid rows"
        )
    try:
        centroids = np.array(rows, dtype=np.float64)
    except ValueError as e:
        raise FormatError(f"{path}: centroid rows are ragged or non-numeric: {e}") from e
    if centroids.ndim != 2 or centroids.shape[1] != declared_dim:
        raise FormatError(
            f"{path}: declared D={declared_dim} but centroid rows have "
            f"length {centroids.shape[1] if centroids.ndim == 2 else 'mixed'}"
        )
    if not np.isfinite(centroids).all():
        raise FormatError(f"{path}: centroids contain non-finite values")
    return Codebook(centroids=centroids, seed=seed)
