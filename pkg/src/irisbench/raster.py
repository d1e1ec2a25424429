"""Raster primitives: run-length encoding, run-length quantization and fast
k-means quantization of 8-bit images.

Gray images are 2-D ``uint8`` arrays (rows, cols); binary images are 2-D
``bool`` arrays. Both are plain numpy arrays so every stage composes with
the rest of the scientific stack.
"""

from dataclasses import dataclass, field
from itertools import groupby
from pathlib import Path
from typing import NamedTuple

import numpy as np
from PIL import Image

from .errors import (
    DegenerateInputError,
    EmptyInputError,
    InvalidRunError,
    ParameterError,
    ShapeError,
)

LEVELS = np.arange(256, dtype=np.float64)


def as_gray(img):
    """Validate and return ``img`` as a 2-D uint8 array."""
    arr = np.asarray(img)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"expected a non-empty 2-D image, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            raise ShapeError("gray image values must lie in 0..255")
        arr = arr.astype(np.uint8)
    return arr


def as_binary(img):
    arr = np.asarray(img)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"expected a non-empty 2-D mask, got shape {arr.shape}")
    return arr.astype(bool)


# -- run-length encoding ---------------------------------------------------


class RleRun(NamedTuple):
    value: object
    length: int


def rle_encode(v):
    """Encode a sequence as maximal runs of equal values.

    >>> rle_encode([1, 1, 1, 1, 0, 0, 1, 1, 1, 1, 1, 1])
    [RleRun(value=1, length=4), RleRun(value=0, length=2), RleRun(value=1, length=6)]
    """
    seq = v.tolist() if isinstance(v, np.ndarray) else list(v)
    if not seq:
        raise EmptyInputError("cannot run-length encode an empty sequence")
    return [RleRun(value, sum(1 for _ in group)) for value, group in groupby(seq)]


def rle_decode(runs):
    runs = list(runs)
    if not runs:
        raise EmptyInputError("no runs to decode")
    out = []
    for value, length in runs:
        if int(length) != length or length < 1:
            raise InvalidRunError(f"run length must be a positive integer, got {length!r}")
        out.extend([value] * int(length))
    return out


def rqf(v):
    """Re-quantize non-negative coefficients into 1..255 relative to their maximum.

    Rounds half away from zero, so ``rqf([3, 6])`` gives ``[128, 255]``.
    """
    arr = np.asarray(v, dtype=np.float64)
    if arr.size == 0:
        raise EmptyInputError("rqf of an empty sequence")
    if np.any(arr < 0):
        raise ParameterError("rqf expects non-negative coefficients")
    top = arr.max()
    if top <= 0:
        raise DegenerateInputError("rqf needs at least one positive coefficient")
    q = np.floor(255.0 * arr / top + 0.5)
    return np.clip(q, 1, 255).astype(np.uint8)


def run_lengths(bits, axis="horizontal"):
    """Length of the maximal 1-run through every pixel (0 off the support).

    Runs follow rows for ``horizontal`` and columns for ``vertical``.
    """
    b = as_binary(bits)
    if axis == "vertical":
        return run_lengths(b.T, "horizontal").T
    if axis != "horizontal":
        raise ParameterError(f"axis must be 'horizontal' or 'vertical', not {axis!r}")
    rows, cols = b.shape
    padded = np.zeros((rows, cols + 2), dtype=np.int8)
    padded[:, 1:-1] = b
    flat = padded.ravel()
    edges = np.diff(flat)
    starts = np.flatnonzero(edges == 1) + 1
    ends = np.flatnonzero(edges == -1) + 1
    acc = np.zeros(flat.size + 1, dtype=np.int64)
    np.add.at(acc, starts, ends - starts)
    np.add.at(acc, ends, starts - ends)
    lengths = np.cumsum(acc[:-1]).reshape(rows, cols + 2)
    return lengths[:, 1:-1]


def rlq_directional(img, axis="horizontal"):
    """Run-length quantization of a binary image along one axis.

    Every 1-pixel takes the value ``rqf`` assigns to the length of its run;
    normalization is by the longest run anywhere in the image.
    """
    lengths = run_lengths(img, axis)
    support = lengths > 0
    if not support.any():
        raise DegenerateInputError("binary image has no set pixels")
    out = np.zeros(lengths.shape, dtype=np.uint8)
    out[support] = rqf(lengths[support])
    return out


# -- fast k-means quantization ---------------------------------------------


@dataclass
class KmqResult:
    labels: np.ndarray
    centroids: np.ndarray
    iterations: int
    objective: list = field(default_factory=list)

    @property
    def k(self):
        return len(self.centroids)

    def quantized(self):
        """The equipotential map: every pixel replaced by its centroid."""
        return np.rint(self.centroids[self.labels]).astype(np.uint8)


def _assign(centroids):
    # argmin picks the first minimum, i.e. the lower centroid index on ties
    return np.argmin(np.abs(LEVELS[:, None] - centroids[None, :]), axis=1)


def _farthest(hist, lut, centroids, exclude):
    present = np.flatnonzero(hist)
    err = np.abs(present - centroids[lut[present]])
    for idx in np.argsort(-err, kind="stable"):
        level = present[idx]
        if level not in exclude:
            return float(level)
    return None


def _initial_centroids(hist, k):
    cdf = np.cumsum(hist) / hist.sum()
    qs = (np.arange(k) + 0.5) / k
    picks = sorted(set(np.searchsorted(cdf, qs).tolist()))
    centroids = np.array(picks, dtype=np.float64)
    present = np.flatnonzero(hist)
    while len(centroids) < k:
        lut = _assign(centroids)
        err = np.abs(present - centroids[lut[present]])
        centroids = np.sort(np.append(centroids, present[np.argmax(err)]))
    return centroids


def _objective(hist, lut, centroids):
    return float(np.sum(hist * (LEVELS - centroids[lut]) ** 2))


def kmeans_histogram(hist, k, max_iter=10, reset_first_to_min=False):
    """Lloyd iterations over a 256-bin histogram.

    Returns ``(centroids, lut, iterations, objective)`` where ``lut`` maps each
    intensity level to its cluster index. ``k`` is clamped to the number of
    occupied bins.
    """
    hist = np.asarray(hist, dtype=np.float64)
    if hist.shape != (256,):
        raise ShapeError("histogram must have 256 bins")
    if k < 2:
        raise ParameterError(f"k must be at least 2, got {k}")
    if max_iter < 1:
        raise ParameterError("max_iter must be positive")
    present = np.flatnonzero(hist)
    if present.size == 0:
        raise EmptyInputError("empty histogram")
    k = min(int(k), present.size)
    lowest = float(present[0])

    centroids = _initial_centroids(hist, k)
    if reset_first_to_min:
        centroids[0] = lowest
    lut = _assign(centroids)
    objective = [_objective(hist, lut, centroids)]
    iterations = 0
    for _ in range(max_iter):
        counts = np.bincount(lut, weights=hist, minlength=k)
        sums = np.bincount(lut, weights=hist * LEVELS, minlength=k)
        new = centroids.copy()
        filled = counts > 0
        new[filled] = sums[filled] / counts[filled]
        taken = set(new[filled].tolist())
        for j in np.flatnonzero(~filled):
            seed = _farthest(hist, lut, new, taken)
            new[j] = seed if seed is not None else new[j]
            taken.add(new[j])
        if reset_first_to_min:
            new[0] = lowest
        new = np.sort(new)
        new_lut = _assign(new)
        iterations += 1
        objective.append(_objective(hist, new_lut, new))
        centroids = new
        if np.array_equal(new_lut, lut):
            break
        lut = new_lut
    return centroids, lut, iterations, objective


def fkmq(img, k=16, max_iter=10, reset_first_to_min=False):
    """Fast k-means quantization of an 8-bit raster (any dimensionality)."""
    arr = np.asarray(img)
    if arr.size == 0:
        raise EmptyInputError("empty image")
    arr = arr.astype(np.uint8, copy=False)
    hist = np.bincount(arr.ravel(), minlength=256)
    centroids, lut, iterations, objective = kmeans_histogram(
        hist, k, max_iter=max_iter, reset_first_to_min=reset_first_to_min
    )
    return KmqResult(lut[arr], centroids, iterations, objective)


# -- file I/O ---------------------------------------------------------------


def load_image(path):
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.uint8).copy()


def save_image(path, img):
    """Write a gray image; the suffix picks the format (``.pgm`` is binary P5)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(as_gray(img), mode="L").save(path)


def save_mask(path, mask):
    save_image(path, as_binary(mask).astype(np.uint8) * 255)
