"""Circular fuzzy iris segmentation.

The eye is unwrapped around the fitted pupil, every unwrapped line is
reduced to its mean, and three 3-means quantizations of those line means
vote on which lines belong to the iris. The outermost voted line gives the
limbic radius of a ring concentric with the pupil.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import IrisError, ParameterError, SegmentationError, annotate
from .pupil import PupilFit, find_pupil
from .raster import as_gray, kmeans_histogram


@dataclass
class UnwrappedIris:
    """Polar samples of an eye image.

    ``ui[r]`` holds the nearest-neighbour samples on the circle of radius
    ``radii[r]`` (about 2*pi*radius of them); ``rui`` resamples every line to a
    common width. Angle 0 is the +x axis, increasing counterclockwise.
    """

    ui: list
    rui: np.ndarray
    radii: np.ndarray
    radial_step: float = 1.0
    angular_origin: float = 0.0

    def __len__(self):
        return len(self.ui)

    @property
    def width(self):
        return self.rui.shape[1]

    def rows(self, start, stop):
        return UnwrappedIris(
            self.ui[start:stop],
            self.rui[start:stop],
            self.radii[start:stop],
            self.radial_step,
            self.angular_origin,
        )


class CombinedCrispIndicator:
    """Labels in 1..n describing a disjoint cover of a discrete signal's domain.

    Two indicators are equal when they describe the same partition, whatever
    symbols they use.
    """

    def __init__(self, labels, degenerate=False):
        self.labels = np.asarray(labels, dtype=np.int64)
        self.degenerate = degenerate

    def __len__(self):
        return len(self.labels)

    def __repr__(self):
        return f"CombinedCrispIndicator({self.labels.tolist()}, degenerate={self.degenerate})"

    @property
    def n_symbols(self):
        return len(np.unique(self.labels))

    def canonical(self):
        """Relabel symbols 1, 2, ... in order of first appearance."""
        _, first, inverse = np.unique(self.labels, return_index=True, return_inverse=True)
        rank = np.empty(len(first), dtype=np.int64)
        rank[np.argsort(first)] = np.arange(1, len(first) + 1)
        return rank[inverse]

    def __eq__(self, other):
        if not isinstance(other, CombinedCrispIndicator):
            return NotImplemented
        return len(self) == len(other) and np.array_equal(self.canonical(), other.canonical())

    __hash__ = None


@dataclass
class IrisRing:
    pupil: PupilFit
    limbic_radius: float
    unwrapped: UnwrappedIris
    vote_trace: np.ndarray
    diagnostics: dict = field(default_factory=dict, repr=False)

    @property
    def center(self):
        return self.pupil.center


def unwrap(img, fit, max_radius=None, width=512, inner_radius=None, radial_step=1.0):
    """Polar transcoding of ``img`` around the pupil center."""
    img = as_gray(img)
    if width < 2:
        raise ParameterError("unwrapped width must be at least 2")
    h, w = img.shape
    cx, cy = fit.center_x, fit.center_y
    inner = fit.radius if inner_radius is None else float(inner_radius)
    reach = min(cx, cy, w - 1 - cx, h - 1 - cy)
    outer = 3.0 * fit.radius if max_radius is None else float(max_radius)
    outer = min(outer, reach)
    if outer <= max(inner, fit.radius):
        raise SegmentationError("no room for an iris annulus around the pupil")
    n_rows = int(np.floor((outer - inner) / radial_step)) + 1
    radii = inner + radial_step * np.arange(n_rows)
    radii = radii[radii > 0]

    img_f = img.astype(np.float64)
    ui, rui = [], np.empty((len(radii), width))
    targets = np.arange(width)
    for r, rho in enumerate(radii):
        n = max(int(np.rint(2 * np.pi * rho)), 1)
        ang = 2 * np.pi * np.arange(n) / n
        xs = np.clip(np.rint(cx + rho * np.cos(ang)), 0, w - 1).astype(np.intp)
        ys = np.clip(np.rint(cy - rho * np.sin(ang)), 0, h - 1).astype(np.intp)
        line = img_f[ys, xs]
        ui.append(line)
        rui[r] = np.interp(targets * n / width, np.arange(n), line, period=n)
    return UnwrappedIris(ui, rui, radii, radial_step)


def line_mean_vectors(u):
    a = np.array([line.mean() for line in u.ui])
    b = u.rui.mean(axis=1)
    return a, b, (a + b) / 2


def three_means_indicator(v, k=3, max_iter=10):
    """k-means quantization of a real vector, symbol 1 for the lowest centroid.

    Values are min-max normalized onto 256 levels so the histogram engine of
    :func:`irisbench.raster.fkmq` can be reused.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or len(v) < 3:
        raise ParameterError("need a 1-D vector of at least 3 values")
    lo, hi = v.min(), v.max()
    if hi == lo:
        return CombinedCrispIndicator(np.ones(len(v), dtype=np.int64), degenerate=True)
    bins = np.rint((v - lo) / (hi - lo) * 255).astype(np.intp)
    hist = np.bincount(bins, minlength=256)
    centroids, lut, _, _ = kmeans_histogram(hist, k, max_iter=max_iter)
    return CombinedCrispIndicator(lut[bins] + 1, degenerate=len(centroids) < k)


def vote_iris_band(p, q, r, iris_line=0, first_line=0):
    """Count how many indicators put each line in their iris cluster.

    The iris cluster of an indicator is the one holding ``iris_line``. The
    band is the contiguous run of lines with at least two votes around
    ``iris_line``, not extending below ``first_line``. Returns
    ``(votes, (start, end))`` with ``end`` inclusive.
    """
    inds = (p, q, r)
    n = len(p)
    if any(len(ind) != n for ind in inds):
        raise ParameterError("indicators must cover the same lines")
    if not 0 <= iris_line < n:
        raise ParameterError("iris_line outside the indicator domain")
    votes = sum((ind.labels == ind.labels[iris_line]).astype(np.int64) for ind in inds)
    ok = votes >= 2
    start = iris_line
    while start - 1 >= first_line and ok[start - 1]:
        start -= 1
    end = iris_line
    while end + 1 < n and ok[end + 1]:
        end += 1
    return votes, (start, end)


def segment(
    img,
    width=512,
    pupil_margin=2,
    inner_fraction=0.5,
    max_radius_factor=3.0,
    pupil_k=16,
    keep_stages=False,
):
    """Pupil finding followed by limbic-boundary voting.

    Unwrapping starts at ``inner_fraction`` of the pupil radius so the line
    means carry a pupil level as well as iris and outer levels; the iris
    cluster is the one holding the line ``pupil_margin`` steps outside the
    pupil boundary.
    """
    img = as_gray(img)
    fit = find_pupil(img, k=pupil_k, keep_stages=keep_stages)
    stage = "unwrap"
    try:
        u = unwrap(
            img,
            fit,
            max_radius=max_radius_factor * fit.radius,
            width=width,
            inner_radius=inner_fraction * fit.radius,
        )
        stage = "line_means"
        a, b, c = line_mean_vectors(u)
        stage = "three_means"
        inds = [three_means_indicator(x) for x in (a, b, c)]
        if all(ind.degenerate for ind in inds):
            raise SegmentationError("line means carry no structure")
        stage = "vote"
        pupil_row = int(np.searchsorted(u.radii, fit.radius))
        iris_line = pupil_row + pupil_margin
        if iris_line >= len(u):
            raise SegmentationError("unwrapped image too short for the pupil margin")
        votes, (start, end) = vote_iris_band(*inds, iris_line=iris_line, first_line=pupil_row)
        if end - start + 1 < 2:
            raise SegmentationError("iris band thinner than two lines")
    except IrisError as exc:
        raise annotate(exc, stage)

    limbic = float(u.radii[end] + u.radial_step / 2)
    ring = IrisRing(fit, limbic, u.rows(start, end + 1), votes)
    ring.diagnostics.update(
        pupil_row=pupil_row, iris_line=iris_line, start_line=start, end_line=end
    )
    if keep_stages:
        ring.diagnostics.update(unwrapped=u, a=a, b=b, c=c, indicators=inds)
    return ring
