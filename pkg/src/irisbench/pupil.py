"""Pupil localization by run-length quantization and fast k-means."""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import (
    DegenerateInputError,
    EmptyInputError,
    IrisError,
    InvalidSeedError,
    NoPupilIndicatorError,
    annotate,
)
from .raster import as_binary, as_gray, fkmq, kmeans_histogram, rlq_directional, run_lengths

FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


@dataclass
class PupilFit:
    center_x: float
    center_y: float
    semi_axis_h: float
    semi_axis_v: float
    pupil_mask: np.ndarray = field(repr=False)
    stages: dict = field(default_factory=dict, repr=False)

    @property
    def radius(self):
        return (self.semi_axis_h + self.semi_axis_v) / 2.0

    @property
    def center(self):
        return (self.center_x, self.center_y)


def extract_pupil_cluster(img, k=16, max_iter=10, reset_first_to_min=False):
    """Indicator of the darkest fkmq cluster."""
    img = as_gray(img)
    q = fkmq(img, k, max_iter=max_iter, reset_first_to_min=reset_first_to_min)
    if q.k < 2:
        raise DegenerateInputError("image has a single intensity level")
    return q.labels == 0


def _top_cluster(rlq, k):
    """Pixels of ``rlq`` in the highest-centroid cluster, plus the cut level."""
    support = rlq > 0
    hist = np.bincount(rlq[support], minlength=256)
    if np.count_nonzero(hist) < 2:
        return support, int(rlq[support].min())
    centroids, lut, _, _ = kmeans_histogram(hist, k)
    top = len(centroids) - 1
    keep = support & (lut[rlq] == top)
    return keep, int(rlq[keep].min())


def pupil_indicator(pc, k=2, diagnostics=None):
    """Erosion-resilient core of the pupil cluster.

    Long horizontal and vertical runs mark pixels deep inside a solid blob;
    isolated eyelash or noise pixels only ever sit on short runs. The k-means
    is run over the support of each run-length map so the empty background
    does not drag the cut toward zero.
    """
    pc = as_binary(pc)
    if not pc.any():
        raise NoPupilIndicatorError("pupil cluster is empty")
    rlv = rlq_directional(pc, "vertical")
    rlh = rlq_directional(pc, "horizontal")
    keep_v, cut_v = _top_cluster(rlv, k)
    keep_h, cut_h = _top_cluster(rlh, k)
    long_enough = (run_lengths(pc, "vertical") >= 2) & (run_lengths(pc, "horizontal") >= 2)
    pi = keep_v & keep_h & long_enough
    if diagnostics is not None:
        diagnostics.update(rlv=rlv, rlh=rlh, threshold_v=cut_v, threshold_h=cut_h)
    if not pi.any():
        raise NoPupilIndicatorError("no pixel lies on long runs in both directions")
    return pi


def flood_fill_pupil(pc, seed):
    """4-connected component of ``pc`` containing ``seed`` given as (row, col)."""
    pc = as_binary(pc)
    r, c = seed
    if not (0 <= r < pc.shape[0] and 0 <= c < pc.shape[1]) or not pc[r, c]:
        raise InvalidSeedError(f"seed {seed} is not a set pixel")
    labels, _ = ndimage.label(pc, structure=FOUR_CONNECTED)
    return labels == labels[r, c]


def _fill_between(mask):
    # a 0-run is bounded on both sides exactly when it lies between the
    # first and last set pixel of its row
    left = np.maximum.accumulate(mask, axis=1)
    right = np.maximum.accumulate(mask[:, ::-1], axis=1)[:, ::-1]
    return mask | (left & right)


def fill_specular_lights(p, max_sweeps=1000):
    """Fill row/column gaps enclosed by the mask until nothing changes."""
    out = as_binary(p).copy()
    for _ in range(max_sweeps):
        nxt = _fill_between(out)
        nxt = _fill_between(nxt.T).T
        if np.array_equal(nxt, out):
            break
        out = nxt
    return out


def fit_pupil(p):
    """Ellipse inscribed in the bounding box of the mask."""
    p = as_binary(p)
    rows = np.flatnonzero(p.any(axis=1))
    cols = np.flatnonzero(p.any(axis=0))
    if rows.size == 0:
        raise EmptyInputError("empty pupil mask")
    return PupilFit(
        center_x=(cols[0] + cols[-1]) / 2.0,
        center_y=(rows[0] + rows[-1]) / 2.0,
        semi_axis_h=(cols[-1] - cols[0] + 1) / 2.0,
        semi_axis_v=(rows[-1] - rows[0] + 1) / 2.0,
        pupil_mask=p,
    )


def find_pupil(img, k=16, max_iter=10, reset_first_to_min=False, keep_stages=False):
    """Run the whole pupil finder on an eye image.

    Stage errors are re-raised with the stage name attached. With
    ``keep_stages`` the intermediate rasters (PC, RLV, RLH, PI, P) are kept on
    the returned fit for dumping.
    """
    stage = "pupil_cluster"
    diag = {}
    try:
        try:
            pc = extract_pupil_cluster(img, k, max_iter, reset_first_to_min)
        except DegenerateInputError as exc:
            raise NoPupilIndicatorError(f"no pupil candidate: {exc}") from exc
        stage = "pupil_indicator"
        pi = pupil_indicator(pc, diagnostics=diag)
        stage = "flood_fill"
        seed = np.unravel_index(np.flatnonzero(pi)[0], pi.shape)
        p = flood_fill_pupil(pc, seed)
        stage = "specular_fill"
        p = fill_specular_lights(p)
        stage = "fit"
        fit = fit_pupil(p)
    except IrisError as exc:
        raise annotate(exc, stage)
    fit.stages["threshold_v"] = diag["threshold_v"]
    fit.stages["threshold_h"] = diag["threshold_h"]
    if keep_stages:
        fit.stages.update(pc=pc, rlv=diag["rlv"], rlh=diag["rlh"], pi=pi, p=p)
    return fit
