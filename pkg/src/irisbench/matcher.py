"""Masked Hamming similarity and mean-deviation scoring against enrolled identities."""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import IncomparableCodesError, ParameterError, ShapeError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MatchScore:
    similarity: float
    compared_bits: int
    probe_id: str = ""
    gallery_id: str = ""


@dataclass
class Identity:
    identity_id: str
    templates: list

    def __post_init__(self):
        if not self.templates:
            raise ParameterError(f"identity {self.identity_id!r} has no templates")
        layouts = {t.config.layout for t in self.templates}
        if len(layouts) != 1:
            raise ShapeError(f"identity {self.identity_id!r} mixes code layouts")


def _check_pair(a, b):
    if a.bits.shape != b.bits.shape:
        raise ShapeError(f"code shapes differ: {a.bits.shape} vs {b.bits.shape}")
    if a.config.layout != b.config.layout:
        raise ShapeError("codes were produced with different encoder layouts")


def hamming_similarity(a, b, max_shift=0):
    """Fraction of jointly unmasked bits that agree.

    ``max_shift`` > 0 also tries circular column shifts of ``b`` up to that
    many columns either way and keeps the best score; off by default.
    """
    _check_pair(a, b)
    best = None
    for shift in range(-max_shift, max_shift + 1):
        bb = np.roll(b.bits, shift, axis=1)
        bm = np.roll(b.mask, shift, axis=1)
        joint = a.mask & bm
        n = int(np.count_nonzero(joint))
        if n == 0:
            continue
        agree = int(np.count_nonzero(joint & (a.bits == bb)))
        if best is None or agree / n > best[0] / best[1]:
            best = (agree, n)
    if best is None:
        raise IncomparableCodesError(
            f"no jointly unmasked bits between {a.source_id!r} and {b.source_id!r}"
        )
    return MatchScore(best[0] / best[1], best[1], a.source_id, b.source_id)


def similarity_matrix(codes_a, codes_b=None):
    """All pairwise similarities as ``(similarity, compared_bits)`` matrices.

    Pairs without jointly unmasked bits get NaN similarity and 0 compared bits.
    """
    codes_b = codes_a if codes_b is None else codes_b
    layouts = {c.config.layout for c in list(codes_a) + list(codes_b)}
    if len(layouts) > 1:
        raise ShapeError("codes were produced with different encoder layouts")

    def stack(codes):
        bits = np.stack([c.bits.ravel() for c in codes]).astype(np.float64)
        mask = np.stack([c.mask.ravel() for c in codes]).astype(np.float64)
        return bits * mask, (1 - bits) * mask, mask

    one_a, zero_a, mask_a = stack(codes_a)
    one_b, zero_b, mask_b = stack(codes_b)
    agree = one_a @ one_b.T + zero_a @ zero_b.T
    compared = mask_a @ mask_b.T
    with np.errstate(invalid="ignore", divide="ignore"):
        sim = np.where(compared > 0, agree / compared, np.nan)
    return sim, compared.astype(np.int64)


def mds_score(probe, identity, imposter_sigma, ddof=1):
    """mean(S) + std(S) - imposter_sigma / 2 over the template similarities S.

    ``std`` uses ``ddof`` (sample deviation by default) and is 0 for a single
    template.
    """
    if imposter_sigma < 0:
        raise ParameterError("imposter_sigma must be non-negative")
    s = np.array([hamming_similarity(probe, t).similarity for t in identity.templates])
    spread = float(np.std(s, ddof=ddof)) if len(s) > ddof else 0.0
    return float(s.mean()) + spread - imposter_sigma / 2


def identify(probe, gallery, imposter_sigma):
    """Rank identities by decreasing MDS; ties go to the smaller identity id."""
    if not gallery:
        raise ParameterError("empty gallery")
    ranked = []
    for ident in gallery:
        try:
            ranked.append((ident.identity_id, mds_score(probe, ident, imposter_sigma)))
        except IncomparableCodesError as exc:
            log.warning("skipping identity %s: %s", ident.identity_id, exc)
    ranked.sort(key=lambda item: (-item[1], item[0]))
    return ranked
