"""Iris recognition workbench: pupil finding, circular fuzzy iris segmentation,
analytic-phase binary iris codes, masked matching and score statistics."""

from .biostats import (
    DistributionSummary,
    EvaluationPanel,
    ScoreSet,
    build_panel,
    decidability,
    degrees_of_freedom,
    eer,
    empirical_rates,
    fisher_ratio,
    storage_efficiency,
    summarize,
    theoretical_odds,
)
from .cfis import CombinedCrispIndicator, IrisRing, UnwrappedIris, segment
from .errors import IrisError
from .gaitbe import EncoderConfig, IrisCode, encode, hilbert_window, instant_phase
from .matcher import Identity, MatchScore, hamming_similarity, identify, mds_score
from .pupil import PupilFit, find_pupil
from .raster import fkmq, rle_decode, rle_encode, rlq_directional, rqf
from .synth import SynthEyeParams, synth_eye

__version__ = "0.1.0"
