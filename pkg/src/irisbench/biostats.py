"""Score-distribution statistics and recognition-performance criteria.

Scores are similarities: a comparison is accepted when its score lies
strictly above the threshold.
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .errors import DegenerateInputError, EmptyInputError, ParameterError

FAR_TARGET = 0.001
FRR_TARGET = 0.01
FIXED_THRESHOLDS = (0.59, 0.60)


@dataclass
class ScoreSet:
    genuine: np.ndarray
    imposter: np.ndarray
    code_length_bits: int

    def __post_init__(self):
        self.genuine = np.asarray(self.genuine, dtype=np.float64).ravel()
        self.imposter = np.asarray(self.imposter, dtype=np.float64).ravel()
        for name, arr in (("genuine", self.genuine), ("imposter", self.imposter)):
            if arr.size == 0:
                raise EmptyInputError(f"no {name} scores")
            if not np.all(np.isfinite(arr)) or arr.min() < 0 or arr.max() > 1:
                raise ParameterError(f"{name} scores must lie in [0, 1]")
        if self.code_length_bits < 1:
            raise ParameterError("code length must be positive")


@dataclass
class DistributionSummary:
    n: int
    mean: float
    median: float
    std: float
    skewness: float = None
    kurtosis: float = None
    degrees_of_freedom: float = None


def summarize(scores):
    """Moments of a score sample; kurtosis is excess kurtosis.

    Skewness and kurtosis are ``None`` for a constant sample, as is the
    degrees-of-freedom estimate when it is undefined.
    """
    x = np.asarray(scores, dtype=np.float64).ravel()
    if x.size < 2:
        raise EmptyInputError("need at least two scores")
    mean = float(x.mean())
    std = float(x.std(ddof=1))
    dev = x - mean
    m2 = float(np.mean(dev**2))
    skew = kurt = None
    if m2 > 0:
        skew = float(np.mean(dev**3) / m2**1.5)
        kurt = float(np.mean(dev**4) / m2**2 - 3.0)
    dof = None
    if std > 0 and 0 < mean < 1:
        dof = degrees_of_freedom(mean, std)
    return DistributionSummary(int(x.size), mean, float(np.median(x)), std, skew, kurt, dof)


def degrees_of_freedom(p, sigma):
    """Number of fair Bernoulli trials whose mean has spread ``sigma``: p(1-p)/sigma^2."""
    if not 0 < p < 1:
        raise ParameterError(f"p must lie strictly between 0 and 1, got {p}")
    if not sigma > 0:
        raise DegenerateInputError("sigma must be positive")
    return p * (1 - p) / sigma**2


def empirical_rates(scores, threshold):
    """(FAR, FRR): imposters above and genuines at or below the threshold."""
    far = float(np.count_nonzero(scores.imposter > threshold)) / scores.imposter.size
    frr = float(np.count_nonzero(scores.genuine <= threshold)) / scores.genuine.size
    return far, frr


def _binomial_n(fit):
    return max(1, int(round(degrees_of_freedom(fit.mean, fit.std))))


def theoretical_odds(fit_imposter, fit_genuine, threshold, model="normal"):
    """(OFA, OFR): imposter tail above and genuine tail below the threshold.

    ``fit_*`` are anything with ``mean`` and ``std``. ``model="binomial"``
    uses a binomial with the fitted degrees of freedom instead of a normal.
    """
    if fit_imposter.std <= 0 or fit_genuine.std <= 0:
        raise DegenerateInputError("theoretical odds need positive deviations")
    if model == "normal":
        ofa = stats.norm.sf(threshold, loc=fit_imposter.mean, scale=fit_imposter.std)
        ofr = stats.norm.cdf(threshold, loc=fit_genuine.mean, scale=fit_genuine.std)
    elif model == "binomial":
        ni, ng = _binomial_n(fit_imposter), _binomial_n(fit_genuine)
        ofa = stats.binom.sf(np.floor(threshold * ni), ni, fit_imposter.mean)
        ofr = stats.binom.cdf(np.floor(threshold * ng), ng, fit_genuine.mean)
    else:
        raise ParameterError(f"unknown model {model!r}")
    return float(ofa), float(ofr)


def _rates_at(scores, thresholds):
    imp = np.sort(scores.imposter)
    gen = np.sort(scores.genuine)
    far = 1.0 - np.searchsorted(imp, thresholds, side="right") / imp.size
    frr = np.searchsorted(gen, thresholds, side="right") / gen.size
    return far, frr


def eer(scores):
    """Equal error rate and its threshold.

    Every distinct score is tried as a threshold; the crossing of FAR and FRR
    is located by linear interpolation between the bracketing thresholds.
    """
    ts = np.unique(np.concatenate([scores.genuine, scores.imposter]))
    far, frr = _rates_at(scores, ts)
    ts = np.concatenate([[ts[0]], ts])
    far = np.concatenate([[1.0], far])
    frr = np.concatenate([[0.0], frr])
    diff = far - frr
    j = int(np.argmax(diff <= 0))
    if diff[j] == 0 or j == 0:
        return float(far[j]), float(ts[j])
    alpha = diff[j - 1] / (diff[j - 1] - diff[j])
    rate = far[j - 1] + alpha * (far[j] - far[j - 1])
    return float(rate), float(ts[j - 1] + alpha * (ts[j] - ts[j - 1]))


def threshold_at_far(scores, target=FAR_TARGET):
    """Threshold where FAR falls to ``target``, interpolated between imposter scores."""
    ts = np.unique(scores.imposter)
    far, _ = _rates_at(scores, ts)
    j = int(np.argmax(far <= target))
    if j == 0:
        return float(ts[0])
    alpha = (far[j - 1] - target) / (far[j - 1] - far[j])
    return float(ts[j - 1] + alpha * (ts[j] - ts[j - 1]))


def threshold_at_frr(scores, target=FRR_TARGET):
    """Threshold where FRR rises to ``target``, interpolated between genuine scores."""
    ts = np.unique(scores.genuine)
    _, frr = _rates_at(scores, ts)
    floor = min(ts[0], scores.imposter.min())
    if floor < ts[0]:
        # below every genuine score FRR is 0; anchor the curve there
        ts = np.concatenate([[floor], ts])
        frr = np.concatenate([[0.0], frr])
    above = np.flatnonzero(frr > target)
    j = int(above[0]) if above.size else len(ts) - 1
    if j == 0 or frr[j] <= target:
        return float(ts[j])
    alpha = (target - frr[j - 1]) / (frr[j] - frr[j - 1])
    return float(ts[j - 1] + alpha * (ts[j] - ts[j - 1]))


def decidability(si, sg):
    """|mu_g - mu_i| / sqrt((sigma_g^2 + sigma_i^2) / 2)."""
    return abs(sg.mean - si.mean) / np.sqrt((sg.std**2 + si.std**2) / 2)


def fisher_ratio(si, sg):
    return (sg.mean - si.mean) ** 2 / (sg.std**2 + si.std**2)


def storage_efficiency(dof, code_length_bits):
    if dof <= 0 or code_length_bits <= 0:
        raise ParameterError("degrees of freedom and code length must be positive")
    return dof / code_length_bits


# -- evaluation panel --------------------------------------------------------


@dataclass
class OperatingPoint:
    label: str
    threshold: float
    far: float
    frr: float
    ofa: float
    ofr: float


@dataclass
class EvaluationPanel:
    imposter: DistributionSummary
    genuine: DistributionSummary
    degrees_of_freedom: float
    code_length_bits: int
    roc: list
    eer: float
    eer_threshold: float
    decidability: float
    fisher_ratio: float
    storage_efficiency: float
    at_far: OperatingPoint
    at_frr: OperatingPoint
    fixed: list
    model: str = "normal"
    meta: dict = field(default_factory=dict)

    @property
    def suggested_threshold(self):
        return self.at_far.threshold

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["imposter"] = DistributionSummary(**d["imposter"])
        d["genuine"] = DistributionSummary(**d["genuine"])
        d["roc"] = [OperatingPoint(**p) for p in d["roc"]]
        d["at_far"] = OperatingPoint(**d["at_far"])
        d["at_frr"] = OperatingPoint(**d["at_frr"])
        d["fixed"] = [OperatingPoint(**p) for p in d["fixed"]]
        return cls(**d)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _point(label, scores, si, sg, t, model):
    far, frr = empirical_rates(scores, t)
    ofa, ofr = theoretical_odds(si, sg, t, model)
    return OperatingPoint(label, float(t), far, frr, ofa, ofr)


def build_panel(scores, model="normal", roc_steps=200, meta=None):
    """Assemble every statistic and operating point for one score set."""
    si = summarize(scores.imposter)
    sg = summarize(scores.genuine)
    if si.std <= 0 or sg.std <= 0:
        raise DegenerateInputError("both score classes need a positive deviation")
    dof = degrees_of_freedom(si.mean, si.std)
    grid = np.linspace(0.0, 1.0, roc_steps + 1)
    roc = [_point("roc", scores, si, sg, float(t), model) for t in grid]
    rate, t_eer = eer(scores)
    return EvaluationPanel(
        imposter=si,
        genuine=sg,
        degrees_of_freedom=dof,
        code_length_bits=int(scores.code_length_bits),
        roc=roc,
        eer=rate,
        eer_threshold=t_eer,
        decidability=float(decidability(si, sg)),
        fisher_ratio=float(fisher_ratio(si, sg)),
        storage_efficiency=storage_efficiency(dof, scores.code_length_bits),
        at_far=_point(f"FAR={FAR_TARGET}", scores, si, sg, threshold_at_far(scores), model),
        at_frr=_point(f"FRR={FRR_TARGET}", scores, si, sg, threshold_at_frr(scores), model),
        fixed=[_point(f"t={t}", scores, si, sg, t, model) for t in FIXED_THRESHOLDS],
        model=model,
        meta=dict(meta or {}),
    )
