"""Matplotlib figures for score distributions and error-rate curves."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from scipy import stats  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 4.0),
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    # fixed salt and no date so reruns write identical SVG
    "svg.hashsalt": "irisbench",
    "svg.fonttype": "path",
}

IMPOSTER_COLOR = "tab:red"
GENUINE_COLOR = "tab:blue"


def new_figure(**kwargs):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(**kwargs)
    return fig, ax


def save(fig, path):
    with plt.rc_context(STYLE):
        fig.savefig(path, metadata={"Date": None}, bbox_inches="tight")
    plt.close(fig)


def plot_distributions(panel, genuine=None, imposter=None, bins=100):
    """Score histograms (density, log scale) with the fitted normal curves."""
    fig, ax = new_figure()
    edges = np.linspace(0, 1, bins + 1)
    for scores, color, label in (
        (imposter, IMPOSTER_COLOR, "inter-class"),
        (genuine, GENUINE_COLOR, "intra-class"),
    ):
        if scores is not None and len(scores):
            ax.hist(scores, bins=edges, density=True, histtype="step", color=color, label=label)
    xs = np.linspace(0, 1, 1001)
    for fit, color in ((panel.imposter, IMPOSTER_COLOR), (panel.genuine, GENUINE_COLOR)):
        pdf = stats.norm.pdf(xs, fit.mean, fit.std)
        ax.plot(xs, np.where(pdf > 1e-6, pdf, np.nan), color=color, ls="--", lw=0.8)
    ax.axvline(panel.suggested_threshold, color="k", lw=0.8, ls=":", label="threshold @ FAR=0.001")
    ax.set_yscale("log")
    ax.set_ylim(bottom=1e-3)
    ax.set_xlim(0.3, 1.0)
    ax.set_xlabel("similarity score")
    ax.set_ylabel("density")
    ax.legend(loc="upper right")
    return fig


def plot_far_frr(panel):
    fig, ax = new_figure()
    t = np.array([p.threshold for p in panel.roc])
    ax.plot(t, [p.far for p in panel.roc], color=IMPOSTER_COLOR, label="FAR")
    ax.plot(t, [p.frr for p in panel.roc], color=GENUINE_COLOR, label="FRR")
    ax.plot(t, [p.ofa for p in panel.roc], color=IMPOSTER_COLOR, ls="--", lw=0.8, label="OFA")
    ax.plot(t, [p.ofr for p in panel.roc], color=GENUINE_COLOR, ls="--", lw=0.8, label="OFR")
    ax.plot([panel.eer_threshold], [panel.eer], "ko", ms=4, label=f"EER = {panel.eer:.4f}")
    op = panel.at_far
    ax.plot([op.threshold], [op.frr], "ks", ms=4, label=f"FRR @ FAR=0.001: {op.frr:.4f}")
    ax.set_xlim(0.3, 1.0)
    ax.set_ylim(0, 1)
    ax.set_xlabel("threshold")
    ax.set_ylabel("rate")
    ax.legend(loc="center right")
    return fig
