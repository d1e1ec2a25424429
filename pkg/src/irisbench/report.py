"""Report files: panel JSON, delimited tables, figures and a text summary."""

import csv
import datetime
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .biostats import EvaluationPanel
from .raster import save_image, save_mask

REPORT_FILES = (
    "panel.json",
    "roc.csv",
    "scores.csv",
    "distributions.svg",
    "far_frr.svg",
    "summary.txt",
)


def _fmt(x):
    return "" if x is None else repr(float(x))


def write_scores(path, records):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("probe_id", "gallery_id", "kind", "similarity", "compared_bits"))
        for r in records:
            w.writerow((r.probe_id, r.gallery_id, r.kind, _fmt(r.similarity), r.compared_bits))


def read_scores(path):
    from .workflows import ScoreRecord

    with Path(path).open(newline="") as fh:
        return [
            ScoreRecord(
                row["probe_id"], row["gallery_id"], row["kind"],
                float(row["similarity"]), int(row["compared_bits"]),
            )
            for row in csv.DictReader(fh)
        ]


def write_roc(path, panel):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("threshold", "far", "frr", "ofa", "ofr"))
        for p in panel.roc:
            w.writerow((_fmt(p.threshold), _fmt(p.far), _fmt(p.frr), _fmt(p.ofa), _fmt(p.ofr)))


def summary_text(panel, generated=None):
    """Plain-text digest. The timestamp is confined to the first line."""
    generated = generated or datetime.datetime.now().isoformat(timespec="seconds")
    si, sg = panel.imposter, panel.genuine
    lines = [f"# generated {generated}"]
    scenario = panel.meta.get("scenario", "")
    if scenario:
        lines.append(f"scenario: {scenario}")
    lines.append(f"code length: {panel.code_length_bits} bits")

    def block(name, s):
        skew = "undefined" if s.skewness is None else f"{s.skewness:.4f}"
        kurt = "undefined" if s.kurtosis is None else f"{s.kurtosis:.4f}"
        dof = "undefined" if s.degrees_of_freedom is None else f"{s.degrees_of_freedom:.0f}"
        return [
            f"{name} scores (n={s.n}):",
            f"  mean {s.mean:.4f}  median {s.median:.4f}  std {s.std:.4f}",
            f"  degrees of freedom {dof}  skewness {skew}  excess kurtosis {kurt}",
        ]

    lines += block("inter-class", si)
    lines += block("intra-class", sg)
    lines.append("operating points:")
    for op in [panel.at_far, panel.at_frr] + list(panel.fixed):
        lines.append(
            f"  {op.label:<10} threshold {op.threshold:.5f}  FAR {op.far:.4g}  "
            f"FRR {op.frr:.4g}  OFA {op.ofa:.3g}  OFR {op.ofr:.4g}"
        )
    lines += [
        "evaluation criteria:",
        f"  decidability {panel.decidability:.4f}",
        f"  Fisher's ratio {panel.fisher_ratio:.4f}",
        f"  EER {panel.eer:.4g} at threshold {panel.eer_threshold:.5f}",
        f"  storage efficiency {panel.storage_efficiency:.4f}",
    ]
    failures = panel.meta.get("failures", 0)
    if failures:
        lines.append(f"per-image failures: {failures}")
    override = panel.meta.get("threshold_override")
    if override is not None:
        lines.append(f"threshold (user override): {override:.5f}")
    lines.append(f"suggested threshold (FAR = 0.001): {panel.suggested_threshold:.5f}")
    return "\n".join(lines) + "\n"


def report(panel, outdir, records=None, scores=None, generated=None):
    """Write every report file into ``outdir`` and return their paths."""
    from .plotting import plot_distributions, plot_far_frr, save

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {name: outdir / name for name in REPORT_FILES}
    paths["panel.json"].write_text(panel.to_json())
    write_roc(paths["roc.csv"], panel)
    write_scores(paths["scores.csv"], records or [])
    if scores is not None:
        gen, imp = scores.genuine, scores.imposter
    elif records:
        gen = np.array([r.similarity for r in records if r.kind == "genuine"])
        imp = np.array([r.similarity for r in records if r.kind == "imposter"])
    else:
        gen = imp = None
    save(plot_distributions(panel, gen, imp), paths["distributions.svg"])
    save(plot_far_frr(panel), paths["far_frr.svg"])
    paths["summary.txt"].write_text(summary_text(panel, generated))
    return paths


def load_panel(path):
    return EvaluationPanel.from_json(Path(path).read_text())


# -- segmentation stage dumps --------------------------------------------------


def _ragged(lines):
    width = max(len(x) for x in lines)
    out = np.zeros((len(lines), width))
    for i, x in enumerate(lines):
        out[i, : len(x)] = x
    return out


def dump_stages(img, ring, outdir):
    """Write the pupil-finder and segmentation intermediates of one image."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    st = ring.pupil.stages
    for name in ("pc", "pi", "p"):
        if name in st:
            save_mask(outdir / f"{name}.pgm", st[name])
    for name in ("rlv", "rlh"):
        if name in st:
            save_image(outdir / f"{name}.pgm", st[name])
    diag = ring.diagnostics
    if "unwrapped" in diag:
        u = diag["unwrapped"]
        save_image(outdir / "ui.pgm", np.clip(np.rint(_ragged(u.ui)), 0, 255))
        save_image(outdir / "rui.pgm", np.clip(np.rint(u.rui), 0, 255))
        with (outdir / "votes.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("line", "radius", "A", "B", "C", "votes"))
            for i in range(len(u)):
                w.writerow((i, _fmt(u.radii[i]), _fmt(diag["a"][i]), _fmt(diag["b"][i]),
                            _fmt(diag["c"][i]), int(ring.vote_trace[i])))
    save_image(outdir / "iris_band.pgm", np.clip(np.rint(ring.unwrapped.rui), 0, 255))

    overlay = Image.fromarray(np.asarray(img, dtype=np.uint8), mode="L").convert("RGB")
    draw = ImageDraw.Draw(overlay)
    cx, cy = ring.center
    for radius, color in ((ring.pupil.radius, (255, 64, 64)), (ring.limbic_radius, (64, 255, 64))):
        draw.ellipse((cx - radius, cy - radius, cx + radius, cy + radius), outline=color)
    overlay.save(outdir / "overlay.png")
