"""Command-line workbench.

Exit status: 0 on success, 2 when some images failed but the run completed,
1 on fatal errors.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import IrisError
from .gaitbe import EncoderConfig, IrisCode
from .matcher import hamming_similarity
from .workflows import SELECTION_RULES, load_run_config

log = logging.getLogger("irisbench")


def _global_options(parser, suppress):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=default(None), help="random seed")
    parser.add_argument("--jobs", type=int, default=default(None), help="parallel workers")
    parser.add_argument("--config", type=Path, default=default(None),
                        help="key = value file mirroring the run configuration")
    parser.add_argument("--dump-stages", type=Path, default=default(None), metavar="DIR",
                        help="write intermediate segmentation stages to DIR")
    parser.add_argument("-v", "--verbose", action="store_true", default=default(False))


def _encoder_options(parser):
    parser.add_argument("--code-bytes", type=int, choices=(192, 768),
                        help="preset code layout (default 192)")
    parser.add_argument("--phase-convention", choices=("two_argument", "single_argument"))
    parser.add_argument("--no-butterfly", action="store_true",
                        help="compare the full circle instead of the butterfly sectors")


def build_parser():
    parser = argparse.ArgumentParser(prog="irisbench", description=__doc__.splitlines()[0])
    _global_options(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic eye corpus")
    p.add_argument("outdir", type=Path)
    p.add_argument("--identities", type=int, default=20)
    p.add_argument("--captures", type=int, default=10)

    p = sub.add_parser("segment", help="segment one eye image")
    p.add_argument("image", type=Path)

    p = sub.add_parser("encode", help="segment and encode one eye image")
    p.add_argument("image", type=Path)
    p.add_argument("-o", "--output", type=Path, required=True, help="output .gcode file")
    _encoder_options(p)

    p = sub.add_parser("match", help="Hamming similarity of two iris codes")
    p.add_argument("code_a", type=Path)
    p.add_argument("code_b", type=Path)
    p.add_argument("--max-shift", type=int, default=0,
                   help="also try circular column shifts up to this many columns")

    for name, helptext in (
        ("calibrate", "all-to-all single-enrollment evaluation"),
        ("enroll-identify", "multi-enrollment identification evaluation"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("corpus", type=Path, help="manifest CSV or corpus directory")
        p.add_argument("-o", "--outdir", type=Path, required=True)
        p.add_argument("--model", choices=("normal", "binomial"))
        p.add_argument("--threshold", type=float, help="recorded threshold override")
        _encoder_options(p)
        if name == "enroll-identify":
            p.add_argument("--templates", type=int, help="templates per identity (default 5)")
            p.add_argument("--selection", choices=SELECTION_RULES)

    p = sub.add_parser("report", help="re-render report files of a finished run")
    p.add_argument("rundir", type=Path)
    p.add_argument("-o", "--outdir", type=Path, help="defaults to RUNDIR")

    for action in sub.choices.values():
        _global_options(action, suppress=True)
    return parser


def _run_config(args, scenario):
    overrides = {
        "seed": args.seed,
        "jobs": args.jobs,
        "scenario": scenario,
        "outdir": getattr(args, "outdir", None),
        "model": getattr(args, "model", None),
        "threshold": getattr(args, "threshold", None),
        "templates_per_identity": getattr(args, "templates", None),
        "selection": getattr(args, "selection", None),
        "phase_convention": getattr(args, "phase_convention", None),
    }
    if getattr(args, "code_bytes", None):
        preset = EncoderConfig.for_bytes(args.code_bytes)
        overrides.update(code_rows=preset.code_rows, code_cols=preset.code_cols,
                         window_size=preset.window_size)
    if getattr(args, "no_butterfly", False):
        overrides["butterfly"] = False
    return load_run_config(args.config, **overrides)


def _segment(args, image):
    from .cfis import segment
    from .raster import load_image
    from .report import dump_stages

    img = load_image(image)
    ring = segment(img, keep_stages=args.dump_stages is not None)
    if args.dump_stages is not None:
        dump_stages(img, ring, args.dump_stages)
    return ring


def cmd_synth(args):
    from .synth import SynthEyeParams
    from .workflows import generate_corpus

    corpus = generate_corpus(args.outdir, args.identities, args.captures,
                             SynthEyeParams(), args.seed or 0)
    print(f"wrote {len(corpus)} images to {args.outdir}")
    return 0


def cmd_segment(args):
    ring = _segment(args, args.image)
    fit = ring.pupil
    print(json.dumps({
        "image": str(args.image),
        "center_x": fit.center_x,
        "center_y": fit.center_y,
        "pupil_radius": fit.radius,
        "semi_axis_h": fit.semi_axis_h,
        "semi_axis_v": fit.semi_axis_v,
        "limbic_radius": ring.limbic_radius,
    }))
    return 0


def cmd_encode(args):
    from .gaitbe import encode

    cfg = _run_config(args, "calibration")
    ring = _segment(args, args.image)
    code = encode(ring, cfg.encoder, args.image.stem)
    code.save(args.output)
    print(f"{args.output}: {code.config.n_bits} bits, {int(code.mask.sum())} usable")
    return 0


def cmd_match(args):
    a, b = IrisCode.load(args.code_a), IrisCode.load(args.code_b)
    score = hamming_similarity(a, b, max_shift=args.max_shift)
    print(f"{score.similarity!r},{score.compared_bits}")
    return 0


def _evaluate(args, scenario):
    from .workflows import Corpus, run_calibration, run_enroll_identify

    cfg = _run_config(args, scenario)
    corpus = Corpus.load(args.corpus)
    run = run_calibration if scenario == "calibration" else run_enroll_identify
    result = run(corpus, cfg)
    p = result.panel
    print(f"decidability {p.decidability:.4f}  EER {p.eer:.4g}  "
          f"threshold@FAR=0.001 {p.suggested_threshold:.5f}  -> {cfg.outdir}")
    return 2 if result.failures else 0


def cmd_calibrate(args):
    return _evaluate(args, "calibration")


def cmd_enroll_identify(args):
    return _evaluate(args, "enroll_identify")


def cmd_report(args):
    from .biostats import ScoreSet
    from .report import load_panel, read_scores, report

    panel = load_panel(args.rundir / "panel.json")
    scores_path = args.rundir / "scores.csv"
    records = read_scores(scores_path) if scores_path.exists() else []
    scores = None
    if records:
        scores = ScoreSet([r.similarity for r in records if r.kind == "genuine"],
                          [r.similarity for r in records if r.kind == "imposter"],
                          panel.code_length_bits)
    outdir = args.outdir or args.rundir
    report(panel, outdir, records=records, scores=scores)
    print(f"report written to {outdir}")
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "segment": cmd_segment,
    "encode": cmd_encode,
    "match": cmd_match,
    "calibrate": cmd_calibrate,
    "enroll-identify": cmd_enroll_identify,
    "report": cmd_report,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (IrisError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
