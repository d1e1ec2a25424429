"""Corpus handling and the calibration / enrollment-identification workflows."""

import configparser
import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .biostats import ScoreSet, build_panel
from .cfis import segment
from .errors import CorpusError, IrisError, ParameterError
from .gaitbe import EncoderConfig, encode
from .matcher import similarity_matrix
from .raster import load_image, save_image
from .synth import GroundTruth, SynthEyeParams, synth_eye

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".pgm", ".png", ".bmp", ".tif", ".tiff", ".jpg", ".jpeg")
GT_COLUMNS = ("center_x", "center_y", "pupil_radius", "limbic_radius")
SELECTION_RULES = ("first", "random", "max_interclass", "min_intraclass")


@dataclass
class CorpusEntry:
    path: Path
    class_id: str
    eye: str = "L"
    capture: str = "0"
    ground_truth: GroundTruth = None

    @property
    def image_id(self):
        return f"{self.class_id}-{self.eye}-{self.capture}"


@dataclass
class Corpus:
    entries: list

    def __len__(self):
        return len(self.entries)

    def classes(self):
        out = {}
        for i, e in enumerate(self.entries):
            out.setdefault(e.class_id, []).append(i)
        return out

    @classmethod
    def from_manifest(cls, path):
        path = Path(path)
        entries = []
        with path.open(newline="") as fh:
            for row in csv.DictReader(fh):
                if not row.get("class"):
                    raise CorpusError(f"{path}: row without a class id")
                gt = None
                if all(row.get(c) not in (None, "") for c in GT_COLUMNS):
                    gt = GroundTruth(*(float(row[c]) for c in GT_COLUMNS))
                img = Path(row["path"])
                entries.append(
                    CorpusEntry(
                        img if img.is_absolute() else path.parent / img,
                        row["class"],
                        row.get("eye") or "L",
                        row.get("capture") or str(len(entries)),
                        gt,
                    )
                )
        return cls(entries)

    @classmethod
    def discover(cls, root):
        """Find images laid out as ``root/<class>/<eye>/<capture>.<ext>``."""
        root = Path(root)
        entries = [
            CorpusEntry(p, p.parent.parent.name, p.parent.name, p.stem)
            for p in sorted(root.glob("*/*/*"))
            if p.suffix.lower() in IMAGE_SUFFIXES
        ]
        return cls(entries)

    @classmethod
    def load(cls, source):
        source = Path(source)
        if source.is_dir():
            manifest = source / "manifest.csv"
            return cls.from_manifest(manifest) if manifest.exists() else cls.discover(source)
        return cls.from_manifest(source)

    def write_manifest(self, path):
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("path", "class", "eye", "capture") + GT_COLUMNS)
            for e in self.entries:
                rel = e.path
                if e.path.is_absolute() and e.path.is_relative_to(path.parent.resolve()):
                    rel = e.path.relative_to(path.parent.resolve())
                gt = e.ground_truth
                extra = [repr(getattr(gt, c)) for c in GT_COLUMNS] if gt else [""] * 4
                w.writerow([rel.as_posix(), e.class_id, e.eye, e.capture] + extra)


def generate_corpus(outdir, identities=20, captures=10, params=None, seed=0):
    """Render a synthetic corpus with a ground-truth manifest."""
    params = params or SynthEyeParams()
    outdir = Path(outdir).resolve()
    entries = []
    for i in range(identities):
        class_id = f"id{i:03d}"
        for c in range(captures):
            img, gt = synth_eye(params, seed * 1_000_003 + i, c)
            path = outdir / class_id / "L" / f"{c:02d}.pgm"
            save_image(path, img)
            entries.append(CorpusEntry(path, class_id, "L", f"{c:02d}", gt))
    corpus = Corpus(entries)
    corpus.write_manifest(outdir / "manifest.csv")
    return corpus


# -- run configuration -------------------------------------------------------


@dataclass
class RunConfig:
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    scenario: str = "calibration"
    templates_per_identity: int = 5
    selection: str = "first"
    threshold: float = None
    outdir: Path = None
    seed: int = 0
    jobs: int = 1
    model: str = "normal"

    def __post_init__(self):
        if self.templates_per_identity < 1:
            raise ParameterError("templates_per_identity must be at least 1")
        if self.selection not in SELECTION_RULES:
            raise ParameterError(f"selection must be one of {SELECTION_RULES}")
        if self.scenario not in ("calibration", "enroll_identify"):
            raise ParameterError(f"unknown scenario {self.scenario!r}")


_ENCODER_KEYS = {f.name for f in fields(EncoderConfig)}


def _coerce(value, kind):
    if kind is bool:
        return value.strip().lower() in ("1", "true", "yes", "on")
    return kind(value)


def load_run_config(path, **overrides):
    """Read a flat ``key = value`` file into a :class:`RunConfig`.

    Encoder keys (``code_rows``, ``window_size``, ...) may appear next to run
    keys; ``code_bytes`` picks one of the preset layouts.
    """
    parser = configparser.ConfigParser()
    text = Path(path).read_text() if path else ""
    parser.read_string("[run]\n" + text)
    raw = dict(parser["run"])
    enc_kwargs = {}
    if "code_bytes" in raw:
        base = EncoderConfig.for_bytes(int(raw.pop("code_bytes")))
        enc_kwargs.update(
            code_rows=base.code_rows, code_cols=base.code_cols, window_size=base.window_size
        )
    enc_types = {"code_rows": int, "code_cols": int, "window_size": int,
                 "phase_convention": str, "butterfly": bool, "half_angle": float}
    run_types = {"scenario": str, "templates_per_identity": int, "templates": int,
                 "selection": str, "threshold": float, "seed": int, "jobs": int,
                 "model": str, "outdir": Path}
    run_kwargs = {}
    for key, value in raw.items():
        if key in _ENCODER_KEYS:
            enc_kwargs[key] = _coerce(value, enc_types[key])
        elif key in run_types:
            name = "templates_per_identity" if key == "templates" else key
            run_kwargs[name] = _coerce(value, run_types[key])
        else:
            raise ParameterError(f"unknown config key {key!r}")
    for key, value in overrides.items():
        if value is None:
            continue
        if key in _ENCODER_KEYS:
            enc_kwargs[key] = value
        else:
            run_kwargs[key] = value
    return RunConfig(encoder=EncoderConfig(**enc_kwargs), **run_kwargs)


# -- per-image pipeline ------------------------------------------------------


@dataclass
class ScoreRecord:
    probe_id: str
    gallery_id: str
    kind: str
    similarity: float
    compared_bits: int


def _process_one(args):
    path, image_id, enc = args
    try:
        ring = segment(load_image(path))
        return encode(ring, enc, image_id), None
    except (IrisError, OSError) as exc:
        return None, str(exc)


def encode_corpus(corpus, encoder, jobs=1):
    """Segment and encode every image; returns ``(codes, failures)``.

    ``codes`` is aligned with the corpus (``None`` for failures); results do
    not depend on ``jobs``.
    """
    work = [(e.path, e.image_id, encoder) for e in corpus.entries]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_process_one, work, chunksize=4))
    else:
        results = [_process_one(w) for w in work]
    codes, failures = [], []
    for entry, (code, err) in zip(corpus.entries, results):
        codes.append(code)
        if err is not None:
            log.warning("%s: %s", entry.image_id, err)
            failures.append((entry.image_id, err))
    return codes, failures


def _check_classes(corpus, minimum, what):
    classes = corpus.classes()
    if len(classes) < 2:
        raise CorpusError("need at least two classes")
    for cid, idx in classes.items():
        if len(idx) < minimum:
            raise CorpusError(f"class {cid!r} has {len(idx)} images, {what}")
    return classes


@dataclass
class RunResult:
    panel: object
    records: list
    codes: list
    failures: list
    scores: ScoreSet


def _persist(result, outdir):
    from .report import report

    outdir = Path(outdir)
    for code in result.codes:
        if code is not None:
            code.save(outdir / "codes" / f"{code.source_id}.gcode")
    report(result.panel, outdir, records=result.records, scores=result.scores)


def _scoreset(records, n_bits):
    gen = [r.similarity for r in records if r.kind == "genuine"]
    imp = [r.similarity for r in records if r.kind == "imposter"]
    return ScoreSet(gen, imp, n_bits)


def run_calibration(corpus, cfg):
    """All-to-all Hamming similarities over the corpus, one panel."""
    _check_classes(corpus, 2, "need at least 2")
    codes, failures = encode_corpus(corpus, cfg.encoder, cfg.jobs)
    ok = [i for i, c in enumerate(codes) if c is not None]
    good = [codes[i] for i in ok]
    if len(good) < 2:
        raise CorpusError("fewer than two images could be encoded")
    sim, compared = similarity_matrix(good)
    records = []
    for a in range(len(ok)):
        for b in range(a + 1, len(ok)):
            if compared[a, b] == 0:
                log.warning("no common bits: %s vs %s", good[a].source_id, good[b].source_id)
                continue
            ea, eb = corpus.entries[ok[a]], corpus.entries[ok[b]]
            kind = "genuine" if ea.class_id == eb.class_id else "imposter"
            records.append(
                ScoreRecord(ea.image_id, eb.image_id, kind, float(sim[a, b]), int(compared[a, b]))
            )
    scores = _scoreset(records, cfg.encoder.n_bits)
    meta = {
        "scenario": "calibration",
        "images": len(corpus),
        "failures": len(failures),
        "failed_images": [f[0] for f in failures],
        "encoder": list(cfg.encoder.layout),
    }
    if cfg.threshold is not None:
        meta["threshold_override"] = cfg.threshold
    panel = build_panel(scores, model=cfg.model, meta=meta)
    result = RunResult(panel, records, codes, failures, scores)
    if cfg.outdir is not None:
        _persist(result, cfg.outdir)
    return result


def select_templates(class_idx, sim, class_of, n, rule, rng):
    """Pick ``n`` enrollment captures for one class.

    ``class_idx`` are positions (into ``sim``) of this class's codes.
    ``min_intraclass`` keeps the captures most similar to the rest of their
    class; ``max_interclass`` keeps those least similar to other classes.
    """
    if rule == "first":
        return list(class_idx[:n])
    if rule == "random":
        return sorted(rng.choice(class_idx, size=n, replace=False).tolist())
    mine = np.asarray(class_idx)
    if rule == "min_intraclass":
        sub = sim[np.ix_(mine, mine)]
        np.fill_diagonal(sub, np.nan)
        key = -np.nanmean(sub, axis=1)
    else:
        others = np.flatnonzero(class_of != class_of[mine[0]])
        key = np.nanmean(sim[np.ix_(mine, others)], axis=1)
    order = np.argsort(key, kind="stable")[:n]
    return sorted(mine[order].tolist())


def run_enroll_identify(corpus, cfg):
    """Multi-enrollment identification scored with the mean-deviation similarity."""
    n = cfg.templates_per_identity
    codes, failures = encode_corpus(corpus, cfg.encoder, cfg.jobs)
    ok = [i for i, c in enumerate(codes) if c is not None]
    good = [codes[i] for i in ok]
    entries = [corpus.entries[i] for i in ok]
    class_ids = sorted({e.class_id for e in corpus.entries})
    if len(class_ids) < 2:
        raise CorpusError("need at least two classes")
    class_of = np.array([e.class_id for e in entries])
    for cid in class_ids:
        have = int(np.count_nonzero(class_of == cid))
        if have <= n:
            raise CorpusError(f"class {cid!r} has {have} usable captures, need more than {n}")

    sim, compared = similarity_matrix(good)
    rng = np.random.default_rng(cfg.seed)
    enrolled = {}
    for cid in class_ids:
        idx = np.flatnonzero(class_of == cid).tolist()
        enrolled[cid] = select_templates(idx, sim, class_of, n, cfg.selection, rng)

    # imposter spread of single-template matching among the enrolled set
    tmpl = [i for cid in class_ids for i in enrolled[cid]]
    t_sim = sim[np.ix_(tmpl, tmpl)]
    t_cls = class_of[tmpl]
    iu = np.triu_indices(len(tmpl), 1)
    cross = t_cls[iu[0]] != t_cls[iu[1]]
    imp_single = t_sim[iu][cross]
    imp_single = imp_single[np.isfinite(imp_single)]
    imposter_sigma = float(np.std(imp_single, ddof=1))

    taken = set(tmpl)
    probes = [i for i in range(len(good)) if i not in taken]
    records = []
    rank1 = 0
    for p in probes:
        best = None
        for cid in class_ids:
            cols = enrolled[cid]
            s = sim[p, cols]
            if not np.all(np.isfinite(s)):
                log.warning("skipping identity %s for probe %s: masks do not overlap",
                            cid, entries[p].image_id)
                continue
            spread = float(np.std(s, ddof=1)) if len(s) > 1 else 0.0
            score = float(np.clip(s.mean() + spread - imposter_sigma / 2, 0.0, 1.0))
            kind = "genuine" if cid == class_of[p] else "imposter"
            records.append(
                ScoreRecord(entries[p].image_id, cid, kind, score, int(compared[p, cols].sum()))
            )
            if best is None or score > best[0]:
                best = (score, cid)
        rank1 += best is not None and best[1] == class_of[p]

    scores = _scoreset(records, cfg.encoder.n_bits)
    meta = {
        "scenario": "enroll_identify",
        "images": len(corpus),
        "failures": len(failures),
        "failed_images": [f[0] for f in failures],
        "encoder": list(cfg.encoder.layout),
        "templates_per_identity": n,
        "selection": cfg.selection,
        "imposter_sigma": imposter_sigma,
        "probes": len(probes),
        "rank1_rate": rank1 / len(probes) if probes else None,
        "enrolled": {cid: [entries[i].image_id for i in enrolled[cid]] for cid in class_ids},
    }
    if cfg.threshold is not None:
        meta["threshold_override"] = cfg.threshold
    panel = build_panel(scores, model=cfg.model, meta=meta)
    result = RunResult(panel, records, codes, failures, scores)
    if cfg.outdir is not None:
        _persist(result, cfg.outdir)
    return result
