import json
from math import comb

import numpy as np
import pytest

from irisbench.biostats import EvaluationPanel
from irisbench.errors import CorpusError, ParameterError
from irisbench.gaitbe import EncoderConfig
from irisbench.report import REPORT_FILES, load_panel, read_scores, report, summary_text
from irisbench.workflows import (
    Corpus,
    RunConfig,
    load_run_config,
    run_calibration,
    run_enroll_identify,
    select_templates,
)


@pytest.fixture(scope="module")
def corpus(small_corpus):
    return Corpus.load(small_corpus)


@pytest.fixture(scope="module")
def calibration(corpus):
    return run_calibration(corpus, RunConfig())


def test_manifest_and_discovery_agree(small_corpus):
    from_manifest = Corpus.load(small_corpus)
    (small_corpus / "manifest.csv").rename(small_corpus / "manifest.bak")
    try:
        discovered = Corpus.load(small_corpus)
    finally:
        (small_corpus / "manifest.bak").rename(small_corpus / "manifest.csv")
    assert len(from_manifest) == len(discovered) == 16
    assert [e.image_id for e in from_manifest.entries] == [e.image_id for e in discovered.entries]
    assert all(e.ground_truth is not None for e in from_manifest.entries)
    assert all(e.ground_truth is None for e in discovered.entries)


def test_manifest_round_trip(tmp_path, corpus):
    path = tmp_path / "copy.csv"
    corpus.write_manifest(path)
    again = Corpus.from_manifest(path)
    assert [(e.path, e.class_id, e.ground_truth) for e in again.entries] == [
        (e.path, e.class_id, e.ground_truth) for e in corpus.entries
    ]


def test_manifest_requires_class(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("path,class\na.pgm,\n")
    with pytest.raises(CorpusError):
        Corpus.from_manifest(path)


def test_run_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "code_bytes = 768\nphase_convention = single_argument\nbutterfly = no\n"
        "templates = 3\nselection = random\nseed = 9\n"
    )
    cfg = load_run_config(path, seed=4, jobs=None)
    assert cfg.encoder.layout == (32, 192, 16, "single_argument")
    assert not cfg.encoder.butterfly
    assert cfg.templates_per_identity == 3 and cfg.selection == "random"
    assert cfg.seed == 4 and cfg.jobs == 1


def test_run_config_errors(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("colour = blue\n")
    with pytest.raises(ParameterError):
        load_run_config(path)
    with pytest.raises(ParameterError):
        RunConfig(templates_per_identity=0)
    with pytest.raises(ParameterError):
        RunConfig(selection="best")


def test_calibration_labels_every_pair_once(corpus, calibration):
    recs = calibration.records
    n = len(corpus)
    assert len(recs) == comb(n, 2)
    pairs = {(r.probe_id, r.gallery_id) for r in recs}
    assert len(pairs) == len(recs)
    classes = corpus.classes()
    n_gen = sum(comb(len(v), 2) for v in classes.values())
    assert sum(r.kind == "genuine" for r in recs) == n_gen
    for r in recs:
        assert (r.kind == "genuine") == (r.probe_id.split("-")[0] == r.gallery_id.split("-")[0])


def test_calibration_is_deterministic(corpus, calibration):
    again = run_calibration(corpus, RunConfig())
    assert again.panel.to_json() == calibration.panel.to_json()


def test_calibration_threshold_between_means(calibration):
    p = calibration.panel
    assert p.imposter.mean < p.suggested_threshold < p.genuine.mean


def test_single_class_corpus_fails(corpus):
    one = Corpus([e for e in corpus.entries if e.class_id == "id000"])
    with pytest.raises(CorpusError):
        run_calibration(one, RunConfig())
    with pytest.raises(CorpusError):
        run_enroll_identify(one, RunConfig())


def test_enroll_needs_spare_captures(corpus):
    with pytest.raises(CorpusError, match="id000"):
        run_enroll_identify(corpus, RunConfig(templates_per_identity=4))


def test_enroll_single_template_keeps_hamming_ranking(corpus, calibration):
    result = run_enroll_identify(corpus, RunConfig(templates_per_identity=1))
    hs = {}
    for r in calibration.records:
        hs[(r.probe_id, r.gallery_id)] = hs[(r.gallery_id, r.probe_id)] = r.similarity
    enrolled = {cid: ids[0] for cid, ids in result.panel.meta["enrolled"].items()}
    sigma = result.panel.meta["imposter_sigma"]
    by_probe = {}
    for r in result.records:
        by_probe.setdefault(r.probe_id, []).append(r)
    for probe, recs in by_probe.items():
        for r in recs:
            expected = hs[(probe, enrolled[r.gallery_id])] - sigma / 2
            assert r.similarity == pytest.approx(max(expected, 0.0), abs=1e-12)
        mds_order = sorted(recs, key=lambda r: -r.similarity)
        hs_order = sorted(recs, key=lambda r: -hs[(probe, enrolled[r.gallery_id])])
        assert mds_order[0].gallery_id == hs_order[0].gallery_id


def test_enroll_records(corpus):
    result = run_enroll_identify(corpus, RunConfig(templates_per_identity=2))
    meta = result.panel.meta
    assert meta["probes"] == 8
    assert len(result.records) == 8 * 4
    assert sum(r.kind == "genuine" for r in result.records) == 8
    assert all(len(v) == 2 for v in meta["enrolled"].values())
    assert meta["rank1_rate"] >= 0.75


def test_selection_rules():
    sim = np.array(
        [
            [1.0, 0.9, 0.5, 0.6, 0.4],
            [0.9, 1.0, 0.7, 0.5, 0.5],
            [0.5, 0.7, 1.0, 0.5, 0.6],
            [0.6, 0.5, 0.5, 1.0, 0.5],
            [0.4, 0.5, 0.6, 0.5, 1.0],
        ]
    )
    class_of = np.array(["a", "a", "a", "b", "b"])
    rng = np.random.default_rng(0)
    assert select_templates([0, 1, 2], sim, class_of, 2, "first", rng) == [0, 1]
    assert select_templates([0, 1, 2], sim, class_of, 2, "min_intraclass", rng) == [0, 1]
    # mean similarity to class b: 0.5, 0.5, 0.55
    assert select_templates([0, 1, 2], sim, class_of, 2, "max_interclass", rng) == [0, 1]
    picks = select_templates([0, 1, 2], sim, class_of, 2, "random", np.random.default_rng(3))
    assert picks == select_templates([0, 1, 2], sim, class_of, 2, "random",
                                     np.random.default_rng(3))
    assert len(set(picks)) == 2


def test_report_files_and_round_trip(tmp_path, calibration):
    paths = report(calibration.panel, tmp_path, records=calibration.records, scores=calibration.scores)
    for name in REPORT_FILES:
        assert paths[name].exists() and paths[name].stat().st_size > 0
    assert load_panel(paths["panel.json"]) == calibration.panel
    assert read_scores(paths["scores.csv"]) == calibration.records
    text = paths["summary.txt"].read_text()
    assert f"{calibration.panel.suggested_threshold:.5f}" in text


def test_report_rerun_identical_except_timestamp(tmp_path, calibration):
    a, b = tmp_path / "a", tmp_path / "b"
    report(calibration.panel, a, records=calibration.records, generated="2020-01-01T00:00:00")
    report(calibration.panel, b, records=calibration.records, generated="2021-06-30T12:00:00")
    for name in REPORT_FILES:
        left, right = (a / name).read_bytes(), (b / name).read_bytes()
        if name == "summary.txt":
            left, right = left.split(b"\n", 1)[1], right.split(b"\n", 1)[1]
        assert left == right, name


def test_summary_mentions_failures_and_override(calibration):
    panel = EvaluationPanel.from_dict(json.loads(calibration.panel.to_json()))
    panel.meta.update(failures=2, threshold_override=0.6)
    text = summary_text(panel, "now")
    assert text.startswith("# generated now\n")
    assert "per-image failures: 2" in text and "0.60000" in text


def test_768_byte_layout(corpus):
    result = run_calibration(corpus, RunConfig(encoder=EncoderConfig.for_bytes(768)))
    assert result.panel.code_length_bits == 6144
    assert result.panel.decidability > 2
