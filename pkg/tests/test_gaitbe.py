import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from irisbench.cfis import IrisRing, unwrap
from irisbench.errors import ParameterError, SegmentationError, ShapeError
from irisbench.gaitbe import (
    AnalyticRow,
    EncoderConfig,
    IrisCode,
    butterfly_mask,
    encode,
    encode_band,
    hilbert_window,
    instant_phase,
    resize_band,
)
from irisbench.matcher import hamming_similarity
from irisbench.pupil import PupilFit


def dc_nyquist_free(x):
    spectrum = np.fft.fft(x)
    spectrum[0] = 0
    spectrum[len(x) // 2] = 0
    return np.fft.ifft(spectrum).real


@pytest.mark.parametrize("s", [8, 16, 32])
def test_hilbert_of_cosine_is_sine(s):
    k = np.arange(s)
    for m in range(1, s // 2):
        h = hilbert_window(np.cos(2 * np.pi * m * k / s))
        assert np.abs(h - np.sin(2 * np.pi * m * k / s)).max() <= 1e-9


def test_hilbert_of_constant_is_zero():
    assert (hilbert_window(np.full(8, 3.7)) == 0).all()


@settings(max_examples=60)
@given(st.sampled_from([8, 16]), st.integers(0, 2**32 - 1))
def test_hilbert_squares_to_minus_identity(s, seed):
    x = dc_nyquist_free(np.random.default_rng(seed).standard_normal(s))
    hx = hilbert_window(x)
    assert np.allclose(hilbert_window(hx), -x, rtol=0, atol=1e-9 * np.linalg.norm(x))
    assert np.isclose(np.linalg.norm(hx), np.linalg.norm(x), rtol=1e-9)


def test_hilbert_batches_along_last_axis():
    x = np.random.default_rng(1).standard_normal((3, 4, 8))
    h = hilbert_window(x)
    assert np.allclose(h[2, 1], hilbert_window(x[2, 1]))


@pytest.mark.parametrize("s", [2, 7, 0])
def test_hilbert_rejects_bad_windows(s):
    with pytest.raises(ParameterError):
        hilbert_window(np.ones(s))


@pytest.mark.parametrize("s", [8, 16])
def test_phase_of_cosine_ramps(s):
    k = np.arange(s)
    phase = instant_phase(np.cos(2 * np.pi * k / s), s)
    inner = k[(k > 0) & (k != s // 2)]
    wrapped = np.angle(np.exp(2j * np.pi * inner / s))
    assert np.allclose(phase[inner], wrapped, atol=1e-9)
    bits = phase >= 0
    assert bits[1 : s // 2].all() and not bits[s // 2 + 1 :].any()


@given(
    st.floats(1e-3, 1e3),
    st.floats(1e-3, 1e3),
    st.sampled_from(["two_argument", "single_argument"]),
)
def test_first_quadrant_phase_positive(f, h, convention):
    row = AnalyticRow(np.array([f]), np.array([h]), convention)
    assert row.phase[0] > 0


def test_sign_table():
    rng = np.random.default_rng(3)
    rows = rng.standard_normal((2000, 8))
    rows[rng.random(rows.shape) < 0.05] = 0.0
    f = rows - rows.mean(axis=1, keepdims=True)
    h = hilbert_window(f)
    two = instant_phase(rows, 8, "two_argument") >= 0
    single = instant_phase(rows, 8, "single_argument") >= 0
    assert np.array_equal(two, h + 0.0 >= 0)
    assert np.array_equal(single[f != 0], (f * h >= 0)[f != 0])


def test_instant_phase_errors():
    with pytest.raises(ShapeError):
        instant_phase(np.zeros(12), 8)
    with pytest.raises(ParameterError):
        instant_phase(np.zeros(16), 8, "three_argument")


def test_amplitude():
    row = AnalyticRow.of(np.cos(2 * np.pi * np.arange(16) / 16))
    assert np.allclose(row.amplitude, 1.0)


def test_butterfly_counts_and_symmetry():
    assert butterfly_mask(4, 96, np.pi / 2).all()
    m = butterfly_mask(2, 512, np.pi / 4)
    assert m[0].sum() == 256
    assert np.array_equal(m, np.roll(m, 256, axis=1))
    # sectors sit around 0 and pi, not around pi/2
    assert m[0, 0] and m[0, 256] and not m[0, 128]
    with pytest.raises(ParameterError):
        butterfly_mask(2, 8, 0.0)


def test_config_presets_and_validation():
    assert EncoderConfig.for_bytes(192).layout == (16, 96, 8, "two_argument")
    assert EncoderConfig.for_bytes(768).n_bits == 6144
    with pytest.raises(ParameterError):
        EncoderConfig.for_bytes(100)
    with pytest.raises(ParameterError):
        EncoderConfig(16, 100, 8)
    with pytest.raises(ParameterError):
        EncoderConfig(phase_convention="polar")


def test_resize_band_identity_and_periodicity():
    band = np.random.default_rng(4).random((10, 64))
    assert np.allclose(resize_band(band, 10, 64), band)
    out = resize_band(band, 5, 128)
    # the last column interpolates toward the first one
    assert np.isclose(out[0, -1], (band[0, -1] + band[0, 0]) / 2)


def random_band(rng, cfg):
    return rng.uniform(20, 230, size=(cfg.code_rows, cfg.code_cols))


def test_encode_band_masks_saturation():
    cfg = EncoderConfig(butterfly=False)
    band = random_band(np.random.default_rng(5), cfg)
    band[0, :4] = 0
    band[1, :4] = 255
    code = encode_band(band, cfg)
    assert not code.mask[:2, :4].any() and code.mask[2:].all()


def test_code_shift_covariance():
    cfg = EncoderConfig(butterfly=False)
    band = random_band(np.random.default_rng(6), cfg)
    a = encode_band(band, cfg)
    b = encode_band(np.roll(band, 16, axis=1), cfg)
    assert np.array_equal(np.roll(a.bits, 16, axis=1), b.bits)


def test_identical_rows_give_identical_code_rows():
    cfg = EncoderConfig()
    row = np.random.default_rng(7).uniform(20, 230, cfg.code_cols)
    code = encode_band(np.tile(row, (cfg.code_rows, 1)), cfg)
    assert (code.bits == code.bits[0]).all()


def test_encode_ring_is_deterministic():
    size, c = 161, 80.0
    yy, xx = np.mgrid[:size, :size].astype(float)
    theta = np.arctan2(c - yy, xx - c)
    img = np.rint(120 + 40 * np.cos(5 * theta) + 30 * np.sin(11 * theta)).astype(np.uint8)
    fit = PupilFit(c, c, 15.0, 15.0, np.zeros((size, size), dtype=bool))
    ring = IrisRing(fit, 40.0, unwrap(img, fit, max_radius=40), np.zeros(1))
    a, b = encode(ring), encode(ring)
    assert np.array_equal(a.bits, b.bits) and np.array_equal(a.mask, b.mask)
    # an angle-only pattern codes the same way on every radius
    assert (a.bits == a.bits[0]).mean() > 0.95
    thin = IrisRing(fit, 16.0, ring.unwrapped.rows(0, 1), np.zeros(1))
    with pytest.raises(SegmentationError):
        encode(thin)


def test_random_bands_score_near_half():
    rng = np.random.default_rng(8)
    cfg = EncoderConfig()
    scores = [
        hamming_similarity(encode_band(random_band(rng, cfg), cfg),
                           encode_band(random_band(rng, cfg), cfg)).similarity
        for _ in range(200)
    ]
    assert 0.48 <= np.mean(scores) <= 0.52


@pytest.mark.parametrize("n_bytes", [192, 768])
def test_code_file_round_trip(tmp_path, n_bytes):
    cfg = EncoderConfig.for_bytes(n_bytes, phase_convention="single_argument")
    rng = np.random.default_rng(9)
    code = IrisCode(rng.random((cfg.code_rows, cfg.code_cols)) < 0.5,
                    rng.random((cfg.code_rows, cfg.code_cols)) < 0.8, cfg, "x")
    path = tmp_path / "sub" / "eye.gcode"
    code.save(path)
    back = IrisCode.load(path)
    assert np.array_equal(back.bits, code.bits) and np.array_equal(back.mask, code.mask)
    assert back.config.layout == cfg.layout
    assert back.source_id == "eye"
    assert len(code.to_bytes()) == 12 + 2 * n_bytes


def test_code_file_errors():
    cfg = EncoderConfig()
    code = IrisCode(np.zeros((16, 96)), np.ones((16, 96)), cfg)
    data = code.to_bytes()
    with pytest.raises(ShapeError):
        IrisCode.from_bytes(b"XXXX" + data[4:])
    with pytest.raises(ShapeError):
        IrisCode.from_bytes(data[:-1])
    with pytest.raises(ShapeError):
        IrisCode.from_bytes(data[:5])
    with pytest.raises(ShapeError):
        IrisCode(np.zeros((16, 96)), np.ones((16, 95)), cfg)
    with pytest.raises(ShapeError):
        IrisCode(np.zeros((8, 96)), np.ones((8, 96)), cfg)
