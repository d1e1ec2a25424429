"""Binary iris codes from the phase of the per-line analytic signal.

Every line of the resized iris band is cut into non-overlapping windows; in
each window the Hilbert transform gives the quadrature component and the
sign of the instant phase becomes one code bit.
"""

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParameterError, SegmentationError, ShapeError

TWO_ARGUMENT = "two_argument"
SINGLE_ARGUMENT = "single_argument"
_CONVENTIONS = (TWO_ARGUMENT, SINGLE_ARGUMENT)

MAGIC = b"GAIT"
FORMAT_VERSION = 1
_HEADER = struct.Struct(">4sBHHHB")


@dataclass(frozen=True)
class EncoderConfig:
    code_rows: int = 16
    code_cols: int = 96
    window_size: int = 8
    phase_convention: str = TWO_ARGUMENT
    butterfly: bool = True
    half_angle: float = np.pi / 4

    def __post_init__(self):
        if self.code_rows < 1 or self.code_cols < 1:
            raise ParameterError("code dimensions must be positive")
        if self.window_size < 4 or self.window_size % 2:
            raise ParameterError("window size must be even and at least 4")
        if self.code_cols % self.window_size:
            raise ParameterError("code columns must be a multiple of the window size")
        if (self.code_rows * self.code_cols) % 8:
            raise ParameterError("code must fill a whole number of bytes")
        if self.phase_convention not in _CONVENTIONS:
            raise ParameterError(f"unknown phase convention {self.phase_convention!r}")
        if self.butterfly and not 0 < self.half_angle <= np.pi / 2:
            raise ParameterError("butterfly half-angle must lie in (0, pi/2]")

    @classmethod
    def for_bytes(cls, n_bytes, **kwargs):
        """Preset layouts for 192-byte (16x96, s=8) and 768-byte (32x192, s=16) codes."""
        presets = {192: (16, 96, 8), 768: (32, 192, 16)}
        if n_bytes not in presets:
            raise ParameterError(f"no preset for {n_bytes}-byte codes")
        rows, cols, s = presets[n_bytes]
        return cls(rows, cols, s, **kwargs)

    @property
    def n_bits(self):
        return self.code_rows * self.code_cols

    @property
    def layout(self):
        """What two codes must share to be comparable."""
        return (self.code_rows, self.code_cols, self.window_size, self.phase_convention)


@dataclass
class IrisCode:
    bits: np.ndarray
    mask: np.ndarray
    config: EncoderConfig
    source_id: str = ""

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=bool)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.bits.shape != self.mask.shape:
            raise ShapeError("bits and mask must share a shape")
        if self.bits.shape != (self.config.code_rows, self.config.code_cols):
            raise ShapeError("code shape disagrees with its configuration")

    @property
    def usable(self):
        return bool(self.mask.any())

    def to_bytes(self):
        cfg = self.config
        conv = _CONVENTIONS.index(cfg.phase_convention)
        header = _HEADER.pack(
            MAGIC, FORMAT_VERSION, cfg.code_rows, cfg.code_cols, cfg.window_size, conv
        )
        return (
            header
            + np.packbits(self.bits, bitorder="big").tobytes()
            + np.packbits(self.mask, bitorder="big").tobytes()
        )

    @classmethod
    def from_bytes(cls, data, source_id=""):
        if len(data) < _HEADER.size:
            raise ShapeError("truncated iris code")
        magic, version, d1, d2, s, conv = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise ShapeError("not an iris code file")
        if version != FORMAT_VERSION:
            raise ShapeError(f"unsupported code format version {version}")
        if conv >= len(_CONVENTIONS):
            raise ShapeError(f"unknown phase convention byte {conv}")
        n = d1 * d2 // 8
        body = np.frombuffer(data, dtype=np.uint8, offset=_HEADER.size)
        if body.size != 2 * n:
            raise ShapeError("code payload has the wrong length")
        cfg = EncoderConfig(d1, d2, s, _CONVENTIONS[conv], butterfly=False)
        bits = np.unpackbits(body[:n], bitorder="big").reshape(d1, d2)
        mask = np.unpackbits(body[n:], bitorder="big").reshape(d1, d2)
        return cls(bits, mask, cfg, source_id)

    def save(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path):
        path = Path(path)
        return cls.from_bytes(path.read_bytes(), source_id=path.stem)


# -- analytic signal ---------------------------------------------------------


def _check_window(s):
    if s < 4 or s % 2:
        raise ParameterError(f"window size must be even and at least 4, got {s}")


def hilbert_window(x):
    """Discrete Hilbert transform over the last axis via the one-sided spectrum.

    Negative-frequency bins are zeroed, strictly positive ones doubled, DC
    and Nyquist kept; the imaginary part of the inverse transform is H(x).
    """
    x = np.asarray(x, dtype=np.float64)
    s = x.shape[-1]
    _check_window(s)
    gain = np.zeros(s)
    gain[0] = 1.0
    gain[1 : s // 2] = 2.0
    gain[s // 2] = 1.0
    return np.fft.ifft(np.fft.fft(x, axis=-1) * gain, axis=-1).imag


@dataclass
class AnalyticRow:
    real: np.ndarray
    imag: np.ndarray
    convention: str = field(default=TWO_ARGUMENT)

    @classmethod
    def of(cls, f, convention=TWO_ARGUMENT):
        f = np.asarray(f, dtype=np.float64)
        return cls(f, hilbert_window(f), convention)

    @property
    def amplitude(self):
        return np.hypot(self.real, self.imag)

    @property
    def phase(self):
        # +0.0 folds a negative zero so the phase sign tracks H(f) >= 0
        h = self.imag + 0.0
        if self.convention == TWO_ARGUMENT:
            return np.arctan2(h, self.real)
        out = np.zeros_like(self.real)
        nz = self.real != 0
        out[nz] = np.arctan(h[nz] / self.real[nz])
        return out


def instant_phase(row, s, convention=TWO_ARGUMENT):
    """Windowed instant phase along the last axis.

    The row is cut into consecutive blocks of ``s`` samples; each block is
    mean-subtracted before its analytic signal is formed.
    """
    if convention not in _CONVENTIONS:
        raise ParameterError(f"unknown phase convention {convention!r}")
    _check_window(s)
    row = np.asarray(row, dtype=np.float64)
    n = row.shape[-1]
    if n % s:
        raise ShapeError(f"length {n} is not a multiple of the window size {s}")
    blocks = row.reshape(row.shape[:-1] + (n // s, s))
    blocks = blocks - blocks.mean(axis=-1, keepdims=True)
    phase = AnalyticRow.of(blocks, convention).phase
    return phase.reshape(row.shape)


# -- encoder -----------------------------------------------------------------


def resize_band(band, rows, cols):
    """Bilinear resize; periodic along the angular (column) axis."""
    band = np.asarray(band, dtype=np.float64)
    h, w = band.shape
    if h == 1:
        ri = np.zeros(rows)
    else:
        ri = np.linspace(0, h - 1, rows)
    lo = np.floor(ri).astype(np.intp)
    hi = np.minimum(lo + 1, h - 1)
    frac = (ri - lo)[:, None]
    radial = band[lo] * (1 - frac) + band[hi] * frac
    cj = np.arange(cols) * w / cols
    return np.stack([np.interp(cj, np.arange(w), line, period=w) for line in radial])


def butterfly_mask(d1, d2, half_angle):
    """Left and right angular sectors of half-width ``half_angle`` around 0 and pi.

    Column ``j`` is taken at the angle of its center, 2*pi*(j + 0.5)/d2.
    """
    if not 0 < half_angle <= np.pi / 2:
        raise ParameterError("half-angle must lie in (0, pi/2]")
    theta = 2 * np.pi * (np.arange(d2) + 0.5) / d2
    to_zero = np.minimum(theta, 2 * np.pi - theta)
    to_pi = np.abs(theta - np.pi)
    cols = np.minimum(to_zero, to_pi) <= half_angle + 1e-12
    return np.broadcast_to(cols, (d1, d2)).copy()


def encode_band(band, cfg, source_id=""):
    """Code an already resized ``code_rows x code_cols`` band."""
    band = np.asarray(band, dtype=np.float64)
    if band.shape != (cfg.code_rows, cfg.code_cols):
        raise ShapeError(f"band shape {band.shape} does not match the code layout")
    bits = instant_phase(band, cfg.window_size, cfg.phase_convention) >= 0
    mask = (band > 0) & (band < 255)
    if cfg.butterfly:
        mask &= butterfly_mask(cfg.code_rows, cfg.code_cols, cfg.half_angle)
    return IrisCode(bits, mask, cfg, source_id)


def encode(ring, cfg=None, source_id=""):
    """Encode the unwrapped band of an :class:`~irisbench.cfis.IrisRing`."""
    cfg = cfg or EncoderConfig()
    band = ring.unwrapped.rui
    if band.shape[0] < 2:
        raise SegmentationError("iris band thinner than two lines")
    resized = resize_band(band, cfg.code_rows, cfg.code_cols)
    return encode_band(resized, cfg, source_id)
