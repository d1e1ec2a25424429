"""Synthetic eye images with known pupil and limbic geometry.

An identity fixes the iris texture (a band-limited mixture of angular
sinusoids whose phase drifts with normalized radius) together with the base
pupil and limbic radii. A capture adds pupil dilation, center jitter, small
rotation, gamma, sensor noise, specular spots and an upper-eyelid occluder.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class SynthEyeParams:
    height: int = 256
    width: int = 256
    center_jitter: float = 8.0
    pupil_radius: tuple = (24.0, 32.0)
    dilation_jitter: float = 0.06
    limbic_ratio: tuple = (1.9, 2.4)
    pupil_intensity: float = 20.0
    iris_intensity: float = 120.0
    sclera_intensity: float = 230.0
    texture_amplitude: float = 18.0
    texture_components: int = 16
    texture_cycles: tuple = (4, 24)
    radial_cycles: float = 3.0
    noise_std: float = 3.0
    gamma_jitter: float = 0.1
    gamma: float = None
    rotation_jitter: float = 3.0
    specular_spots: tuple = (0, 2)
    specular_radius: float = 3.0
    specular_intensity: float = 250.0
    eyelid_fraction: tuple = (0.0, 0.2)
    eyelid_intensity: float = 170.0

    def with_(self, **changes):
        return replace(self, **changes)

    def validate(self):
        lo_p, hi_p = self.pupil_radius
        lo_l, hi_l = self.limbic_ratio
        if not (0 < lo_p <= hi_p):
            raise ParameterError("pupil radius range must be positive and ordered")
        if not (1 < lo_l <= hi_l):
            raise ParameterError("limbic radius must exceed the pupil radius")
        reach = hi_p * hi_l + self.center_jitter
        if 2 * reach >= min(self.height, self.width):
            raise ParameterError("iris does not fit inside the image")
        if not 0 <= self.dilation_jitter < 1:
            raise ParameterError("dilation jitter must be in [0, 1)")
        lo_e, hi_e = self.eyelid_fraction
        if not 0 <= lo_e <= hi_e < 1:
            raise ParameterError("eyelid fraction must be in [0, 1)")


@dataclass(frozen=True)
class GroundTruth:
    center_x: float
    center_y: float
    pupil_radius: float
    limbic_radius: float


def _identity(params, identity_seed):
    rng = np.random.default_rng([identity_seed, 0x1815])
    n = params.texture_components
    lo, hi = params.texture_cycles
    return {
        "pupil_radius": rng.uniform(*params.pupil_radius),
        "limbic_ratio": rng.uniform(*params.limbic_ratio),
        "cycles": rng.integers(lo, hi + 1, size=n),
        "radial": rng.uniform(-params.radial_cycles, params.radial_cycles, size=n),
        "phase": rng.uniform(0, 2 * np.pi, size=n),
        "weight": rng.uniform(0.5, 1.0, size=n),
    }


def iris_texture(ident, rho_norm, theta):
    """Unit-variance texture sampled at normalized radius and angle."""
    acc = np.zeros(np.broadcast(rho_norm, theta).shape)
    for m, b, ph, w in zip(ident["cycles"], ident["radial"], ident["phase"], ident["weight"]):
        acc += w * np.cos(m * theta + 2 * np.pi * b * rho_norm + ph)
    return acc / np.sqrt(np.sum(ident["weight"] ** 2) / 2)


def _soft(edge):
    return np.clip(edge + 0.5, 0.0, 1.0)


def synth_eye(params, identity_seed, capture_seed):
    """Render one capture. Returns ``(uint8 image, GroundTruth)``."""
    params.validate()
    ident = _identity(params, identity_seed)
    rng = np.random.default_rng([identity_seed, capture_seed, 0xE7E])
    # draw every random quantity up front so twins rendered with different
    # parameter values share the rest of their randomness
    jitter = rng.uniform(-1, 1, size=2) * params.center_jitter
    dilation = 1 + rng.uniform(-1, 1) * params.dilation_jitter
    rotation = np.deg2rad(rng.uniform(-1, 1) * params.rotation_jitter)
    gamma_draw = 1 + rng.uniform(-1, 1) * params.gamma_jitter
    eyelid = rng.uniform(*params.eyelid_fraction)
    n_spots = rng.integers(params.specular_spots[0], params.specular_spots[1] + 1)
    spot_r = rng.uniform(0, 0.5, size=4)
    spot_a = rng.uniform(0, 2 * np.pi, size=4)
    noise = rng.standard_normal((params.height, params.width))

    cx = (params.width - 1) / 2 + jitter[0]
    cy = (params.height - 1) / 2 + jitter[1]
    rl = ident["pupil_radius"] * ident["limbic_ratio"]
    rp = ident["pupil_radius"] * dilation

    yy, xx = np.mgrid[0 : params.height, 0 : params.width].astype(np.float64)
    dx, dy = xx - cx, cy - yy
    rho = np.hypot(dx, dy)
    theta = np.arctan2(dy, dx)

    rho_norm = np.clip((rho - rp) / (rl - rp), 0, 1)
    iris = params.iris_intensity + params.texture_amplitude * iris_texture(
        ident, rho_norm, theta - rotation
    )
    w_pupil = _soft(rp - rho)
    w_iris = _soft(rl - rho)
    img = w_pupil * params.pupil_intensity + (1 - w_pupil) * (
        w_iris * iris + (1 - w_iris) * params.sclera_intensity
    )

    for i in range(n_spots):
        sx = cx + spot_r[i] * rp * np.cos(spot_a[i])
        sy = cy - spot_r[i] * rp * np.sin(spot_a[i])
        w = _soft(params.specular_radius - np.hypot(xx - sx, yy - sy))
        img = w * params.specular_intensity + (1 - w) * img

    if eyelid > 0:
        lid_y = cy - rl + 2 * rl * eyelid
        w = _soft(lid_y - yy)
        img = w * params.eyelid_intensity + (1 - w) * img

    gamma = params.gamma if params.gamma is not None else gamma_draw
    img = 255.0 * (np.clip(img, 0, 255) / 255.0) ** gamma
    img = img + params.noise_std * noise
    img = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    return img, GroundTruth(float(cx), float(cy), float(rp), float(rl))
