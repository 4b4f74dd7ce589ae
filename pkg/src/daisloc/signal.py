"""Steering vectors, channel synthesis, pilots, precoders, observation means.

Everything here is deterministic given a seed and a config. The observation
mean of symbol g on subcarrier n is the scalar h(n) @ Phi(n) @ s(g, n); its
analytic derivatives with respect to the channel parameters live here too,
next to the mean they differentiate.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .config import SystemConfig
from .errors import DegenerateGeometry, InvalidNoise, ValidationError
from .geometry import PathParams, Scene, SpoofShift, toa_aod_from_scene


def steering_vector(theta: float, cfg: SystemConfig) -> np.ndarray:
    """Uniform-linear-array response toward ``theta``; first entry is exactly 1."""
    idx = np.arange(cfg.n_antennas)
    phase = 2.0 * np.pi * cfg.antenna_spacing_m * np.sin(theta) / cfg.wavelength_m
    return np.exp(-1j * phase * idx)


def free_space_gain(path_length_m, cfg: SystemConfig):
    """Complex gain of a path: inverse-distance magnitude, distance-locked phase.

    Magnitude is wavelength / (4 pi length); the phase winds one turn per
    wavelength of travelled distance, which keeps repeated evaluations
    reproducible without a random draw.
    """
    length = np.asarray(path_length_m, dtype=float)
    if np.any(length <= 0.0):
        raise DegenerateGeometry(f"path length must be positive, got {path_length_m}")
    lam = cfg.wavelength_m
    out = (lam / (4.0 * np.pi * length)) * np.exp(-2j * np.pi * length / lam)
    return complex(out) if out.ndim == 0 else out


def scene_channel_params(scene: Scene, cfg: SystemConfig) -> PathParams:
    """Geometric delays/angles of a scene with free-space gains attached."""
    params = toa_aod_from_scene(scene, cfg)
    lengths = params.toa * cfg.light_speed_mps
    return params.with_gains(free_space_gain(lengths, cfg))


def _steering_conj(aod: np.ndarray, cfg: SystemConfig) -> np.ndarray:
    """Rows of conj(steering) per path, shape (paths, antennas)."""
    idx = np.arange(cfg.n_antennas)
    phase = 2.0 * np.pi * cfg.antenna_spacing_m / cfg.wavelength_m
    return np.exp(1j * phase * np.outer(np.sin(aod), idx))


def _delay_phases(toa: np.ndarray, cfg: SystemConfig) -> np.ndarray:
    """Per-path, per-subcarrier delay rotations, shape (paths, subcarriers)."""
    n = np.arange(cfg.n_subcarriers)
    return np.exp(-2j * np.pi * np.outer(toa, n) / cfg.max_delay_s)


def channel_vector(params: PathParams, n: int, cfg: SystemConfig) -> np.ndarray:
    """Row channel vector of subcarrier ``n``: gain-weighted sum of conjugate steering."""
    if params.gains is None:
        raise ValidationError("channel_vector requires path gains")
    if not 0 <= n < cfg.n_subcarriers:
        raise ValidationError(f"subcarrier index {n} outside [0, {cfg.n_subcarriers})")
    rot = np.exp(-2j * np.pi * n * params.toa / cfg.max_delay_s)
    return (params.gains * rot) @ _steering_conj(params.aod, cfg)


def dais_precoder(shift: SpoofShift, n: int, cfg: SystemConfig) -> np.ndarray:
    """Diagonal phase-only precoder implementing the delay-angle shift on subcarrier ``n``."""
    rot = np.exp(-2j * np.pi * n * shift.delta_tau / cfg.max_delay_s)
    diag = np.conj(steering_vector(shift.delta_theta, cfg))
    return rot * np.diag(diag)


def fpi_precoder(delta_tau: float, delta_theta: float, n: int, cfg: SystemConfig) -> np.ndarray:
    """Identity plus a phased diagonal: the fake-path-injection baseline form.

    Parameter selection for this baseline is caller-supplied; only the
    matrix form is provided here.
    """
    rot = np.exp(-2j * np.pi * n * delta_tau / cfg.max_delay_s)
    diag = np.conj(steering_vector(delta_theta, cfg))
    return np.eye(cfg.n_antennas, dtype=complex) + rot * np.diag(diag)


@dataclass(frozen=True)
class Precoder:
    """Per-subcarrier transmit precoder: the spoofing design, the baseline, or identity."""

    kind: str  # "dais" | "fpi" | "identity"
    delta_tau: float = 0.0
    delta_theta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("dais", "fpi", "identity"):
            raise ValidationError(f"unknown precoder kind {self.kind!r}")

    @classmethod
    def dais(cls, shift: SpoofShift) -> "Precoder":
        return cls(kind="dais", delta_tau=shift.delta_tau, delta_theta=shift.delta_theta)

    @classmethod
    def fpi(cls, delta_tau: float, delta_theta: float) -> "Precoder":
        return cls(kind="fpi", delta_tau=float(delta_tau), delta_theta=float(delta_theta))

    @classmethod
    def identity(cls) -> "Precoder":
        return cls(kind="identity")

    def matrix(self, n: int, cfg: SystemConfig) -> np.ndarray:
        if self.kind == "dais":
            return dais_precoder(SpoofShift(self.delta_tau, self.delta_theta), n, cfg)
        if self.kind == "fpi":
            return fpi_precoder(self.delta_tau, self.delta_theta, n, cfg)
        return np.eye(cfg.n_antennas, dtype=complex)

    def apply(self, combined: np.ndarray, cfg: SystemConfig) -> np.ndarray:
        """Precode pilots of shape (G, N, Nt) without materializing matrices."""
        if self.kind == "identity":
            return combined
        n = np.arange(cfg.n_subcarriers)
        rot = np.exp(-2j * np.pi * n * self.delta_tau / cfg.max_delay_s)
        diag = np.conj(steering_vector(self.delta_theta, cfg))
        phased = rot[None, :, None] * diag[None, None, :] * combined
        if self.kind == "dais":
            return phased
        return combined + phased


@dataclass(frozen=True)
class PilotSet:
    """Unit-modulus pilot symbols and beams, reproducible from the stored seed.

    ``symbols`` has shape (G, N); ``beams`` and ``combined`` have shape
    (G, N, Nt), with combined[g, n] = beams[g, n] * symbols[g, n].
    """

    symbols: np.ndarray
    beams: np.ndarray
    combined: np.ndarray
    seed: int | None = None

    def with_precoder(self, precoder: Precoder, cfg: SystemConfig) -> "PilotSet":
        """Effective pilots as seen through a known precoder (beams rephased)."""
        combined = precoder.apply(self.combined, cfg)
        beams = precoder.apply(self.beams, cfg)
        return replace(self, beams=beams, combined=combined)


def generate_pilots(seed: int, cfg: SystemConfig) -> PilotSet:
    """Draw unit-circle symbols and unit-norm random beams from a seeded generator.

    Symbol phases are uniform on (-pi, pi]; each beam has i.i.d. unit-modulus
    entries scaled by 1/sqrt(Nt) so its l2 norm is exactly 1. Identical seeds
    reproduce identical pilot sets bit for bit.
    """
    rng = np.random.default_rng(seed)
    g, n, nt = cfg.n_symbols, cfg.n_subcarriers, cfg.n_antennas
    symbols = np.exp(1j * (np.pi - rng.uniform(0.0, 2.0 * np.pi, size=(g, n))))
    beams = np.exp(1j * (np.pi - rng.uniform(0.0, 2.0 * np.pi, size=(g, n, nt))))
    beams = beams / np.sqrt(nt)
    combined = beams * symbols[:, :, None]
    return PilotSet(symbols=symbols, beams=beams, combined=combined, seed=int(seed))


def _mean_from_combined(params: PathParams, combined: np.ndarray,
                        cfg: SystemConfig) -> np.ndarray:
    """Observation means for explicit effective pilots of shape (G, N, Nt)."""
    steer = _steering_conj(params.aod, cfg)
    rot = _delay_phases(params.toa, cfg)
    proj = np.einsum("ki,gni->kgn", steer, combined)
    return np.einsum("k,kn,kgn->gn", params.gains, rot, proj)


def observation_mean(params: PathParams, pilots: PilotSet,
                     precoder: Precoder | None, cfg: SystemConfig) -> np.ndarray:
    """Noise-free received scalars, shape (G, N).

    With a precoder this is the transmitted-signal mean h @ Phi @ s; passing
    the shifted parameters with no precoder produces the same values, and so
    does passing the true parameters with precoded pilots.
    """
    if params.gains is None:
        raise ValidationError("observation_mean requires path gains")
    combined = pilots.combined if precoder is None else precoder.apply(pilots.combined, cfg)
    if combined.shape != (cfg.n_symbols, cfg.n_subcarriers, cfg.n_antennas):
        raise ValidationError(
            f"pilot array shape {combined.shape} does not match the config"
        )
    return _mean_from_combined(params, combined, cfg)


def observation_mean_jacobian(params: PathParams, pilots: PilotSet,
                              cfg: SystemConfig) -> np.ndarray:
    """Analytic derivatives of the observation means, shape (4*paths, G, N).

    Row order matches the channel parameter vector: delays, angles, real
    gains, imaginary gains. The delay derivative rotates by -j 2 pi n / NTs,
    the angle derivative differentiates the steering phases, and the gain
    derivatives are the bare path responses.
    """
    if params.gains is None:
        raise ValidationError("observation_mean_jacobian requires path gains")
    steer = _steering_conj(params.aod, cfg)
    idx = np.arange(cfg.n_antennas)
    phase = 2.0 * np.pi * cfg.antenna_spacing_m / cfg.wavelength_m
    steer_dtheta = (1j * phase * np.cos(params.aod)[:, None] * idx[None, :]) * steer
    rot = _delay_phases(params.toa, cfg)

    proj = np.einsum("ki,gni->kgn", steer, pilots.combined)
    proj_dtheta = np.einsum("ki,gni->kgn", steer_dtheta, pilots.combined)
    response = rot[:, None, :] * proj  # per-path mean without the gain

    n = np.arange(cfg.n_subcarriers)
    delay_factor = -2j * np.pi * n / cfg.max_delay_s
    gains = params.gains[:, None, None]
    d_tau = gains * delay_factor[None, None, :] * response
    d_theta = gains * rot[:, None, :] * proj_dtheta
    d_re = response
    d_im = 1j * response
    return np.concatenate([d_tau, d_theta, d_re, d_im], axis=0)


def sample_noisy_observations(mean: np.ndarray, sigma: float, seed: int) -> np.ndarray:
    """Add circularly-symmetric complex Gaussian noise with total variance sigma^2."""
    if sigma < 0.0:
        raise InvalidNoise(f"sigma must be non-negative, got {sigma}")
    rng = np.random.default_rng(seed)
    shape = np.shape(mean)
    noise = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return mean + (sigma / np.sqrt(2.0)) * noise


def snr_db(mean: np.ndarray, sigma: float) -> float:
    """Signal-to-noise ratio of the given means against noise level ``sigma``."""
    if sigma <= 0.0:
        raise InvalidNoise(f"sigma must be positive, got {sigma}")
    power = float(np.sum(np.abs(mean) ** 2))
    return 10.0 * np.log10(power / (mean.size * sigma * sigma))
