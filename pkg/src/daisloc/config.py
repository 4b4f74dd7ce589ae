"""Radio-system constants and the sampling quantities derived from them."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

from .errors import ValidationError


@dataclass(frozen=True)
class SystemConfig:
    """Constants of a MISO-OFDM link with a half-wavelength uniform linear array.

    ``noise_std`` is the standard deviation of the complex observation noise
    (total variance per complex sample, split evenly between real and
    imaginary parts). Derived quantities (sampling period, wavelength,
    antenna spacing) are properties so they can never drift out of sync with
    the primary fields.
    """

    n_antennas: int
    n_subcarriers: int
    n_symbols: int
    carrier_hz: float
    bandwidth_hz: float
    light_speed_mps: float = 3.0e8
    noise_std: float = 1.0

    def __post_init__(self):
        for name in ("n_antennas", "n_subcarriers", "n_symbols"):
            value = getattr(self, name)
            if int(value) != value or int(value) <= 0:
                raise ValidationError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        for name in ("carrier_hz", "bandwidth_hz", "light_speed_mps"):
            value = float(getattr(self, name))
            if not value > 0.0:
                raise ValidationError(f"{name} must be positive, got {value!r}")
            object.__setattr__(self, name, value)
        sigma = float(self.noise_std)
        if not sigma >= 0.0:
            raise ValidationError(f"noise_std must be non-negative, got {self.noise_std!r}")
        object.__setattr__(self, "noise_std", sigma)
        if self.bandwidth_hz >= self.carrier_hz / 10.0:
            warnings.warn(
                "bandwidth is not small against the carrier; the narrowband "
                "channel model degrades in this regime",
                stacklevel=2,
            )

    @property
    def sample_period_s(self) -> float:
        return 1.0 / self.bandwidth_hz

    @property
    def max_delay_s(self) -> float:
        """Upper edge of the admissible delay interval (0, N*Ts]."""
        return self.n_subcarriers * self.sample_period_s

    @property
    def wavelength_m(self) -> float:
        return self.light_speed_mps / self.carrier_hz

    @property
    def antenna_spacing_m(self) -> float:
        return self.wavelength_m / 2.0

    def with_noise_std(self, sigma: float) -> "SystemConfig":
        """Copy of this config with a different noise level."""
        return replace(self, noise_std=float(sigma))
