"""Problem configuration: geometry, frequency, discretization, iteration counts."""

import dataclasses
import hashlib
import json
import math

C0 = 299792458.0  # speed of light in vacuum, m/s


class ConfigError(ValueError):
    """Invalid or inconsistent problem configuration."""


@dataclasses.dataclass(frozen=True)
class ProblemConfig:
    frequency_hz: float = 110e6
    grid_nx: int = 32
    grid_ny: int = 32
    pixel_size_m: float = 0.15
    tx_count: int = 16
    rx_count: int = 32
    transceiver_radius_m: float = 4.0
    n_bim: int = 3
    n_lwb: int = 6
    n_bcg: int = 4
    n_pow: int = 5
    sbim_delta: float = 0.001
    snr_db: object = "noiseless"  # float (dB) or the string "noiseless"

    def __post_init__(self):
        self.validate()

    @property
    def n_pixels(self):
        return self.grid_nx * self.grid_ny

    @property
    def k0(self):
        """Background wavenumber 2*pi*f/c, rad/m."""
        return 2.0 * math.pi * self.frequency_hz / C0

    @property
    def domain_size_m(self):
        """(width, height) of the square imaging domain, m."""
        return (self.grid_nx * self.pixel_size_m, self.grid_ny * self.pixel_size_m)

    def validate(self):
        if self.frequency_hz <= 0:
            raise ConfigError("frequency_hz must be > 0")
        if self.grid_nx < 1 or self.grid_ny < 1:
            raise ConfigError("grid dimensions must be positive")
        if self.pixel_size_m <= 0:
            raise ConfigError("pixel_size_m must be > 0")
        if self.tx_count < 1 or self.rx_count < 1:
            raise ConfigError("transceiver counts must be positive")
        wx, wy = self.domain_size_m
        half_diag = 0.5 * math.hypot(wx, wy)
        if self.transceiver_radius_m <= half_diag:
            raise ConfigError(
                f"transceiver_radius_m={self.transceiver_radius_m} must exceed half "
                f"the grid diagonal ({half_diag:.4f} m); transceivers sit outside the domain")
        for name in ("n_bim", "n_lwb", "n_bcg", "n_pow"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.sbim_delta < 0:
            raise ConfigError("sbim_delta must be >= 0")
        if self.snr_db != "noiseless" and not isinstance(self.snr_db, (int, float)):
            raise ConfigError('snr_db must be a number (dB) or "noiseless"')

    def to_dict(self):
        return dataclasses.asdict(self)


_FIELD_NAMES = {f.name for f in dataclasses.fields(ProblemConfig)}


def config_from_dict(data):
    unknown = set(data) - _FIELD_NAMES
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        return ProblemConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path):
    """Read a ProblemConfig from a JSON file; unknown keys are an error."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigError("config file must contain a JSON object")
    return config_from_dict(data)


def config_hash(config):
    """Stable hash of the configuration (canonical JSON, sha256 hex prefix)."""
    canonical = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
