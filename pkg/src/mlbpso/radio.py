"""Static downlink radio model.

Propagation (Okumura-Hata style log-distance), a parabolic three-sector
antenna pattern, the co-channel interference matrix, load-weighted
interference, SINR and an attenuated-Shannon SINR-to-efficiency map.

Scalar functions take one link at a time and are the readable reference
used by the tests; the ``*_matrix`` helpers are the vectorized forms the
simulator calls once per snapshot.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InvalidInputError


@dataclass(frozen=True)
class RadioConstants:
    noise_density_dbm_hz: float = -174.0
    prb_bandwidth_hz: float = 180e3
    pathloss_intercept_db: float = 128.0
    pathloss_slope_db: float = 37.6
    shadowing_sigma_db: float = 6.0
    min_distance_m: float = 35.0

    def __post_init__(self):
        if self.shadowing_sigma_db < 0:
            raise ConfigurationError("shadowing_sigma_db must be >= 0")
        if not self.prb_bandwidth_hz > 0:
            raise ConfigurationError("prb_bandwidth_hz must be > 0")
        if not self.min_distance_m > 0:
            raise ConfigurationError("min_distance_m must be > 0")

    @property
    def noise_dbm(self) -> float:
        """Thermal noise over one PRB."""
        return self.noise_density_dbm_hz + 10.0 * math.log10(self.prb_bandwidth_hz)

    @property
    def noise_mw(self) -> float:
        return dbm_to_mw(self.noise_dbm)


@dataclass(frozen=True)
class AntennaPattern:
    max_gain_db: float = 15.0
    beamwidth_3db_deg: float = 65.0
    front_to_back_db: float = 25.0


@dataclass(frozen=True)
class EfficiencyMap:
    """Attenuated Shannon bound standing in for a link-level quality table."""

    alpha: float = 0.75
    cap: float = 4.8
    sinr_min_db: float = -6.5

    def __post_init__(self):
        if not self.alpha > 0 or not self.cap > 0:
            raise ConfigurationError("efficiency map needs alpha > 0 and cap > 0")
        if not math.isfinite(self.sinr_min_db):
            raise ConfigurationError("sinr_min_db must be finite")


@dataclass(frozen=True)
class EnbConfig:
    id: int
    x: float
    y: float
    azimuth: float
    frequency_group: int = 0
    prb_count: int = 15
    prb_tx_power_dbm: float = 32.0
    pilot_power_dbm: float | None = None
    antenna: AntennaPattern = field(default_factory=AntennaPattern)

    def __post_init__(self):
        if self.prb_count < 1:
            raise ConfigurationError(f"eNB {self.id}: prb_count must be >= 1")
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ConfigurationError(f"eNB {self.id}: position must be finite")
        if not math.isfinite(self.prb_tx_power_dbm):
            raise ConfigurationError(f"eNB {self.id}: prb_tx_power_dbm must be finite")
        if self.pilot_power_dbm is None:
            object.__setattr__(self, "pilot_power_dbm", self.prb_tx_power_dbm)

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class LinkGain:
    """Per-cell link terms towards one mobile, all in dB.

    Arrays are indexed by cell. The linear coupling is
    ``G * S / Q``, i.e. antenna gain and shadowing add, path loss subtracts.
    """

    antenna_gain: np.ndarray
    path_loss: np.ndarray
    shadowing: np.ndarray

    def coupling_mw(self) -> np.ndarray:
        return 10.0 ** ((np.asarray(self.antenna_gain) + np.asarray(self.shadowing)
                         - np.asarray(self.path_loss)) / 10.0)


def dbm_to_mw(dbm):
    if np.ndim(dbm) == 0:
        return 10.0 ** (float(dbm) / 10.0)
    return 10.0 ** (np.asarray(dbm, dtype=float) / 10.0)


def mw_to_dbm(mw):
    return 10.0 * np.log10(mw)


def path_loss(distance_km: float, constants: RadioConstants = RadioConstants()) -> float:
    """Log-distance path loss in dB, ``intercept + slope * log10(R)`` with R in km.

    Distances below ``constants.min_distance_m`` are clamped up to it.
    """
    if not math.isfinite(distance_km):
        raise InvalidInputError(f"distance must be finite, got {distance_km}")
    r = max(distance_km, constants.min_distance_m / 1000.0)
    if r <= 0:
        raise InvalidInputError(f"distance must be positive, got {distance_km}")
    return constants.pathloss_intercept_db + constants.pathloss_slope_db * math.log10(r)


def path_loss_matrix(distance_m: np.ndarray, constants: RadioConstants) -> np.ndarray:
    d_km = np.maximum(distance_m, constants.min_distance_m) / 1000.0
    return constants.pathloss_intercept_db + constants.pathloss_slope_db * np.log10(d_km)


def wrap_degrees(angle):
    """Wrap to [-180, 180)."""
    return (np.asarray(angle) + 180.0) % 360.0 - 180.0


def pattern_gain(offset_deg, antenna: AntennaPattern):
    theta = wrap_degrees(offset_deg)
    attenuation = np.minimum(12.0 * (theta / antenna.beamwidth_3db_deg) ** 2,
                             antenna.front_to_back_db)
    return antenna.max_gain_db - attenuation


def antenna_gain(enb: EnbConfig, target: tuple[float, float]) -> float:
    """Sector antenna gain (dBi) from ``enb`` towards the point ``target``."""
    dx, dy = target[0] - enb.x, target[1] - enb.y
    if dx == 0 and dy == 0:
        raise InvalidInputError("target coincides with the eNB position")
    # azimuth measured clockwise from north
    bearing = math.degrees(math.atan2(dx, dy))
    return float(pattern_gain(bearing - enb.azimuth, enb.antenna))


def build_interference_matrix(layout: list[EnbConfig], reuse_factor: int) -> np.ndarray:
    """Boolean co-channel matrix: ``a[k, i]`` is True iff k != i share a band."""
    if reuse_factor < 1:
        raise ConfigurationError("reuse_factor must be >= 1")
    groups = np.array([e.frequency_group for e in layout], dtype=int)
    bad = [e.id for e in layout if not 0 <= e.frequency_group < reuse_factor]
    if bad:
        raise ConfigurationError(
            f"frequency_group out of range for reuse {reuse_factor}: eNBs {bad}")
    a = groups[:, None] == groups[None, :]
    np.fill_diagonal(a, False)
    return a


def interference(k: int, link: LinkGain, loads, a, powers_mw) -> float:
    """Mean co-channel interference (mW) at a mobile served by cell ``k``.

    Sum over i != k of ``A[k,i] * L_i * P_i * G_i * S_i / Q_i``.
    """
    loads = np.asarray(loads, dtype=float)
    powers_mw = np.asarray(powers_mw, dtype=float)
    a = np.asarray(a)
    coupling = link.coupling_mw()
    n = len(loads)
    if not (len(powers_mw) == n and len(coupling) == n and a.shape == (n, n)):
        raise InvalidInputError("loads, powers, link gains and A must agree in size")
    mask = a[k].astype(float)
    mask[k] = 0.0
    return float(np.sum(mask * loads * powers_mw * coupling))


def sinr(k: int, link: LinkGain, interference_mw: float, powers_mw,
         constants: RadioConstants = RadioConstants()) -> float:
    """Downlink SINR in dB for a mobile served by ``k``."""
    signal = float(np.asarray(powers_mw, dtype=float)[k] * link.coupling_mw()[k])
    return 10.0 * math.log10(signal / (interference_mw + constants.noise_mw))


def sinr_matrix(coupling: np.ndarray, serving: np.ndarray, loads: np.ndarray,
                a: np.ndarray, powers_mw: np.ndarray, noise_mw: float) -> np.ndarray:
    """SINR (dB) for many mobiles at once.

    ``coupling`` is (mobiles, cells) linear gain; ``serving`` the serving cell
    per mobile. Interference uses the same load-weighted co-channel sum as
    :func:`interference`.
    """
    rx = coupling * powers_mw[None, :]
    rows = np.arange(len(serving))
    signal = rx[rows, serving]
    co = np.asarray(a, dtype=float)[serving]
    interf = np.einsum("mi,mi->m", rx * loads[None, :], co)
    return 10.0 * np.log10(signal / (interf + noise_mw))


def spectral_efficiency(sinr_db, emap: EfficiencyMap = EfficiencyMap()):
    """Bits/s/Hz for a given SINR in dB; zero below the decoding floor."""
    s = np.asarray(sinr_db, dtype=float)
    with np.errstate(over="ignore"):
        eff = np.minimum(emap.cap, emap.alpha * np.log2(1.0 + 10.0 ** (s / 10.0)))
    eff = np.where(s < emap.sinr_min_db, 0.0, eff)
    return float(eff) if eff.ndim == 0 else eff
