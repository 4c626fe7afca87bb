"""Network scenarios: eNB layout, radio constants and the traffic area.

A scenario is stored as a JSON document::

    {
      "schema": "mlbpso-scenario/1",
      "reuse_factor": 3,
      "area": [xmin, xmax, ymin, ymax],          # metres
      "radio": {RadioConstants fields},
      "efficiency": {EfficiencyMap fields},
      "antenna": {AntennaPattern fields},          # shared by every sector
      "enbs": [{"id", "x", "y", "azimuth", "frequency_group",
                "prb_count", "prb_tx_power_dbm", "pilot_power_dbm"}, ...]
    }

Cell ids must be 0..n-1 in list order.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .radio import (AntennaPattern, EfficiencyMap, EnbConfig, RadioConstants,
                    build_interference_matrix)

SCHEMA = "mlbpso-scenario/1"
SECTOR_AZIMUTHS = (30.0, 150.0, 270.0)


@dataclass(frozen=True)
class Scenario:
    enbs: tuple[EnbConfig, ...]
    area: tuple[float, float, float, float]
    radio: RadioConstants = field(default_factory=RadioConstants)
    efficiency: EfficiencyMap = field(default_factory=EfficiencyMap)
    reuse_factor: int = 3

    def __post_init__(self):
        if not self.enbs:
            raise ConfigurationError("scenario has no eNBs")
        ids = [e.id for e in self.enbs]
        if ids != list(range(len(ids))):
            raise ConfigurationError("eNB ids must be 0..n-1 in order")
        xmin, xmax, ymin, ymax = self.area
        if not (xmax > xmin and ymax > ymin):
            raise ConfigurationError(f"degenerate area {self.area}")
        build_interference_matrix(list(self.enbs), self.reuse_factor)

    @property
    def n_cells(self) -> int:
        return len(self.enbs)

    @cached_property
    def interference_matrix(self) -> np.ndarray:
        return build_interference_matrix(list(self.enbs), self.reuse_factor)

    @cached_property
    def positions(self) -> np.ndarray:
        return np.array([[e.x, e.y] for e in self.enbs], dtype=float)

    @cached_property
    def azimuths(self) -> np.ndarray:
        return np.array([e.azimuth for e in self.enbs], dtype=float)

    @cached_property
    def prb_counts(self) -> np.ndarray:
        return np.array([e.prb_count for e in self.enbs], dtype=np.int64)

    @cached_property
    def data_power_dbm(self) -> np.ndarray:
        return np.array([e.prb_tx_power_dbm for e in self.enbs], dtype=float)

    @cached_property
    def pilot_power_dbm(self) -> np.ndarray:
        return np.array([e.pilot_power_dbm for e in self.enbs], dtype=float)

    def to_dict(self) -> dict:
        antenna = self.enbs[0].antenna
        return {
            "schema": SCHEMA,
            "reuse_factor": self.reuse_factor,
            "area": list(self.area),
            "radio": asdict(self.radio),
            "efficiency": asdict(self.efficiency),
            "antenna": asdict(antenna),
            "enbs": [
                {"id": e.id, "x": e.x, "y": e.y, "azimuth": e.azimuth,
                 "frequency_group": e.frequency_group, "prb_count": e.prb_count,
                 "prb_tx_power_dbm": e.prb_tx_power_dbm,
                 "pilot_power_dbm": e.pilot_power_dbm}
                for e in self.enbs
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        if d.get("schema", SCHEMA) != SCHEMA:
            raise ConfigurationError(f"unsupported scenario schema {d.get('schema')!r}")
        try:
            antenna = AntennaPattern(**d.get("antenna", {}))
            enbs = tuple(EnbConfig(antenna=antenna, **rec) for rec in d["enbs"])
            return cls(
                enbs=enbs,
                area=tuple(float(v) for v in d["area"]),
                radio=RadioConstants(**d.get("radio", {})),
                efficiency=EfficiencyMap(**d.get("efficiency", {})),
                reuse_factor=int(d.get("reuse_factor", 3)),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"malformed scenario: {exc}") from exc

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "Scenario":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _hex_lattice(n: int) -> np.ndarray:
    """First ``n`` points of a unit-spacing hexagonal lattice, ring by ring."""
    pts = [(0.0, 0.0)]
    ring = 1
    dirs = [(math.cos(math.radians(60 * k + 120)), math.sin(math.radians(60 * k + 120)))
            for k in range(6)]
    while len(pts) < n:
        x, y = ring * 1.0, 0.0
        for dx, dy in dirs:
            for _ in range(ring):
                pts.append((x, y))
                x, y = x + dx, y + dy
        ring += 1
    return np.array(pts[:n])


def generate_layout(n_sites: int, isd_min_km: float = 1.5, isd_max_km: float = 2.0,
                    seed: int = 0, clustering: float = 0.0, margin_km: float | None = None,
                    prb_count: int = 15, prb_tx_power_dbm: float = 32.0,
                    radio: RadioConstants | None = None,
                    efficiency: EfficiencyMap | None = None,
                    antenna: AntennaPattern | None = None) -> Scenario:
    """Jittered hexagonal three-sector layout.

    Sites sit on a hexagonal grid with spacing equal to the mean inter-site
    distance, each displaced by a uniform offset of up to half the ISD spread
    so neighbouring distances land roughly in ``[isd_min, isd_max]``.
    ``clustering > 0`` warps radii as ``r * (r / R) ** clustering``,
    packing the core densely and leaving sparse outer sites, which skews
    the per-cell load distribution. Sector s of every site uses frequency
    group s (reuse 3).
    """
    if n_sites < 1:
        raise ConfigurationError("n_sites must be >= 1")
    if not 0 < isd_min_km <= isd_max_km:
        raise ConfigurationError("need 0 < isd_min_km <= isd_max_km")
    if clustering < 0:
        raise ConfigurationError("clustering must be >= 0")
    rng = np.random.default_rng(seed)
    isd_mean = 500.0 * (isd_min_km + isd_max_km)
    spread = 500.0 * (isd_max_km - isd_min_km)
    sites = _hex_lattice(n_sites) * isd_mean
    radius = spread * np.sqrt(rng.uniform(size=n_sites))
    angle = rng.uniform(0.0, 2 * np.pi, size=n_sites)
    sites = sites + np.c_[radius * np.cos(angle), radius * np.sin(angle)]
    if clustering > 0 and n_sites > 1:
        r = np.hypot(sites[:, 0], sites[:, 1])
        rmax = r.max()
        sites = sites * ((r / rmax) ** clustering)[:, None]
    antenna = antenna or AntennaPattern()
    enbs = []
    for s, (x, y) in enumerate(sites):
        for g, az in enumerate(SECTOR_AZIMUTHS):
            enbs.append(EnbConfig(id=len(enbs), x=round(float(x), 3), y=round(float(y), 3),
                                  azimuth=az, frequency_group=g, prb_count=prb_count,
                                  prb_tx_power_dbm=prb_tx_power_dbm, antenna=antenna))
    margin = 0.5 * isd_mean if margin_km is None else 1000.0 * margin_km
    area = (round(float(sites[:, 0].min() - margin), 3), round(float(sites[:, 0].max() + margin), 3),
            round(float(sites[:, 1].min() - margin), 3), round(float(sites[:, 1].max() + margin), 3))
    return Scenario(enbs=tuple(enbs), area=area, radio=radio or RadioConstants(),
                    efficiency=efficiency or EfficiencyMap(), reuse_factor=3)
