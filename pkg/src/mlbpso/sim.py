"""Semi-dynamic downlink simulator.

The network advances in one-second correlated snapshots. Each snapshot runs,
in order: arrivals, mobility, controller update, PRB scheduling,
transmission, handover checks, departures and KPI bookkeeping.

Sessions are stored column-wise in :class:`Sessions`; row order is
admission order, which is also the first-come first-serve order used by the
scheduler and the handover pass.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .control import DynamicSampler, FixedController
from .errors import ConfigurationError, SimulationError
from .radio import path_loss_matrix, pattern_gain, sinr_matrix, spectral_efficiency
from .scenario import Scenario


@dataclass(frozen=True)
class SimConfig:
    snapshot_dt: float = 1.0
    arrival_rate: float = 5.0
    mobile_fraction: float = 0.4
    speed_kmh: float = 30.0
    ho_power_threshold_dbm: float = -110.0
    hysteresis_db: float = 0.0
    duration: float = 2000.0
    warmup: float = 0.0
    file_size_bits: int = 10_000_000
    max_prbs_per_user: int = 4
    load_window: int = 10
    pingpong_window: float = 10.0

    def __post_init__(self):
        if not self.snapshot_dt > 0:
            raise ConfigurationError("snapshot_dt must be > 0")
        if self.arrival_rate < 0:
            raise ConfigurationError("arrival_rate must be >= 0")
        if not 0.0 <= self.mobile_fraction <= 1.0:
            raise ConfigurationError("mobile_fraction must lie in [0, 1]")
        if self.duration < 0 or self.warmup < 0:
            raise ConfigurationError("duration and warmup must be >= 0")
        if self.load_window < 1:
            raise ConfigurationError("load_window must be >= 1 snapshot")
        if self.max_prbs_per_user < 1 or self.file_size_bits < 1:
            raise ConfigurationError("max_prbs_per_user and file_size_bits must be >= 1")

    @property
    def n_snapshots(self) -> int:
        return int(round(self.duration / self.snapshot_dt))

    @property
    def speed_ms(self) -> float:
        return self.speed_kmh / 3.6

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown sim config fields: {sorted(unknown)}")
        return cls(**d)


@dataclass
class KpiReport:
    throughput_bps: float
    p_access: float
    zero_attempts: bool
    attempts: int
    successes: int
    measured_duration: float
    handovers: int
    pingpongs: int
    completed_sessions: int
    delivered_bits: list[int]
    mean_loads: list[float]
    hm_best_neighbor: list[dict] = field(default_factory=list)

    @property
    def objectives(self) -> tuple[float, float]:
        return (self.throughput_bps, self.p_access)

    @property
    def load_std(self) -> float:
        return float(np.std(self.mean_loads))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "KpiReport":
        return cls(**d)

    def dumps(self) -> str:
        return json.dumps({"schema": "mlbpso-kpi/1", **self.to_dict()}, indent=2) + "\n"

    @classmethod
    def loads(cls, text: str) -> "KpiReport":
        d = json.loads(text)
        d.pop("schema", None)
        return cls.from_dict(d)


def best_server(rx_dbm: np.ndarray) -> int:
    """Index of the strongest received pilot; ties go to the lowest cell id."""
    return int(np.argmax(rx_dbm))


def schedule_prbs(n_sessions: int, prb_count: int, max_per_user: int = 4) -> list[int]:
    """Two-pass first-come first-serve allocation for one cell.

    Pass one grants a single PRB to each session in arrival order while PRBs
    last; pass two tops each granted session up to ``max_per_user`` in the
    same order.
    """
    alloc = [0] * n_sessions
    free = prb_count
    for r in range(n_sessions):
        if free == 0:
            break
        alloc[r] = 1
        free -= 1
    for r in range(n_sessions):
        if alloc[r] == 0 or free == 0:
            break
        extra = min(max_per_user - 1, free)
        alloc[r] += extra
        free -= extra
    return alloc


def measure_load(occupancy_history, window: int) -> float:
    """Mean of the trailing ``window`` occupancy ratios (0 with no history)."""
    hist = list(occupancy_history)[-window:]
    return float(np.mean(hist)) if hist else 0.0


def handover_check(rx_dbm: np.ndarray, serving: int, hm: np.ndarray, hysteresis: float,
                   threshold_dbm: float, has_free_prb) -> int | None:
    """Target cell id if a handover from ``serving`` should execute, else None.

    The candidate is the cell with the largest pilot advantage
    ``P_i - P_k`` among those satisfying ``P_i - P_k >= HM[k, i] + hysteresis``;
    it is accepted only if its pilot clears ``threshold_dbm`` and
    ``has_free_prb(i)`` holds.
    """
    diff = rx_dbm - rx_dbm[serving]
    eligible = diff >= hm[serving] + hysteresis
    eligible[serving] = False
    if not eligible.any():
        return None
    target = int(np.argmax(np.where(eligible, diff, -np.inf)))
    if rx_dbm[target] < threshold_dbm or not has_free_prb(target):
        return None
    return target


class Sessions:
    """Column store of active sessions, rows in admission order."""

    _int_cols = ("id", "serving", "remaining", "initial", "alloc", "prev_cell")
    _float_cols = ("admitted", "last_ho")

    def __init__(self, n_cells: int):
        self.id = np.zeros(0, np.int64)
        self.serving = np.zeros(0, np.int64)
        self.remaining = np.zeros(0, np.int64)
        self.initial = np.zeros(0, np.int64)
        self.alloc = np.zeros(0, np.int64)
        self.prev_cell = np.zeros(0, np.int64)
        self.admitted = np.zeros(0)
        self.last_ho = np.zeros(0)
        self.pos = np.zeros((0, 2))
        self.vel = np.zeros((0, 2))
        self.shadow = np.zeros((0, n_cells))

    def __len__(self) -> int:
        return len(self.id)

    def _columns(self):
        return self._int_cols + self._float_cols + ("pos", "vel", "shadow")

    def append(self, **cols) -> None:
        for name in self._columns():
            setattr(self, name, np.concatenate([getattr(self, name), cols[name]]))

    def keep(self, mask: np.ndarray) -> None:
        for name in self._columns():
            setattr(self, name, getattr(self, name)[mask])


class Simulation:
    """Mutable state of one run. Construct, then call :meth:`step` repeatedly.

    ``controller`` is a :class:`FixedController`, a :class:`DynamicSampler`
    or a bare (n, n) margin matrix.
    """

    def __init__(self, scenario: Scenario, controller, config: SimConfig, seed=0):
        if isinstance(controller, np.ndarray):
            controller = FixedController(controller)
        if not isinstance(controller, (FixedController, DynamicSampler)):
            raise ConfigurationError(f"unsupported controller {type(controller).__name__}")
        self.scenario = scenario
        self.config = config
        self.controller = controller
        self.rng = np.random.default_rng(seed)
        n = scenario.n_cells
        self.n_cells = n
        self.hm = np.array(controller.initial(n), dtype=float)
        self._co_channel = scenario.interference_matrix.astype(float)
        self._data_mw = 10.0 ** (scenario.data_power_dbm / 10.0)
        self._pilot_dbm = scenario.pilot_power_dbm
        self._prb = scenario.prb_counts
        self._noise_mw = scenario.radio.noise_mw
        self.sessions = Sessions(n)
        self.used = np.zeros(n, np.int64)
        self.clock = 0.0
        self.step_index = 0
        self._next_id = 0
        self._occupancy = np.zeros((config.load_window, n))
        self._occ_count = 0
        self.last_occupancy = np.zeros(n)
        # accumulators
        self.attempts = 0
        self.successes = 0
        self.measured_attempts = 0
        self.measured_successes = 0
        self.delivered_total = np.zeros(n, np.int64)
        self.delivered_measured = np.zeros(n, np.int64)
        self.completed_bits = 0
        self.completed_sessions = 0
        self.handovers = 0
        self.pingpongs = 0
        self.ho_counts = np.zeros((n, n), np.int64)
        self.measured_steps = 0
        self.load_sum = np.zeros(n)
        self.hm_sum = np.zeros((n, n))

    # -- geometry ---------------------------------------------------------

    def link_terms(self, pos: np.ndarray, shadow: np.ndarray):
        """Received pilot (dBm) and linear coupling for mobiles at ``pos``."""
        sc = self.scenario
        dx = pos[:, 0:1] - sc.positions[None, :, 0]
        dy = pos[:, 1:2] - sc.positions[None, :, 1]
        dist = np.hypot(dx, dy)
        bearing = np.degrees(np.arctan2(dx, dy))
        gain = pattern_gain(bearing - sc.azimuths[None, :], sc.enbs[0].antenna)
        coupling_db = gain - path_loss_matrix(dist, sc.radio) + shadow
        return self._pilot_dbm[None, :] + coupling_db, 10.0 ** (coupling_db / 10.0)

    @property
    def measuring(self) -> bool:
        return self.clock >= self.config.warmup - 1e-9

    @property
    def load_estimate(self) -> np.ndarray:
        k = min(self._occ_count, self.config.load_window)
        if k == 0:
            return np.zeros(self.n_cells)
        return self._occupancy[:k].mean(axis=0)

    def has_free_prb(self, cell: int) -> bool:
        return bool(self.used[cell] < self._prb[cell])

    # -- snapshot phases --------------------------------------------------

    def admit_arrivals(self, dt: float) -> int:
        cfg, sc, rng = self.config, self.scenario, self.rng
        n = int(rng.poisson(cfg.arrival_rate * dt)) if cfg.arrival_rate > 0 else 0
        if n == 0:
            return 0
        xmin, xmax, ymin, ymax = sc.area
        pos = np.c_[rng.uniform(xmin, xmax, n), rng.uniform(ymin, ymax, n)]
        shadow = rng.normal(0.0, sc.radio.shadowing_sigma_db, (n, self.n_cells))
        mobile = rng.uniform(size=n) < cfg.mobile_fraction
        heading = rng.uniform(0.0, 2 * np.pi, n)
        rx, _ = self.link_terms(pos, shadow)
        accepted = []
        cells = []
        for j in range(n):
            k = best_server(rx[j])
            if rx[j, k] >= cfg.ho_power_threshold_dbm and self.has_free_prb(k):
                self.used[k] += 1
                accepted.append(j)
                cells.append(k)
        self.attempts += n
        self.successes += len(accepted)
        if self.measuring:
            self.measured_attempts += n
            self.measured_successes += len(accepted)
        if accepted:
            idx = np.array(accepted)
            m = len(idx)
            speed = np.where(mobile[idx], cfg.speed_ms, 0.0)
            self.sessions.append(
                id=np.arange(self._next_id, self._next_id + m),
                serving=np.array(cells, np.int64),
                remaining=np.full(m, cfg.file_size_bits, np.int64),
                initial=np.full(m, cfg.file_size_bits, np.int64),
                alloc=np.ones(m, np.int64),
                prev_cell=np.full(m, -1, np.int64),
                admitted=np.full(m, self.clock),
                last_ho=np.full(m, -np.inf),
                pos=pos[idx],
                vel=np.c_[speed * np.sin(heading[idx]), speed * np.cos(heading[idx])],
                shadow=shadow[idx],
            )
            self._next_id += m
        return n

    def move_users(self, dt: float) -> None:
        s = self.sessions
        if len(s) == 0:
            return
        xmin, xmax, ymin, ymax = self.scenario.area
        pos = s.pos + s.vel * dt
        vel = s.vel.copy()
        for axis, lo, hi in ((0, xmin, xmax), (1, ymin, ymax)):
            below = pos[:, axis] < lo
            above = pos[:, axis] > hi
            pos[below, axis] = 2 * lo - pos[below, axis]
            pos[above, axis] = 2 * hi - pos[above, axis]
            vel[below | above, axis] *= -1
            np.clip(pos[:, axis], lo, hi, out=pos[:, axis])
        s.pos, s.vel = pos, vel

    def schedule(self) -> None:
        s = self.sessions
        alloc = np.zeros(len(s), np.int64)
        if len(s):
            cap = self.config.max_prbs_per_user
            order = np.argsort(s.serving, kind="stable")
            cells = s.serving[order]
            counts = np.bincount(s.serving, minlength=self.n_cells)
            starts = np.cumsum(counts) - counts
            rank = np.arange(len(s)) - starts[cells]
            prb = self._prb[cells]
            granted = rank < prb
            free_after = prb - np.minimum(counts[cells], prb)
            extra = np.clip(free_after - (cap - 1) * rank, 0, cap - 1)
            alloc[order] = np.where(granted, 1 + extra, 0)
        s.alloc = alloc
        self.used = np.bincount(s.serving, weights=alloc, minlength=self.n_cells).astype(np.int64)
        self.last_occupancy = self.used / self._prb

    def transmit(self, dt: float, coupling: np.ndarray) -> None:
        s = self.sessions
        if len(s) == 0:
            return
        sinr_db = sinr_matrix(coupling, s.serving, self.last_occupancy, self._co_channel,
                              self._data_mw, self._noise_mw)
        eff = spectral_efficiency(sinr_db, self.scenario.efficiency)
        rate = s.alloc * self.scenario.radio.prb_bandwidth_hz * eff
        sent = np.minimum(s.remaining, np.floor(rate * dt).astype(np.int64))
        s.remaining = s.remaining - sent
        per_cell = np.bincount(s.serving, weights=sent, minlength=self.n_cells).astype(np.int64)
        self.delivered_total += per_cell
        if self.measuring:
            self.delivered_measured += per_cell

    def handovers_pass(self, rx: np.ndarray) -> None:
        s = self.sessions
        if len(s) == 0:
            return
        cfg = self.config
        rows = np.arange(len(s))
        diff = rx - rx[rows, s.serving][:, None]
        eligible = diff >= self.hm[s.serving] + cfg.hysteresis_db
        eligible[rows, s.serving] = False
        active = s.remaining > 0
        for m in np.flatnonzero(eligible.any(axis=1) & active):
            k = int(s.serving[m])
            target = handover_check(rx[m], k, self.hm, cfg.hysteresis_db,
                                    cfg.ho_power_threshold_dbm, self.has_free_prb)
            if target is None:
                continue
            self.used[k] -= s.alloc[m]
            s.alloc[m] = 1
            self.used[target] += 1
            if target == s.prev_cell[m] and self.clock - s.last_ho[m] <= cfg.pingpong_window:
                self.pingpongs += 1
            s.prev_cell[m] = k
            s.last_ho[m] = self.clock
            s.serving[m] = target
            self.handovers += 1
            self.ho_counts[k, target] += 1

    def departures(self) -> None:
        s = self.sessions
        done = s.remaining == 0
        if not done.any():
            return
        self.used -= np.bincount(s.serving[done], weights=s.alloc[done],
                                 minlength=self.n_cells).astype(np.int64)
        self.completed_bits += int(s.initial[done].sum())
        self.completed_sessions += int(done.sum())
        s.keep(~done)

    def step(self) -> None:
        dt = self.config.snapshot_dt
        self.admit_arrivals(dt)
        self.move_users(dt)
        rx, coupling = self.link_terms(self.sessions.pos, self.sessions.shadow)
        update = self.controller.maybe_update(self.clock, self.load_estimate)
        if update is not None:
            self.hm = np.asarray(update, dtype=float)
        self.schedule()
        self.transmit(dt, coupling)
        self.handovers_pass(rx)
        self.departures()
        self._occupancy[self._occ_count % self.config.load_window] = self.last_occupancy
        self._occ_count += 1
        if self.measuring:
            self.measured_steps += 1
            self.load_sum += self.last_occupancy
            self.hm_sum += self.hm
        self.step_index += 1
        self.clock = self.step_index * dt

    # -- reporting --------------------------------------------------------

    def report(self) -> KpiReport:
        dt = self.config.snapshot_dt
        duration = self.measured_steps * dt
        delivered = self.delivered_measured
        throughput = float(delivered.sum()) / duration if duration > 0 else 0.0
        zero = self.measured_attempts == 0
        p_access = 1.0 if zero else self.measured_successes / self.measured_attempts
        if not (math.isfinite(throughput) and math.isfinite(p_access)):
            raise SimulationError(f"non-finite KPI: throughput={throughput}, p_access={p_access}")
        steps = max(self.measured_steps, 1)
        mean_loads = self.load_sum / steps
        exchange = self.ho_counts + self.ho_counts.T
        best = []
        for k in range(self.n_cells):
            if exchange[k].max() <= 0:
                continue
            j = int(np.argmax(exchange[k]))
            best.append({"cell": k, "neighbor": j, "hm": float(self.hm_sum[k, j] / steps),
                         "handovers": int(exchange[k, j])})
        return KpiReport(
            throughput_bps=throughput,
            p_access=float(p_access),
            zero_attempts=bool(zero),
            attempts=int(self.measured_attempts),
            successes=int(self.measured_successes),
            measured_duration=float(duration),
            handovers=int(self.handovers),
            pingpongs=int(self.pingpongs),
            completed_sessions=int(self.completed_sessions),
            delivered_bits=[int(v) for v in delivered],
            mean_loads=[float(v) for v in mean_loads],
            hm_best_neighbor=best,
        )


def run(scenario: Scenario, controller, config: SimConfig, seed=0, observer=None) -> KpiReport:
    """Simulate ``config.duration`` seconds and return the KPIs.

    ``observer(sim)`` is called after every snapshot, e.g. for invariant
    checks. Results are a pure function of the arguments.
    """
    sim = Simulation(scenario, controller, config, seed)
    for _ in range(config.n_snapshots):
        sim.step()
        if observer is not None:
            observer(sim)
    return sim.report()
