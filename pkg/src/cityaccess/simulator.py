"""Day-loop orchestration.

Each simulated day: eligibility gating, passenger matchmaking, Bernoulli
grant draws under the shared gain, optional bond contracts over the
ledger, gain update, and emissions accounting. Control state lives in
numpy arrays so full-city populations stay cheap; the ledger path builds
per-stop objects only for the days it is enabled.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from . import compliance, emissions
from .ledger import LedgerDag, ObserverRegistry
from .matchmaking import WINDOW_TICKS, Stop, assign_seats


class ConfigError(ValueError):
    pass


@dataclass
class ScheduleSpec:
    """Piecewise-linear capacity schedule over days.

    `points` are (day, N) breakpoints; values hold flat before the first
    and after the last breakpoint.
    """

    points: list[tuple[int, int]]

    @classmethod
    def constant(cls, n: int) -> "ScheduleSpec":
        return cls(points=[(0, n)])

    @classmethod
    def ramp(
        cls, low: int, high: int,
        hold_low: int = 60, ramp_up: int = 40, hold_high: int = 80,
        ramp_down: int = 40,
    ) -> "ScheduleSpec":
        """low for hold_low days, ramp to high, hold, ramp back to low."""
        d0 = hold_low
        d1 = d0 + ramp_up
        d2 = d1 + hold_high
        d3 = d2 + ramp_down
        return cls(points=[(0, low), (d0, low), (d1, high), (d2, high), (d3, low)])

    def max_n(self) -> int:
        return max(v for _, v in self.points)

    def __call__(self, day: int) -> int:
        days = [d for d, _ in self.points]
        values = [v for _, v in self.points]
        return int(round(float(np.interp(day, days, values))))


def n_schedule(day: int, schedule: ScheduleSpec) -> int:
    """Permitted car count for the given day."""
    return schedule(day)


@dataclass
class BoxModelParams:
    """Per-day emissions coupling: annualized per-car airborne mass over
    the street-network volume."""

    per_car_airborne_kg_year: float = 0.4
    volume_m3: float = 450e6
    air_changes_per_hour: float = 1.0


@dataclass
class ScenarioConfig:
    population: int
    fleet_size: int
    schedule: ScheduleSpec
    days: int
    alpha: float
    gamma0: float = 1.0
    seat_capacity: int = 4
    passenger_count: int = 0
    cost_weights: list[float] | None = None
    fixed_occupancy: bool = False
    behavior: compliance.BehaviorModel = field(default_factory=compliance.BehaviorModel)
    box_model: BoxModelParams = field(default_factory=BoxModelParams)
    ledger_mode: str = "off"  # off | full | sampled
    ledger_sample_days: int = 0
    driver_tokens: int | None = None
    passenger_tokens: int = 1
    seed: int = 0

    def validate(self) -> None:
        if self.days < 1:
            raise ConfigError(f"days must be >= 1, got {self.days}")
        if self.alpha <= 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if self.gamma0 < 0:
            raise ConfigError(f"gamma0 must be nonnegative, got {self.gamma0}")
        if self.seat_capacity < 1:
            raise ConfigError(f"seat_capacity must be >= 1, got {self.seat_capacity}")
        max_n = self.schedule.max_n()
        if not 0 < max_n <= self.fleet_size:
            raise ConfigError(
                f"schedule max N={max_n} must satisfy 0 < N <= fleet_size="
                f"{self.fleet_size}"
            )
        if self.fleet_size >= self.population:
            raise ConfigError(
                f"population={self.population} must exceed fleet_size={self.fleet_size}"
            )
        if self.cost_weights is not None and len(self.cost_weights) != self.fleet_size:
            raise ConfigError(
                f"cost_weights length {len(self.cost_weights)} != fleet_size "
                f"{self.fleet_size}"
            )
        if self.ledger_mode not in ("off", "full", "sampled"):
            raise ConfigError(
                f"ledger_mode must be off|full|sampled, got {self.ledger_mode!r}"
            )
        if self.ledger_mode == "sampled" and self.ledger_sample_days < 1:
            raise ConfigError("sampled ledger mode needs ledger_sample_days >= 1")

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        data = dict(raw)
        sched = data.pop("schedule")
        if isinstance(sched, (int, float)):
            schedule = ScheduleSpec.constant(int(sched))
        elif isinstance(sched, dict) and "points" in sched:
            schedule = ScheduleSpec(points=[tuple(p) for p in sched["points"]])
        else:
            raise ConfigError(f"unrecognized schedule spec: {sched!r}")
        behavior = compliance.BehaviorModel(**data.pop("behavior", {}))
        box = BoxModelParams(**data.pop("box_model", {}))
        try:
            cfg = cls(schedule=schedule, behavior=behavior, box_model=box, **data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        cfg.validate()
        return cfg


@dataclass
class DailyMetrics:
    day: int
    granted: int
    gamma: float
    mean_occupancy: float
    seated_passengers: int
    tokens_forfeited: int
    pm_ug_m3: float


@dataclass
class ScenarioResult:
    metrics: list[DailyMetrics]
    driver_frequencies: np.ndarray
    passenger_frequencies: np.ndarray
    dag: LedgerDag | None = None

    def granted_series(self) -> np.ndarray:
        return np.array([m.granted for m in self.metrics], dtype=float)


class Simulation:
    """Mutable day-by-day state for one scenario."""

    def __init__(self, config: ScenarioConfig):
        config.validate()
        self.cfg = config
        n_cars = config.fleet_size
        self.day = 0
        self.gamma = config.gamma0
        self.x_avg = np.zeros(n_cars)
        self.weights = (
            np.array(config.cost_weights, dtype=float)
            if config.cost_weights is not None
            else np.ones(n_cars)
        )
        self.capacity = np.full(n_cars, config.seat_capacity, dtype=np.int64)
        self.occupancy = np.zeros(n_cars, dtype=np.int64)
        self.granted_days = np.zeros(n_cars, dtype=np.int64)
        n_pass = config.passenger_count
        self.p_participating = np.zeros(n_pass, dtype=np.int64)
        self.p_assigned = np.zeros(n_pass, dtype=np.int64)
        self.p_accessed = np.zeros(n_pass, dtype=np.int64)
        self.dag: LedgerDag | None = None
        if config.ledger_mode != "off":
            self.dag = self._build_ledger()

    # -- helpers -----------------------------------------------------------

    def _rng(self, stream: int) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence([self.cfg.seed, self.day, stream])
        )

    def driver_id(self, i: int) -> str:
        return f"car-{i}"

    def passenger_id(self, j: int) -> str:
        return f"pax-{j}"

    def point_id(self, j: int) -> str:
        return f"pt-{j}"

    def _build_ledger(self) -> LedgerDag:
        registry = ObserverRegistry()
        balances: dict[str, int] = {}
        driver_tokens = (
            self.cfg.driver_tokens
            if self.cfg.driver_tokens is not None
            else self.cfg.seat_capacity
        )
        for i in range(self.cfg.fleet_size):
            balances[self.driver_id(i)] = driver_tokens
        for j in range(self.cfg.passenger_count):
            balances[self.passenger_id(j)] = self.cfg.passenger_tokens
            registry.register(self.point_id(j), f"obs-{j}")
        return LedgerDag(registry, balances, rng=np.random.default_rng(self.cfg.seed))

    def _ledger_active_today(self) -> bool:
        if self.dag is None:
            return False
        if self.cfg.ledger_mode == "full":
            return True
        return self.day < self.cfg.ledger_sample_days

    # -- one day -----------------------------------------------------------

    def step_day(self) -> DailyMetrics:
        cfg = self.cfg
        k = self.day
        n_today = cfg.schedule(k)
        ledger_today = self._ledger_active_today()

        # eligibility gating: only enforced when the ledger is running
        if ledger_today:
            assert self.dag is not None
            driver_ok = np.array([
                compliance.eligibility(
                    self.driver_id(i), self.dag, "driver", int(self.capacity[i])
                )
                for i in range(cfg.fleet_size)
            ])
            pax_ok = np.array([
                compliance.eligibility(self.passenger_id(j), self.dag, "passenger")
                for j in range(cfg.passenger_count)
            ])
        else:
            driver_ok = np.ones(cfg.fleet_size, dtype=bool)
            pax_ok = np.ones(cfg.passenger_count, dtype=bool)

        # matchmaking
        rng_match = self._rng(0)
        if cfg.fixed_occupancy:
            self.occupancy = self.capacity.copy()
            seated = np.array([], dtype=np.int64)
            seat_car = np.array([], dtype=np.int64)
        else:
            freq = np.divide(
                self.p_assigned, self.p_participating,
                out=np.zeros(cfg.passenger_count),
                where=self.p_participating > 0,
            )
            priority = (self.p_participating == 0) | (freq < 0.5)
            idx = np.arange(cfg.passenger_count)
            cap_today = np.where(driver_ok, self.capacity, 0)
            seated, seat_car = assign_seats(
                idx[priority & pax_ok], idx[~priority & pax_ok], cap_today, rng_match
            )
            self.occupancy = np.bincount(seat_car, minlength=cfg.fleet_size)
            self.p_participating += 1
            self.p_assigned[seated] += 1

        # grant draws; day 0 grants every eligible driver
        probs = np.clip(
            self.gamma / (2.0 * self.weights) * (self.occupancy / self.capacity),
            0.0, 1.0,
        )
        if k == 0:
            x = driver_ok.astype(np.int8)
        else:
            rng_draw = self._rng(1)
            x = ((rng_draw.random(cfg.fleet_size) < probs) & driver_ok).astype(np.int8)
        granted = int(x.sum())

        # compliance contracts for granted cars
        tokens_forfeited = 0
        if ledger_today and not cfg.fixed_occupancy:
            tokens_forfeited = self._run_contracts(x, seated, seat_car)

        # passenger access bookkeeping
        if seated.size:
            in_granted_car = x[seat_car] == 1
            self.p_accessed[seated[in_granted_car]] += 1

        # state updates
        self.granted_days += x
        self.x_avg = (k * self.x_avg + x) / (k + 1)
        raw = self.gamma + cfg.alpha * (n_today - granted)
        self.gamma = max(0.0, raw)

        pm = emissions.steady_concentration(
            granted * cfg.box_model.per_car_airborne_kg_year,
            cfg.box_model.volume_m3,
            cfg.box_model.air_changes_per_hour,
        )
        metrics = DailyMetrics(
            day=k,
            granted=granted,
            gamma=self.gamma,
            mean_occupancy=float(self.occupancy.mean()) if cfg.fleet_size else 0.0,
            seated_passengers=int(seated.size) if not cfg.fixed_occupancy else 0,
            tokens_forfeited=tokens_forfeited,
            pm_ug_m3=pm,
        )
        self.day += 1
        return metrics

    def _run_contracts(
        self, x: np.ndarray, seated: np.ndarray, seat_car: np.ndarray
    ) -> int:
        assert self.dag is not None
        rng_settle = self._rng(2)
        stops_by_car: dict[int, list[Stop]] = {}
        counts: dict[int, int] = {}
        for p_idx, c_idx in zip(seated.tolist(), seat_car.tolist()):
            if x[c_idx] != 1:
                continue
            stops = stops_by_car.setdefault(c_idx, [])
            start = counts.get(c_idx, 0) * WINDOW_TICKS
            counts[c_idx] = counts.get(c_idx, 0) + 1
            stops.append(
                Stop(
                    passenger_id=self.passenger_id(p_idx),
                    point_id=self.point_id(p_idx),
                    window_start=start,
                    window_end=start + WINDOW_TICKS,
                )
            )
        forfeited = 0
        for c_idx, stops in stops_by_car.items():
            contract, dropped = compliance.initiate_contract(
                self.driver_id(c_idx), stops, self.dag
            )
            if dropped:
                self.occupancy[c_idx] -= len(dropped)
            report = compliance.settle_contract(
                contract, self.cfg.behavior, self.dag, rng_settle
            )
            forfeited += report.tokens_forfeited
        return forfeited

    def run(self) -> ScenarioResult:
        metrics = [self.step_day() for _ in range(self.cfg.days)]
        pax_freq = (
            self.p_accessed / self.cfg.days
            if self.cfg.passenger_count
            else np.array([])
        )
        return ScenarioResult(
            metrics=metrics,
            driver_frequencies=self.granted_days / self.cfg.days,
            passenger_frequencies=pax_freq,
            dag=self.dag,
        )


def run_scenario(config: ScenarioConfig) -> ScenarioResult:
    """Run a full scenario; deterministic given (config, seed)."""
    return Simulation(config).run()


METRICS_COLUMNS = [
    "day", "granted", "gamma", "mean_occupancy",
    "seated_passengers", "tokens_forfeited", "pm_ug_m3",
]


def write_metrics_csv(path: Path, metrics: list[DailyMetrics]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_COLUMNS)
        for m in metrics:
            writer.writerow([
                m.day, m.granted, repr(m.gamma), repr(m.mean_occupancy),
                m.seated_passengers, m.tokens_forfeited, repr(m.pm_ug_m3),
            ])


def write_summary_csv(path: Path, result: ScenarioResult) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["agent_id", "role", "frequency"])
        for i, f in enumerate(result.driver_frequencies.tolist()):
            writer.writerow([f"car-{i}", "driver", repr(f)])
        for j, f in enumerate(result.passenger_frequencies.tolist()):
            writer.writerow([f"pax-{j}", "passenger", repr(f)])
