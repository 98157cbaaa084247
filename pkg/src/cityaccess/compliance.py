"""Pick-up contract lifecycle over the ledger.

On grant, driver and passenger each bond one token per stop into the
stop's escrow. During settlement, agents who show up in the window attest
and retrieve; bonds of no-shows are forfeited to whoever was attested
present, or to the system escrow if nobody was.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .ledger import InsufficientBalance, LedgerDag, attest_presence
from .matchmaking import Stop


class ContractStatus(str, Enum):
    OPEN = "Open"
    SETTLED = "Settled"


@dataclass
class PickupContract:
    car_id: str
    stops: list[Stop]
    status: ContractStatus = ContractStatus.OPEN

    @property
    def bond_count(self) -> int:
        # one driver bond plus one passenger bond per stop
        return 2 * len(self.stops)


@dataclass
class BehaviorModel:
    """Show/no-show behavior. Default: everyone is fully compliant.

    `show_probability` overrides per agent id; anything unlisted uses
    `default_show_probability`. Lateness is in ticks past window start.
    """

    default_show_probability: float = 1.0
    show_probability: dict[str, float] = field(default_factory=dict)
    lateness_ticks: int = 0

    def p_show(self, agent_id: str) -> float:
        p = self.show_probability.get(agent_id, self.default_show_probability)
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"show probability for {agent_id!r} out of [0,1]: {p}")
        return p


@dataclass
class StopOutcome:
    passenger_id: str
    point_id: str
    driver_showed: bool
    passenger_showed: bool
    tokens_forfeited: int


@dataclass
class SettlementReport:
    car_id: str
    outcomes: list[StopOutcome] = field(default_factory=list)

    @property
    def tokens_forfeited(self) -> int:
        return sum(o.tokens_forfeited for o in self.outcomes)


def eligibility(agent_id: str, dag: LedgerDag, role: str, capacity: int = 4) -> bool:
    """Can this agent participate tomorrow?

    A passenger must cover one bond; a driver must cover one bond per seat.
    """
    required = capacity if role == "driver" else 1
    return dag.balance(agent_id) >= required


def initiate_contract(
    car_id: str,
    stops: list[Stop],
    dag: LedgerDag,
    tick: int = 0,
) -> tuple[PickupContract, list[str]]:
    """Deposit bonds for every stop of a granted car.

    A passenger who cannot fund their bond is dropped (their stop is
    removed and the driver is not charged for it); remaining stops
    proceed. Returns the open contract and the ids of dropped passengers.
    """
    funded: list[Stop] = []
    dropped: list[str] = []
    for stop in stops:
        try:
            passenger_tx = dag.deposit_bond(stop.passenger_id, stop.point_id, tick=tick)
        except InsufficientBalance:
            dropped.append(stop.passenger_id)
            continue
        try:
            dag.deposit_bond(car_id, stop.point_id, tick=tick)
        except InsufficientBalance:
            # refund the passenger; the driver cannot honor this stop
            att = attest_presence(
                dag.registry,
                dag.registry.by_point[stop.point_id],
                stop.passenger_id,
                stop.point_id,
                tick,
            )
            dag.retrieve_bond(
                stop.passenger_id, stop.point_id, att, (tick, tick)
            )
            dropped.append(stop.passenger_id)
            continue
        funded.append(stop)
    return PickupContract(car_id=car_id, stops=funded), dropped


def settle_contract(
    contract: PickupContract,
    behaviors: BehaviorModel,
    dag: LedgerDag,
    rng: np.random.Generator,
) -> SettlementReport:
    """Play out every stop of an open contract.

    Per stop: draw show/no-show for driver and passenger; present parties
    attest and retrieve their bond inside the window; after the window any
    unclaimed bonds at the stop are forfeited to the attested-present
    counterparties (system escrow if nobody showed).
    """
    if contract.status is not ContractStatus.OPEN:
        raise ValueError(f"contract for car {contract.car_id!r} already settled")
    report = SettlementReport(car_id=contract.car_id)
    for stop in contract.stops:
        driver_shows = rng.random() < behaviors.p_show(contract.car_id)
        passenger_shows = rng.random() < behaviors.p_show(stop.passenger_id)
        arrival = min(
            stop.window_start + behaviors.lateness_ticks, stop.window_end
        )
        observer = dag.registry.by_point[stop.point_id]

        present: list[str] = []
        for agent_id, shows in (
            (contract.car_id, driver_shows),
            (stop.passenger_id, passenger_shows),
        ):
            if not shows:
                continue
            att = attest_presence(dag.registry, observer, agent_id, stop.point_id, arrival)
            dag.retrieve_bond(
                agent_id, stop.point_id, att, (stop.window_start, stop.window_end)
            )
            present.append(agent_id)

        forfeits = dag.forfeit_expired(
            stop.point_id, stop.window_end + 1, present
        )
        report.outcomes.append(
            StopOutcome(
                passenger_id=stop.passenger_id,
                point_id=stop.point_id,
                driver_showed=driver_shows,
                passenger_showed=passenger_shows,
                tokens_forfeited=len(forfeits),
            )
        )
    contract.status = ContractStatus.SETTLED
    return report
