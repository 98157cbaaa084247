"""Permissioned DAG ledger for compliance bonds.

Append-only DAG of token transactions. Escrow accounts at pick-up points
hold bonds; a Retrieve moves a token out of escrow only when it carries an
attestation from the observer registered at that point (simulated proof of
position: a keyed tag, not real cryptography).
"""

from __future__ import annotations

import hashlib
import hmac
import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

import numpy as np

SYSTEM_ESCROW = "sys:escrow"


class LedgerError(Exception):
    pass


class InsufficientBalance(LedgerError):
    pass


class UnknownAccount(LedgerError):
    pass


class AttestationError(LedgerError):
    pass


class WindowError(LedgerError):
    """Retrieval attempted outside the contract window."""

    def __init__(self, message: str, too_late: bool):
        super().__init__(message)
        self.too_late = too_late


class TxKind(str, Enum):
    GENESIS = "Genesis"
    DEPOSIT = "Deposit"
    RETRIEVE = "Retrieve"
    FORFEIT = "Forfeit"


@dataclass(frozen=True)
class ObserverAttestation:
    """Witness statement that an agent was at a point at a tick.

    The signature is an HMAC over (agent, point, tick) keyed by the
    observer's registered secret; the ledger recomputes it to validate.
    """

    observer_id: str
    agent_id: str
    point_id: str
    tick: int
    signature: str


@dataclass
class Transaction:
    tx_id: str
    kind: TxKind
    src: str
    dst: str
    amount: int
    parents: tuple[str, ...]
    tick: int = 0
    attestation: ObserverAttestation | None = None


@dataclass
class ObserverRegistry:
    """Maps each pick-up point to its single trusted observer."""

    by_point: dict[str, str] = field(default_factory=dict)
    _keys: dict[str, bytes] = field(default_factory=dict)

    def register(self, point_id: str, observer_id: str) -> None:
        self.by_point[point_id] = observer_id
        self._keys[observer_id] = hashlib.sha256(
            f"observer-key:{observer_id}".encode()
        ).digest()

    def key_for(self, observer_id: str) -> bytes:
        return self._keys[observer_id]


def _sign(key: bytes, agent_id: str, point_id: str, tick: int) -> str:
    msg = f"{agent_id}|{point_id}|{tick}".encode()
    return hmac.new(key, msg, hashlib.sha256).hexdigest()


def attest_presence(
    registry: ObserverRegistry,
    observer_id: str,
    agent_id: str,
    point_id: str,
    tick: int,
) -> ObserverAttestation:
    """Issue a presence attestation, or reject a misregistered observer."""
    if registry.by_point.get(point_id) != observer_id:
        raise AttestationError(
            f"observer {observer_id!r} is not registered at point {point_id!r}"
        )
    sig = _sign(registry.key_for(observer_id), agent_id, point_id, tick)
    return ObserverAttestation(observer_id, agent_id, point_id, tick, sig)


@dataclass
class _DepositEntry:
    tx_id: str
    agent_id: str
    claimed: bool = False


class LedgerDag:
    """Single-writer append-only DAG with derived balances.

    Parents of every non-genesis transaction are two uniformly random
    current tips (the genesis id twice while fewer than two tips exist).
    Token supply is fixed at genesis.
    """

    def __init__(
        self,
        registry: ObserverRegistry,
        initial_balances: dict[str, int],
        rng: np.random.Generator | None = None,
    ):
        self.registry = registry
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.transactions: dict[str, Transaction] = {}
        self.order: list[str] = []
        self.tips: list[str] = []
        self.balances: dict[str, int] = dict(initial_balances)
        self.balances.setdefault(SYSTEM_ESCROW, 0)
        self._initial: dict[str, int] = dict(self.balances)
        self.issuance = sum(self.balances.values())
        # live (unclaimed) deposits per escrow account, in append order
        self._deposits: dict[str, list[_DepositEntry]] = {}
        self._counter = itertools.count(1)

        genesis = Transaction(
            tx_id="tx-0", kind=TxKind.GENESIS, src="", dst="", amount=self.issuance,
            parents=(),
        )
        self.transactions[genesis.tx_id] = genesis
        self.order.append(genesis.tx_id)
        self.tips.append(genesis.tx_id)
        self.genesis_id = genesis.tx_id

    # -- account management ------------------------------------------------

    def open_account(self, account: str, balance: int = 0) -> None:
        if account in self.balances:
            raise LedgerError(f"account {account!r} already exists")
        self.balances[account] = balance
        self._initial[account] = balance
        self.issuance += balance

    def ensure_escrow(self, point_id: str) -> str:
        account = f"escrow:{point_id}"
        if account not in self.balances:
            self.balances[account] = 0
            self._initial[account] = 0
        return account

    def balance(self, account: str) -> int:
        try:
            return self.balances[account]
        except KeyError:
            raise UnknownAccount(f"unknown account {account!r}") from None

    # -- core append -------------------------------------------------------

    def _select_parents(self) -> tuple[str, str]:
        if len(self.tips) >= 2:
            i, j = self.rng.choice(len(self.tips), size=2, replace=False)
            return self.tips[i], self.tips[j]
        only = self.tips[0] if self.tips else self.genesis_id
        return only, only

    def _verify_attestation(self, att: ObserverAttestation) -> None:
        if self.registry.by_point.get(att.point_id) != att.observer_id:
            raise AttestationError(
                f"observer {att.observer_id!r} not registered at {att.point_id!r}"
            )
        expected = _sign(
            self.registry.key_for(att.observer_id), att.agent_id, att.point_id, att.tick
        )
        if not hmac.compare_digest(expected, att.signature):
            raise AttestationError("attestation signature invalid")

    def append_transaction(
        self,
        kind: TxKind,
        src: str,
        dst: str,
        amount: int,
        tick: int = 0,
        attestation: ObserverAttestation | None = None,
    ) -> Transaction:
        """Validate and append one transaction, moving tokens src -> dst."""
        if amount < 1:
            raise LedgerError(f"amount must be >= 1, got {amount}")
        if src not in self.balances:
            raise UnknownAccount(f"unknown account {src!r}")
        if dst not in self.balances:
            raise UnknownAccount(f"unknown account {dst!r}")
        if self.balances[src] < amount:
            raise InsufficientBalance(
                f"{src!r} has {self.balances[src]} tokens, needs {amount}"
            )
        if kind is TxKind.RETRIEVE:
            if attestation is None:
                raise AttestationError("Retrieve requires an attestation")
            self._verify_attestation(attestation)

        parents = self._select_parents()
        tx = Transaction(
            tx_id=f"tx-{next(self._counter)}",
            kind=kind, src=src, dst=dst, amount=amount,
            parents=parents, tick=tick, attestation=attestation,
        )
        self.transactions[tx.tx_id] = tx
        self.order.append(tx.tx_id)
        for p in set(parents):
            if p in self.tips:
                self.tips.remove(p)
        self.tips.append(tx.tx_id)
        self.balances[src] -= amount
        self.balances[dst] += amount
        return tx

    # -- bond operations ---------------------------------------------------

    def deposit_bond(self, agent_id: str, point_id: str, tick: int = 0) -> Transaction:
        """Stake one token from the agent into the point's escrow."""
        escrow = self.ensure_escrow(point_id)
        tx = self.append_transaction(TxKind.DEPOSIT, agent_id, escrow, 1, tick=tick)
        self._deposits.setdefault(escrow, []).append(_DepositEntry(tx.tx_id, agent_id))
        return tx

    def live_deposits(self, point_id: str) -> list[str]:
        escrow = f"escrow:{point_id}"
        return [
            d.agent_id for d in self._deposits.get(escrow, []) if not d.claimed
        ]

    def retrieve_bond(
        self,
        agent_id: str,
        point_id: str,
        attestation: ObserverAttestation,
        window: tuple[int, int],
    ) -> Transaction:
        """Return a live bond to its owner given a valid in-window attestation.

        Window bounds are inclusive on both ends.
        """
        escrow = f"escrow:{point_id}"
        entry = next(
            (
                d
                for d in self._deposits.get(escrow, [])
                if d.agent_id == agent_id and not d.claimed
            ),
            None,
        )
        if entry is None:
            raise LedgerError(
                f"no live deposit for agent {agent_id!r} at point {point_id!r}"
            )
        if attestation.agent_id != agent_id:
            raise AttestationError("attestation names a different agent")
        start, end = window
        if attestation.tick < start:
            raise WindowError(
                f"tick {attestation.tick} before window [{start}, {end}]: too early",
                too_late=False,
            )
        if attestation.tick > end:
            raise WindowError(
                f"tick {attestation.tick} after window [{start}, {end}]: too late",
                too_late=True,
            )
        tx = self.append_transaction(
            TxKind.RETRIEVE, escrow, agent_id, 1,
            tick=attestation.tick, attestation=attestation,
        )
        entry.claimed = True
        return tx

    def forfeit_expired(
        self,
        point_id: str,
        now_tick: int,
        present_agents: Iterable[str],
    ) -> list[Transaction]:
        """Redistribute unclaimed bonds after the window has passed.

        Tokens go round-robin to agents attested present (in attestation
        order); with nobody present they fall to the system escrow.
        """
        escrow = f"escrow:{point_id}"
        unclaimed = [
            d for d in self._deposits.get(escrow, []) if not d.claimed
        ]
        present = list(present_agents)
        txs = []
        for i, entry in enumerate(unclaimed):
            dst = present[i % len(present)] if present else SYSTEM_ESCROW
            txs.append(
                self.append_transaction(TxKind.FORFEIT, escrow, dst, 1, tick=now_tick)
            )
            entry.claimed = True
        return txs

    # -- audit -------------------------------------------------------------

    def replay_balances(self) -> dict[str, int]:
        """Recompute all balances by replaying the DAG in topological order.

        Starts from the genesis-time snapshot and applies every transaction;
        independent of the incrementally maintained balance map.
        """
        balances = dict(self._initial)
        for tx_id in self.topological_order():
            tx = self.transactions[tx_id]
            if tx.kind is TxKind.GENESIS:
                continue
            balances[tx.src] -= tx.amount
            balances[tx.dst] += tx.amount
        return balances

    def topological_order(self) -> list[str]:
        """Order of appended ids; valid because parents always precede children."""
        seen = set()
        for tx_id in self.order:
            tx = self.transactions[tx_id]
            for p in tx.parents:
                if p not in seen:
                    raise LedgerError(f"parent {p} of {tx_id} out of order")
            seen.add(tx_id)
        return list(self.order)

    def dump(self) -> str:
        """Newline-delimited audit records."""
        lines = []
        for tx_id in self.order:
            tx = self.transactions[tx_id]
            p1 = tx.parents[0] if tx.parents else ""
            p2 = tx.parents[1] if len(tx.parents) > 1 else ""
            lines.append(
                f"{tx.tx_id},{tx.kind.value},{tx.src},{tx.dst},"
                f"{tx.amount},{p1},{p2},{tx.tick}"
            )
        return "\n".join(lines) + "\n"
