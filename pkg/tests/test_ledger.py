import numpy as np
import pytest

from cityaccess.ledger import (
    SYSTEM_ESCROW,
    AttestationError,
    InsufficientBalance,
    LedgerDag,
    ObserverAttestation,
    ObserverRegistry,
    TxKind,
    UnknownAccount,
    WindowError,
    attest_presence,
)


@pytest.fixture
def registry():
    reg = ObserverRegistry()
    for pt in ("A", "B", "C"):
        reg.register(pt, f"obs-{pt}")
    return reg


@pytest.fixture
def dag(registry):
    return LedgerDag(
        registry,
        {"alice": 5, "bob": 5, "carol": 5},
        rng=np.random.default_rng(0),
    )


class TestAppend:
    def test_first_tx_parents_are_genesis(self, dag):
        tx = dag.append_transaction(TxKind.DEPOSIT, "alice", "bob", 1)
        assert tx.parents == (dag.genesis_id, dag.genesis_id)

    def test_insufficient_balance_rejected(self, registry):
        dag = LedgerDag(registry, {"poor": 0, "rich": 3})
        with pytest.raises(InsufficientBalance):
            dag.append_transaction(TxKind.DEPOSIT, "poor", "rich", 1)

    def test_unknown_account_rejected(self, dag):
        with pytest.raises(UnknownAccount):
            dag.append_transaction(TxKind.DEPOSIT, "mallory", "alice", 1)
        with pytest.raises(UnknownAccount):
            dag.append_transaction(TxKind.DEPOSIT, "alice", "mallory", 1)

    def test_retrieve_without_attestation_rejected(self, dag):
        dag.deposit_bond("alice", "A")
        with pytest.raises(AttestationError):
            dag.append_transaction(TxKind.RETRIEVE, "escrow:A", "alice", 1)

    def test_parents_always_exist_and_precede(self, dag):
        rng = np.random.default_rng(1)
        accounts = ["alice", "bob", "carol"]
        for _ in range(200):
            src, dst = rng.choice(accounts, size=2, replace=False)
            if dag.balance(src) >= 1:
                dag.append_transaction(TxKind.DEPOSIT, src, dst, 1)
        dag.topological_order()  # raises on violation


class TestAttestation:
    def test_happy_path(self, registry):
        att = attest_presence(registry, "obs-A", "alice", "A", tick=5)
        assert att.point_id == "A" and att.agent_id == "alice"

    def test_wrong_point_rejected(self, registry):
        with pytest.raises(AttestationError):
            attest_presence(registry, "obs-A", "alice", "B", tick=5)

    def test_replayed_signature_for_other_agent_rejected(self, dag, registry):
        dag.deposit_bond("alice", "A")
        dag.deposit_bond("bob", "A")
        att_alice = attest_presence(registry, "obs-A", "alice", "A", tick=2)
        forged = ObserverAttestation(
            observer_id="obs-A", agent_id="bob", point_id="A",
            tick=2, signature=att_alice.signature,
        )
        with pytest.raises(AttestationError):
            dag.retrieve_bond("bob", "A", forged, window=(0, 10))


class TestRetrieveBond:
    def test_round_trip_restores_balance(self, dag, registry):
        before = dag.balance("alice")
        dag.deposit_bond("alice", "A")
        att = attest_presence(registry, "obs-A", "alice", "A", tick=3)
        dag.retrieve_bond("alice", "A", att, window=(0, 10))
        assert dag.balance("alice") == before

    def test_one_past_window_end_is_too_late(self, dag, registry):
        dag.deposit_bond("alice", "A")
        att = attest_presence(registry, "obs-A", "alice", "A", tick=11)
        with pytest.raises(WindowError) as exc:
            dag.retrieve_bond("alice", "A", att, window=(0, 10))
        assert exc.value.too_late

    def test_window_start_is_inclusive(self, dag, registry):
        dag.deposit_bond("alice", "A")
        att = attest_presence(registry, "obs-A", "alice", "A", tick=4)
        dag.retrieve_bond("alice", "A", att, window=(4, 10))
        assert dag.balance("alice") == 5

    def test_too_early_distinguished(self, dag, registry):
        dag.deposit_bond("alice", "A")
        att = attest_presence(registry, "obs-A", "alice", "A", tick=1)
        with pytest.raises(WindowError) as exc:
            dag.retrieve_bond("alice", "A", att, window=(4, 10))
        assert not exc.value.too_late

    def test_no_live_deposit_rejected(self, dag, registry):
        dag.ensure_escrow("A")
        att = attest_presence(registry, "obs-A", "alice", "A", tick=5)
        with pytest.raises(Exception, match="no live deposit"):
            dag.retrieve_bond("alice", "A", att, window=(0, 10))


class TestForfeit:
    def test_single_counterparty_gains_the_token(self, dag):
        dag.deposit_bond("alice", "A")
        dag.forfeit_expired("A", now_tick=20, present_agents=["bob"])
        assert dag.balance("bob") == 6
        assert dag.balance("alice") == 4

    def test_nobody_present_goes_to_system_escrow(self, dag):
        dag.deposit_bond("alice", "A")
        dag.forfeit_expired("A", now_tick=20, present_agents=[])
        assert dag.balance(SYSTEM_ESCROW) == 1

    def test_round_robin_split(self, dag):
        for _ in range(3):
            dag.deposit_bond("alice", "A")
        dag.forfeit_expired("A", now_tick=20, present_agents=["bob", "carol"])
        assert dag.balance("bob") == 7   # 2 of 3
        assert dag.balance("carol") == 6  # 1 of 3


def random_valid_ops(dag, registry, n_ops, rng):
    """Apply n_ops random valid deposit/retrieve/forfeit operations."""
    agents = ["alice", "bob", "carol"]
    points = ["A", "B", "C"]
    for _ in range(n_ops):
        op = rng.integers(0, 3)
        agent = agents[rng.integers(0, len(agents))]
        point = points[rng.integers(0, len(points))]
        if op == 0 and dag.balance(agent) >= 1:
            dag.deposit_bond(agent, point, tick=0)
        elif op == 1 and agent in dag.live_deposits(point):
            att = attest_presence(registry, f"obs-{point}", agent, point, tick=5)
            dag.retrieve_bond(agent, point, att, window=(0, 10))
        elif op == 2 and dag.live_deposits(point):
            others = [a for a in agents if a != agent]
            dag.forfeit_expired(point, now_tick=11, present_agents=others[:1])


class TestInvariants:
    def test_conservation_and_replay_over_random_sequence(self, dag, registry):
        rng = np.random.default_rng(42)
        random_valid_ops(dag, registry, 1000, rng)
        assert sum(dag.balances.values()) == dag.issuance
        assert all(v >= 0 for v in dag.balances.values())
        assert dag.replay_balances() == dag.balances

    def test_every_retrieve_has_valid_in_window_audit(self, dag, registry):
        rng = np.random.default_rng(43)
        random_valid_ops(dag, registry, 500, rng)
        for tx in dag.transactions.values():
            if tx.kind is TxKind.RETRIEVE:
                att = tx.attestation
                assert att is not None
                dag._verify_attestation(att)
                assert att.agent_id == tx.dst

    def test_acyclicity(self, dag, registry):
        random_valid_ops(dag, registry, 300, np.random.default_rng(44))
        dag.topological_order()


class TestDump:
    def test_dump_format(self, dag):
        dag.deposit_bond("alice", "A", tick=7)
        lines = dag.dump().strip().splitlines()
        assert lines[0].startswith("tx-0,Genesis")
        fields = lines[1].split(",")
        assert fields[1] == "Deposit"
        assert fields[2] == "alice" and fields[3] == "escrow:A"
        assert fields[4] == "1" and fields[7] == "7"
        assert fields[5] == "tx-0" and fields[6] == "tx-0"
