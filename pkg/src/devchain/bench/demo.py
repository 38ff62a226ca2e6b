"""In-process demo network for benchmark rounds: 4 orgs, 1 orderer, one active project.

The "QueryPrivateData" read workload reads pre-populated metric records of
the `bench` project.
"""

import logging
from dataclasses import dataclass

from devchain.castore.objects import cid_of
from devchain.consensus.local import LocalNetwork
from devchain.consensus.orderer import Rejected, now_ms
from devchain.consensus.policy import OrderingPolicy
from devchain.contracts.models import PaymentTrigger, record_key
from devchain.errors import error_for_code
from devchain.ledger.identity import Role
from devchain.node.client import LocalClient, Signer

logger = logging.getLogger(__name__)

BENCH_PROJECT = "bench"
DEMO_BALANCE = 1_000_000_00
DEMO_POLICY = OrderingPolicy(max_batch_size=500, max_batch_wait_ms=5)


@dataclass
class DemoNetwork:
    network: LocalNetwork
    owner: Signer
    client: Signer
    writers: list[Signer]
    prepopulated: int

    @property
    def sink(self) -> str:
        """Wallet that write workloads transfer to."""
        return self.owner.identity.member_id.hex()

    def read_key(self, k: int) -> str:
        return record_key(BENCH_PROJECT, "metric", k)


def commit_all(network: LocalNetwork, txs) -> list:
    """Submit signed txs in order, cut until all are in blocks; return their results."""
    for tx in txs:
        outcome = network.submit(tx)
        if isinstance(outcome, Rejected):
            raise error_for_code(outcome.reason, outcome.message)
    network.flush()
    results = []
    for tx in txs:
        result = network.peer.tx_result(tx.tx_id)
        if not result.valid:
            raise error_for_code(result.error, result.error_message or result.error)
        results.append(result.result)
    return results


def activate_project(network, owner: Signer, client: Signer, project_id: str, agreement: dict):
    """create, add the client, accept on both sides: the project ends Active."""
    txs = [
        owner.sign(
            project_id,
            "project",
            "create_project",
            {"agreement": agreement, "name": project_id, "terms_cid": cid_of(project_id.encode())},
        ),
        owner.sign(project_id, "project", "add_member", {"identity": client.identity.to_doc()}),
        owner.sign(project_id, "project", "accept_terms", {"side": "Team"}),
        client.sign(project_id, "project", "accept_terms", {"side": "Client"}),
    ]
    return commit_all(network, txs)


def demo_network(prepopulate: int = 1000, payload_bytes: int = 64, writers: int = 1, clock=now_ms):
    roles = {"owner": (Role.owner, "Org1"), "client": (Role.client, "Org2")}
    roles.update({f"writer{i}": (Role.developer, "Org3") for i in range(writers)})
    network = LocalNetwork.with_members(
        roles, balance=DEMO_BALANCE, policy=DEMO_POLICY, clock=clock
    )
    client = LocalClient(network)
    signers = {
        name: Signer(member.identity, member.secret_key, client)
        for name, member in network.members.items()
    }
    owner = signers["owner"]

    agreement = {
        "installment_cents": 100,
        "project_budget_cents": DEMO_BALANCE,
        "trigger": PaymentTrigger.per_iteration.value,
    }
    activate_project(network, owner, signers["client"], BENCH_PROJECT, agreement)

    txs = [
        owner.sign(
            BENCH_PROJECT,
            "monitoring",
            "record_metric",
            {
                "metric_name": f"m{k}".ljust(payload_bytes, "x"),
                "scale": 0,
                "scaled_value": k,
            },
        )
        for k in range(1, prepopulate + 1)
    ]
    for start in range(0, len(txs), DEMO_POLICY.queue_capacity // 2):
        commit_all(network, txs[start : start + DEMO_POLICY.queue_capacity // 2])
    logger.info(f" --> Demo network at height {network.peer.height}, {prepopulate} records")

    return DemoNetwork(
        network=network,
        owner=owner,
        client=signers["client"],
        writers=[signers[f"writer{i}"] for i in range(writers)],
        prepopulated=prepopulate,
    )
