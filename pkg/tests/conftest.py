import pytest

from devchain.bench.demo import activate_project, commit_all
from devchain.castore.store import ContentStore
from devchain.consensus.local import LocalNetwork
from devchain.contracts.models import PaymentTrigger
from devchain.ledger.identity import Role
from devchain.node.client import LocalClient, Signer

ROLES = {
    "owner": (Role.owner, "Org1"),
    "manager": (Role.manager, "Org1"),
    "developer": (Role.developer, "Org2"),
    "tester": (Role.tester, "Org3"),
    "client": (Role.client, "Org4"),
}
BALANCE = 1_000_000
PROJECT = "demo"


def per_iteration_agreement(budget=100_000, installment=10_000, **extra):
    return {
        "installment_cents": installment,
        "project_budget_cents": budget,
        "trigger": PaymentTrigger.per_iteration.value,
        **extra,
    }


def make_signers(network, client):
    return {
        name: Signer(member.identity, member.secret_key, client)
        for name, member in network.members.items()
    }


def add_members(network, signers, project_id, names):
    owner = signers["owner"]
    commit_all(
        network,
        [
            owner.sign(
                project_id, "project", "add_member", {"identity": signers[n].identity.to_doc()}
            )
            for n in names
        ],
    )


@pytest.fixture
def network():
    return LocalNetwork.with_members(ROLES, balance=BALANCE)


@pytest.fixture
def store(tmp_path):
    return ContentStore(tmp_path / "castore")


@pytest.fixture
def client(network, store):
    return LocalClient(network, store)


@pytest.fixture
def signers(network, client):
    return make_signers(network, client)


@pytest.fixture
def project(network, signers):
    """An Active PerIteration project with every demo member on board."""
    activate_project(
        network, signers["owner"], signers["client"], PROJECT, per_iteration_agreement()
    )
    add_members(network, signers, PROJECT, ["manager", "developer", "tester"])
    return PROJECT
