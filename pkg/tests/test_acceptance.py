"""End-to-end scenarios over a whole in-process network."""

import asyncio
import random

import pytest

from conftest import BALANCE, ROLES, make_signers
from devchain.bench.adapters import LocalReadAdapter
from devchain.bench.demo import activate_project, commit_all, demo_network
from devchain.bench.rate import FixedRate, TxNumber
from devchain.bench.round import QueryState, RoundSpec, run_round
from devchain.castore.store import ContentStore
from devchain.config import DAY_MS
from devchain.consensus.events import Audience
from devchain.consensus.local import LocalNetwork
from devchain.contracts.cicd import FAILED_BUILD_MESSAGE
from devchain.contracts.models import DEFAULT_GRACE_MS, project_key, record_key, token_key
from devchain.ledger.chain import audit_encoded_blocks
from devchain.node.client import LocalClient
from devchain.node.trail import audit_trail, chain_block_docs
from devchain.pipeline.archive import extract_package
from devchain.pipeline.config import pipeline_config_from_doc
from devchain.pipeline.runner import PipelineRunner, execute_deploy

pytestmark = pytest.mark.slow

PIPELINE = pipeline_config_from_doc(
    {
        "package": {"include_paths": ["app"], "name": "webapp"},
        "stages": [
            {"checks": [{"kind": "ForbiddenPattern", "pattern": "FIXME"}], "stage": "Review"},
            {"checks": [{"kind": "RequiredPath", "path": "tests"}], "stage": "Unit"},
            {"checks": [{"kind": "MaxFileBytes", "limit": 4096}], "stage": "Integration"},
        ],
    }
)
SOURCES = {
    "app/main.py": b"print('v1')\n",
    "tests/test_main.py": b"def test_main():\n    pass\n",
}


def transfer(signer, to, cents):
    return signer.sign("", "token", "transfer", {"cents": cents, "to": to})


def test_every_single_byte_mutation_is_detected():
    network = LocalNetwork.with_members(ROLES, balance=BALANCE)
    signers = make_signers(network, LocalClient(network))
    client_id = signers["client"].identity.member_id.hex()
    for _ in range(99):
        commit_all(network, [transfer(signers["owner"], client_id, 1)])
    encoded = [block.to_bytes() for block in network.peer.chain]
    assert len(encoded) == 100
    assert audit_encoded_blocks(encoded).ok

    rng = random.Random(7)
    for _ in range(1000):
        position = rng.randrange(len(encoded))
        raw = bytearray(encoded[position])
        offset = rng.randrange(len(raw))
        raw[offset] = (raw[offset] + rng.randrange(1, 256)) % 256
        tampered = encoded[:position] + [bytes(raw)] + encoded[position + 1 :]
        report = audit_encoded_blocks(tampered)
        assert not report.ok, f"mutation at block {position} byte {offset} went unnoticed"


def test_replicas_agree_after_a_mixed_workload():
    network = LocalNetwork.with_members(ROLES, balance=BALANCE)
    signers = make_signers(network, LocalClient(network))
    activate_project(
        network,
        signers["owner"],
        signers["client"],
        "mixed",
        {"installment_cents": 100, "project_budget_cents": 10_000, "trigger": "PerIteration"},
    )
    ids = [s.identity.member_id.hex() for s in signers.values()]
    rng = random.Random(11)
    batch = []
    for n in range(5000):
        kind = rng.randrange(3)
        if kind == 0:
            sender = signers[rng.choice(list(signers))]
            batch.append(transfer(sender, rng.choice(ids), rng.randrange(1, 500)))
        elif kind == 1:
            batch.append(
                signers["owner"].sign(
                    "mixed",
                    "monitoring",
                    "record_metric",
                    {"metric_name": "latency", "scale": 2, "scaled_value": n},
                )
            )
        else:
            batch.append(
                signers["client"].sign(
                    "mixed",
                    "monitoring",
                    "raise_alert",
                    {"description": f"#{n}", "severity": "Low"},
                )
            )
        if len(batch) == 250:
            for tx in batch:
                network.submit(tx)
            network.flush()
            batch = []

    assert len(network.peers) == 4
    assert network.consistent()
    assert network.peer.query(record_key("mixed", "metric", 1)) is not None


def test_random_transfers_conserve_the_supply():
    network = LocalNetwork.with_members(ROLES, balance=BALANCE)
    signers = list(make_signers(network, LocalClient(network)).values())
    ids = [s.identity.member_id.hex() for s in signers]
    rng = random.Random(3)
    for _ in range(10):
        for _ in range(100):
            sender = rng.choice(signers)
            network.submit(transfer(sender, rng.choice(ids), rng.randrange(1, 2 * BALANCE)))
        network.flush()

    balances = [network.peer.query(token_key(member_id))["balance"] for member_id in ids]
    assert sum(balances) == BALANCE * len(ids)
    assert min(balances) >= 0


@pytest.mark.parametrize("seed", range(20))
def test_two_week_payments_freeze_only_when_missed(seed):
    rng = random.Random(seed)
    divisor = DAY_MS // 1000
    network = LocalNetwork.with_members(ROLES, balance=BALANCE, time_scale_divisor=divisor)
    signers = make_signers(network, LocalClient(network))
    agreement = {
        "installment_cents": 1_000,
        "project_budget_cents": 100_000,
        "trigger": "PerTwoWeeks",
    }
    activate_project(network, signers["owner"], signers["client"], "sprint", agreement)
    grace = DEFAULT_GRACE_MS // divisor

    for _ in range(3):
        due = network.peer.query(project_key("sprint"))["next_due"]
        if rng.random() < 0.5:
            network.clock.now = rng.randrange(network.clock.now + 1, due)
            signers["client"].execute("sprint", "payment", "pay_installment")
            network.clock.now = due + grace + 1
            network.cut()
            assert network.peer.query(project_key("sprint"))["status"] == "Active"
        else:
            network.clock.now = due + grace
            network.cut()
            assert network.peer.query(project_key("sprint"))["status"] == "Active"
            network.clock.now += 1
            network.cut()
            assert network.peer.query(project_key("sprint"))["status"] == "Frozen"
            signers["client"].execute("sprint", "payment", "pay_installment")
            assert network.peer.query(project_key("sprint"))["status"] == "Active"
    assert network.consistent()


def test_castore_properties(tmp_path):
    store = ContentStore(tmp_path / "castore")
    rng = random.Random(5)
    for size in (0, 1, 256 * 1024, 256 * 1024 + 1, 5 * 1024 * 1024):
        data = rng.randbytes(size)
        assert store.get(store.put_blob(data)) == data

    files = {f"dir{n % 4}/file{n}.txt": str(n).encode() for n in range(30)}
    expected = store.put_files(files)
    items = list(files.items())
    for _ in range(100):
        rng.shuffle(items)
        assert store.put_files(dict(items)) == expected

    for round_ in range(5):
        commits, parent = [], None
        for n in range(rng.randrange(2, 6)):
            tree = store.put_files({f"r{round_}/c{n}/{k}": rng.randbytes(16) for k in range(3)})
            parent = store.commit(parent, tree, "dev", f"c{n}", n)
            commits.append(parent)
        pinned = rng.choice(commits)
        store.pin(pinned)
        store.gc()
        for _, commit in store.log(pinned):
            assert store.resolve_path(commit.tree_cid, f"r{round_}") is not None


def test_read_round_on_the_demo_network():
    demo = demo_network(prepopulate=200)
    spec = RoundSpec(
        0, "QueryPrivateData", QueryState(keyspace=200), TxNumber(2500), FixedRate(100.0)
    )
    metrics = asyncio.run(run_round(spec, LocalReadAdapter(demo.network.peer)))

    assert metrics.name == "Round0-QueryPrivateData-TxNumber-FixedRate"
    assert metrics.succ + metrics.fail == 2500
    assert metrics.send_rate_tps == pytest.approx(100.0, rel=0.05)
    assert metrics.min_latency_s <= metrics.avg_latency_s <= metrics.max_latency_s
    assert metrics.throughput_tps <= metrics.send_rate_tps * 1.01


def test_full_lifecycle(tmp_path, network, client, store, signers, project):
    manager, developer, tester = signers["manager"], signers["developer"], signers["tester"]
    notes = store.put_blob(b"kickoff: ship the landing page")
    plan = {"artifact_cid": notes, "kind": "Notes", "title": "kickoff"}
    manager.execute(project, "development", "record_plan", plan)
    head = store.commit(None, store.put_files(SOURCES), "dev", "v1", 1)
    developer.execute(project, "development", "record_repo_head", {"commit_cid": head})

    run = PipelineRunner(store, developer, PIPELINE).run(project, head, 1)
    assert run.status == "Built"
    flags = {"compliance": True, "quality": True, "security": True}
    tester.execute(project, "cicd", "attest_gate", {"name": "webapp", "version": "0.1.1", **flags})
    execute_deploy(project, "webapp", "0.1.1", tmp_path / "prod", developer, store)
    metric = {"metric_name": "p95", "scale": 0, "scaled_value": 87}
    tester.execute(project, "monitoring", "record_metric", metric)
    signers["client"].execute(project, "payment", "pay_installment")

    deployed = (tmp_path / "prod" / "webapp-0.1.1.dcpkg").read_bytes()
    assert deployed == store.get(run.package_cid)
    assert extract_package(deployed) == {"app/main.py": SOURCES["app/main.py"]}

    for kind in ("plan", "repo", "metric", "payment"):
        assert network.peer.query(record_key(project, kind, 1)) is not None
        assert network.peer.query(record_key(project, kind, 2)) is None
    assert network.peer.query(f"project/{project}/build/webapp@0.1.1")["status"] == "Deployed"

    phases = []
    for entry in audit_trail(chain_block_docs(client), project):
        if not phases or phases[-1] != entry.phase:
            phases.append(entry.phase)
    assert phases == [
        "Initiation",
        "Planning",
        "Development",
        "Integration",
        "Testing",
        "Deployment",
        "Monitoring",
        "Payment",
    ]
    assert network.consistent()


def test_failed_build_alerts_developers_after_commit(network, store, signers, project):
    build_key = f"project/{project}/build/webapp@0.1.1"
    delivered = []

    def on_event(event):
        delivered.append((event, network.peer.query(build_key)))

    network.peer.events.subscribe(on_event, Audience.developers)
    files = {**SOURCES, "app/main.py": b"# FIXME broken\n"}
    head = store.commit(None, store.put_files(files), "dev", "broken", 1)
    signers["developer"].execute(project, "development", "record_repo_head", {"commit_cid": head})
    run = PipelineRunner(store, signers["developer"], PIPELINE).run(project, head, 1)

    assert run.status == "Failed"
    assert run.package_cid is None
    alerts = [(e, record) for e, record in delivered if e.event_name == "Alert"]
    assert len(alerts) == 1
    event, record = alerts[0]
    assert event.payload["message"] == FAILED_BUILD_MESSAGE
    assert event.payload["failed_stages"] == ["review"]
    assert record is not None and record["status"] == "Failed"
