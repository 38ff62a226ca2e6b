import json

import pytest

from devchain.cli import main, scaled
from devchain.config import load_network_config
from devchain.errors import InvalidArguments
from devchain.ledger.blocklog import BlockLog
from devchain.ledger.identity import load_key_file, save_key_file

PIPELINE = {
    "package": {"include_paths": ["app"], "name": "webapp"},
    "stages": [
        {"checks": [{"kind": "ForbiddenPattern", "pattern": "FIXME"}], "stage": "Review"},
        {"checks": [{"kind": "RequiredPath", "path": "tests"}], "stage": "Unit"},
    ],
}


@pytest.fixture
def keys(tmp_path, network):
    paths = {}
    for name, member in network.members.items():
        paths[name] = tmp_path / "keys" / f"{name}.json"
        save_key_file(paths[name], member.identity, member.secret_key)
    return paths


@pytest.fixture
def cli(tmp_path, client, keys, capsys):
    def run(member, *argv):
        capsys.readouterr()
        options = ["--json", "--store", str(tmp_path / ".devchain")]
        if member:
            options += ["--key", str(keys[member])]
        code = main(options + list(argv), client=client)
        out = capsys.readouterr().out.strip()
        return code, json.loads(out.splitlines()[-1]) if out else None

    return run


def test_keygen(tmp_path, cli):
    out = tmp_path / "k" / "t.json"
    code, doc = cli(None, "keygen", "--role", "Tester", "--org", "Org3", "--out", str(out))
    assert code == 0
    identity, _ = load_key_file(out)
    assert identity.member_id.hex() == doc["member_id"]
    assert identity.role.value == "Tester"
    assert (tmp_path / "k" / "t.pub.json").exists()


def test_network_init(tmp_path, cli):
    code, _ = cli(None, "network", "init", "--dir", str(tmp_path / "net"), "--orgs", "2")
    assert code == 0
    config = load_network_config(tmp_path / "net" / "network.yaml")
    assert [org.name for org in config.orgs] == ["Org1", "Org2"]
    assert config.orderer.port == 7050
    assert len(config.identities) == 5
    assert (tmp_path / "net" / "keys" / "client.json").exists()


def test_project_setup_from_a_terms_file(tmp_path, cli, keys, network):
    terms = tmp_path / "terms.json"
    terms.write_text(json.dumps({"Project Budget": "$1000", "Payment After 1 Iteration": "$100"}))
    client_pub = tmp_path / "client.pub.json"
    client_pub.write_text(json.dumps(network.members["client"].identity.to_doc()))

    code, doc = cli(
        "owner", "project", "create", "--project", "web", "--name", "Web",
        "--terms-file", str(terms),
    )
    assert code == 0
    assert doc["project_id"] == "web"
    code, _ = cli(
        "owner", "project", "add-member", "--project", "web", "--identity", str(client_pub)
    )
    assert code == 0
    assert cli("owner", "project", "accept-terms", "--project", "web", "--side", "Team")[1] == {
        "status": "Draft"
    }
    assert cli("client", "project", "accept-terms", "--project", "web", "--side", "Client")[1] == {
        "status": "Active"
    }
    _, shown = cli(None, "project", "show", "--project", "web")
    assert shown["terms_cid"] == doc["terms_cid"]


def test_whole_iteration_from_the_command_line(tmp_path, cli, network, project):
    work = tmp_path / "work"
    (work / "app").mkdir(parents=True)
    (work / "app" / "main.py").write_text("print('v1')\n")
    (work / "tests").mkdir()
    (work / "tests" / "test_main.py").write_text("def test(): pass\n")
    pipeline = tmp_path / "pipeline.json"
    pipeline.write_text(json.dumps(PIPELINE))

    code, snap = cli("developer", "repo", "snapshot", "--dir", str(work), "--message", "v1")
    assert code == 0
    code, pushed = cli("developer", "repo", "push", "--project", project)
    assert (code, pushed["head_seq"], pushed["commit_cid"]) == (0, 1, snap["commit_cid"])

    code, run = cli("developer", "build", "run", "--project", project, "--config", str(pipeline))
    assert code == 0
    assert (run["status"], run["version"]) == ("Built", "0.1.1")

    code, gate = cli(
        "tester", "gate", "attest", "--project", project, "--name", "webapp", "--version", "0.1.1",
        "--quality", "--security", "--compliance",
    )
    assert gate == {"status": "GatePassed"}

    target = tmp_path / "prod"
    code, deployed = cli(
        "developer", "deploy", "--project", project, "--name", "webapp", "--version", "0.1.1",
        "--target", str(target),
    )
    assert code == 0
    assert (target / "webapp-0.1.1.dcpkg").exists()

    code, receipt = cli("client", "pay", "--project", project)
    assert receipt["amount_cents"] == 10_000

    code, trail = cli(None, "audit", "trail", "--project", project)
    phases = [entry["phase"] for entry in trail]
    for phase in ("Development", "Integration", "Testing", "Deployment", "Payment"):
        assert phase in phases


def test_metrics_are_scaled():
    assert scaled("1.46") == (146, 2)
    assert scaled("42") == (42, 0)
    assert scaled("-0.5") == (-5, 1)
    with pytest.raises(InvalidArguments):
        scaled("fast")


def test_monitoring_and_wallet(cli, network, project):
    code, doc = cli(
        "tester", "monitor", "metric", "--project", project, "--name", "p95", "--value", "1.46"
    )
    assert (code, doc) == (0, {"seq": 1})
    record = network.peer.query(f"project/{project}/metric/{1:012d}")
    assert (record["scaled_value"], record["scale"]) == (146, 2)

    code, balance = cli("client", "wallet", "balance")
    assert (code, balance["balance_cents"]) == (0, 1_000_000)
    code, _ = cli("owner", "wallet", "transfer", "--to", balance["member_id"], "--cents", "25")
    assert cli("client", "wallet", "balance")[1]["balance_cents"] == 1_000_025


def test_contract_errors_map_to_exit_codes(cli, project):
    code, doc = cli("manager", "project", "close", "--project", project)
    assert code == 4
    assert doc["error"]["code"] == "Unauthorized"

    code, doc = cli(None, "pay", "--project", project)
    assert code == 2
    assert doc["error"]["code"] == "InvalidUsage"


def test_verify_chain(tmp_path, cli, network, signers):
    client_id = signers["client"].identity.member_id.hex()
    signers["owner"].execute("", "token", "transfer", {"cents": 5, "to": client_id})
    assert cli(None, "audit", "verify-chain")[0] == 0

    with BlockLog(tmp_path / "log", fsync=False) as log:
        for block in network.peer.chain:
            log.append(block)
    raw = (tmp_path / "log" / "blocks.log").read_bytes()
    (tmp_path / "log" / "blocks.log").write_bytes(raw.replace(b'"cents":5', b'"cents":9', 1))

    code, report = cli(None, "audit", "verify-chain", "--data-dir", str(tmp_path / "log"))
    assert code == 3
    assert report["ok"] is False


def test_castore_commands(tmp_path, cli):
    artifact = tmp_path / "artifact.bin"
    artifact.write_bytes(b"release notes")
    code, put = cli(None, "castore", "put", "--file", str(artifact))
    assert code == 0

    out = tmp_path / "copy.bin"
    assert cli(None, "castore", "get", "--cid", put["cid"], "--out", str(out))[0] == 0
    assert out.read_bytes() == b"release notes"
    assert cli(None, "castore", "audit")[1] == {"corrupt": []}

    hex_digest = put["cid"].removeprefix("sha256-")
    stored = tmp_path / ".devchain" / "castore" / "objects" / hex_digest[:2] / hex_digest[2:4]
    (stored / hex_digest).write_bytes(b"tampered")
    code, audit = cli(None, "castore", "audit")
    assert (code, audit["corrupt"]) == (5, [put["cid"]])
