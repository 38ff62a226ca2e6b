from devchain.castore.objects import cid_of
from devchain.contracts import default_contracts
from devchain.node.trail import PHASES, audit_trail, chain_block_docs


def test_trail_follows_the_project_lifecycle(client, signers, project):
    signers["manager"].execute(
        project, "development", "record_plan", {"artifact_cid": cid_of(b"plan"), "kind": "Notes"}
    )
    signers["developer"].execute(
        project, "development", "record_repo_head", {"commit_cid": cid_of(b"head")}
    )
    signers["owner"].execute("", "token", "transfer", {"cents": 1, "to": "00" * 32})

    trail = audit_trail(chain_block_docs(client), project)
    phases = [entry.phase for entry in trail]
    assert phases[:4] == ["Initiation"] * 4
    assert phases[-2:] == ["Planning", "Development"]
    assert trail[-1].detail == {"commit_cid": cid_of(b"head")}
    assert [e.height for e in trail] == sorted(e.height for e in trail)
    assert "Development" in str(trail[-1])


def test_invalid_transactions_stay_out_of_the_trail(client, signers, project):
    refused = signers["developer"].sign(
        project, "development", "record_plan", {"artifact_cid": "bogus", "kind": "Notes"}
    )
    client.submit(refused)
    client.tx_result(refused.tx_id)

    trail = audit_trail(chain_block_docs(client), project)
    assert refused.tx_id.hex() not in {entry.tx_id for entry in trail}


def test_every_operation_has_a_phase():
    for contract in default_contracts():
        for op in contract.operations:
            if contract.name != "token":
                assert (contract.name, op) in PHASES
