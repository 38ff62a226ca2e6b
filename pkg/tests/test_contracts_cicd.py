import pytest

from devchain.castore.objects import cid_of
from devchain.consensus.events import Audience
from devchain.contracts.cicd import FAILED_BUILD_MESSAGE
from devchain.contracts.models import build_key, project_key
from devchain.errors import (
    BuildNotBuilt,
    BuildNotFound,
    DuplicateNameVersion,
    GateNotPassed,
    MalformedCid,
    Unauthorized,
)

PACKAGE = cid_of(b"package bytes")
ALL_CLEAR = {"compliance": True, "quality": True, "security": True}


def build(version="1.0.0", review="Pass", unit="Pass", integration="Pass", package_cid=PACKAGE):
    return {
        "build": {
            "date": "2024-01-01",
            "integration": integration,
            "name": "webapp",
            "package_cid": package_cid,
            "review": review,
            "time": "12:00:00",
            "unit": unit,
            "version": version,
        }
    }


def ref(version="1.0.0", **extra):
    return {"name": "webapp", "version": version, **extra}


def test_passing_build_is_recorded_as_built(network, signers, project):
    assert signers["developer"].execute(project, "cicd", "record_build", build()) == "Built"
    doc = network.peer.query(build_key(project, "webapp", "1.0.0"))
    assert doc["package_cid"] == PACKAGE
    assert doc["gate"] is None


def test_failing_build_raises_an_alert(network, signers, project):
    status = signers["developer"].execute(
        project, "cicd", "record_build", build(unit="Fail", package_cid=None)
    )
    assert status == "Failed"

    alerts = [
        e
        for e in network.peer.query_events(audience=Audience.developers)
        if e.event_name == "Alert"
    ]
    assert alerts[-1].payload["message"] == FAILED_BUILD_MESSAGE
    assert alerts[-1].payload["failed_stages"] == ["unit"]


def test_passing_build_needs_a_package(signers, project):
    with pytest.raises(MalformedCid):
        signers["developer"].execute(project, "cicd", "record_build", build(package_cid=None))


def test_name_and_version_are_recorded_once(signers, project):
    developer = signers["developer"]
    developer.execute(project, "cicd", "record_build", build())
    with pytest.raises(DuplicateNameVersion):
        developer.execute(project, "cicd", "record_build", build())


def test_gate_is_attested_by_manager_or_tester(network, signers, project):
    signers["developer"].execute(project, "cicd", "record_build", build())
    with pytest.raises(Unauthorized):
        signers["developer"].execute(project, "cicd", "attest_gate", ref(**ALL_CLEAR))
    with pytest.raises(Unauthorized):
        signers["owner"].execute(project, "cicd", "attest_gate", ref(**ALL_CLEAR))

    partial = {**ALL_CLEAR, "security": False}
    assert signers["tester"].execute(project, "cicd", "attest_gate", ref(**partial)) == "Built"
    assert signers["manager"].execute(project, "cicd", "attest_gate", ref(**ALL_CLEAR)) == (
        "GatePassed"
    )
    gate = network.peer.query(build_key(project, "webapp", "1.0.0"))["gate"]
    assert gate["attester"] == signers["manager"].identity.member_id.hex()


def test_failed_or_missing_builds_cannot_be_attested(signers, project):
    signers["developer"].execute(
        project, "cicd", "record_build", build(review="Fail", package_cid=None)
    )
    with pytest.raises(BuildNotBuilt):
        signers["tester"].execute(project, "cicd", "attest_gate", ref(**ALL_CLEAR))
    with pytest.raises(BuildNotFound):
        signers["tester"].execute(project, "cicd", "attest_gate", ref("9.9.9", **ALL_CLEAR))


def test_deploy_requires_the_gate(signers, project):
    signers["developer"].execute(project, "cicd", "record_build", build())
    with pytest.raises(GateNotPassed):
        signers["developer"].execute(project, "cicd", "deploy", ref(target="prod"))


def test_deploy_counts_the_iteration_and_opens_a_due(network, signers, project):
    developer = signers["developer"]
    developer.execute(project, "cicd", "record_build", build())
    signers["tester"].execute(project, "cicd", "attest_gate", ref(**ALL_CLEAR))

    assert developer.execute(project, "cicd", "deploy", ref(target="prod")) == "Deployed"
    doc = network.peer.query(build_key(project, "webapp", "1.0.0"))
    assert doc["status"] == "Deployed"
    assert doc["target"] == "prod"

    state = network.peer.query(project_key(project))
    assert state["iteration_counter"] == 1
    assert state["next_due"] == doc["deployed_at"] + 2 * 86_400_000

    with pytest.raises(GateNotPassed):
        developer.execute(project, "cicd", "deploy", ref(target="prod"))
