import asyncio

import pytest

from devchain.node.rpc import METHODS, NodeContext, dispatch


@pytest.fixture
def context(network, store):
    async def submit(tx):
        return network.submit(tx).to_doc()

    return NodeContext(name="Org1", peer=network.peer, submit=submit, store=store)


def call(context, method, request_id=1, **params):
    return asyncio.run(dispatch(context, {"id": request_id, "method": method, "params": params}))


def test_registered_methods():
    assert {"submit_tx", "query_state", "query_tx", "castore_get_raw", "node_stats"} <= set(METHODS)


def test_query_state_and_errors(context, signers):
    member_id = signers["owner"].identity.member_id.hex()
    assert call(context, "query_state", key=f"token/{member_id}") == {
        "id": 1,
        "result": {"balance": 1_000_000},
    }
    missing = call(context, "query_state", request_id=9, key="project/none")
    assert missing == {
        "error": {"code": "NotFound", "message": "No document at project/none"},
        "id": 9,
    }


def test_unknown_methods_and_bad_params(context):
    assert call(context, "mine_bitcoin")["error"]["code"] == "MethodNotFound"
    assert call(context, "query_state", nope=1)["error"]["code"] == "InvalidArguments"
    response = asyncio.run(dispatch(context, ["not", "a", "document"]))
    assert response["error"]["code"] == "InvalidArguments"
    assert response["id"] is None


def test_submit_and_query_tx(context, network, signers):
    client_id = signers["client"].identity.member_id.hex()
    tx = signers["owner"].sign("", "token", "transfer", {"cents": 5, "to": client_id})

    answer = call(context, "submit_tx", tx=tx.to_doc())
    assert answer["result"] == {"accepted": True, "tx_id": tx.tx_id.hex()}
    assert call(context, "query_tx", tx_id=tx.tx_id.hex())["result"] is None

    network.flush()
    result = call(context, "query_tx", tx_id=tx.tx_id.hex())["result"]
    assert result["valid"] is True
    block = call(context, "query_block", height=result["height"])["result"]
    assert block["validity"] == [True]
    assert call(context, "head_height")["result"] == network.peer.height
    assert call(context, "query_block", height=99)["error"]["code"] == "NotFound"


def test_events_filtered_by_audience(context, signers, project):
    signers["tester"].execute(
        project, "monitoring", "raise_alert", {"description": "slow", "severity": "Low"}
    )
    names = [e["event_name"] for e in call(context, "query_events", audience="Parties")["result"]]
    assert "Alert" not in names
    assert call(context, "query_events", audience="Everyone")["error"]["code"] == (
        "InvalidArguments"
    )


def test_castore_methods(context):
    cid = call(context, "castore_put", data=b"artifact".hex())["result"]
    assert bytes.fromhex(call(context, "castore_get", cid=cid)["result"]) == b"artifact"
    assert call(context, "castore_has", cid=cid)["result"] is True
    assert call(context, "castore_put", data="zz")["error"]["code"] == "UnsupportedValue"

    context.store = None
    assert call(context, "castore_get", cid=cid)["error"]["code"] == "MethodNotFound"


def test_node_stats(context):
    stats = call(context, "node_stats")["result"]
    assert stats["name"] == "Org1"
    assert stats["role"] == "peer"
    assert stats["bytes_in"] == stats["bytes_out"] == 0
