import asyncio

import pytest

from devchain.config import network_config_from_dict
from devchain.consensus.orderer import Accepted
from devchain.consensus.transport import LoopbackTransport
from devchain.errors import InvalidConfig
from devchain.ledger.identity import Role, generate_identity, save_key_file
from devchain.node.client import AsyncNodeClient, Signer
from devchain.node.daemon import OrdererNode, PeerNode, orderer_key, start_node

BALANCE = 5_000


@pytest.fixture
def members():
    return {
        "owner": generate_identity(Role.owner, "Org1"),
        "client": generate_identity(Role.client, "Org2"),
    }


@pytest.fixture
def network_config(tmp_path, members):
    orderer_identity, orderer_secret = generate_identity(Role.owner, "orderer")
    save_key_file(tmp_path / "keys" / "orderer.json", orderer_identity, orderer_secret)
    return network_config_from_dict(
        {
            "allocations": {i.member_id.hex(): BALANCE for i, _ in members.values()},
            "data_dir": "data",
            "identities": [i.to_doc() for i, _ in members.values()],
            "orderer": {"key_file": "keys/orderer.json", "port": 7050},
            "orgs": [{"name": "Org1", "rpc_port": 7051}, {"name": "Org2", "rpc_port": 8051}],
            "policy": {"max_batch_wait_ms": 5},
        },
        base_dir=tmp_path,
    )


async def wait_committed(client, tx_id, timeout=5.0):
    async def poll():
        while (result := await client.tx_result(tx_id)) is None:
            await asyncio.sleep(0.01)
        return result

    return await asyncio.wait_for(poll(), timeout)


async def wait_height(node, height, timeout=5.0):
    async def poll():
        while node.peer.height < height:
            await asyncio.sleep(0.01)

    await asyncio.wait_for(poll(), timeout)


def test_orderer_and_peers_agree(network_config, members):
    async def scenario():
        transport = LoopbackTransport()
        orderer = await OrdererNode(
            network_config, *orderer_key(network_config), transport=transport
        ).start()
        peers = [
            await PeerNode(network_config, org, transport).start() for org in ("Org1", "Org2")
        ]
        try:
            owner = Signer(*members["owner"], client=None)
            client_id = members["client"][0].member_id.hex()
            tx = owner.sign("", "token", "transfer", {"cents": 700, "to": client_id})

            rpc = AsyncNodeClient("127.0.0.1:7051", transport=transport)
            outcome = await rpc.submit(tx)
            result = await wait_committed(rpc, tx.tx_id)
            for peer in peers:
                await wait_height(peer, result["height"])
            balance = await AsyncNodeClient("127.0.0.1:8051", transport=transport).query_state(
                f"token/{client_id}"
            )
            digests = {peer.peer.state_digest() for peer in peers}
            digests.add(orderer.orderer.replica.state_digest())
            return outcome, result, balance, digests
        finally:
            for node in (*peers, orderer):
                await node.stop()

    outcome, result, balance, digests = asyncio.run(scenario())
    assert isinstance(outcome, Accepted)
    assert result["valid"]
    assert balance == {"balance": BALANCE + 700}
    assert len(digests) == 1


def test_nodes_resume_from_their_block_logs(network_config, members):
    async def first_run():
        transport = LoopbackTransport()
        orderer = await start_node(network_config, "orderer", transport=transport)
        peer = await start_node(network_config, "peer", "Org1", transport)
        owner = Signer(*members["owner"], client=None)
        tx = owner.sign("", "token", "transfer", {"cents": 1, "to": "00" * 32})
        rpc = AsyncNodeClient("127.0.0.1:7051", transport=transport)
        await rpc.submit(tx)
        result = await wait_committed(rpc, tx.tx_id)
        digest = peer.peer.state_digest()
        await peer.stop()
        await orderer.stop()
        return result["height"], digest

    async def second_run():
        transport = LoopbackTransport()
        orderer = await start_node(network_config, "orderer", transport=transport)
        peer = await start_node(network_config, "peer", "Org1", transport)
        heights = (orderer.orderer.replica.height, peer.peer.height)
        digest = peer.peer.state_digest()
        await peer.stop()
        await orderer.stop()
        return heights, digest

    height, digest = asyncio.run(first_run())
    heights, resumed = asyncio.run(second_run())
    assert heights == (height, height)
    assert resumed == digest
    assert (network_config.data_path / "Org1" / "blocks").is_dir()


def test_start_node_refuses_unknown_roles(network_config):
    with pytest.raises(InvalidConfig):
        asyncio.run(start_node(network_config, "validator"))
    with pytest.raises(InvalidConfig):
        asyncio.run(start_node(network_config, "peer"))


def test_cut_loop_survives_an_unexpected_error(network_config, members):
    async def scenario():
        transport = LoopbackTransport()
        orderer = await start_node(network_config, "orderer", transport=transport)
        peer = await start_node(network_config, "peer", "Org1", transport)
        cut = orderer.orderer.cut
        calls = []

        def cut_failing_once(*args, **kwargs):
            calls.append(1)
            if len(calls) == 1:
                raise RuntimeError("clock went backwards")
            return cut(*args, **kwargs)

        orderer.orderer.cut = cut_failing_once
        try:
            owner = Signer(*members["owner"], client=None)
            tx = owner.sign("", "token", "transfer", {"cents": 3, "to": "00" * 32})
            rpc = AsyncNodeClient("127.0.0.1:7051", transport=transport)
            await rpc.submit(tx)
            return await wait_committed(rpc, tx.tx_id), len(calls)
        finally:
            await peer.stop()
            await orderer.stop()

    result, calls = asyncio.run(scenario())
    assert result["valid"]
    assert calls > 1
