from dataclasses import replace

import pytest

from devchain.errors import (
    BadHeight,
    BadLinkage,
    BadMerkleRoot,
    BadOrdererSignature,
    MalformedBlock,
    NonMonotonicTimestamp,
)
from devchain.ledger.block import Block, compute_merkle_root, make_block, make_genesis
from devchain.ledger.chain import Chain, audit_encoded_blocks, verify_chain
from devchain.ledger.encoding import ZERO_DIGEST, digest
from devchain.ledger.identity import Role, generate_identity
from devchain.ledger.transaction import make_body, sign_transaction

T0 = 1_700_000_000_000


@pytest.fixture
def orderer():
    return generate_identity(Role.owner, "orderer")


@pytest.fixture
def member():
    return generate_identity(Role.developer, "Org2")


def genesis_for(orderer, *members):
    identity, secret_key = orderer
    config = {
        "allocations": {},
        "identities": [m.to_doc() for m, _ in members],
        "orderer": identity.public_key.hex(),
        "orgs": ["Org1"],
        "time_scale_divisor": 1,
    }
    return make_genesis(config, T0, secret_key)


def tx_of(member, nonce):
    identity, secret_key = member
    body = make_body("demo", "token", "transfer", {"cents": nonce}, identity.member_id, T0, nonce)
    return sign_transaction(body, secret_key)


def build_chain(orderer, member, length=4, txs_per_block=2):
    _, secret_key = orderer
    blocks = [genesis_for(orderer, member)]
    nonce = 0
    for h in range(1, length):
        txs = []
        for _ in range(txs_per_block):
            nonce += 1
            txs.append(tx_of(member, nonce))
        blocks.append(make_block(h, blocks[-1].hash, T0 + h, txs, secret_key))
    return blocks


def test_merkle_root_of_no_txs_is_the_empty_digest():
    assert compute_merkle_root([]) == digest(b"")


def test_merkle_root_duplicates_the_odd_node():
    a, b, c = digest(b"a"), digest(b"b"), digest(b"c")
    assert compute_merkle_root([a]) == digest(a + a)
    assert compute_merkle_root([a, b]) == digest(a + b)
    assert compute_merkle_root([a, b, c]) == digest(digest(a + b) + digest(c + c))


def test_genesis_block(orderer):
    genesis = genesis_for(orderer)
    assert genesis.height == 0
    assert genesis.prev_hash == ZERO_DIGEST
    assert genesis.header()["config_digest"] is not None
    assert genesis.signature_valid(orderer[0].public_key)


def test_block_bytes_are_canonical(orderer, member):
    block = build_chain(orderer, member, length=2)[1]
    assert Block.from_bytes(block.to_bytes()) == block
    with pytest.raises(MalformedBlock):
        Block.from_bytes(block.to_bytes().replace(b'{"block_timestamp"', b'{ "block_timestamp"'))


def test_chain_appends_a_valid_sequence(orderer, member):
    chain = Chain()
    for block in build_chain(orderer, member):
        chain.append(block)
    assert chain.height == 3
    assert chain.tip.height == 3
    assert chain.genesis_config["orgs"] == ["Org1"]


def test_chain_refuses_wrong_height_and_linkage(orderer, member):
    blocks = build_chain(orderer, member, length=3)
    chain = Chain().append(blocks[0])
    with pytest.raises(BadHeight):
        chain.append(blocks[2])

    _, secret_key = orderer
    unlinked = make_block(1, digest(b"elsewhere"), T0 + 1, (), secret_key)
    with pytest.raises(BadLinkage):
        chain.append(unlinked)


def test_chain_refuses_non_increasing_timestamps(orderer):
    _, secret_key = orderer
    genesis = genesis_for(orderer)
    chain = Chain().append(genesis)
    with pytest.raises(NonMonotonicTimestamp):
        chain.append(make_block(1, genesis.hash, T0, (), secret_key))


def test_chain_refuses_a_bad_merkle_root(orderer, member):
    blocks = build_chain(orderer, member, length=2)
    chain = Chain().append(blocks[0])
    with pytest.raises(BadMerkleRoot):
        chain.append(replace(blocks[1], txs=blocks[1].txs[:1]))


def test_chain_refuses_blocks_from_another_orderer(orderer, member):
    blocks = build_chain(orderer, member, length=2)
    chain = Chain().append(blocks[0])
    _, rogue_key = generate_identity(Role.owner, "orderer")
    forged = make_block(1, blocks[0].hash, T0 + 1, blocks[1].txs, rogue_key)
    with pytest.raises(BadOrdererSignature):
        chain.append(forged)


def test_verify_chain_accepts_an_untouched_chain(orderer, member):
    report = verify_chain(build_chain(orderer, member))
    assert report.ok
    assert report.blocks_checked == 4
    assert report.txs_checked == 6


def test_verify_chain_reports_a_tampered_transaction(orderer, member):
    blocks = build_chain(orderer, member)
    tx = blocks[2].txs[0]
    blocks[2] = replace(blocks[2], txs=(replace(tx, args={"cents": 999}),) + blocks[2].txs[1:])

    report = verify_chain(blocks)
    assert not report.ok
    assert report.first.height == 2
    kinds = {v.kind for v in report.violations}
    assert "BadTxDigest" in kinds


def test_verify_chain_reports_a_broken_link(orderer, member):
    _, secret_key = orderer
    blocks = build_chain(orderer, member)
    blocks[2] = make_block(2, digest(b"x"), blocks[2].block_timestamp, blocks[2].txs, secret_key)
    report = verify_chain(blocks)
    assert [v.kind for v in report.violations] == ["BadLinkage", "BadLinkage"]
    assert report.first.height == 2


def test_verify_chain_reports_unknown_submitters(orderer, member):
    _, secret_key = orderer
    genesis = genesis_for(orderer)
    block = make_block(1, genesis.hash, T0 + 1, [tx_of(member, 1)], secret_key)
    report = verify_chain([genesis, block])
    assert report.first.kind == "UnknownSubmitter"


def test_audit_of_undecodable_bytes(orderer, member):
    raw = [b.to_bytes() for b in build_chain(orderer, member, length=3)]
    raw[1] = raw[1][:-5]
    report = audit_encoded_blocks(raw)
    assert report.first.kind == "MalformedBlock"
    assert report.first.height == 1
