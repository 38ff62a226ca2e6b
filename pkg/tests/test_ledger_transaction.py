from dataclasses import replace

import pytest

from devchain.errors import BadSignature, MalformedTransaction, ReplayedNonce, UnknownSubmitter
from devchain.ledger.encoding import digest
from devchain.ledger.identity import Role, generate_identity
from devchain.ledger.transaction import (
    NonceTracker,
    Transaction,
    check_transaction,
    make_body,
    sign_transaction,
    verify_transaction,
)


@pytest.fixture
def member():
    return generate_identity(Role.developer, "Org2")


def signed(member, nonce=1, args=None, project_id="demo"):
    identity, secret_key = member
    body = make_body(
        project_id, "token", "transfer", args or {"cents": 1}, identity.member_id, 1000, nonce
    )
    return sign_transaction(body, secret_key)


def registry(*members):
    return {identity.member_id: identity.public_key for identity, _ in members}


def test_tx_id_is_the_digest_of_the_body(member):
    tx = signed(member)
    assert tx.tx_id == digest(tx.body_bytes())
    assert tx.digest_matches()


def test_document_round_trip(member):
    tx = signed(member)
    assert Transaction.from_doc(tx.to_doc()) == tx


def test_unexpected_fields_are_refused(member):
    doc = signed(member).to_doc()
    with pytest.raises(MalformedTransaction):
        Transaction.from_doc({**doc, "extra": 1})
    del doc["nonce"]
    with pytest.raises(MalformedTransaction):
        Transaction.from_doc(doc)


@pytest.mark.parametrize(
    "field, value",
    [("nonce", -1), ("nonce", 2**64), ("client_timestamp", True), ("args", []), ("contract", 3)],
)
def test_malformed_bodies(member, field, value):
    identity, _ = member
    params = {
        "project_id": "demo",
        "contract": "token",
        "operation": "transfer",
        "args": {},
        "submitter": identity.member_id,
        "client_timestamp": 1,
        "nonce": 1,
    }
    params[field] = value
    with pytest.raises(MalformedTransaction):
        make_body(**params)


def test_check_transaction(member):
    tx = signed(member)
    check_transaction(tx, registry(member))

    with pytest.raises(UnknownSubmitter):
        check_transaction(tx, {})

    tampered = replace(tx, args={"cents": 1_000_000})
    with pytest.raises(BadSignature):
        check_transaction(tampered, registry(member))

    forged = replace(tx, signature=bytes(64))
    with pytest.raises(BadSignature):
        check_transaction(forged, registry(member))


def test_signature_by_another_key_is_refused(member):
    other = generate_identity(Role.developer, "Org2")
    identity, _ = member
    _, other_secret = other
    body = make_body("demo", "token", "transfer", {}, identity.member_id, 1, 1)
    tx = sign_transaction(body, other_secret)
    assert not verify_transaction(tx, registry(member))


def test_nonces_are_claimed_once_per_project(member):
    nonces = NonceTracker()
    assert verify_transaction(signed(member, nonce=7), registry(member), nonces)
    with pytest.raises(ReplayedNonce):
        verify_transaction(signed(member, nonce=7, args={"cents": 2}), registry(member), nonces)
    assert verify_transaction(signed(member, nonce=7, project_id="other"), registry(member), nonces)


def test_released_nonce_can_be_claimed_again(member):
    nonces = NonceTracker()
    tx = signed(member, nonce=3)
    nonces.claim(tx)
    nonces.release(tx)
    nonces.claim(tx)
    assert tx in nonces
