import json

import pytest

from devchain.errors import InvalidConfig, UnsupportedValue
from devchain.ledger.encoding import digest
from devchain.ledger.identity import (
    Identity,
    Role,
    generate_identity,
    load_key_file,
    public_key_of,
    save_key_file,
    sign,
    verify_signature,
)


def test_member_id_is_the_digest_of_the_public_key():
    identity, secret_key = generate_identity(Role.developer, "Org2")
    assert identity.member_id == digest(identity.public_key)
    assert public_key_of(secret_key) == identity.public_key
    assert len(secret_key) == 32


def test_signatures_verify_only_for_the_signed_message():
    identity, secret_key = generate_identity(Role.owner, "Org1")
    signature = sign(secret_key, b"message")
    assert verify_signature(identity.public_key, b"message", signature)
    assert not verify_signature(identity.public_key, b"messagf", signature)
    assert not verify_signature(identity.public_key, b"message", b"\x00" * 64)

    other, _ = generate_identity(Role.owner, "Org1")
    assert not verify_signature(other.public_key, b"message", signature)


def test_identity_document_round_trip():
    identity, _ = generate_identity(Role.client, "Org4")
    doc = identity.to_doc()
    assert doc["role"] == "Client"
    assert Identity.from_doc(doc) == identity


def test_identity_with_foreign_member_id_is_refused():
    identity, _ = generate_identity(Role.client, "Org4")
    doc = identity.to_doc()
    doc["member_id"] = "00" * 32
    with pytest.raises(UnsupportedValue):
        Identity.from_doc(doc)


def test_identity_with_unknown_role_is_refused():
    identity, _ = generate_identity(Role.client, "Org4")
    with pytest.raises(UnsupportedValue):
        Identity.from_doc({**identity.to_doc(), "role": "Auditor"})


def test_key_file(tmp_path):
    identity, secret_key = generate_identity(Role.tester, "Org3")
    path = tmp_path / "keys" / "tester.json"
    save_key_file(path, identity, secret_key)

    assert path.stat().st_mode & 0o777 == 0o600
    assert load_key_file(path) == (identity, secret_key)


def test_key_file_with_mismatched_secret(tmp_path):
    identity, _ = generate_identity(Role.tester, "Org3")
    _, other_secret = generate_identity(Role.tester, "Org3")
    path = tmp_path / "tester.json"
    save_key_file(path, identity, other_secret)
    with pytest.raises(InvalidConfig):
        load_key_file(path)


def test_unreadable_key_file(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text(json.dumps({"role": "Owner"}))
    with pytest.raises(InvalidConfig):
        load_key_file(path)
    with pytest.raises(InvalidConfig):
        load_key_file(tmp_path / "missing.json")
