import hashlib

import pytest

from devchain.errors import UnsupportedValue
from devchain.ledger.encoding import (
    canonical_decode,
    canonical_encode,
    digest,
    from_hex,
    is_canonical,
)


def test_canonical_encoding_sorts_keys_without_whitespace():
    assert canonical_encode({"b": 1, "a": [True, None, "x"]}) == b'{"a":[true,null,"x"],"b":1}'


def test_key_order_does_not_change_the_bytes():
    assert canonical_encode({"x": 1, "y": {"b": 2, "a": 1}}) == canonical_encode(
        {"y": {"a": 1, "b": 2}, "x": 1}
    )


def test_non_ascii_text_is_kept_as_utf8():
    assert canonical_encode({"name": "Zürich"}) == '{"name":"Zürich"}'.encode("utf-8")


@pytest.mark.parametrize("doc", [1.5, {"amount": 0.1}, [1, 2.0], {1: "x"}, {"s": {1, 2}}])
def test_unsupported_values_are_refused(doc):
    with pytest.raises(UnsupportedValue):
        canonical_encode(doc)


@pytest.mark.parametrize("data", [b'{"a":1.5}', b"[NaN]", b"not json", b"\xff\xfe"])
def test_decode_refuses_floats_and_garbage(data):
    with pytest.raises(UnsupportedValue):
        canonical_decode(data)


def test_is_canonical():
    assert is_canonical(b'{"a":1,"b":2}')
    assert not is_canonical(b'{"b":2,"a":1}')
    assert not is_canonical(b'{"a": 1}')
    assert not is_canonical(b'{"a":1.0}')


def test_digest_is_sha256():
    assert digest(b"abc") == hashlib.sha256(b"abc").digest()


def test_from_hex_is_strict():
    assert from_hex("00ff", 2) == b"\x00\xff"
    with pytest.raises(UnsupportedValue):
        from_hex("00FF")
    with pytest.raises(UnsupportedValue):
        from_hex("0f0")
    with pytest.raises(UnsupportedValue):
        from_hex("00ff", 32, "tx_id")
    with pytest.raises(UnsupportedValue):
        from_hex(None)


def test_lone_surrogates_are_refused():
    with pytest.raises(UnsupportedValue):
        canonical_encode({"note": "\ud800"})
    assert canonical_decode(b'{"note":"\\ud800"}') == {"note": "\ud800"}
    assert not is_canonical(b'{"note":"\\ud800"}')
