import pytest

from devchain.ledger.blocklog import BlockLog, scan_log
from devchain.ledger.block import make_block, make_genesis
from devchain.ledger.identity import Role, generate_identity
from devchain.ledger.state import StateStore

T0 = 1_700_000_000_000


@pytest.fixture
def blocks():
    _, secret_key = generate_identity(Role.owner, "orderer")
    chain = [make_genesis({"orgs": ["Org1"]}, T0, secret_key)]
    for h in range(1, 5):
        chain.append(make_block(h, chain[-1].hash, T0 + h, (), secret_key))
    return chain


def test_block_log_reads_back_what_was_appended(tmp_path, blocks):
    with BlockLog(tmp_path, fsync=False) as log:
        for block in blocks:
            log.append(block)
        assert len(log) == 5
        assert log.read_raw(3) == blocks[3].to_bytes()

    with BlockLog(tmp_path, fsync=False) as log:
        assert list(log.blocks()) == blocks


def test_torn_tail_is_truncated_on_open(tmp_path, blocks):
    with BlockLog(tmp_path, fsync=False) as log:
        for block in blocks[:3]:
            log.append(block)
    frame = blocks[3].to_bytes()
    with open(tmp_path / "blocks.log", "ab") as file:
        file.write(len(frame).to_bytes(4, "big") + frame[:10])

    with BlockLog(tmp_path, fsync=False) as log:
        assert len(log) == 3
        log.append(blocks[3])
    with BlockLog(tmp_path, fsync=False) as log:
        assert list(log.blocks()) == blocks[:4]


def test_index_is_rebuilt_when_it_lags(tmp_path, blocks):
    with BlockLog(tmp_path, fsync=False) as log:
        for block in blocks:
            log.append(block)
    index = tmp_path / "blocks.idx"
    index.write_bytes(index.read_bytes()[:12])

    with BlockLog(tmp_path, fsync=False) as log:
        assert len(log) == 5
        assert list(log.blocks()) == blocks


def test_scan_log_keeps_a_torn_tail(tmp_path, blocks):
    with BlockLog(tmp_path, fsync=False) as log:
        for block in blocks[:2]:
            log.append(block)
    with open(tmp_path / "blocks.log", "ab") as file:
        file.write(b"\x00\x00\x01\x00{")

    frames = list(scan_log(tmp_path))
    assert frames[:2] == [b.to_bytes() for b in blocks[:2]]
    assert frames[2] == b"{"


def test_overlay_writes_stay_private_until_applied():
    state = StateStore()
    overlay = state.overlay()
    overlay.put("project/a", {"status": "Draft"})
    assert "project/a" not in state
    assert overlay.get("project/a") == {"status": "Draft"}

    state.apply(overlay.writes, 0)
    assert state.get("project/a") == {"status": "Draft"}
    assert state.version == 0


def test_nested_overlay_commits_into_its_parent_only():
    state = StateStore()
    outer = state.overlay()
    inner = outer.overlay()
    inner.put("k", {"v": 1})
    discarded = outer.overlay()
    discarded.put("other", {"v": 2})

    inner.commit()
    assert outer.get("k") == {"v": 1}
    assert outer.get("other") is None
    with pytest.raises(TypeError):
        outer.commit()


def test_deletes_and_prefix_listing():
    state = StateStore()
    overlay = state.overlay()
    for key in ("token/b", "token/a", "project/x"):
        overlay.put(key, {"balance": 1})
    state.apply(overlay.writes, 0)

    overlay = state.overlay()
    overlay.delete("token/a")
    overlay.put("token/c", {"balance": 2})
    assert overlay.keys("token/") == ["token/b", "token/c"]
    assert "token/a" not in overlay

    state.apply(overlay.writes, 1)
    assert state.keys("token/") == ["token/b", "token/c"]
    assert state.items("project/") == [("project/x", {"balance": 1})]


def test_state_bytes_do_not_depend_on_write_order():
    first, second = StateStore(), StateStore()
    a = first.overlay()
    a.put("x", {"n": 1})
    a.put("y", {"n": 2})
    b = second.overlay()
    b.put("y", {"n": 2})
    b.put("x", {"n": 1})
    first.apply(a.writes, 0)
    second.apply(b.writes, 0)
    assert first.to_bytes() == second.to_bytes()
