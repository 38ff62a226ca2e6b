"""Clients of a devchain node: over the frame RPC, or in-process for tests."""

import asyncio
import itertools
import logging
import socket
import threading
import time
from typing import Protocol

from devchain import config
from devchain.consensus.events import Audience, Event
from devchain.consensus.orderer import Rejected, SubmitResult, submit_result_from_doc
from devchain.consensus.transport import TcpTransport
from devchain.consensus.wire import (
    FrameDecoder,
    MessageType,
    encode_frame,
    read_frame,
    write_frame,
)
from devchain.errors import (
    InvalidConfig,
    NotFound,
    RpcTimeout,
    TransportError,
    error_for_code,
)
from devchain.ledger.identity import Identity
from devchain.ledger.transaction import Transaction, make_body, sign_transaction

logger = logging.getLogger(__name__)


def parse_endpoint(endpoint: str) -> tuple[str, int]:
    host, _, port = endpoint.rpartition(":")
    if not host or not port.isdigit():
        raise InvalidConfig(f"Endpoint must look like host:port, got {endpoint!r}")
    return host, int(port)


class ChainClient(Protocol):
    def submit(self, tx: Transaction) -> SubmitResult: ...

    def tx_result(self, tx_id: bytes) -> dict | None: ...

    def query_state(self, key: str): ...

    def list_keys(self, prefix: str = "") -> list[str]: ...

    def query_block(self, height: int) -> dict: ...

    def query_events(self, since: int = 0, audience: Audience | None = None) -> list[Event]: ...

    def head_height(self) -> int: ...

    def castore_put(self, data: bytes) -> str: ...

    def castore_get(self, cid: str) -> bytes: ...

    def state_digest(self) -> str: ...


class NodeClient:
    """Blocking RPC client; one connection per call."""

    _ids = itertools.count(1)

    def __init__(self, endpoint: str | None = None, timeout: float | None = None):
        self.endpoint = endpoint or config.DEVCHAIN_ENDPOINT or config.gateway_peer_endpoint
        self.host, self.port = parse_endpoint(self.endpoint)
        self.timeout = timeout or config.rpc_timeout

    def __repr__(self):
        return f"NodeClient({self.endpoint})"

    def call(self, method: str, **params):
        request_id = next(self._ids)
        request = encode_frame(
            MessageType.rpc_request, {"id": request_id, "method": method, "params": params}
        )
        try:
            with socket.create_connection((self.host, self.port), timeout=self.timeout) as sock:
                sock.sendall(request)
                decoder = FrameDecoder()
                while True:
                    chunk = sock.recv(65536)
                    if not chunk:
                        raise TransportError(f"{self.endpoint} closed the connection")
                    for msg_type, doc in decoder.feed(chunk):
                        if msg_type is MessageType.rpc_response and doc.get("id") == request_id:
                            return self._unwrap(doc)
        except socket.timeout:
            raise RpcTimeout(f"{method} on {self.endpoint} timed out after {self.timeout}s")
        except OSError as e:
            raise TransportError(f"RPC to {self.endpoint} failed: {e}")

    @staticmethod
    def _unwrap(doc: dict):
        error = doc.get("error")
        if error:
            raise error_for_code(error["code"], error["message"])
        return doc.get("result")

    def submit(self, tx: Transaction) -> SubmitResult:
        return submit_result_from_doc(self.call("submit_tx", tx=tx.to_doc()))

    def tx_result(self, tx_id: bytes) -> dict | None:
        return self.call("query_tx", tx_id=tx_id.hex())

    def query_state(self, key: str):
        return self.call("query_state", key=key)

    def list_keys(self, prefix: str = "") -> list[str]:
        return self.call("list_keys", prefix=prefix)

    def query_block(self, height: int) -> dict:
        return self.call("query_block", height=height)

    def query_events(self, since: int = 0, audience: Audience | None = None) -> list[Event]:
        docs = self.call("query_events", since=since, audience=audience.value if audience else None)
        return [Event.from_doc(d) for d in docs]

    def head_height(self) -> int:
        return self.call("head_height")

    def castore_put(self, data: bytes) -> str:
        return self.call("castore_put", data=data.hex())

    def castore_get(self, cid: str) -> bytes:
        return bytes.fromhex(self.call("castore_get", cid=cid))

    def castore_put_raw(self, data: bytes) -> str:
        return self.call("castore_put_raw", data=data.hex())

    def castore_get_raw(self, cid: str) -> bytes:
        return bytes.fromhex(self.call("castore_get_raw", cid=cid))

    def state_digest(self) -> str:
        return self.call("state_digest")


class AsyncNodeClient:
    """asyncio flavour of NodeClient, over any transport (TCP or loopback)."""

    _ids = itertools.count(1)

    def __init__(self, endpoint: str | None = None, timeout: float | None = None, transport=None):
        self.endpoint = endpoint or config.DEVCHAIN_ENDPOINT or config.gateway_peer_endpoint
        self.host, self.port = parse_endpoint(self.endpoint)
        self.timeout = timeout or config.rpc_timeout
        self.transport = transport or TcpTransport()

    async def call(self, method: str, **params):
        request_id = next(self._ids)
        try:
            return await asyncio.wait_for(self._call(request_id, method, params), self.timeout)
        except asyncio.TimeoutError:
            raise RpcTimeout(f"{method} on {self.endpoint} timed out after {self.timeout}s")

    async def _call(self, request_id: int, method: str, params: dict):
        reader, writer = await self.transport.open_connection(self.host, self.port)
        try:
            await write_frame(
                writer,
                MessageType.rpc_request,
                {"id": request_id, "method": method, "params": params},
            )
            while True:
                frame = await read_frame(reader)
                if frame is None:
                    raise TransportError(f"{self.endpoint} closed the connection")
                msg_type, doc = frame
                if msg_type is MessageType.rpc_response and doc.get("id") == request_id:
                    return NodeClient._unwrap(doc)
        except (ConnectionError, OSError) as e:
            raise TransportError(f"RPC to {self.endpoint} failed: {e}")
        finally:
            writer.close()

    async def submit(self, tx: Transaction) -> SubmitResult:
        return submit_result_from_doc(await self.call("submit_tx", tx=tx.to_doc()))

    async def tx_result(self, tx_id: bytes) -> dict | None:
        return await self.call("query_tx", tx_id=tx_id.hex())

    async def query_state(self, key: str):
        return await self.call("query_state", key=key)

    async def head_height(self) -> int:
        return await self.call("head_height")

    async def state_digest(self) -> str:
        return await self.call("state_digest")

    async def events(self, since: int = 0, audience: Audience | None = None, project_id=None):
        """Backlog from `since`, then live events, until the connection drops."""
        reader, writer = await self.transport.open_connection(self.host, self.port)
        request = {"since": since}
        if audience is not None:
            request["audience"] = audience.value
        if project_id is not None:
            request["project_id"] = project_id
        try:
            await write_frame(writer, MessageType.event_sub, request)
            while (frame := await read_frame(reader)) is not None:
                msg_type, doc = frame
                if msg_type is MessageType.event:
                    yield Event.from_doc(doc)
        except (ConnectionError, OSError) as e:
            raise TransportError(f"Event stream from {self.endpoint} failed: {e}")
        finally:
            writer.close()


class LocalClient:
    """ChainClient over an in-process LocalNetwork; `tx_result` drives block cutting."""

    def __init__(self, network, store=None, org: str | None = None):
        self.network = network
        self.peer = network.peers[org] if org else network.peer
        self.store = store

    def submit(self, tx: Transaction) -> SubmitResult:
        return self.network.submit(tx)

    def tx_result(self, tx_id: bytes) -> dict | None:
        result = self.peer.tx_result(tx_id)
        if result is None and self.network.orderer.pending:
            self.network.flush()
            result = self.peer.tx_result(tx_id)
        return result.to_doc() if result else None

    def query_state(self, key: str):
        doc = self.peer.query(key)
        if doc is None:
            raise NotFound(f"No document at {key}")
        return doc

    def list_keys(self, prefix: str = "") -> list[str]:
        return self.peer.list_keys(prefix)

    def query_block(self, height: int) -> dict:
        if not 0 <= height <= self.peer.height:
            raise NotFound(f"No block at height {height}")
        return block_doc_with_validity(self.peer, height)

    def query_events(self, since: int = 0, audience: Audience | None = None) -> list[Event]:
        return self.peer.query_events(since, audience)

    def head_height(self) -> int:
        return self.peer.height

    def castore_put(self, data: bytes) -> str:
        return self.store.put_blob(data)

    def castore_get(self, cid: str) -> bytes:
        return self.store.get(cid)

    def castore_put_raw(self, data: bytes) -> str:
        return self.store.put_raw(data)

    def castore_get_raw(self, cid: str) -> bytes:
        return self.store.get_raw(cid)

    def state_digest(self) -> str:
        return self.peer.state_digest().hex()


def block_doc_with_validity(peer, height: int) -> dict:
    doc = peer.chain[height].to_doc()
    doc["validity"] = peer.bitmaps.get(height, [])
    return doc


class Signer:
    """Builds, signs and submits transactions for one identity."""

    def __init__(self, identity: Identity, secret_key: bytes, client: ChainClient):
        self.identity = identity
        self.secret_key = secret_key
        self.client = client
        self._last_nonce = 0
        self._lock = threading.Lock()

    def __repr__(self):
        return f"Signer({self.identity})"

    def next_nonce(self) -> int:
        """Microsecond clock, bumped on collision, so separate processes stay unique."""
        with self._lock:
            self._last_nonce = max(self._last_nonce + 1, time.time_ns() // 1000)
            return self._last_nonce

    def sign(self, project_id: str, contract: str, operation: str, args: dict) -> Transaction:
        body = make_body(
            project_id,
            contract,
            operation,
            args,
            self.identity.member_id,
            time.time_ns() // 1_000_000,
            self.next_nonce(),
        )
        return sign_transaction(body, self.secret_key)

    def submit(self, project_id: str, contract: str, operation: str, args: dict | None = None):
        tx = self.sign(project_id, contract, operation, args or {})
        outcome = self.client.submit(tx)
        if isinstance(outcome, Rejected):
            raise error_for_code(outcome.reason, outcome.message)
        return tx

    def commit(self, tx: Transaction, timeout=None, resubmit: bool = False):
        """Submit an already signed tx and wait for its block.

        With `resubmit`, a ReplayedNonce answer means an earlier attempt got
        through, so it waits for that one instead of failing.
        """
        outcome = self.client.submit(tx)
        if isinstance(outcome, Rejected) and not (resubmit and outcome.reason == "ReplayedNonce"):
            raise error_for_code(outcome.reason, outcome.message)
        result = wait_for_tx(self.client, tx.tx_id, timeout or config.rpc_timeout)
        if not result["valid"]:
            raise error_for_code(result["error"], result["error_message"] or result["error"])
        return result["result"]

    def execute(self, project_id: str, contract: str, operation: str, args=None, timeout=None):
        """Submit and wait for the commit; returns the operation's result.

        A transaction marked invalid in its block raises the contract error.
        """
        return self.commit(self.sign(project_id, contract, operation, args or {}), timeout)


def wait_for_tx(client: ChainClient, tx_id: bytes, timeout: float, poll: float = 0.05) -> dict:
    deadline = time.monotonic() + timeout
    while True:
        result = client.tx_result(tx_id)
        if result is not None:
            return result
        if time.monotonic() >= deadline:
            raise RpcTimeout(f"tx {tx_id.hex()[:12]} not committed within {timeout}s")
        time.sleep(poll)
