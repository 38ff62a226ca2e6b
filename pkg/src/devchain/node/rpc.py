"""RPC methods a node serves over rpc_request/rpc_response frames.

Each method is a thin pass-through to the owning module. Errors travel as
{code, message} and are rebuilt into typed exceptions on the client side.
"""

import inspect
import logging
import os
from dataclasses import dataclass, field
from typing import Awaitable, Callable

from devchain.consensus.events import Audience
from devchain.consensus.wire import ByteCounters
from devchain.errors import (
    DevchainException,
    InvalidArguments,
    MethodNotFound,
    NotFound,
    UnsupportedValue,
)
from devchain.ledger.encoding import from_hex
from devchain.ledger.transaction import Transaction
from devchain.node.client import block_doc_with_validity

logger = logging.getLogger(__name__)

METHODS: dict[str, Callable] = {}


def rpc_method(func):
    METHODS[func.__name__] = func
    return func


@dataclass
class NodeContext:
    """What a node exposes to its RPC methods."""

    name: str
    peer: object
    submit: Callable[[Transaction], Awaitable[dict]] | None = None
    store: object = None
    counters: ByteCounters = field(default_factory=ByteCounters)
    role: str = "peer"


def _require_store(ctx: NodeContext):
    if ctx.store is None:
        raise MethodNotFound("castore is not served by this node")
    return ctx.store


def _hex_bytes(data, method: str) -> bytes:
    try:
        return bytes.fromhex(data)
    except (TypeError, ValueError):
        raise UnsupportedValue(f"{method} expects hex data")


@rpc_method
async def submit_tx(ctx: NodeContext, tx: dict):
    if ctx.submit is None:
        raise MethodNotFound("submit_tx is not served by this node")
    return await ctx.submit(Transaction.from_doc(tx))


@rpc_method
def query_state(ctx: NodeContext, key: str):
    doc = ctx.peer.query(key)
    if doc is None:
        raise NotFound(f"No document at {key}")
    return doc


@rpc_method
def list_keys(ctx: NodeContext, prefix: str = ""):
    return ctx.peer.list_keys(prefix)


@rpc_method
def query_block(ctx: NodeContext, height: int):
    if not isinstance(height, int) or not 0 <= height <= ctx.peer.height:
        raise NotFound(f"No block at height {height}")
    return block_doc_with_validity(ctx.peer, height)


@rpc_method
def query_events(ctx: NodeContext, since: int = 0, audience=None, project_id=None):
    """Events from seq `since` on. An audience filter also admits AllMembers events."""
    try:
        audience = Audience(audience) if audience else None
    except ValueError:
        raise InvalidArguments(f"Unknown audience {audience!r}")
    return [e.to_doc() for e in ctx.peer.query_events(since, audience, project_id)]


@rpc_method
def query_tx(ctx: NodeContext, tx_id: str):
    result = ctx.peer.tx_result(from_hex(tx_id, 32, "tx_id"))
    return result.to_doc() if result else None


@rpc_method
def head_height(ctx: NodeContext):
    return ctx.peer.height


@rpc_method
def state_digest(ctx: NodeContext):
    return ctx.peer.state_digest().hex()


@rpc_method
def castore_put(ctx: NodeContext, data: str):
    return _require_store(ctx).put_blob(_hex_bytes(data, "castore_put"))


@rpc_method
def castore_get(ctx: NodeContext, cid: str):
    return _require_store(ctx).get(cid).hex()


@rpc_method
def castore_has(ctx: NodeContext, cid: str):
    return _require_store(ctx).has(cid)


@rpc_method
def castore_put_raw(ctx: NodeContext, data: str):
    return _require_store(ctx).put_raw(_hex_bytes(data, "castore_put_raw"))


@rpc_method
def castore_get_raw(ctx: NodeContext, cid: str):
    """Stored object bytes without chunk reassembly, for store-to-store fetches."""
    return _require_store(ctx).get_raw(cid).hex()


@rpc_method
def node_stats(ctx: NodeContext):
    return {
        "bytes_in": ctx.counters.bytes_in,
        "bytes_out": ctx.counters.bytes_out,
        "height": ctx.peer.height,
        "name": ctx.name,
        "pid": os.getpid(),
        "role": ctx.role,
    }


async def dispatch(ctx: NodeContext, request) -> dict:
    """Exactly one response document per request document."""
    request_id = request.get("id") if isinstance(request, dict) else None
    name = request.get("method") if isinstance(request, dict) else None
    try:
        if not isinstance(request, dict):
            raise InvalidArguments("RPC request must be a document")
        method = METHODS.get(name)
        if method is None:
            raise MethodNotFound(f"Unknown method {name!r}")
        params = request.get("params") or {}
        if not isinstance(params, dict):
            raise InvalidArguments("RPC params must be a document")
        try:
            inspect.signature(method).bind(ctx, **params)
        except TypeError as e:
            raise InvalidArguments(f"{name}: {e}")

        result = method(ctx, **params)
        if inspect.isawaitable(result):
            result = await result
        return {"id": request_id, "result": result}
    except DevchainException as e:
        return {"error": {"code": e.code, "message": e.message}, "id": request_id}
    except Exception as e:
        logger.exception(f" --> RPC {name} crashed")
        return {"error": {"code": "DevchainException", "message": str(e)}, "id": request_id}
