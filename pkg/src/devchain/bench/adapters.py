"""Systems under test for benchmark rounds.

Reads are confirmed by their answer, writes by the block that commits them.
"""

import asyncio
import logging
from itertools import cycle

import aiohttp

from devchain.bench.round import QueryState, SubmitWrite
from devchain.consensus.orderer import Rejected
from devchain.errors import (
    AdapterUnavailable,
    DevchainException,
    InvalidConfig,
    NotFound,
    RpcTimeout,
    TransportError,
    error_for_code,
)
from devchain.node.client import AsyncNodeClient

logger = logging.getLogger(__name__)

COMMIT_POLL = 0.002


def _require(workload, kind):
    if not isinstance(workload, kind):
        raise InvalidConfig(f"{kind.kind} adapter cannot run a {workload.kind} workload")


def _raise_invalid(result: dict):
    if not result["valid"]:
        raise error_for_code(result["error"], result["error_message"] or result["error"])


class LocalReadAdapter:
    """State reads against an in-process peer replica."""

    def __init__(self, peer):
        self.peer = peer

    async def open(self):
        pass

    async def invoke(self, workload: QueryState, k: int):
        _require(workload, QueryState)
        key = workload.key(k)
        if self.peer.query(key) is None:
            raise NotFound(f"No document at {key}")

    async def close(self):
        pass


class LocalWriteAdapter:
    """Signed writes into an in-process LocalNetwork, cut by a background task."""

    def __init__(self, network, signers):
        self.network = network
        self._signers = cycle(signers)
        self._cutter = None

    async def open(self):
        self._cutter = asyncio.create_task(self._cut_loop())

    async def _cut_loop(self):
        orderer = self.network.orderer
        while True:
            self.network.cut()
            await asyncio.sleep(orderer.next_wakeup(orderer.clock()) / 1000)

    async def invoke(self, workload: SubmitWrite, k: int):
        _require(workload, SubmitWrite)
        tx = next(self._signers).sign(
            workload.project_id, workload.contract, workload.operation, dict(workload.args)
        )
        outcome = self.network.submit(tx)
        if isinstance(outcome, Rejected):
            raise error_for_code(outcome.reason, outcome.message)
        while (result := self.network.peer.tx_result(tx.tx_id)) is None:
            await asyncio.sleep(COMMIT_POLL)
        _raise_invalid(result.to_doc())

    async def close(self):
        if self._cutter is not None:
            self._cutter.cancel()
            try:
                await self._cutter
            except asyncio.CancelledError:
                pass
            self._cutter = None


class RpcReadAdapter:
    def __init__(self, client: AsyncNodeClient):
        self.client = client

    async def open(self):
        try:
            await self.client.head_height()
        except (TransportError, RpcTimeout) as e:
            raise AdapterUnavailable(f"Node {self.client.endpoint} unreachable: {e.message}")

    async def invoke(self, workload: QueryState, k: int):
        _require(workload, QueryState)
        try:
            await self.client.query_state(workload.key(k))
        except TransportError as e:
            raise AdapterUnavailable(e.message)

    async def close(self):
        pass


class RpcWriteAdapter(RpcReadAdapter):
    def __init__(self, client: AsyncNodeClient, signers):
        super().__init__(client)
        self._signers = cycle(signers)

    async def invoke(self, workload: SubmitWrite, k: int):
        _require(workload, SubmitWrite)
        tx = next(self._signers).sign(
            workload.project_id, workload.contract, workload.operation, dict(workload.args)
        )
        try:
            outcome = await self.client.submit(tx)
            if isinstance(outcome, Rejected):
                raise error_for_code(outcome.reason, outcome.message)
            while (result := await self.client.tx_result(tx.tx_id)) is None:
                await asyncio.sleep(COMMIT_POLL)
        except TransportError as e:
            raise AdapterUnavailable(e.message)
        _raise_invalid(result)


class GatewayReadAdapter:
    """State reads through the HTTP gateway."""

    def __init__(self, base_url: str, timeout: float = 10.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = aiohttp.ClientTimeout(total=timeout)
        self.session = None

    async def open(self):
        self.session = aiohttp.ClientSession(timeout=self.timeout)
        try:
            async with self.session.get(f"{self.base_url}/api/status") as response:
                response.raise_for_status()
        except aiohttp.ClientError as e:
            await self.close()
            raise AdapterUnavailable(f"Gateway {self.base_url} unreachable: {e}")

    async def invoke(self, workload: QueryState, k: int):
        _require(workload, QueryState)
        try:
            async with self.session.get(
                f"{self.base_url}/api/state/{workload.key(k)}",
                headers={"Accept": "application/json"},
            ) as response:
                body = await response.json(content_type=None)
                if response.status != 200:
                    raise error_for_code(
                        body.get("code", "DevchainException"),
                        body.get("error_message", response.reason),
                    )
        except aiohttp.ClientConnectionError as e:
            raise AdapterUnavailable(f"Gateway {self.base_url}: {e}")
        except (aiohttp.ClientError, ValueError) as e:
            raise DevchainException(f"Gateway read failed: {e}")

    async def close(self):
        if self.session is not None:
            await self.session.close()
            self.session = None
