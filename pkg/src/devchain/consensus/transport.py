"""Stream transports: TCP via asyncio, and an in-process loopback for tests.

Both hand a connection handler an (asyncio.StreamReader, writer) pair, so
the same frame code runs unchanged over either.
"""

import asyncio
import errno
import logging

from devchain.errors import PortInUse, TransportError

logger = logging.getLogger(__name__)


class TcpTransport:
    async def start_server(self, handler, host: str, port: int):
        try:
            server = await asyncio.start_server(handler, host, port)
        except OSError as e:
            if e.errno == errno.EADDRINUSE:
                raise PortInUse(f"{host}:{port} is already in use")
            raise TransportError(f"Could not listen on {host}:{port}: {e}")
        logger.info(f" --> Listening on {host}:{port}")
        return server

    async def open_connection(self, host: str, port: int):
        try:
            return await asyncio.open_connection(host, port)
        except OSError as e:
            raise TransportError(f"Could not connect to {host}:{port}: {e}")


class LoopbackWriter:
    """Writer half of an in-process pipe; bytes go straight into the peer's reader."""

    def __init__(self, target: asyncio.StreamReader):
        self._target = target
        self._closed = False

    def write(self, data: bytes):
        if self._closed:
            raise TransportError("Write on a closed loopback connection")
        self._target.feed_data(data)

    async def drain(self):
        await asyncio.sleep(0)

    def close(self):
        if not self._closed:
            self._closed = True
            self._target.feed_eof()

    def is_closing(self) -> bool:
        return self._closed

    async def wait_closed(self):
        pass

    def get_extra_info(self, name, default=None):
        return {"peername": ("loopback", 0)}.get(name, default)


class LoopbackServer:
    def __init__(self, transport: "LoopbackTransport", endpoint):
        self._transport = transport
        self._endpoint = endpoint

    def close(self):
        self._transport._servers.pop(self._endpoint, None)

    async def wait_closed(self):
        pass


class LoopbackTransport:
    def __init__(self):
        self._servers = {}
        self._tasks = set()

    async def start_server(self, handler, host: str, port: int):
        endpoint = (host, port)
        if endpoint in self._servers:
            raise PortInUse(f"{host}:{port} is already in use")
        self._servers[endpoint] = handler
        return LoopbackServer(self, endpoint)

    async def open_connection(self, host: str, port: int):
        handler = self._servers.get((host, port))
        if handler is None:
            raise TransportError(f"Could not connect to {host}:{port}: connection refused")

        client_reader = asyncio.StreamReader()
        server_reader = asyncio.StreamReader()
        client_writer = LoopbackWriter(server_reader)
        server_writer = LoopbackWriter(client_reader)

        task = asyncio.ensure_future(handler(server_reader, server_writer))
        self._tasks.add(task)
        task.add_done_callback(self._tasks.discard)
        return client_reader, client_writer
