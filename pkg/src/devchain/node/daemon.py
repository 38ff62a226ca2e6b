"""Orderer and peer daemons.

The orderer accepts SubmitTx frames, cuts blocks and streams them to every
BlockSub connection. A peer follows the orderer from its own height, serves
the RPC and streams events to EventSub connections. Both rebuild their
state from the block log on startup.
"""

import asyncio
import logging

from devchain import config as settings
from devchain.castore.store import ContentStore
from devchain.consensus.events import Audience
from devchain.consensus.orderer import Orderer, Rejected, now_ms
from devchain.consensus.peer import Peer
from devchain.consensus.policy import OrderingPolicy
from devchain.consensus.transport import TcpTransport
from devchain.consensus.wire import ByteCounters, MessageType, read_frame, write_frame
from devchain.errors import (
    CorruptChain,
    DevchainException,
    InvalidArguments,
    InvalidConfig,
    TransportError,
)
from devchain.ledger.block import Block
from devchain.ledger.blocklog import BlockLog
from devchain.ledger.encoding import to_hex
from devchain.ledger.identity import Identity, load_key_file
from devchain.ledger.transaction import Transaction
from devchain.node.rpc import NodeContext, dispatch

logger = logging.getLogger(__name__)

RECONNECT_DELAY = 0.5


class Node:
    """Frame server shared by both roles; subclasses handle their frame types."""

    name = "node"
    role = "peer"

    def __init__(self, transport=None):
        self.transport = transport or TcpTransport()
        self.counters = ByteCounters()
        self.server = None
        self.tasks: list[asyncio.Task] = []
        self.context: NodeContext | None = None

    def __repr__(self):
        return f"{type(self).__name__}({self.name})"

    async def send(self, writer, msg_type: MessageType, doc):
        await write_frame(writer, msg_type, doc, self.counters)

    async def handle_connection(self, reader, writer):
        try:
            while True:
                frame = await read_frame(reader, self.counters)
                if frame is None:
                    return
                msg_type, doc = frame
                if msg_type is MessageType.rpc_request:
                    response = await dispatch(self.context, doc)
                    await self.send(writer, MessageType.rpc_response, response)
                elif not await self.on_frame(msg_type, doc, writer):
                    logger.warning(f" --> {self.name}: unexpected {msg_type.name} frame, closing")
                    return
        except (ConnectionError, asyncio.IncompleteReadError):
            pass
        except DevchainException as e:
            logger.warning(f" --> {self.name}: dropping connection: {e}")
        finally:
            writer.close()

    async def on_frame(self, msg_type, doc, writer) -> bool:
        return False

    async def listen(self, host: str, port: int):
        self.server = await self.transport.start_server(self.handle_connection, host, port)

    async def stop(self):
        for task in self.tasks:
            task.cancel()
        for task in self.tasks:
            try:
                await task
            except asyncio.CancelledError:
                pass
        self.tasks = []
        if self.server is not None:
            self.server.close()
            await self.server.wait_closed()
            self.server = None


class OrdererNode(Node):
    name = "orderer"
    role = "orderer"

    def __init__(
        self, network_config, identity: Identity, secret_key: bytes, transport=None, clock=now_ms
    ):
        super().__init__(transport)
        self.network_config = network_config
        self.identity = identity
        self.secret_key = secret_key
        self.clock = clock
        self.block_log = None
        self.orderer: Orderer | None = None
        self._subscribers: set[asyncio.Queue] = set()

    async def start(self):
        cfg = self.network_config
        self.block_log = BlockLog(cfg.data_path / "orderer")
        replica = Peer("orderer")
        replica.load_block_log(self.block_log)

        self.orderer = Orderer(
            self.secret_key, OrderingPolicy.from_config(cfg, self.identity), replica, self.clock
        )
        self.orderer.add_listener(self._broadcast)
        if replica.height >= 0:
            self.orderer.bootstrap(blocks=list(replica.chain))
            logger.info(f" --> Orderer resumed at height {replica.height}")
        else:
            self.orderer.bootstrap(cfg.genesis_document(to_hex(self.identity.public_key)))

        self.context = NodeContext(
            name=self.name, peer=replica, submit=self.submit, counters=self.counters, role=self.role
        )
        await self.listen(cfg.orderer.host, cfg.orderer.port)
        self.tasks.append(asyncio.create_task(self._cut_loop()))
        return self

    async def submit(self, tx: Transaction) -> dict:
        return self.orderer.submit(tx).to_doc()

    async def _cut_loop(self):
        while True:
            try:
                self.orderer.cut()
            except DevchainException as e:
                logger.error(f" --> Cutting a block failed: {e}")
            except Exception:
                logger.exception(" --> Unexpected error while cutting a block")
            await asyncio.sleep(self.orderer.next_wakeup(self.clock()) / 1000)

    def _broadcast(self, block: Block):
        for queue in list(self._subscribers):
            queue.put_nowait(block)

    async def on_frame(self, msg_type, doc, writer) -> bool:
        if msg_type is MessageType.submit_tx:
            try:
                tx = Transaction.from_doc(doc)
            except DevchainException as e:
                tx_id = b"\x00" * 32
                rejected = Rejected(tx_id, e.code, e.message)
                await self.send(writer, MessageType.ack, rejected.to_doc())
                return True
            await self.send(writer, MessageType.ack, await self.submit(tx))
            return True
        if msg_type is MessageType.block_sub:
            await self._stream_blocks(int(doc.get("from_height", 0)), writer)
            return False
        return False

    async def _stream_blocks(self, from_height: int, writer):
        queue = asyncio.Queue()
        self._subscribers.add(queue)
        try:
            sent = from_height - 1
            for block in self.orderer.replica.blocks_from(from_height):
                await self.send(writer, MessageType.block, block.to_doc())
                sent = block.height
            while True:
                block = await queue.get()
                if block.height > sent:
                    await self.send(writer, MessageType.block, block.to_doc())
                    sent = block.height
        finally:
            self._subscribers.discard(queue)

    async def stop(self):
        await super().stop()
        if self.block_log is not None:
            self.block_log.close()


class PeerNode(Node):
    role = "peer"

    def __init__(self, network_config, org: str, transport=None):
        super().__init__(transport)
        self.network_config = network_config
        self.org_config = network_config.org(org)
        self.name = org
        self.peer: Peer | None = None
        self.store: ContentStore | None = None
        self.block_log = None
        self.synced = asyncio.Event()

    async def start(self):
        data = self.network_config.data_path / self.name
        self.block_log = BlockLog(data / "blocks")
        self.peer = Peer(self.name)
        self.peer.load_block_log(self.block_log)
        self.store = ContentStore(data / "castore", max_bytes=settings.castore_max_bytes)

        self.context = NodeContext(
            name=self.name,
            peer=self.peer,
            submit=self.submit,
            store=self.store,
            counters=self.counters,
            role=self.role,
        )
        await self.listen(self.org_config.host, self.org_config.rpc_port)
        self.tasks.append(asyncio.create_task(self._follow_orderer()))
        return self

    async def submit(self, tx: Transaction) -> dict:
        """Forward a submission to the orderer and relay its answer."""
        orderer = self.network_config.orderer
        reader, writer = await self.transport.open_connection(orderer.host, orderer.port)
        try:
            await self.send(writer, MessageType.submit_tx, tx.to_doc())
            frame = await read_frame(reader, self.counters)
        finally:
            writer.close()
        if frame is None or frame[0] is not MessageType.ack:
            raise TransportError("Orderer closed the connection without an ack")
        return frame[1]

    async def _follow_orderer(self):
        orderer = self.network_config.orderer
        while True:
            try:
                reader, writer = await self.transport.open_connection(orderer.host, orderer.port)
            except TransportError as e:
                logger.warning(f" --> {self.name} cannot reach the orderer: {e.message}")
                await asyncio.sleep(RECONNECT_DELAY)
                continue
            try:
                start = self.peer.height + 1
                await self.send(writer, MessageType.block_sub, {"from_height": start})
                logger.info(f" --> {self.name} following the orderer from {start}")
                while (frame := await read_frame(reader, self.counters)) is not None:
                    msg_type, doc = frame
                    if msg_type is MessageType.block:
                        self.peer.validate_and_commit(Block.from_doc(doc))
                        self.synced.set()
            except (ConnectionError, asyncio.IncompleteReadError):
                pass
            except DevchainException as e:
                logger.error(f" --> {self.name} rejected a block from the orderer: {e}")
            except Exception:
                logger.exception(f" --> {self.name} lost the orderer stream")
            finally:
                writer.close()
            await asyncio.sleep(RECONNECT_DELAY)

    async def on_frame(self, msg_type, doc, writer) -> bool:
        if msg_type is MessageType.submit_tx:
            await self.send(writer, MessageType.ack, await self.submit(Transaction.from_doc(doc)))
            return True
        if msg_type is MessageType.event_sub:
            await self._stream_events(doc, writer)
        return False

    async def _stream_events(self, doc: dict, writer):
        try:
            audience = Audience(doc["audience"]) if doc.get("audience") else None
        except ValueError:
            raise InvalidArguments(f"Unknown audience {doc.get('audience')!r}")
        project_id = doc.get("project_id")
        queue = asyncio.Queue()

        def deliver(event):
            if project_id is None or event.project_id == project_id:
                queue.put_nowait(event)

        # subscribe first so nothing committed between the backlog and the live feed is lost
        self.peer.events.subscribe(deliver, audience)
        try:
            sent = int(doc.get("since", 0)) - 1
            for event in self.peer.query_events(sent + 1, audience, project_id):
                await self.send(writer, MessageType.event, event.to_doc())
                sent = event.seq
            while True:
                event = await queue.get()
                if event.seq > sent:
                    await self.send(writer, MessageType.event, event.to_doc())
                    sent = event.seq
        finally:
            self.peer.events.unsubscribe(deliver)

    async def stop(self):
        await super().stop()
        if self.block_log is not None:
            self.block_log.close()


def orderer_key(network_config) -> tuple[Identity, bytes]:
    return load_key_file(network_config.resolve(network_config.orderer.key_file))


async def start_node(network_config, role: str, org: str | None = None, transport=None):
    if role == "orderer":
        node = OrdererNode(network_config, *orderer_key(network_config), transport=transport)
    elif role == "peer":
        if not org:
            raise InvalidConfig("A peer needs --org")
        node = PeerNode(network_config, org, transport)
    else:
        raise InvalidConfig(f"Unknown node role {role!r}")
    try:
        return await node.start()
    except CorruptChain as e:
        logger.error(f" --> {node} refuses to start: {e.message}")
        raise


async def serve(network_config, role: str, org: str | None = None, transport=None):
    """Run one node until cancelled."""
    node = await start_node(network_config, role, org, transport)
    try:
        await asyncio.Event().wait()
    finally:
        await node.stop()
