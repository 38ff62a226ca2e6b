"""Single orderer: admission, FIFO batching and block signing."""

import logging
import threading
import time
from collections import deque
from dataclasses import dataclass

from devchain.consensus.policy import OrderingPolicy
from devchain.errors import DevchainException, QueueFull, ReplayedNonce
from devchain.ledger.block import Block, make_block, make_genesis
from devchain.ledger.transaction import NonceTracker, Transaction, check_transaction

logger = logging.getLogger(__name__)


def now_ms() -> int:
    return time.time_ns() // 1_000_000


@dataclass(frozen=True)
class Accepted:
    tx_id: bytes

    def to_doc(self) -> dict:
        return {"accepted": True, "tx_id": self.tx_id.hex()}


@dataclass(frozen=True)
class Rejected:
    tx_id: bytes
    reason: str
    message: str = ""

    def to_doc(self) -> dict:
        return {
            "accepted": False,
            "message": self.message,
            "reason": self.reason,
            "tx_id": self.tx_id.hex(),
        }


SubmitResult = Accepted | Rejected


def submit_result_from_doc(doc: dict) -> SubmitResult:
    tx_id = bytes.fromhex(doc["tx_id"])
    if doc["accepted"]:
        return Accepted(tx_id)
    return Rejected(tx_id, doc["reason"], doc.get("message", ""))


@dataclass(frozen=True)
class QueuedTx:
    tx: Transaction
    enqueued_at: int


@dataclass(frozen=True)
class ChainTip:
    height: int
    hash: bytes
    block_timestamp: int

    @classmethod
    def of(cls, block: Block) -> "ChainTip":
        return cls(block.height, block.hash, block.block_timestamp)


def cut_block(
    queue: deque,
    policy: OrderingPolicy,
    now: int,
    tip: ChainTip,
    orderer_secret_key: bytes,
    force: bool = False,
) -> Block | None:
    """Take up to max_batch_size txs off the front of `queue` when a trigger fires.

    Triggers: the queue holds a full batch, the oldest tx has waited
    max_batch_wait_ms, or `force` (a contract deadline has passed, which
    may produce an empty block).
    """
    full = len(queue) >= policy.max_batch_size
    expired = bool(queue) and now - queue[0].enqueued_at >= policy.max_batch_wait_ms
    if not (full or expired or force):
        return None

    txs = [queue.popleft().tx for _ in range(min(len(queue), policy.max_batch_size))]
    block_timestamp = max(now, tip.block_timestamp + 1)
    return make_block(tip.height + 1, tip.hash, block_timestamp, txs, orderer_secret_key)


class Orderer:
    """Accepts submissions concurrently; cuts blocks from a single thread.

    `replica` is a Peer fed with the orderer's own blocks. It supplies the
    member registry for admission and the contract deadlines that drive
    heartbeat blocks.
    """

    def __init__(self, secret_key: bytes, policy: OrderingPolicy, replica, clock=now_ms):
        self.secret_key = secret_key
        self.policy = policy
        self.replica = replica
        self.clock = clock
        self.queue: deque[QueuedTx] = deque()
        self.nonces = NonceTracker()
        self.tip: ChainTip | None = None
        self.listeners = []
        self._queued_ids: set[bytes] = set()
        self._lock = threading.Lock()
        self._cut_lock = threading.Lock()

    def bootstrap(self, genesis_document: dict | None = None, blocks=None) -> Block | None:
        """Start from existing blocks, or sign a new genesis block."""
        if blocks:
            for block in blocks:
                if self.replica.height < block.height:
                    self.replica.validate_and_commit(block)
                for tx in block.txs:
                    self.nonces.seen.add(self.nonces.key(tx))
            self.tip = ChainTip.of(blocks[-1])
            return None

        genesis = make_genesis(genesis_document, self.clock(), self.secret_key)
        self.tip = ChainTip.of(genesis)
        self._deliver(genesis)
        logger.info(f" --> Genesis block {genesis.hash.hex()[:12]} signed")
        return genesis

    def add_listener(self, callback):
        self.listeners.append(callback)
        return callback

    def submit(self, tx: Transaction) -> SubmitResult:
        with self._lock:
            if len(self.queue) >= self.policy.queue_capacity:
                return Rejected(tx.tx_id, QueueFull.__name__, "Ordering queue is full")
            if tx.tx_id in self._queued_ids:
                return Rejected(tx.tx_id, ReplayedNonce.__name__, "Transaction already queued")
            try:
                check_transaction(tx, self.replica.registry())
                self.nonces.claim(tx)
            except DevchainException as e:
                return Rejected(tx.tx_id, e.code, e.message)

            self.queue.append(QueuedTx(tx, self.clock()))
            self._queued_ids.add(tx.tx_id)
        return Accepted(tx.tx_id)

    def deadline_due(self, now: int) -> bool:
        deadline = self.replica.next_deadline()
        return (
            deadline is not None
            and now > deadline
            and self.tip is not None
            and self.tip.block_timestamp <= deadline
        )

    def cut(self, now: int | None = None) -> Block | None:
        with self._cut_lock:
            now = self.clock() if now is None else now
            force = self.deadline_due(now)
            with self._lock:
                block = cut_block(
                    self.queue, self.policy, now, self.tip, self.secret_key, force=force
                )
                if block is None:
                    return None
                self._queued_ids.difference_update(block.tx_ids)

            # the tip only moves once the replica has committed the block
            try:
                if self.replica.height < block.height:
                    self.replica.validate_and_commit(block)
            except Exception:
                logger.exception(
                    f" --> Replica refused block {block.height}; "
                    f"dropping it with {len(block.txs)} txs"
                )
                return None
            self.tip = ChainTip.of(block)

            if force and not block.txs:
                logger.info(f" --> Heartbeat block {block.height} for a passed contract deadline")
            else:
                logger.debug(f" --> Cut block {block.height} with {len(block.txs)} txs")
            self._deliver(block)
            return block

    def next_wakeup(self, now: int) -> int:
        """Milliseconds until the next cut could fire."""
        with self._lock:
            waits = [self.policy.max_batch_wait_ms]
            if self.queue:
                waits.append(self.queue[0].enqueued_at + self.policy.max_batch_wait_ms - now)
        deadline = self.replica.next_deadline()
        if deadline is not None:
            waits.append(deadline + 1 - now)
        return max(1, min(waits))

    def _deliver(self, block: Block):
        if self.replica.height < block.height:
            self.replica.validate_and_commit(block)
        for callback in list(self.listeners):
            try:
                callback(block)
            except Exception as e:
                logger.error(f" --> Delivering block {block.height} failed: {e}")

    @property
    def pending(self) -> int:
        return len(self.queue)

