import logging
import threading
from dataclasses import dataclass

from devchain.consensus.events import Audience, EventLog
from devchain.contracts.engine import ContractEngine, registry_view
from devchain.errors import CorruptChain, DevchainException, ReplayedNonce
from devchain.ledger.block import Block
from devchain.ledger.blocklog import BlockLog
from devchain.ledger.chain import Chain
from devchain.ledger.encoding import digest
from devchain.ledger.state import StateStore
from devchain.ledger.transaction import NonceTracker, check_transaction

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TxResult:
    tx_id: bytes
    height: int
    index: int
    valid: bool
    result: object = None
    error: str | None = None
    error_message: str | None = None

    def to_doc(self) -> dict:
        return {
            "error": self.error,
            "error_message": self.error_message,
            "height": self.height,
            "index": self.index,
            "result": self.result,
            "tx_id": self.tx_id.hex(),
            "valid": self.valid,
        }


def state_digest(state: StateStore) -> bytes:
    """Digest of the canonical encoding of all documents in key order."""
    return digest(state.to_bytes())


class Peer:
    """One organization's replica: validates blocks and replays them into state.

    Blocks are applied strictly in height order. Each transaction runs in
    its own overlay, so a refused transaction is recorded in the validity
    bitmap and leaves no trace in the state.
    """

    def __init__(self, org: str = "", engine: ContractEngine | None = None, block_log=None):
        self.org = org
        self.engine = engine or ContractEngine()
        self.chain = Chain()
        self.state = StateStore()
        self.nonces = NonceTracker()
        self.events = EventLog()
        self.results: dict[bytes, TxResult] = {}
        self.bitmaps: dict[int, list[bool]] = {}
        self.block_log: BlockLog | None = block_log
        self._lock = threading.RLock()

    def __repr__(self):
        return f"Peer(org={self.org}, height={self.height})"

    @property
    def height(self) -> int:
        return self.chain.height

    def registry(self):
        return registry_view(self.state)

    def validate_and_commit(self, block: Block, persist=True):
        """Apply one block; returns the events it published."""
        with self._lock:
            self.chain.check_next(block)
            h, ts = block.height, block.block_timestamp

            overlay = self.state.overlay()
            if h == 0:
                self.engine.apply_genesis(overlay, block.config)

            results = []
            tx_events = []
            claimed = set()
            for index, tx in enumerate(block.txs):
                tx_overlay = overlay.overlay()
                try:
                    check_transaction(tx, registry_view(tx_overlay))
                    key = self.nonces.key(tx)
                    if key in claimed or tx in self.nonces:
                        raise ReplayedNonce(f"Nonce {tx.nonce} was already used")
                    claimed.add(key)
                    result, drafts = self.engine.execute(tx_overlay, tx, ts, h)
                except DevchainException as e:
                    logger.debug(f" --> tx {tx.tx_id.hex()[:12]} at {h}/{index} invalid: {e}")
                    results.append(
                        TxResult(tx.tx_id, h, index, False, error=e.code, error_message=e.message)
                    )
                    continue
                tx_overlay.commit()
                results.append(TxResult(tx.tx_id, h, index, True, result=result))
                tx_events.append((tx.tx_id, drafts))

            hook_overlay = overlay.overlay()
            hook_events = self.engine.on_block(hook_overlay, ts, h)
            hook_overlay.commit()

            self.chain.append(block)
            self.state.apply(overlay.writes, h)
            self.nonces.seen.update(claimed)
            for result in results:
                self.results[result.tx_id] = result
            self.bitmaps[h] = [r.valid for r in results]

            if persist and self.block_log is not None:
                self.block_log.append(block)

        published = []
        for tx_id, drafts in tx_events:
            published += self.events.publish(h, tx_id, drafts)
        published += self.events.publish(h, None, hook_events)
        logger.debug(
            f" --> {self.org or 'peer'} committed block {h} "
            f"({sum(self.bitmaps[h])}/{len(block.txs)} valid)"
        )
        return published

    def replay(self, blocks, persist=False):
        for block in blocks:
            self.validate_and_commit(block, persist=persist)
        return self

    def load_block_log(self, block_log: BlockLog):
        """Rebuild state from a node's block log; any fault means the log is corrupt."""
        self.block_log = block_log
        try:
            for block in block_log.blocks():
                self.validate_and_commit(block, persist=False)
        except DevchainException as e:
            raise CorruptChain(f"Block log {block_log.directory} does not replay: {e}")
        logger.info(f" --> {self.org or 'peer'} replayed {len(self.chain)} blocks from disk")
        return self

    # queries

    def query(self, key: str):
        return self.state.get(key)

    def list_keys(self, prefix: str = ""):
        return self.state.keys(prefix)

    def state_digest(self) -> bytes:
        return state_digest(self.state)

    def tx_result(self, tx_id: bytes) -> TxResult | None:
        return self.results.get(tx_id)

    def query_events(self, since=0, audience: Audience | None = None, project_id=None):
        return self.events.query(since, audience, project_id)

    def next_deadline(self) -> int | None:
        return self.engine.next_deadline(self.state)

    def blocks_from(self, height: int):
        return list(self.chain)[max(height, 0):]
