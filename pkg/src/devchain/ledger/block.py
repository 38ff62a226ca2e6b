from dataclasses import dataclass, field, replace

from devchain.errors import MalformedBlock, MalformedTransaction, UnsupportedValue
from devchain.ledger.encoding import (
    ZERO_DIGEST,
    canonical_decode,
    canonical_encode,
    digest,
    from_hex,
)
from devchain.ledger.identity import public_key_of, sign, verify_signature
from devchain.ledger.transaction import Transaction

BLOCK_FIELDS = {
    "block_timestamp",
    "config",
    "height",
    "merkle_root",
    "orderer",
    "orderer_signature",
    "prev_hash",
    "txs",
}


def compute_merkle_root(tx_ids: list[bytes]) -> bytes:
    """Binary merkle tree; an odd level duplicates its last node."""
    if not tx_ids:
        return digest(b"")

    level = list(tx_ids)
    while True:
        if len(level) % 2:
            level.append(level[-1])
        level = [digest(level[i] + level[i + 1]) for i in range(0, len(level), 2)]
        if len(level) == 1:
            return level[0]


@dataclass(frozen=True)
class Block:
    height: int
    prev_hash: bytes
    block_timestamp: int
    txs: tuple[Transaction, ...]
    merkle_root: bytes
    orderer: bytes
    orderer_signature: bytes
    config: dict | None = field(default=None)

    def header(self) -> dict:
        return {
            "block_timestamp": self.block_timestamp,
            "config_digest": digest(canonical_encode(self.config)).hex()
            if self.config is not None
            else None,
            "height": self.height,
            "merkle_root": self.merkle_root.hex(),
            "orderer": self.orderer.hex(),
            "prev_hash": self.prev_hash.hex(),
        }

    def header_bytes(self) -> bytes:
        return canonical_encode(self.header())

    @property
    def hash(self) -> bytes:
        return digest(self.header_bytes())

    @property
    def tx_ids(self) -> list[bytes]:
        return [tx.tx_id for tx in self.txs]

    def merkle_root_matches(self) -> bool:
        return compute_merkle_root(self.tx_ids) == self.merkle_root

    def signature_valid(self, orderer_key: bytes | None = None) -> bool:
        key = orderer_key or self.orderer
        if key != self.orderer:
            return False
        return verify_signature(key, self.header_bytes(), self.orderer_signature)

    def to_doc(self) -> dict:
        return {
            "block_timestamp": self.block_timestamp,
            "config": self.config,
            "height": self.height,
            "merkle_root": self.merkle_root.hex(),
            "orderer": self.orderer.hex(),
            "orderer_signature": self.orderer_signature.hex(),
            "prev_hash": self.prev_hash.hex(),
            "txs": [tx.to_doc() for tx in self.txs],
        }

    def to_bytes(self) -> bytes:
        return canonical_encode(self.to_doc())

    @classmethod
    def from_doc(cls, doc) -> "Block":
        if not isinstance(doc, dict) or set(doc) != BLOCK_FIELDS:
            raise MalformedBlock("Block document has unexpected fields")
        try:
            for name in ("height", "block_timestamp"):
                value = doc[name]
                if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                    raise MalformedBlock(f"{name} must be a non-negative integer")
            if doc["config"] is not None and not isinstance(doc["config"], dict):
                raise MalformedBlock("config must be a document or null")
            if not isinstance(doc["txs"], list):
                raise MalformedBlock("txs must be a list")
            return cls(
                height=doc["height"],
                prev_hash=from_hex(doc["prev_hash"], 32, "prev_hash"),
                block_timestamp=doc["block_timestamp"],
                txs=tuple(Transaction.from_doc(tx) for tx in doc["txs"]),
                merkle_root=from_hex(doc["merkle_root"], 32, "merkle_root"),
                orderer=from_hex(doc["orderer"], 32, "orderer"),
                orderer_signature=from_hex(doc["orderer_signature"], 64, "orderer_signature"),
                config=doc["config"],
            )
        except (UnsupportedValue, MalformedTransaction) as e:
            raise MalformedBlock(e.message)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Block":
        """Strict decode: the bytes must be exactly the canonical encoding of the result."""
        try:
            block = cls.from_doc(canonical_decode(data))
        except UnsupportedValue as e:
            raise MalformedBlock(e.message)
        if block.to_bytes() != data:
            raise MalformedBlock(f"Block {block.height} is not canonically encoded")
        return block

    def __repr__(self):
        return f"Block(height={self.height}, txs={len(self.txs)}, hash={self.hash.hex()[:12]})"


def make_block(
    height: int,
    prev_hash: bytes,
    block_timestamp: int,
    txs,
    orderer_secret_key: bytes,
    config: dict | None = None,
) -> Block:
    txs = tuple(txs)
    unsigned = Block(
        height=height,
        prev_hash=prev_hash,
        block_timestamp=block_timestamp,
        txs=txs,
        merkle_root=compute_merkle_root([tx.tx_id for tx in txs]),
        orderer=public_key_of(orderer_secret_key),
        orderer_signature=bytes(64),
        config=config,
    )
    signature = sign(orderer_secret_key, unsigned.header_bytes())
    return replace(unsigned, orderer_signature=signature)


def make_genesis(genesis_document: dict, block_timestamp: int, orderer_secret_key: bytes) -> Block:
    return make_block(0, ZERO_DIGEST, block_timestamp, (), orderer_secret_key, genesis_document)
