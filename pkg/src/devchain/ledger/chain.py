import threading
from dataclasses import dataclass, field

from devchain.errors import (
    BadHeight,
    BadLinkage,
    BadMerkleRoot,
    BadOrdererSignature,
    MalformedBlock,
    NonMonotonicTimestamp,
    UnsupportedValue,
)
from devchain.ledger.block import Block
from devchain.ledger.encoding import ZERO_DIGEST
from devchain.ledger.identity import Identity, verify_signature


class Chain:
    """Validated, append-only sequence of blocks. Does not touch world state."""

    def __init__(self, orderer_key: bytes | None = None):
        self.blocks: list[Block] = []
        self.orderer_key = orderer_key
        self._lock = threading.Lock()

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return iter(list(self.blocks))

    def __getitem__(self, height) -> Block:
        return self.blocks[height]

    @property
    def tip(self) -> Block | None:
        return self.blocks[-1] if self.blocks else None

    @property
    def height(self) -> int:
        """Height of the tip, -1 for an empty chain."""
        return len(self.blocks) - 1

    @property
    def genesis_config(self) -> dict:
        return self.blocks[0].config if self.blocks else {}

    def check_next(self, block: Block):
        tip = self.tip
        expected_prev = tip.hash if tip else ZERO_DIGEST
        expected_height = tip.height + 1 if tip else 0

        if block.height != expected_height:
            raise BadHeight(f"Expected height {expected_height}, got {block.height}")
        if block.prev_hash != expected_prev:
            raise BadLinkage(f"Block {block.height} does not reference the current tip")
        if tip and block.block_timestamp <= tip.block_timestamp:
            raise NonMonotonicTimestamp(
                f"Block {block.height} timestamp {block.block_timestamp} "
                f"is not after {tip.block_timestamp}"
            )
        if not block.merkle_root_matches():
            raise BadMerkleRoot(f"Merkle root of block {block.height} does not match its txs")

        orderer_key = self.orderer_key or (None if tip else block.orderer)
        if (block.height == 0) != (block.config is not None):
            raise MalformedBlock("Only the genesis block carries a network config")
        if not block.signature_valid(orderer_key):
            raise BadOrdererSignature(f"Orderer signature of block {block.height} is invalid")

    def append(self, block: Block) -> "Chain":
        with self._lock:
            self.check_next(block)
            if not self.blocks and self.orderer_key is None:
                self.orderer_key = block.orderer
            self.blocks.append(block)
        return self


def append_block(chain: Chain, block: Block) -> Chain:
    return chain.append(block)


@dataclass(frozen=True)
class Violation:
    height: int
    kind: str
    detail: str

    def to_dict(self):
        return {"height": self.height, "kind": self.kind, "detail": self.detail}


@dataclass
class AuditReport:
    blocks_checked: int = 0
    txs_checked: int = 0
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, height, kind, detail):
        self.violations.append(Violation(height, kind, detail))

    @property
    def first(self) -> Violation | None:
        return self.violations[0] if self.violations else None

    def to_dict(self):
        return {
            "blocks_checked": self.blocks_checked,
            "txs_checked": self.txs_checked,
            "violations": [v.to_dict() for v in self.violations],
        }

    def summary(self) -> str:
        return f"{len(self.violations)} violations"


def _register_members(registry: dict, block: Block):
    """Collect identities introduced by add_member txs for signature auditing."""
    for tx in block.txs:
        if tx.contract == "project" and tx.operation == "add_member":
            try:
                identity = Identity.from_doc(tx.args.get("identity", {}))
            except (UnsupportedValue, AttributeError):
                continue
            registry.setdefault(identity.member_id, identity.public_key)


def _genesis_registry(config) -> dict:
    registry = {}
    for doc in (config or {}).get("identities", []):
        try:
            identity = Identity.from_doc(doc)
        except UnsupportedValue:
            continue
        registry[identity.member_id] = identity.public_key
    return registry


def verify_chain(blocks, orderer_key: bytes | None = None, report: AuditReport | None = None):
    """Audit linkage, merkle roots, orderer and tx signatures of a block sequence.

    `blocks` may contain None for positions that could not be decoded; those
    positions are expected to have been reported already.
    """
    report = report or AuditReport()
    blocks = list(blocks)
    if not blocks:
        report.add(0, "EmptyChain", "Chain has no genesis block")
        return report

    genesis = blocks[0]
    if genesis is not None:
        orderer_key = orderer_key or genesis.orderer
        registry = _genesis_registry(genesis.config)
    else:
        registry = {}

    prev: Block | None = None
    for position, block in enumerate(blocks):
        if block is None:
            prev = None
            continue

        report.blocks_checked += 1
        h = block.height
        if h != position:
            report.add(position, "BadHeight", f"Block at position {position} claims height {h}")

        if position == 0:
            if block.prev_hash != ZERO_DIGEST:
                report.add(h, "BadLinkage", "Genesis prev_hash is not zero")
            if block.config is None:
                report.add(h, "MissingGenesisConfig", "Genesis block carries no network config")
        else:
            if block.config is not None:
                report.add(h, "UnexpectedConfig", "Only the genesis block carries a config")
            if prev is None:
                report.add(h, "BadLinkage", "Predecessor block is missing or unreadable")
            elif block.prev_hash != prev.hash:
                report.add(h, "BadLinkage", f"prev_hash does not match block {prev.height}")
            if prev is not None and block.block_timestamp <= prev.block_timestamp:
                report.add(h, "NonMonotonicTimestamp", "Timestamp does not increase")

        if not block.merkle_root_matches():
            report.add(h, "BadMerkleRoot", "Merkle root does not match transactions")

        if orderer_key is None or not block.signature_valid(orderer_key):
            report.add(h, "BadOrdererSignature", "Orderer signature is invalid")

        for i, tx in enumerate(block.txs):
            report.txs_checked += 1
            if not tx.digest_matches():
                report.add(h, "BadTxDigest", f"tx {i} body does not match its tx_id")
                continue
            public_key = registry.get(tx.submitter)
            if public_key is None:
                report.add(h, "UnknownSubmitter", f"tx {i} submitter is not registered")
            elif not verify_signature(public_key, tx.body_bytes(), tx.signature):
                report.add(h, "BadTxSignature", f"tx {i} signature does not verify")

        _register_members(registry, block)
        prev = block

    return report


def audit_encoded_blocks(raw_blocks, orderer_key: bytes | None = None) -> AuditReport:
    """verify_chain over stored block bytes; undecodable blocks become violations."""
    report = AuditReport()
    decoded = []
    for position, raw in enumerate(raw_blocks):
        try:
            decoded.append(Block.from_bytes(raw))
        except MalformedBlock as e:
            report.add(position, "MalformedBlock", e.message)
            decoded.append(None)
    return verify_chain(decoded, orderer_key=orderer_key, report=report)
