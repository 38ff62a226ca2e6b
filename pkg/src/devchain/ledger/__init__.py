"""Identities, transactions, blocks, the hash chain and the document state store."""

from devchain.ledger.block import Block, compute_merkle_root, make_block, make_genesis
from devchain.ledger.chain import (
    AuditReport,
    Chain,
    append_block,
    audit_encoded_blocks,
    verify_chain,
)
from devchain.ledger.encoding import canonical_decode, canonical_encode, digest
from devchain.ledger.identity import Identity, Role, generate_identity
from devchain.ledger.state import StateStore
from devchain.ledger.transaction import (
    NonceTracker,
    Transaction,
    sign_transaction,
    verify_transaction,
)

__all__ = [
    "AuditReport",
    "Block",
    "Chain",
    "Identity",
    "NonceTracker",
    "Role",
    "StateStore",
    "Transaction",
    "append_block",
    "audit_encoded_blocks",
    "canonical_decode",
    "canonical_encode",
    "compute_merkle_root",
    "digest",
    "generate_identity",
    "make_block",
    "make_genesis",
    "sign_transaction",
    "verify_chain",
    "verify_transaction",
]
