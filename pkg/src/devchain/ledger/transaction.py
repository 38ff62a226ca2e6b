import threading
from dataclasses import dataclass, field
from typing import Mapping

from devchain.errors import (
    BadSignature,
    MalformedTransaction,
    ReplayedNonce,
    UnknownSubmitter,
    UnsupportedValue,
)
from devchain.ledger.encoding import canonical_encode, digest, from_hex
from devchain.ledger.identity import sign, verify_signature

BODY_FIELDS = (
    "args",
    "client_timestamp",
    "contract",
    "nonce",
    "operation",
    "project_id",
    "submitter",
)
MAX_NONCE = 2**64 - 1


@dataclass(frozen=True)
class Transaction:
    tx_id: bytes
    project_id: str
    contract: str
    operation: str
    args: dict
    submitter: bytes
    client_timestamp: int
    nonce: int
    signature: bytes

    def body(self) -> dict:
        return {
            "args": self.args,
            "client_timestamp": self.client_timestamp,
            "contract": self.contract,
            "nonce": self.nonce,
            "operation": self.operation,
            "project_id": self.project_id,
            "submitter": self.submitter.hex(),
        }

    def body_bytes(self) -> bytes:
        return canonical_encode(self.body())

    def to_doc(self) -> dict:
        doc = self.body()
        doc["tx_id"] = self.tx_id.hex()
        doc["signature"] = self.signature.hex()
        return doc

    @classmethod
    def from_doc(cls, doc: dict) -> "Transaction":
        if not isinstance(doc, dict) or set(doc) != set(BODY_FIELDS) | {"tx_id", "signature"}:
            raise MalformedTransaction("Transaction document has unexpected fields")
        body = {k: doc[k] for k in BODY_FIELDS}
        _check_body(body)
        return cls(
            tx_id=from_hex(doc["tx_id"], 32, "tx_id"),
            project_id=body["project_id"],
            contract=body["contract"],
            operation=body["operation"],
            args=body["args"],
            submitter=from_hex(body["submitter"], 32, "submitter"),
            client_timestamp=body["client_timestamp"],
            nonce=body["nonce"],
            signature=from_hex(doc["signature"], 64, "signature"),
        )

    def digest_matches(self) -> bool:
        return digest(self.body_bytes()) == self.tx_id

    def __repr__(self):
        return (
            f"Transaction(tx_id={self.tx_id.hex()[:12]}, "
            f"{self.contract}.{self.operation}, project={self.project_id})"
        )


def _check_body(body: dict):
    for name in ("project_id", "contract", "operation"):
        if not isinstance(body.get(name), str):
            raise MalformedTransaction(f"{name} must be a string")
    if not isinstance(body.get("args"), dict):
        raise MalformedTransaction("args must be a document")
    for name in ("client_timestamp", "nonce"):
        value = body.get(name)
        if not isinstance(value, int) or isinstance(value, bool) or value < 0:
            raise MalformedTransaction(f"{name} must be a non-negative integer")
    if body["nonce"] > MAX_NONCE:
        raise MalformedTransaction("nonce must fit in 64 bits")


def make_body(project_id, contract, operation, args, submitter: bytes, client_timestamp, nonce):
    body = {
        "args": args,
        "client_timestamp": client_timestamp,
        "contract": contract,
        "nonce": nonce,
        "operation": operation,
        "project_id": project_id,
        "submitter": submitter.hex(),
    }
    _check_body(body)
    return body


def sign_transaction(body: dict, secret_key: bytes) -> Transaction:
    _check_body(body)
    try:
        submitter = from_hex(body["submitter"], 32, "submitter")
    except UnsupportedValue as e:
        raise MalformedTransaction(e.message)

    body_bytes = canonical_encode({k: body[k] for k in BODY_FIELDS})
    return Transaction(
        tx_id=digest(body_bytes),
        project_id=body["project_id"],
        contract=body["contract"],
        operation=body["operation"],
        args=body["args"],
        submitter=submitter,
        client_timestamp=body["client_timestamp"],
        nonce=body["nonce"],
        signature=sign(secret_key, body_bytes),
    )


@dataclass
class NonceTracker:
    """Seen (project, submitter, nonce) triples."""

    seen: set = field(default_factory=set)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def key(self, tx: Transaction):
        return (tx.project_id, tx.submitter, tx.nonce)

    def __contains__(self, tx: Transaction) -> bool:
        return self.key(tx) in self.seen

    def claim(self, tx: Transaction):
        with self._lock:
            key = self.key(tx)
            if key in self.seen:
                raise ReplayedNonce(
                    f"Nonce {tx.nonce} already used by {tx.submitter.hex()[:12]} "
                    f"in project '{tx.project_id}'"
                )
            self.seen.add(key)

    def release(self, tx: Transaction):
        with self._lock:
            self.seen.discard(self.key(tx))


def check_transaction(tx: Transaction, registry: Mapping[bytes, bytes]):
    """Raise the specific reason a transaction is not authentic."""
    public_key = registry.get(tx.submitter)
    if public_key is None:
        raise UnknownSubmitter(f"Submitter {tx.submitter.hex()} is not registered")
    if not tx.digest_matches():
        raise BadSignature(f"tx_id {tx.tx_id.hex()} does not match the transaction body")
    if not verify_signature(public_key, tx.body_bytes(), tx.signature):
        raise BadSignature(f"Signature of {tx.tx_id.hex()} does not verify")


def verify_transaction(
    tx: Transaction, registry: Mapping[bytes, bytes], nonces: NonceTracker | None = None
) -> bool:
    """True for an authentic, unseen transaction; False on digest or signature mismatch.

    Unknown submitters and replayed nonces raise, so callers can tell them
    apart from forgeries. A passing check claims the nonce.
    """
    try:
        check_transaction(tx, registry)
    except BadSignature:
        return False
    if nonces is not None:
        nonces.claim(tx)
    return True
