import json
import os
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.serialization import (
    Encoding,
    NoEncryption,
    PrivateFormat,
    PublicFormat,
)

from devchain.errors import InvalidConfig, UnsupportedValue
from devchain.ledger.encoding import digest, from_hex


class Role(Enum):
    owner = "Owner"
    manager = "Manager"
    developer = "Developer"
    tester = "Tester"
    client = "Client"


@dataclass(frozen=True)
class Identity:
    member_id: bytes
    public_key: bytes
    role: Role
    org: str

    def __post_init__(self):
        if len(self.public_key) != 32:
            raise UnsupportedValue("Public key must be 32 bytes")
        if self.member_id != digest(self.public_key):
            raise UnsupportedValue("member_id does not match digest of public key")
        if not isinstance(self.role, Role):
            raise UnsupportedValue(f"Unknown role {self.role}")

    @classmethod
    def from_public_key(cls, public_key: bytes, role: Role, org: str) -> "Identity":
        return cls(member_id=digest(public_key), public_key=public_key, role=role, org=org)

    def to_doc(self) -> dict:
        return {
            "member_id": self.member_id.hex(),
            "public_key": self.public_key.hex(),
            "role": self.role.value,
            "org": self.org,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Identity":
        try:
            role = Role(doc["role"])
            identity = cls.from_public_key(
                from_hex(doc["public_key"], 32, "public_key"), role, str(doc["org"])
            )
        except (KeyError, ValueError, TypeError) as e:
            raise UnsupportedValue(f"Malformed identity document: {e}")
        if "member_id" in doc and doc["member_id"] != identity.member_id.hex():
            raise UnsupportedValue("member_id does not match digest of public key")
        return identity

    def __str__(self):
        return f"{self.role.value}@{self.org}:{self.member_id.hex()[:12]}"


def generate_identity(role: Role, org: str) -> tuple[Identity, bytes]:
    """Fresh Ed25519 keypair from the OS CSPRNG; the secret key is the raw 32-byte seed."""
    private_key = Ed25519PrivateKey.generate()
    secret_key = private_key.private_bytes(Encoding.Raw, PrivateFormat.Raw, NoEncryption())
    public_key = private_key.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
    return Identity.from_public_key(public_key, role, org), secret_key


def public_key_of(secret_key: bytes) -> bytes:
    return (
        Ed25519PrivateKey.from_private_bytes(secret_key)
        .public_key()
        .public_bytes(Encoding.Raw, PublicFormat.Raw)
    )


def sign(secret_key: bytes, message: bytes) -> bytes:
    return Ed25519PrivateKey.from_private_bytes(secret_key).sign(message)


def verify_signature(public_key: bytes, message: bytes, signature: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(signature, message)
        return True
    except (InvalidSignature, ValueError):
        return False


def save_key_file(path, identity: Identity, secret_key: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    content = identity.to_doc()
    content["secret_key"] = secret_key.hex()
    path.write_text(json.dumps(content, indent=2, sort_keys=True))
    os.chmod(path, 0o600)


def load_key_file(path) -> tuple[Identity, bytes]:
    try:
        content = json.loads(Path(path).read_text())
        secret_key = from_hex(content["secret_key"], 32, "secret_key")
    except (OSError, KeyError, ValueError) as e:
        raise InvalidConfig(f"Could not read key file {path}: {e}")

    identity = Identity.from_doc(content)
    if public_key_of(secret_key) != identity.public_key:
        raise InvalidConfig(f"Key file {path}: secret key does not match public key")
    return identity, secret_key
