"""Content ids and the structured objects kept in the content store.

Structured objects (blob manifests, trees and commits) are canonical
documents with a `kind` field, stored like any other blob.
"""

import re
from dataclasses import dataclass
from enum import Enum

from devchain.errors import InvalidPath, MalformedContentId, UnsupportedValue
from devchain.ledger.encoding import canonical_decode, canonical_encode, digest

CID_PREFIX = "sha256-"
CHUNK_SIZE = 256 * 1024

_CID_RE = re.compile(r"^sha256-([0-9a-f]{64})$")


@dataclass(frozen=True)
class ContentId:
    digest: bytes

    def __str__(self):
        return CID_PREFIX + self.digest.hex()

    @property
    def hex(self) -> str:
        return self.digest.hex()

    @classmethod
    def of(cls, data: bytes) -> "ContentId":
        return cls(digest(data))

    @classmethod
    def parse(cls, text) -> "ContentId":
        if isinstance(text, ContentId):
            return text
        match = _CID_RE.match(text) if isinstance(text, str) else None
        if match is None:
            raise MalformedContentId(f"Not a content id: {text!r}")
        return cls(bytes.fromhex(match.group(1)))


def cid_of(data: bytes) -> str:
    return str(ContentId.of(data))


class ObjectKind(Enum):
    blob_manifest = "blob-manifest"
    tree = "tree"
    commit = "commit"


class EntryKind(Enum):
    blob = "Blob"
    tree = "Tree"


def check_name(name: str) -> str:
    """A single tree entry name: no separators, no '.' or '..'."""
    if not isinstance(name, str) or not name or name in (".", "..") or "/" in name or "\\" in name:
        raise InvalidPath(f"Invalid tree entry name {name!r}")
    return name


def split_path(path: str) -> list[str]:
    if path.startswith("/"):
        raise InvalidPath(f"Absolute paths are not allowed: {path!r}")
    parts = [p for p in path.split("/") if p]
    for part in parts:
        check_name(part)
    return parts


@dataclass(frozen=True)
class TreeEntry:
    path: str
    kind: EntryKind
    cid: str
    size_bytes: int

    def to_doc(self) -> dict:
        return {
            "cid": self.cid,
            "kind": self.kind.value,
            "path": self.path,
            "size_bytes": self.size_bytes,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "TreeEntry":
        return cls(
            path=check_name(doc["path"]),
            kind=EntryKind(doc["kind"]),
            cid=str(ContentId.parse(doc["cid"])),
            size_bytes=doc["size_bytes"],
        )


@dataclass(frozen=True)
class TreeManifest:
    entries: tuple[TreeEntry, ...] = ()

    def __post_init__(self):
        ordered = tuple(sorted(self.entries, key=lambda e: e.path))
        names = [e.path for e in ordered]
        if len(set(names)) != len(names):
            raise InvalidPath(f"Duplicate tree entries in {names}")
        for name in names:
            check_name(name)
        object.__setattr__(self, "entries", ordered)

    def get(self, name: str) -> TreeEntry | None:
        for entry in self.entries:
            if entry.path == name:
                return entry
        return None

    @property
    def size_bytes(self) -> int:
        return sum(e.size_bytes for e in self.entries)

    def to_doc(self) -> dict:
        return {"entries": [e.to_doc() for e in self.entries], "kind": ObjectKind.tree.value}

    def to_bytes(self) -> bytes:
        return canonical_encode(self.to_doc())

    @classmethod
    def from_doc(cls, doc: dict) -> "TreeManifest":
        return cls(tuple(TreeEntry.from_doc(e) for e in doc["entries"]))


@dataclass(frozen=True)
class CommitObject:
    parent_cid: str | None
    tree_cid: str
    author: str
    message: str
    authored_at: int

    def to_doc(self) -> dict:
        return {
            "author": self.author,
            "authored_at": self.authored_at,
            "kind": ObjectKind.commit.value,
            "message": self.message,
            "parent_cid": self.parent_cid,
            "tree_cid": self.tree_cid,
        }

    def to_bytes(self) -> bytes:
        return canonical_encode(self.to_doc())

    @classmethod
    def from_doc(cls, doc: dict) -> "CommitObject":
        return cls(
            parent_cid=doc["parent_cid"],
            tree_cid=doc["tree_cid"],
            author=doc["author"],
            message=doc["message"],
            authored_at=doc["authored_at"],
        )


@dataclass(frozen=True)
class ChunkedBlobManifest:
    total_size: int
    chunk_cids: tuple[str, ...]
    blob: str

    def to_doc(self) -> dict:
        return {
            "blob": self.blob,
            "chunk_cids": list(self.chunk_cids),
            "kind": ObjectKind.blob_manifest.value,
            "total_size": self.total_size,
        }

    def to_bytes(self) -> bytes:
        return canonical_encode(self.to_doc())

    @classmethod
    def from_doc(cls, doc: dict) -> "ChunkedBlobManifest":
        return cls(
            total_size=doc["total_size"],
            chunk_cids=tuple(doc["chunk_cids"]),
            blob=doc["blob"],
        )


def parse_object(data: bytes):
    """Structured object stored in `data`, or None for plain blob bytes."""
    if not data.startswith(b"{") or b'"kind":' not in data:
        return None
    try:
        doc = canonical_decode(data)
    except UnsupportedValue:
        return None
    if not isinstance(doc, dict) or canonical_encode(doc) != data:
        return None
    try:
        kind = ObjectKind(doc.get("kind"))
        if kind is ObjectKind.blob_manifest:
            return ChunkedBlobManifest.from_doc(doc)
        if kind is ObjectKind.tree:
            return TreeManifest.from_doc(doc)
        return CommitObject.from_doc(doc)
    except (KeyError, TypeError, ValueError, InvalidPath, MalformedContentId):
        return None
