"""Content-addressed storage for plan artifacts, repository snapshots and packages."""

from devchain.castore.objects import (
    CHUNK_SIZE,
    ChunkedBlobManifest,
    CommitObject,
    ContentId,
    EntryKind,
    TreeEntry,
    TreeManifest,
    cid_of,
)
from devchain.castore.store import ContentStore

__all__ = [
    "CHUNK_SIZE",
    "ChunkedBlobManifest",
    "CommitObject",
    "ContentId",
    "ContentStore",
    "EntryKind",
    "TreeEntry",
    "TreeManifest",
    "cid_of",
]
