"""Node-local content-addressed object store.

Layout under the store root:

    objects/<hex[0:2]>/<hex[2:4]>/<hex>   one file per object
    pins                                  append-only "+<cid>" / "-<cid>" lines

Objects are written to a temporary file and renamed into place, so
concurrent writers of the same content are harmless. gc takes the store
lock; reads never lock.
"""

import logging
import os
import tempfile
import threading
from pathlib import Path

from devchain.castore.objects import (
    CHUNK_SIZE,
    ChunkedBlobManifest,
    CommitObject,
    ContentId,
    EntryKind,
    TreeEntry,
    TreeManifest,
    check_name,
    cid_of,
    parse_object,
    split_path,
)
from devchain.errors import (
    DanglingReference,
    IntegrityFailure,
    InvalidPath,
    NotFound,
    PathNotFound,
    StorageFull,
)

logger = logging.getLogger(__name__)


class ContentStore:
    def __init__(self, root, max_bytes: int = 0, fallbacks=None):
        self.root = Path(root)
        self.objects_dir = self.root / "objects"
        self.objects_dir.mkdir(parents=True, exist_ok=True)
        self.pins_path = self.root / "pins"
        self.max_bytes = max_bytes
        # callables cid -> bytes | None, tried in order on a local miss
        self.fallbacks = list(fallbacks or [])
        self._lock = threading.RLock()
        self._pins = self._load_pins()
        self._used = sum(p.stat().st_size for p in self._object_files())

    def __repr__(self):
        return f"ContentStore(root={self.root}, used={self._used})"

    # raw objects

    def _path(self, cid: ContentId) -> Path:
        hex_digest = cid.hex
        return self.objects_dir / hex_digest[0:2] / hex_digest[2:4] / hex_digest

    def _object_files(self):
        return (p for p in self.objects_dir.glob("*/*/*") if p.is_file() and len(p.name) == 64)

    def has(self, cid) -> bool:
        return self._path(ContentId.parse(cid)).exists()

    def _write_object(self, data: bytes) -> str:
        cid = ContentId.of(data)
        path = self._path(cid)
        if path.exists():
            return str(cid)

        with self._lock:
            if self.max_bytes and self._used + len(data) > self.max_bytes:
                raise StorageFull(
                    f"Storing {len(data)} bytes would exceed the quota of {self.max_bytes}"
                )
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
            try:
                with os.fdopen(fd, "wb") as file:
                    file.write(data)
                os.replace(tmp, path)
            except BaseException:
                Path(tmp).unlink(missing_ok=True)
                raise
            self._used += len(data)
        return str(cid)

    def put_raw(self, data: bytes) -> str:
        """Store an already encoded object (chunk, manifest, tree or commit) as is."""
        return self._write_object(data)

    def get_raw(self, cid) -> bytes:
        """Stored bytes of one object, verified against its id."""
        cid = ContentId.parse(cid)
        try:
            data = self._path(cid).read_bytes()
        except FileNotFoundError:
            data = self._fetch(cid)
        if ContentId.of(data) != cid:
            raise IntegrityFailure(f"Stored bytes of {cid} do not match their digest")
        return data

    def _fetch(self, cid: ContentId) -> bytes:
        for fetch in self.fallbacks:
            try:
                data = fetch(str(cid))
            except Exception as e:
                logger.warning(f" --> Fetching {cid} from fallback failed: {e}")
                continue
            if data is not None and ContentId.of(data) == cid:
                self._write_object(data)
                logger.debug(f" --> Fetched {cid} from a peer store")
                return data
        raise NotFound(f"Object {cid} is not in the store")

    # blobs

    def put_blob(self, data: bytes) -> str:
        """Store user bytes; `get` on the returned id gives back exactly `data`.

        Bytes that would read back as a structured object are stored behind a
        one-chunk manifest, like blobs over CHUNK_SIZE.
        """
        if len(data) <= CHUNK_SIZE and parse_object(data) is None:
            return self._write_object(data)

        with self._lock:
            chunk_cids = tuple(
                self._write_object(data[i : i + CHUNK_SIZE])
                for i in range(0, len(data), CHUNK_SIZE)
            )
            manifest = ChunkedBlobManifest(
                total_size=len(data), chunk_cids=chunk_cids, blob=cid_of(data)
            )
            return self._write_object(manifest.to_bytes())

    def get(self, cid) -> bytes:
        data = self.get_raw(cid)
        manifest = parse_object(data)
        if not isinstance(manifest, ChunkedBlobManifest):
            return data

        content = b"".join(self.get_raw(chunk) for chunk in manifest.chunk_cids)
        if len(content) != manifest.total_size or cid_of(content) != manifest.blob:
            raise IntegrityFailure(f"Chunks of {cid} do not reassemble to {manifest.blob}")
        return content

    def size_of(self, cid) -> int:
        data = self.get_raw(cid)
        obj = parse_object(data)
        if isinstance(obj, ChunkedBlobManifest):
            return obj.total_size
        if isinstance(obj, TreeManifest):
            return obj.size_bytes
        return len(data)

    # trees and commits

    def put_tree(self, entries) -> str:
        """Store a tree from TreeEntry values or a name -> (kind, cid) mapping."""
        if isinstance(entries, dict):
            entries = [
                TreeEntry(
                    path=check_name(name),
                    kind=EntryKind(kind) if not isinstance(kind, EntryKind) else kind,
                    cid=str(ContentId.parse(cid)),
                    size_bytes=self.size_of(cid) if self.has(cid) else 0,
                )
                for name, (kind, cid) in entries.items()
            ]
        manifest = TreeManifest(tuple(entries))
        for entry in manifest.entries:
            self._require(entry.cid, f"tree entry {entry.path}")
        return self._write_object(manifest.to_bytes())

    def get_tree(self, cid) -> TreeManifest:
        obj = parse_object(self.get_raw(cid))
        if not isinstance(obj, TreeManifest):
            raise InvalidPath(f"{cid} is not a tree")
        return obj

    def commit(self, parent, tree_cid, author: str, message: str, authored_at: int) -> str:
        if parent is not None:
            self._require(parent, "parent commit")
            parent = str(ContentId.parse(parent))
        self._require(tree_cid, "commit tree")
        commit = CommitObject(
            parent_cid=parent,
            tree_cid=str(ContentId.parse(tree_cid)),
            author=author,
            message=message,
            authored_at=authored_at,
        )
        return self._write_object(commit.to_bytes())

    def get_commit(self, cid) -> CommitObject:
        obj = parse_object(self.get_raw(cid))
        if not isinstance(obj, CommitObject):
            raise InvalidPath(f"{cid} is not a commit")
        return obj

    def log(self, commit_cid):
        """Commits from `commit_cid` back to the root commit."""
        history = []
        cid = commit_cid
        while cid is not None:
            commit = self.get_commit(cid)
            history.append((str(ContentId.parse(cid)), commit))
            cid = commit.parent_cid
        return history

    def _require(self, cid, what: str):
        if not self.has(cid):
            try:
                self._fetch(ContentId.parse(cid))
            except NotFound:
                raise DanglingReference(f"{what} {cid} is not in the store")

    def resolve_path(self, tree_cid, path: str) -> str:
        cid = str(ContentId.parse(tree_cid))
        walked = []
        for name in split_path(path):
            tree = self.get_tree(cid) if self._is_tree(cid) else None
            entry = tree.get(name) if tree else None
            if entry is None:
                raise PathNotFound(f"{'/'.join(walked + [name])} not found in {tree_cid}")
            walked.append(name)
            cid = entry.cid
        return cid

    def _is_tree(self, cid) -> bool:
        return isinstance(parse_object(self.get_raw(cid)), TreeManifest)

    # working directories

    def put_files(self, files: dict) -> str:
        """Nested trees from a relative path -> bytes mapping."""
        root: dict = {}
        for path, data in files.items():
            parts = split_path(path)
            if not parts:
                raise InvalidPath("Empty file path")
            node = root
            for part in parts[:-1]:
                node = node.setdefault(part, {})
                if not isinstance(node, dict):
                    raise InvalidPath(f"{path} is both a file and a directory")
            if parts[-1] in node:
                raise InvalidPath(f"Duplicate path {path}")
            node[parts[-1]] = data
        return self._put_nested(root)

    def _put_nested(self, node: dict) -> str:
        entries = []
        for name, value in node.items():
            if isinstance(value, dict):
                cid = self._put_nested(value)
                entries.append(TreeEntry(name, EntryKind.tree, cid, self.size_of(cid)))
            else:
                entries.append(TreeEntry(name, EntryKind.blob, self.put_blob(value), len(value)))
        return self.put_tree(entries)

    def snapshot_directory(self, directory, exclude=(".git",)) -> str:
        directory = Path(directory)
        files = {}
        for path in sorted(directory.rglob("*")):
            relative = path.relative_to(directory)
            if any(part in exclude for part in relative.parts) or not path.is_file():
                continue
            files[relative.as_posix()] = path.read_bytes()
        return self.put_files(files)

    def read_tree_files(self, tree_cid, prefix: str = "") -> dict:
        files = {}
        for entry in self.get_tree(tree_cid).entries:
            path = f"{prefix}{entry.path}"
            if entry.kind is EntryKind.tree:
                files.update(self.read_tree_files(entry.cid, f"{path}/"))
            else:
                files[path] = self.get(entry.cid)
        return files

    # retention

    def _load_pins(self) -> set[str]:
        pins = set()
        if self.pins_path.exists():
            for line in self.pins_path.read_text().splitlines():
                if line.startswith("+"):
                    pins.add(line[1:])
                elif line.startswith("-"):
                    pins.discard(line[1:])
        return pins

    def _append_pin_line(self, line: str):
        with open(self.pins_path, "a") as file:
            file.write(line + "\n")
            file.flush()
            os.fsync(file.fileno())

    @property
    def pins(self) -> set[str]:
        return set(self._pins)

    def pin(self, cid):
        cid = str(ContentId.parse(cid))
        if not self.has(cid):
            raise NotFound(f"Cannot pin {cid}: not in the store")
        with self._lock:
            if cid not in self._pins:
                self._append_pin_line(f"+{cid}")
                self._pins.add(cid)

    def unpin(self, cid):
        cid = str(ContentId.parse(cid))
        with self._lock:
            if cid not in self._pins:
                raise NotFound(f"{cid} is not pinned")
            self._append_pin_line(f"-{cid}")
            self._pins.discard(cid)

    def references(self, cid) -> list[str]:
        obj = parse_object(self.get_raw(cid))
        if isinstance(obj, ChunkedBlobManifest):
            return list(obj.chunk_cids)
        if isinstance(obj, TreeManifest):
            return [e.cid for e in obj.entries]
        if isinstance(obj, CommitObject):
            return [obj.tree_cid] + ([obj.parent_cid] if obj.parent_cid else [])
        return []

    def closure(self, roots) -> set[str]:
        """Ids of every stored object reachable from `roots`, roots included."""
        seen = set()
        stack = [str(ContentId.parse(r)) for r in roots]
        while stack:
            cid = stack.pop()
            if cid in seen or not self.has(cid):
                continue
            seen.add(cid)
            stack.extend(self.references(cid))
        return seen

    def reachable(self) -> set[str]:
        return self.closure(self._pins)

    def push(self, root, put_raw) -> int:
        """Copy the object graph under `root` through `put_raw` (e.g. a node's store)."""
        cids = self.closure([root])
        for cid in sorted(cids):
            put_raw(self.get_raw(cid))
        return len(cids)

    def gc(self) -> list[str]:
        """Remove every object not reachable from a pin; returns the removed ids."""
        with self._lock:
            keep = self.reachable()
            removed = []
            for path in list(self._object_files()):
                cid = "sha256-" + path.name
                if cid in keep:
                    continue
                self._used -= path.stat().st_size
                path.unlink()
                removed.append(cid)
        logger.info(f" --> gc removed {len(removed)} objects, kept {len(keep)}")
        return sorted(removed)

    def audit(self) -> list[str]:
        """Ids of stored objects whose bytes no longer match their digest."""
        corrupt = []
        for path in self._object_files():
            if cid_of(path.read_bytes()) != "sha256-" + path.name:
                corrupt.append("sha256-" + path.name)
        return sorted(corrupt)

    def object_count(self) -> int:
        return sum(1 for _ in self._object_files())
