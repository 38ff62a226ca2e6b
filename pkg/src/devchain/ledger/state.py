import threading

from devchain.ledger.encoding import canonical_decode, canonical_encode

_DELETED = object()


class StateStore:
    """Document-oriented world state: string key -> canonical document.

    Documents are held in canonical encoded form so two stores fed the same
    blocks compare byte for byte. Only the block replayer writes (through
    `apply`); reads may happen from any thread.
    """

    def __init__(self):
        self._docs: dict[str, bytes] = {}
        self.version = -1
        self._lock = threading.RLock()

    def __len__(self):
        return len(self._docs)

    def __contains__(self, key):
        return key in self._docs

    def get(self, key, default=None):
        raw = self._docs.get(key)
        if raw is None:
            return default
        return canonical_decode(raw)

    def get_raw(self, key) -> bytes | None:
        return self._docs.get(key)

    def keys(self, prefix=""):
        with self._lock:
            return sorted(k for k in self._docs if k.startswith(prefix))

    def items(self, prefix=""):
        return [(k, self.get(k)) for k in self.keys(prefix)]

    def apply(self, writes: dict, version: int):
        """Atomically apply a write set produced by an overlay."""
        with self._lock:
            for key, raw in writes.items():
                if raw is _DELETED:
                    self._docs.pop(key, None)
                else:
                    self._docs[key] = raw
            self.version = version

    def to_bytes(self) -> bytes:
        with self._lock:
            return b"{" + b",".join(
                canonical_encode(k) + b":" + self._docs[k] for k in sorted(self._docs)
            ) + b"}"

    def snapshot(self) -> dict:
        with self._lock:
            return {k: canonical_decode(v) for k, v in self._docs.items()}

    def overlay(self) -> "StateOverlay":
        return StateOverlay(self)

    def __repr__(self):
        return f"StateStore(version={self.version}, documents={len(self._docs)})"


class StateOverlay:
    """Buffered writes on top of a store or another overlay; nothing leaks until commit."""

    def __init__(self, base):
        self.base = base
        self.writes: dict = {}

    def get(self, key, default=None):
        if key in self.writes:
            raw = self.writes[key]
            return default if raw is _DELETED else canonical_decode(raw)
        return self.base.get(key, default)

    def get_raw(self, key):
        if key in self.writes:
            raw = self.writes[key]
            return None if raw is _DELETED else raw
        return self.base.get_raw(key)

    def __contains__(self, key):
        return self.get_raw(key) is not None

    def put(self, key: str, doc):
        self.writes[key] = canonical_encode(doc)

    def delete(self, key: str):
        self.writes[key] = _DELETED

    def keys(self, prefix=""):
        keys = set(self.base.keys(prefix))
        for key, raw in self.writes.items():
            if not key.startswith(prefix):
                continue
            if raw is _DELETED:
                keys.discard(key)
            else:
                keys.add(key)
        return sorted(keys)

    def items(self, prefix=""):
        return [(k, self.get(k)) for k in self.keys(prefix)]

    def overlay(self) -> "StateOverlay":
        return StateOverlay(self)

    def commit(self):
        """Merge into the parent overlay. Stores are committed via StateStore.apply."""
        if isinstance(self.base, StateOverlay):
            self.base.writes.update(self.writes)
        else:
            raise TypeError("Commit a top-level overlay with StateStore.apply")
        self.writes = {}
