"""Deterministic package archive.

Byte layout, all integers big-endian:

    b"DCPK" | version u8 (0x01) | entry count u32
    per entry, sorted by path:
        path length u16 | UTF-8 path | mode u32 (0o644) | mtime u64 (0) | size u64 | data

Identical file sets give identical bytes, and so identical package ids.
"""

import struct

from devchain.castore.objects import EntryKind, split_path
from devchain.errors import InvalidPath, UnsupportedValue

MAGIC = b"DCPK"
VERSION = 0x01
FILE_MODE = 0o644

_HEAD = struct.Struct(">4sBI")
_PATH_LEN = struct.Struct(">H")
_ENTRY_META = struct.Struct(">IQQ")
MAX_PATH_BYTES = 0xFFFF


def pack_files(files: dict[str, bytes]) -> bytes:
    parts = [_HEAD.pack(MAGIC, VERSION, len(files))]
    for path in sorted(files):
        try:
            raw_path = path.encode("utf-8")
        except UnicodeEncodeError:
            raise InvalidPath(f"Path {path!r} is not valid UTF-8")
        if len(raw_path) > MAX_PATH_BYTES:
            raise InvalidPath(f"Path of {len(raw_path)} bytes exceeds {MAX_PATH_BYTES}")
        data = files[path]
        parts.append(_PATH_LEN.pack(len(raw_path)))
        parts.append(raw_path)
        parts.append(_ENTRY_META.pack(FILE_MODE, 0, len(data)))
        parts.append(data)
    return b"".join(parts)


def extract_package(data: bytes) -> dict[str, bytes]:
    try:
        magic, version, count = _HEAD.unpack_from(data)
    except struct.error:
        raise UnsupportedValue("Package is shorter than its header")
    if magic != MAGIC or version != VERSION:
        raise UnsupportedValue("Not a devchain package")

    files = {}
    offset = _HEAD.size
    try:
        for _ in range(count):
            (path_len,) = _PATH_LEN.unpack_from(data, offset)
            offset += _PATH_LEN.size
            path = data[offset : offset + path_len].decode("utf-8")
            offset += path_len
            _, _, size = _ENTRY_META.unpack_from(data, offset)
            offset += _ENTRY_META.size
            if offset + size > len(data):
                raise UnsupportedValue(f"Entry {path} runs past the end of the package")
            files[path] = data[offset : offset + size]
            offset += size
    except (struct.error, UnicodeDecodeError) as e:
        raise UnsupportedValue(f"Truncated or corrupt package: {e}")
    if offset != len(data):
        raise UnsupportedValue("Trailing bytes after the last package entry")
    return files


def collect_files(store, tree_cid: str, include_paths) -> dict[str, bytes]:
    """Files under each include path; a path may name a file or a directory."""
    files = {}
    for include in include_paths:
        parts = split_path(include)
        if not parts:
            files.update(store.read_tree_files(tree_cid))
            continue
        cid = store.resolve_path(tree_cid, include)
        parent = store.get_tree(store.resolve_path(tree_cid, "/".join(parts[:-1])))
        entry = parent.get(parts[-1])
        prefix = "/".join(parts)
        if entry.kind is EntryKind.tree:
            files.update(store.read_tree_files(cid, prefix + "/"))
        else:
            files[prefix] = store.get(cid)
    for path in files:
        if path.startswith("/") or ".." in path.split("/"):
            raise InvalidPath(f"Refusing to package {path}")
    return files


def make_package(store, tree_cid: str, include_paths) -> bytes:
    return pack_files(collect_files(store, tree_cid, include_paths))
