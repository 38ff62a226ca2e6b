"""Append-only block log.

`blocks.log` is a sequence of frames (4-byte big-endian length, then the
canonical block bytes). `blocks.idx` holds one 8-byte big-endian offset per
block. A crash can leave a torn frame at the end of the log or an index that
lags behind it; opening the log truncates the former and rebuilds the latter,
so a restarted node always sees a prefix of committed blocks.
"""

import logging
import os
import struct
import threading
from pathlib import Path

from devchain.ledger.block import Block

logger = logging.getLogger(__name__)

HEADER_SIZE = 4
INDEX_ENTRY_SIZE = 8


class BlockLog:
    def __init__(self, directory, fsync=True):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.log_path = self.directory / "blocks.log"
        self.index_path = self.directory / "blocks.idx"
        self.fsync = fsync
        self.offsets: list[int] = []
        self._lock = threading.Lock()
        self._recover()
        self._log = open(self.log_path, "ab")
        self._index = open(self.index_path, "ab")

    def _recover(self):
        self.log_path.touch(exist_ok=True)
        self.index_path.touch(exist_ok=True)

        raw_index = self.index_path.read_bytes()
        usable = len(raw_index) - len(raw_index) % INDEX_ENTRY_SIZE
        offsets = [
            struct.unpack_from(">Q", raw_index, i)[0] for i in range(0, usable, INDEX_ENTRY_SIZE)
        ]

        log_size = self.log_path.stat().st_size
        # drop index entries pointing past the end of the log
        with open(self.log_path, "rb") as log:
            while offsets and not self._frame_complete(log, offsets[-1], log_size):
                offsets.pop()

            position = 0
            if offsets:
                log.seek(offsets[-1])
                (length,) = struct.unpack(">I", log.read(HEADER_SIZE))
                position = offsets[-1] + HEADER_SIZE + length

            while self._frame_complete(log, position, log_size):
                offsets.append(position)
                log.seek(position)
                (length,) = struct.unpack(">I", log.read(HEADER_SIZE))
                position += HEADER_SIZE + length

        if position < log_size:
            logger.warning(
                f" --> Truncating torn tail of {self.log_path} at byte {position} (was {log_size})"
            )
            with open(self.log_path, "r+b") as log:
                log.truncate(position)

        if len(offsets) * INDEX_ENTRY_SIZE != len(raw_index) or offsets != [
            struct.unpack_from(">Q", raw_index, i * INDEX_ENTRY_SIZE)[0]
            for i in range(len(offsets))
        ]:
            self.index_path.write_bytes(b"".join(struct.pack(">Q", o) for o in offsets))

        self.offsets = offsets
        self._end = position

    @staticmethod
    def _frame_complete(log, position, log_size) -> bool:
        if position + HEADER_SIZE > log_size:
            return False
        log.seek(position)
        (length,) = struct.unpack(">I", log.read(HEADER_SIZE))
        return position + HEADER_SIZE + length <= log_size

    def __len__(self):
        return len(self.offsets)

    def append(self, block: Block | bytes):
        data = block.to_bytes() if isinstance(block, Block) else block
        with self._lock:
            position = self._end
            self._log.write(struct.pack(">I", len(data)) + data)
            self._log.flush()
            if self.fsync:
                os.fsync(self._log.fileno())
            self._index.write(struct.pack(">Q", position))
            self._index.flush()
            self.offsets.append(position)
            self._end = position + HEADER_SIZE + len(data)

    def read_raw(self, height: int) -> bytes:
        offset = self.offsets[height]
        with open(self.log_path, "rb") as log:
            log.seek(offset)
            (length,) = struct.unpack(">I", log.read(HEADER_SIZE))
            return log.read(length)

    def raw_blocks(self):
        for height in range(len(self.offsets)):
            yield self.read_raw(height)

    def blocks(self):
        for raw in self.raw_blocks():
            yield Block.from_bytes(raw)

    def close(self):
        self._log.close()
        self._index.close()

    def __enter__(self):
        return self

    def __exit__(self, type, value, traceback):
        self.close()
        return False


def scan_log(directory):
    """Frames of a block log exactly as stored, without recovery, for offline audits.

    An incomplete trailing frame comes back as its remaining bytes so that it
    shows up as a malformed block instead of being dropped.
    """
    data = (Path(directory) / "blocks.log").read_bytes()
    position = 0
    while position < len(data):
        if position + HEADER_SIZE > len(data):
            yield data[position:]
            return
        (length,) = struct.unpack_from(">I", data, position)
        start = position + HEADER_SIZE
        yield data[start : start + length]
        position = start + length
