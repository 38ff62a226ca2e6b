"""Length-prefixed frames for the orderer, peer and client links.

frame = 4-byte big-endian payload length | 1-byte message type | payload,
where the payload is a canonical document.
"""

import asyncio
import struct
from dataclasses import dataclass
from enum import IntEnum

from devchain.errors import FrameTooLarge, UnknownMessageType, UnsupportedValue
from devchain.ledger.encoding import canonical_decode, canonical_encode

HEADER = struct.Struct(">IB")
HEADER_SIZE = HEADER.size
MAX_FRAME_SIZE = 64 * 1024 * 1024


class MessageType(IntEnum):
    submit_tx = 0x01
    block = 0x02
    ack = 0x03
    event_sub = 0x04
    event = 0x05
    block_sub = 0x06
    rpc_request = 0x10
    rpc_response = 0x11


def _message_type(value: int) -> MessageType:
    try:
        return MessageType(value)
    except ValueError:
        raise UnknownMessageType(f"Unknown message type 0x{value:02x}")


def encode_frame(msg_type: MessageType, doc) -> bytes:
    payload = canonical_encode(doc)
    if len(payload) > MAX_FRAME_SIZE:
        raise FrameTooLarge(f"Frame of {len(payload)} bytes exceeds {MAX_FRAME_SIZE}")
    return HEADER.pack(len(payload), int(msg_type)) + payload


def decode_frame(data: bytes) -> tuple[MessageType, object]:
    """Decode exactly one complete frame."""
    if len(data) < HEADER_SIZE:
        raise UnsupportedValue("Frame is shorter than its header")
    length, raw_type = HEADER.unpack_from(data)
    if length > MAX_FRAME_SIZE:
        raise FrameTooLarge(f"Frame of {length} bytes exceeds {MAX_FRAME_SIZE}")
    if len(data) != HEADER_SIZE + length:
        raise UnsupportedValue(f"Frame length {length} does not match {len(data) - HEADER_SIZE}")
    return _message_type(raw_type), canonical_decode(data[HEADER_SIZE:])


class FrameDecoder:
    """Incremental decoder for byte streams that arrive in arbitrary pieces."""

    def __init__(self):
        self._buffer = bytearray()

    def feed(self, data: bytes) -> list[tuple[MessageType, object]]:
        self._buffer.extend(data)
        frames = []
        while len(self._buffer) >= HEADER_SIZE:
            length, _ = HEADER.unpack_from(self._buffer)
            if length > MAX_FRAME_SIZE:
                raise FrameTooLarge(f"Frame of {length} bytes exceeds {MAX_FRAME_SIZE}")
            end = HEADER_SIZE + length
            if len(self._buffer) < end:
                break
            frames.append(decode_frame(bytes(self._buffer[:end])))
            del self._buffer[:end]
        return frames


@dataclass
class ByteCounters:
    bytes_in: int = 0
    bytes_out: int = 0


async def read_frame(reader: asyncio.StreamReader, counters: ByteCounters | None = None):
    """Next (type, document) from the stream, or None on a clean end of stream."""
    try:
        header = await reader.readexactly(HEADER_SIZE)
    except asyncio.IncompleteReadError as e:
        if e.partial:
            raise UnsupportedValue("Connection closed inside a frame header")
        return None

    length, raw_type = HEADER.unpack(header)
    if length > MAX_FRAME_SIZE:
        raise FrameTooLarge(f"Frame of {length} bytes exceeds {MAX_FRAME_SIZE}")
    msg_type = _message_type(raw_type)
    try:
        payload = await reader.readexactly(length)
    except asyncio.IncompleteReadError:
        raise UnsupportedValue("Connection closed inside a frame")

    if counters is not None:
        counters.bytes_in += HEADER_SIZE + length
    return msg_type, canonical_decode(payload)


async def write_frame(writer, msg_type: MessageType, doc, counters: ByteCounters | None = None):
    frame = encode_frame(msg_type, doc)
    writer.write(frame)
    await writer.drain()
    if counters is not None:
        counters.bytes_out += len(frame)
