import asyncio

import pytest

from devchain.consensus.transport import LoopbackTransport, TcpTransport
from devchain.consensus.wire import (
    HEADER_SIZE,
    MAX_FRAME_SIZE,
    ByteCounters,
    FrameDecoder,
    MessageType,
    decode_frame,
    encode_frame,
    read_frame,
    write_frame,
)
from devchain.errors import (
    FrameTooLarge,
    PortInUse,
    TransportError,
    UnknownMessageType,
    UnsupportedValue,
)


def test_frame_layout():
    frame = encode_frame(MessageType.ack, {"accepted": True})
    payload = b'{"accepted":true}'
    assert frame == len(payload).to_bytes(4, "big") + b"\x03" + payload
    assert decode_frame(frame) == (MessageType.ack, {"accepted": True})


def test_message_type_codes():
    assert [int(t) for t in MessageType] == [1, 2, 3, 4, 5, 6, 0x10, 0x11]


def test_unknown_type_and_oversized_frames():
    frame = bytearray(encode_frame(MessageType.block, {}))
    frame[4] = 0x7F
    with pytest.raises(UnknownMessageType):
        decode_frame(bytes(frame))

    header = (MAX_FRAME_SIZE + 1).to_bytes(4, "big") + b"\x02"
    with pytest.raises(FrameTooLarge):
        FrameDecoder().feed(header)


def test_length_mismatch():
    frame = encode_frame(MessageType.block, {"height": 1})
    with pytest.raises(UnsupportedValue):
        decode_frame(frame + b"x")
    with pytest.raises(UnsupportedValue):
        decode_frame(frame[: HEADER_SIZE - 1])


def test_decoder_reassembles_arbitrary_pieces():
    stream = b"".join(
        encode_frame(MessageType.event, {"seq": i, "pad": "x" * i}) for i in range(20)
    )
    decoder = FrameDecoder()
    frames = []
    for i in range(0, len(stream), 7):
        frames += decoder.feed(stream[i : i + 7])
    assert [doc["seq"] for _, doc in frames] == list(range(20))


def test_read_and_write_frames_count_bytes():
    async def scenario():
        reader = asyncio.StreamReader()
        sent, received = ByteCounters(), ByteCounters()

        class Writer:
            def write(self, data):
                reader.feed_data(data)

            async def drain(self):
                pass

        await write_frame(Writer(), MessageType.submit_tx, {"n": 1}, sent)
        reader.feed_eof()
        first = await read_frame(reader, received)
        second = await read_frame(reader, received)
        return first, second, sent, received

    first, second, sent, received = asyncio.run(scenario())
    assert first == (MessageType.submit_tx, {"n": 1})
    assert second is None
    assert sent.bytes_out == received.bytes_in == HEADER_SIZE + len(b'{"n":1}')


def test_connection_closed_inside_a_frame():
    async def scenario():
        reader = asyncio.StreamReader()
        reader.feed_data(encode_frame(MessageType.block, {"height": 1})[:-2])
        reader.feed_eof()
        await read_frame(reader)

    with pytest.raises(UnsupportedValue):
        asyncio.run(scenario())


def test_loopback_transport_connects_handler_and_client():
    async def scenario():
        transport = LoopbackTransport()

        async def echo(reader, writer):
            while (frame := await read_frame(reader)) is not None:
                await write_frame(writer, MessageType.ack, frame[1])
            writer.close()

        server = await transport.start_server(echo, "peer0", 7051)
        with pytest.raises(PortInUse):
            await transport.start_server(echo, "peer0", 7051)

        reader, writer = await transport.open_connection("peer0", 7051)
        await write_frame(writer, MessageType.submit_tx, {"hello": "world"})
        answer = await read_frame(reader)
        writer.close()

        server.close()
        with pytest.raises(TransportError):
            await transport.open_connection("peer0", 7051)
        return answer

    assert asyncio.run(scenario()) == (MessageType.ack, {"hello": "world"})


def test_tcp_transport_reports_a_busy_port():
    async def scenario():
        transport = TcpTransport()

        async def handler(reader, writer):
            writer.close()

        server = await transport.start_server(handler, "127.0.0.1", 0)
        port = server.sockets[0].getsockname()[1]
        try:
            with pytest.raises(PortInUse):
                await transport.start_server(handler, "127.0.0.1", port)
        finally:
            server.close()
            await server.wait_closed()

    asyncio.run(scenario())


def test_tcp_transport_reports_refused_connections():
    async def scenario():
        await TcpTransport().open_connection("127.0.0.1", 1)

    with pytest.raises(TransportError):
        asyncio.run(scenario())
