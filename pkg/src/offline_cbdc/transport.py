"""Message framing, channel models and the bank's request/response protocol.

A frame is a 1-byte type tag, a 4-byte big-endian payload length and the
canonical payload bytes. The same frames travel over the simulated channels
and over a TCP byte stream when the bank runs as its own process.
"""

from __future__ import annotations

import enum
import socket
import socketserver
import struct
import threading
from dataclasses import dataclass, field
from typing import Callable

from .crypto.encoding import DecodeError
from .messages import (
    CompletionSigRequest,
    CreationSigRequest,
    Empty,
    EnrollRequest,
    EpochChallenge,
    LedgerAnswer,
    LedgerEntry,
    LedgerQuery,
    Payment,
    PaymentRequest,
    RecoveryRequest,
    Response,
    SigRequest,
    SyncRequest,
)

_HEADER = struct.Struct(">BI")
HEADER_SIZE = _HEADER.size
MAX_PAYLOAD = 1 << 30


class MsgType(enum.IntEnum):
    ENROLL = 1
    GET_EPOCH_CHALLENGE = 2
    SIG_REQUEST_CREATE = 3
    SIG_REQUEST_COMPLETE = 4
    SYNC = 5
    RECOVER = 6
    QUERY_LEDGER = 7
    PAYMENT_REQUEST = 16
    PAYMENT = 17
    RESPONSE = 128
    EPOCH_CHALLENGE = 129
    LEDGER_ANSWER = 130
    ERROR = 131


@dataclass(frozen=True)
class ErrorReply:
    """A request the bank could not even parse."""

    reason: str

    def to_bytes(self) -> bytes:
        return self.reason.encode()

    @classmethod
    def from_bytes(cls, data: bytes) -> "ErrorReply":
        try:
            return cls(data.decode())
        except UnicodeDecodeError:
            raise DecodeError("error reply is not UTF-8", 0) from None


MESSAGE_TYPES = {
    MsgType.ENROLL: EnrollRequest,
    MsgType.GET_EPOCH_CHALLENGE: Empty,
    MsgType.SIG_REQUEST_CREATE: CreationSigRequest,
    MsgType.SIG_REQUEST_COMPLETE: CompletionSigRequest,
    MsgType.SYNC: SyncRequest,
    MsgType.RECOVER: RecoveryRequest,
    MsgType.QUERY_LEDGER: LedgerQuery,
    MsgType.PAYMENT_REQUEST: PaymentRequest,
    MsgType.PAYMENT: Payment,
    MsgType.RESPONSE: Response,
    MsgType.EPOCH_CHALLENGE: EpochChallenge,
    MsgType.LEDGER_ANSWER: LedgerAnswer,
    MsgType.ERROR: ErrorReply,
}
_TAG_OF = {cls: tag for tag, cls in MESSAGE_TYPES.items()}


class FrameError(DecodeError):
    pass


def encode_frame(msg) -> bytes:
    tag = _TAG_OF.get(type(msg))
    if tag is None:
        raise TypeError(f"{type(msg).__name__} has no frame type")
    payload = msg.to_bytes()
    return _HEADER.pack(tag, len(payload)) + payload


def _header(data: bytes, offset: int) -> tuple[MsgType, int]:
    tag, n = _HEADER.unpack_from(data, offset)
    if tag not in MESSAGE_TYPES:
        raise FrameError(f"unknown frame type {tag}", offset)
    if n > MAX_PAYLOAD:
        raise FrameError(f"frame payload of {n} bytes exceeds the limit", offset + 1)
    return MsgType(tag), n


def _payload(tag: MsgType, payload: bytes, offset: int):
    try:
        return MESSAGE_TYPES[tag].from_bytes(payload)
    except DecodeError as exc:
        raise FrameError(f"bad {tag.name} payload: {exc.message}", offset + HEADER_SIZE + exc.offset) from None


def decode_frame(data: bytes, offset: int = 0):
    """Decode one frame starting at ``offset``; returns (message, offset after it)."""
    if len(data) - offset < HEADER_SIZE:
        raise FrameError("truncated frame header", offset)
    tag, n = _header(data, offset)
    end = offset + HEADER_SIZE + n
    if end > len(data):
        raise FrameError(f"truncated frame: need {n} payload bytes", offset)
    return _payload(tag, bytes(data[offset + HEADER_SIZE : end]), offset), end


def decode_message(data: bytes):
    """Decode exactly one frame occupying all of ``data``."""
    msg, end = decode_frame(data)
    if end != len(data):
        raise FrameError("trailing bytes after frame", end)
    return msg


class FrameReader:
    """Incremental decoder for a byte stream: feed chunks, collect whole messages."""

    def __init__(self):
        self._buf = bytearray()
        self._consumed = 0

    def feed(self, chunk: bytes) -> list:
        self._buf.extend(chunk)
        out = []
        while len(self._buf) >= HEADER_SIZE:
            tag, n = _header(self._buf, 0)
            if len(self._buf) < HEADER_SIZE + n:
                break
            payload = bytes(self._buf[HEADER_SIZE : HEADER_SIZE + n])
            out.append(_payload(tag, payload, self._consumed))
            del self._buf[: HEADER_SIZE + n]
            self._consumed += HEADER_SIZE + n
        return out

    @property
    def pending(self) -> int:
        return len(self._buf)


# --- channel models ------------------------------------------------------------


PROXIMITY_BITRATE = 420_000
ONLINE_BITRATE = 50_000_000
PROXIMITY_LATENCY = 0.005
ONLINE_LATENCY = 0.020


@dataclass(frozen=True)
class ChannelModel:
    kind: str  # "proximity" or "online"
    bitrate: float  # bits per second
    latency: float  # seconds per message

    def transfer_time(self, message: bytes | int) -> float:
        size = message if isinstance(message, int) else len(message)
        return self.latency + 8 * size / self.bitrate

    @classmethod
    def proximity(cls, bitrate: float = PROXIMITY_BITRATE, latency: float = PROXIMITY_LATENCY) -> "ChannelModel":
        return cls("proximity", bitrate, latency)

    @classmethod
    def online(cls, bitrate: float = ONLINE_BITRATE, latency: float = ONLINE_LATENCY) -> "ChannelModel":
        return cls("online", bitrate, latency)


def transfer_time(channel: ChannelModel, message: bytes | int) -> float:
    return channel.transfer_time(message)


class ChannelDown(ConnectionError):
    pass


@dataclass
class Channel:
    """A FIFO byte channel that accounts for every frame it carries."""

    model: ChannelModel
    frames: int = 0
    bytes_sent: int = 0
    time_spent: float = 0.0
    up: Callable[[], bool] = lambda: True
    tap: list[bytes] | None = None  # when set, a copy of every frame is recorded

    def carry(self, frame: bytes) -> bytes:
        if not self.up():
            raise ChannelDown(f"{self.model.kind} channel is unavailable")
        self.frames += 1
        self.bytes_sent += len(frame)
        self.time_spent += self.model.transfer_time(frame)
        if self.tap is not None:
            self.tap.append(frame)
        return frame


# --- bank protocol ----------------------------------------------------------------


def handle_request(bank, frame: bytes) -> bytes:
    """Serve one request frame with ``bank``; the handler sees only the bytes, never their origin."""
    try:
        req = decode_message(frame)
    except DecodeError as exc:
        return encode_frame(ErrorReply(str(exc)))
    if isinstance(req, Empty):
        return encode_frame(bank.epoch_challenge())
    if isinstance(req, EnrollRequest):
        return encode_frame(bank.enroll(req))
    if isinstance(req, (CreationSigRequest, CompletionSigRequest)):
        return encode_frame(bank.request_signature(req))
    if isinstance(req, SyncRequest):
        return encode_frame(bank.synchronize(req))
    if isinstance(req, RecoveryRequest):
        return encode_frame(bank.recover(req))
    if isinstance(req, LedgerQuery):
        return encode_frame(LedgerAnswer(bank.query_ledger(req.scm)))
    return encode_frame(ErrorReply(f"{type(req).__name__} is not a bank request"))


class ProtocolError(ConnectionError):
    pass


class FramedBank:
    """Client side of the bank protocol over any request/response byte exchange.

    ``exchange`` takes a request frame and returns the response frame. Both
    frames pass through ``channel`` for accounting, so the bank never learns
    which wallet sent a request.
    """

    def __init__(self, exchange: Callable[[bytes], bytes], channel: Channel | None = None):
        self.exchange = exchange
        self.channel = channel

    def _call(self, msg, expect: type):
        frame = encode_frame(msg)
        if self.channel is not None:
            self.channel.carry(frame)
        reply = self.exchange(frame)
        if self.channel is not None:
            self.channel.carry(reply)
        out = decode_message(reply)
        if isinstance(out, ErrorReply):
            raise ProtocolError(out.reason)
        if not isinstance(out, expect):
            raise ProtocolError(f"expected {expect.__name__}, got {type(out).__name__}")
        return out

    def epoch_challenge(self) -> EpochChallenge:
        return self._call(Empty(), EpochChallenge)

    def enroll(self, req: EnrollRequest) -> Response:
        return self._call(req, Response)

    def request_signature(self, req: SigRequest) -> Response:
        return self._call(req, Response)

    def synchronize(self, req: SyncRequest) -> Response:
        return self._call(req, Response)

    def recover(self, req: RecoveryRequest) -> Response:
        return self._call(req, Response)

    def query_ledger(self, scm: int) -> LedgerEntry | None:
        return self._call(LedgerQuery(scm), LedgerAnswer).entry


def local_bank(bank, channel: Channel | None = None) -> FramedBank:
    """A client talking to an in-process bank through the full encode/decode path."""
    return FramedBank(lambda frame: handle_request(bank, frame), channel)


# --- TCP ----------------------------------------------------------------------------


def _read_frame(sock_file) -> bytes | None:
    header = sock_file.read(HEADER_SIZE)
    if not header:
        return None
    if len(header) < HEADER_SIZE:
        raise FrameError("connection closed inside a frame header", 0)
    _header(header, 0)
    (n,) = struct.unpack(">I", header[1:])
    payload = sock_file.read(n)
    if len(payload) < n:
        raise FrameError("connection closed inside a frame payload", HEADER_SIZE)
    return header + payload


class _Handler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        while True:
            try:
                frame = _read_frame(self.rfile)
            except FrameError as exc:
                self.wfile.write(encode_frame(ErrorReply(str(exc))))
                return
            if frame is None:
                return
            self.wfile.write(handle_request(self.server.bank, frame))
            self.wfile.flush()


class BankServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, bank, address: tuple[str, int]):
        super().__init__(address, _Handler)
        self.bank = bank

    @property
    def port(self) -> int:
        return self.server_address[1]

    def start(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, daemon=True)
        thread.start()
        return thread


@dataclass
class RemoteBank(FramedBank):
    """A bank client over one TCP connection."""

    host: str
    port: int
    timeout: float = 30.0
    channel: Channel | None = None
    _sock: socket.socket | None = field(default=None, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    def __post_init__(self):
        FramedBank.__init__(self, self._exchange, self.channel)

    def _exchange(self, frame: bytes) -> bytes:
        with self._lock:
            if self._sock is None:
                self._sock = socket.create_connection((self.host, self.port), self.timeout)
                self._file = self._sock.makefile("rb")
            self._sock.sendall(frame)
            reply = _read_frame(self._file)
            if reply is None:
                raise ProtocolError("bank closed the connection")
            return reply

    def close(self) -> None:
        with self._lock:
            if self._sock is not None:
                self._file.close()
                self._sock.close()
                self._sock = None
