"""Framed pairwise channels, phase tags and communication accounting.

Every message is a :class:`WireMessage`: a little-endian u32 length (payload
size plus the two tag bytes), a message type, a phase byte and the payload.
Two transports implement the same blocking contract: an in-process loopback
hub used by tests and benchmarks, and TCP for multi-process deployments.
"""
from __future__ import annotations

import hashlib
import queue
import socket
import struct
import threading
import time
from collections import defaultdict
from dataclasses import dataclass
from enum import IntEnum

CLIENT = 3
HEADER = struct.Struct("<IBB")


class Phase(IntEnum):
    PRE = 0
    ONLINE = 1
    VERIFY = 2


class MsgType(IntEnum):
    DATA = 1
    HASH = 2
    COMMIT = 3
    OPEN = 4
    SIGNAL = 5
    PROOF = 6
    GARBLED = 7
    LABELS = 8
    HANDSHAKE = 9
    # client gateway range
    CLIENT_DATA = 0x81
    CLIENT_HASH = 0x82
    CLIENT_COMMIT = 0x83
    CLIENT_OPEN = 0x84


class TransportError(Exception):
    pass


class PeerClosed(TransportError):
    pass


class Desync(TransportError):
    pass


class RecvTimeout(TransportError):
    pass


class HandshakeError(TransportError):
    pass


@dataclass(frozen=True)
class WireMessage:
    msg_type: MsgType
    phase: Phase
    payload: bytes

    def encode(self) -> bytes:
        return HEADER.pack(len(self.payload) + 2, int(self.msg_type), int(self.phase)) + self.payload

    @classmethod
    def decode(cls, frame: bytes) -> "WireMessage":
        if len(frame) < HEADER.size:
            raise Desync("short frame")
        length, mtype, phase = HEADER.unpack_from(frame)
        if length != len(frame) - 4:
            raise Desync("frame length mismatch")
        try:
            return cls(MsgType(mtype), Phase(phase), frame[HEADER.size:])
        except ValueError as exc:
            raise Desync(f"unknown tag: {exc}") from None


@dataclass(frozen=True)
class SendSlot:
    """Identifies one send for fault injection: the n-th frame a party emits."""

    index: int
    sender: int
    receiver: int
    msg_type: MsgType
    phase: Phase
    size: int


class CommStats:
    """Per-channel byte/message counters and per-phase round counters."""

    def __init__(self):
        self._lock = threading.Lock()
        self.payload = defaultdict(int)      # (sender, receiver, phase, amortizable) -> bytes
        self.frames = defaultdict(int)       # same key -> bytes including headers
        self.messages = defaultdict(int)
        self.rounds = defaultdict(int)       # phase -> count

    def record(self, sender, receiver, phase, nbytes, amortizable=False):
        key = (int(sender), int(receiver), Phase(phase), bool(amortizable))
        with self._lock:
            self.payload[key] += nbytes
            self.frames[key] += nbytes + HEADER.size
            self.messages[key] += 1

    def add_round(self, phase, n=1):
        with self._lock:
            self.rounds[Phase(phase)] += n

    def merge(self, other: "CommStats", rounds=False):
        with self._lock:
            for attr in ("payload", "frames", "messages"):
                mine = getattr(self, attr)
                for k, v in getattr(other, attr).items():
                    mine[k] += v
            if rounds:
                for k, v in other.rounds.items():
                    self.rounds[k] += v

    def snapshot(self) -> "CommStats":
        out = CommStats()
        with self._lock:
            out.payload.update(self.payload)
            out.frames.update(self.frames)
            out.messages.update(self.messages)
            out.rounds.update(self.rounds)
        return out

    def __sub__(self, other: "CommStats") -> "CommStats":
        out = CommStats()
        for attr in ("payload", "frames", "messages", "rounds"):
            a, b, o = getattr(self, attr), getattr(other, attr), getattr(out, attr)
            for k in set(a) | set(b):
                if a.get(k, 0) - b.get(k, 0):
                    o[k] = a.get(k, 0) - b.get(k, 0)
        return out

    def bytes(self, phase=None, amortizable=None, sender=None, receiver=None, frames=False) -> int:
        table = self.frames if frames else self.payload
        total = 0
        for (s, r, ph, am), v in table.items():
            if phase is not None and ph != phase:
                continue
            if amortizable is not None and am != amortizable:
                continue
            if sender is not None and s != int(sender):
                continue
            if receiver is not None and r != int(receiver):
                continue
            total += v
        return total

    def round_count(self, phase) -> int:
        return self.rounds.get(Phase(phase), 0)

    def as_dict(self) -> dict[str, int]:
        out = {}
        for ph in Phase:
            name = ph.name.lower()
            out[f"{name}.bytes.per_gate"] = self.bytes(ph, amortizable=False)
            out[f"{name}.bytes.amortizable"] = self.bytes(ph, amortizable=True)
            out[f"{name}.rounds"] = self.round_count(ph)
        for (s, r, ph, am), v in sorted(self.payload.items()):
            tag = "amortizable" if am else "per_gate"
            out[f"channel.{s}->{r}.{ph.name.lower()}.{tag}"] = v
        return out


_CLOSED = object()


class Endpoint:
    """Blocking send/recv interface shared by all transports."""

    def __init__(self, role: int, stats: CommStats | None = None, timeout: float = 30.0):
        self.role = int(role)
        self.stats = stats if stats is not None else CommStats()
        self.timeout = timeout
        self.interceptor = None      # callable(SendSlot, bytes) -> bytes, used for fault injection
        self.slots: list[SendSlot] = []
        self._n_sent = 0

    def send(self, peer: int, msg_type: MsgType, phase: Phase, payload: bytes, amortizable=False):
        slot = SendSlot(self._n_sent, self.role, int(peer), MsgType(msg_type), Phase(phase), len(payload))
        self._n_sent += 1
        self.slots.append(slot)
        if self.interceptor is not None:
            payload = self.interceptor(slot, payload)
        self.stats.record(self.role, peer, phase, len(payload), amortizable)
        self._deliver(int(peer), WireMessage(MsgType(msg_type), Phase(phase), payload).encode())

    def recv(self, peer: int, msg_type: MsgType, phase: Phase) -> bytes:
        msg = WireMessage.decode(self._take(int(peer)))
        if msg.msg_type != msg_type or msg.phase != phase:
            raise Desync(f"P{self.role} expected {MsgType(msg_type).name}/{Phase(phase).name} from {peer}, "
                         f"got {msg.msg_type.name}/{msg.phase.name}")
        return msg.payload

    def _deliver(self, peer: int, frame: bytes):
        raise NotImplementedError

    def _take(self, peer: int) -> bytes:
        raise NotImplementedError

    def close(self):
        pass


class LoopbackHub:
    """In-process message switch with one FIFO per directed pair."""

    def __init__(self, roles=(0, 1, 2)):
        self.roles = tuple(roles)
        self.queues = {(a, b): queue.Queue() for a in self.roles for b in self.roles if a != b}

    def endpoint(self, role: int, stats: CommStats | None = None, timeout: float = 30.0) -> "LoopbackEndpoint":
        return LoopbackEndpoint(self, role, stats, timeout)


class LoopbackEndpoint(Endpoint):
    def __init__(self, hub: LoopbackHub, role: int, stats=None, timeout=30.0):
        super().__init__(role, stats, timeout)
        self.hub = hub
        self.closed = False

    def _deliver(self, peer, frame):
        self.hub.queues[(self.role, peer)].put(frame)

    def _take(self, peer):
        try:
            item = self.hub.queues[(peer, self.role)].get(timeout=self.timeout)
        except queue.Empty:
            raise RecvTimeout(f"P{self.role}: no message from {peer} within {self.timeout}s") from None
        if item is _CLOSED:
            self.hub.queues[(peer, self.role)].put(_CLOSED)
            raise PeerClosed(f"P{self.role}: peer {peer} closed")
        return item

    def close(self):
        if not self.closed:
            self.closed = True
            for other in self.hub.roles:
                if other != self.role:
                    self.hub.queues[(self.role, other)].put(_CLOSED)


def params_digest(**params) -> bytes:
    text = "|".join(f"{k}={params[k]}" for k in sorted(params))
    return hashlib.sha256(text.encode()).digest()


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise PeerClosed("connection closed")
        buf.extend(chunk)
    return bytes(buf)


def _read_frame(sock: socket.socket) -> bytes:
    head = _recv_exact(sock, 4)
    (length,) = struct.unpack("<I", head)
    return head + _recv_exact(sock, length)


class TcpEndpoint(Endpoint):
    """TCP transport: for every pair the higher role dials the lower role.

    ``addresses`` maps each server role to (host, port).  The client role
    dials every server.  A handshake exchanges role and parameter digest;
    mismatched parameters are rejected before any protocol traffic.
    """

    def __init__(self, role: int, addresses: dict, digest: bytes, peers=(0, 1, 2),
                 stats=None, timeout=30.0, connect_timeout=30.0):
        super().__init__(role, stats, timeout)
        self.digest = digest
        self.peers = [p for p in peers if p != self.role]
        self.socks: dict[int, socket.socket] = {}
        self.inbox = {p: queue.Queue() for p in self.peers}
        self._send_lock = threading.Lock()
        self._listener = None
        lower = [p for p in self.peers if p < self.role]
        higher = [p for p in self.peers if p > self.role]
        if higher:
            host, port = addresses[self.role]
            self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
            self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            self._listener.bind((host, port))
            self._listener.listen(len(higher))
        for p in lower:
            self.socks[p] = self._dial(addresses[p], connect_timeout)
            self._handshake(self.socks[p], expect=p)
        deadline = time.monotonic() + connect_timeout
        while any(p not in self.socks for p in higher):
            self._listener.settimeout(max(0.1, deadline - time.monotonic()))
            try:
                conn, _ = self._listener.accept()
            except socket.timeout:
                raise RecvTimeout(f"P{self.role}: peers {higher} did not connect") from None
            conn.settimeout(None)
            peer = self._handshake(conn, expect=None)
            if peer not in higher or peer in self.socks:
                conn.close()
                raise HandshakeError(f"unexpected peer {peer}")
            self.socks[peer] = conn
        for p, s in self.socks.items():
            s.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            threading.Thread(target=self._reader, args=(p, s), daemon=True).start()

    def _dial(self, addr, connect_timeout):
        deadline = time.monotonic() + connect_timeout
        while True:
            try:
                return socket.create_connection(tuple(addr), timeout=5.0)
            except OSError:
                if time.monotonic() > deadline:
                    raise RecvTimeout(f"P{self.role}: cannot reach {addr}") from None
                time.sleep(0.05)

    def _handshake(self, sock, expect):
        hello = WireMessage(MsgType.HANDSHAKE, Phase.PRE, bytes([self.role]) + self.digest).encode()
        try:
            sock.sendall(hello)
            msg = WireMessage.decode(_read_frame(sock))
        except OSError as exc:
            raise PeerClosed(f"handshake interrupted: {exc}") from None
        if msg.msg_type != MsgType.HANDSHAKE or len(msg.payload) != 33:
            raise HandshakeError("malformed handshake")
        peer, digest = msg.payload[0], msg.payload[1:]
        if expect is not None and peer != expect:
            raise HandshakeError(f"expected P{expect}, got {peer}")
        if digest != self.digest:
            raise HandshakeError(f"parameter mismatch with peer {peer}")
        sock.settimeout(None)
        return peer

    def _reader(self, peer, sock):
        try:
            while True:
                self.inbox[peer].put(_read_frame(sock))
        except (OSError, TransportError):
            self.inbox[peer].put(_CLOSED)

    def _deliver(self, peer, frame):
        try:
            with self._send_lock:
                self.socks[peer].sendall(frame)
        except OSError as exc:
            raise PeerClosed(str(exc)) from None

    def _take(self, peer):
        try:
            item = self.inbox[peer].get(timeout=self.timeout)
        except queue.Empty:
            raise RecvTimeout(f"P{self.role}: no message from {peer} within {self.timeout}s") from None
        if item is _CLOSED:
            self.inbox[peer].put(_CLOSED)
            raise PeerClosed(f"P{self.role}: peer {peer} closed")
        return item

    def close(self):
        for s in self.socks.values():
            try:
                s.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            s.close()
        if self._listener is not None:
            self._listener.close()
