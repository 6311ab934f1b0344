"""Per-party session state and the three-party runner.

Protocols are written once and executed by every role (SPMD): each role calls
the same function with its own :class:`Party`.  All parties derive operation
labels from a shared counter, so PRF draws line up without coordination.
"""
from __future__ import annotations

import contextlib
import hashlib
import struct
import threading
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .config import SessionConfig
from .crypto import Prf, SessionKeys, pair_key, setup_keys
from .ring import Ring, get_ring
from .sharing import Role, SERVERS
from .transport import (CommStats, Endpoint, LoopbackHub, MsgType, Phase, PeerClosed,
                        TransportError)


class AbortError(Exception):
    """An honest party detected misbehaviour and stopped the session."""

    def __init__(self, reason: str, role: Role | int | None = None):
        who = None if role is None else (Role(role).name if role in SERVERS else "client")
        super().__init__(reason if who is None else f"{who}: {reason}")
        self.reason = reason
        self.role = role


class FairAbort(AbortError):
    """Abort raised by fair reconstruction; no party learned the output."""


@dataclass
class _Check:
    hasher: Any = field(default_factory=hashlib.sha256)
    labels: list = field(default_factory=list)


class CheckEpoch:
    """Deferred equality checks, flushed as one digest per direction."""

    def __init__(self):
        self.reset()

    def reset(self):
        self.outgoing: dict[Role, _Check] = {}
        self.incoming: dict[Role, _Check] = {}
        self.touched = False
        self.gates = 0

    @staticmethod
    def _feed(chk: _Check, label: str, data: bytes):
        chk.hasher.update(struct.pack("<Q", len(data)))
        chk.hasher.update(data)
        chk.labels.append(label)


class Party:
    """One server's endpoint, keys, randomness and bookkeeping for a session."""

    def __init__(self, role: Role, keys: SessionKeys, endpoint: Endpoint,
                 config: SessionConfig | None = None, adversary=None):
        self.role = Role(role)
        self.config = config or SessionConfig()
        self.ring: Ring = get_ring(self.config.ell)
        self.bool = get_ring(1)
        self.keys = keys
        self.prf = Prf(keys)
        self.net = endpoint
        self.stats: CommStats = endpoint.stats
        self.adversary = adversary
        self.phase = Phase.ONLINE
        self.checks = CheckEpoch()
        self.aborted: str | None = None
        self._ops = 0
        self.cache: dict[str, Any] = {}

    # labels and randomness
    def op(self, name: str) -> str:
        self._ops += 1
        return f"{name}#{self._ops}"

    def key_with(self, other: Role) -> str:
        return pair_key(self.role, other)

    def rand(self, key: str, label: str, shape, ring: Ring | None = None) -> np.ndarray:
        return self.prf.sample(key, label, shape, ring or self.ring)

    def salt(self, key: str, label: str) -> bytes:
        return self.prf.bytes(key, label + "/salt", 16)

    # phases and rounds
    @contextlib.contextmanager
    def in_phase(self, phase: Phase):
        prev, self.phase = self.phase, phase
        try:
            yield
        finally:
            self.phase = prev

    def prep(self):
        return self.in_phase(Phase.PRE)

    def round(self, phase: Phase | None = None, n: int = 1):
        self.stats.add_round(self.phase if phase is None else phase, n)

    # messaging
    def _guard(self):
        if self.aborted is not None:
            raise AbortError(f"session already aborted ({self.aborted})", self.role)

    def send_bytes(self, peer, payload: bytes, mtype=MsgType.DATA, amortizable=False, phase=None):
        self._guard()
        self.net.send(int(peer), mtype, self.phase if phase is None else phase, payload, amortizable)

    def recv_bytes(self, peer, mtype=MsgType.DATA, phase=None) -> bytes:
        self._guard()
        try:
            return self.net.recv(int(peer), mtype, self.phase if phase is None else phase)
        except TransportError:
            self.aborted = self.aborted or "transport failure"
            raise

    def send(self, peer, arr, ring: Ring | None = None, mtype=MsgType.DATA, amortizable=False):
        self.send_bytes(peer, (ring or self.ring).to_bytes(arr), mtype, amortizable)

    def recv(self, peer, shape, ring: Ring | None = None, mtype=MsgType.DATA) -> np.ndarray:
        ring = ring or self.ring
        data = self.recv_bytes(peer, mtype)
        try:
            return ring.from_bytes(data, shape)
        except ValueError as exc:
            self.abort(f"malformed payload from {Role(peer).name}: {exc}")

    def send_hash(self, peer, data: bytes, amortizable=True):
        self.send_bytes(peer, hashlib.sha256(data).digest(), MsgType.HASH, amortizable)

    def recv_hash(self, peer) -> bytes:
        return self.recv_bytes(peer, MsgType.HASH)

    def abort(self, reason: str, cls=AbortError):
        self.aborted = reason
        raise cls(reason, self.role)

    def deviate(self, point: str, value):
        """Hook for scripted corruption strategies; identity for honest parties."""
        if self.adversary is not None and self.adversary.role == self.role:
            return self.adversary.act(self, point, value)
        return value

    # deferred equality checks
    def expect_equal(self, sender: Role, receiver: Role, value, label: str, ring: Ring | None = None):
        """Queue "sender's value equals receiver's value" for the next epoch close.

        Every party calls this with the same arguments (``value`` may be None
        at parties other than sender and receiver).
        """
        ep = self.checks
        ep.touched = True
        if self.role not in (sender, receiver):
            return
        data = value if isinstance(value, (bytes, bytearray)) else (ring or self.ring).to_bytes(value)
        if self.role == sender:
            ep._feed(ep.outgoing.setdefault(Role(receiver), _Check()), label, data)
        else:
            ep._feed(ep.incoming.setdefault(Role(sender), _Check()), label, data)

    def count_gates(self, n: int):
        self.checks.gates += n
        if self.checks.gates >= self.config.epoch_gates:
            self.verify()

    def verify(self):
        """Close the current check epoch: two verification rounds when anything is pending."""
        ep = self.checks
        if not ep.touched:
            return
        with self.in_phase(Phase.VERIFY):
            # round one: digests from P1 and P2
            if self.role != Role.P0:
                for peer, chk in ep.outgoing.items():
                    self.send_bytes(peer, chk.hasher.digest(), MsgType.HASH, amortizable=True)
            bad = []
            for sender in (Role.P1, Role.P2):
                chk = ep.incoming.get(sender)
                if sender != self.role and chk is not None:
                    if self.recv_bytes(sender, MsgType.HASH) != chk.hasher.digest():
                        bad.append((sender, chk.labels))
            self.round()
            if self.role == Role.P0:
                for peer, chk in ep.outgoing.items():
                    self.send_bytes(peer, chk.hasher.digest(), MsgType.HASH, amortizable=True)
            chk = ep.incoming.get(Role.P0)
            if self.role != Role.P0 and chk is not None:
                if self.recv_bytes(Role.P0, MsgType.HASH) != chk.hasher.digest():
                    bad.append((Role.P0, chk.labels))
            self.round()
        ep.reset()
        if bad:
            detail = "; ".join(f"from {s.name}: {sorted(set(l.split('#')[0] for l in labels))}"
                               for s, labels in bad)
            self.abort(f"deferred check mismatch ({detail})")

    def finish(self):
        self.verify()


@dataclass
class RunResult:
    outputs: dict
    errors: dict
    stats: CommStats
    per_party: dict
    slots: dict

    def ok(self) -> bool:
        return not self.errors

    def raise_first(self):
        for role in SERVERS:
            if role in self.errors:
                raise self.errors[role]

    def aborted_honest(self, corrupt: Role | None) -> list[Role]:
        """Honest roles that detected a fault themselves (not just a closed peer)."""
        return [r for r, e in self.errors.items()
                if r != corrupt and isinstance(e, AbortError) and not isinstance(e, PeerClosedAbort)]


class PeerClosedAbort(AbortError):
    pass


def make_parties(config: SessionConfig | None = None, seed=0, hub=None, timeout=None,
                 adversary=None):
    config = config or SessionConfig()
    hub = hub or LoopbackHub()
    keys = setup_keys(seed)
    t = config.timeout if timeout is None else timeout
    return [Party(role, keys[role], hub.endpoint(int(role), CommStats(), t), config, adversary)
            for role in SERVERS]


def run_parties(parties, program: Callable[[Party], Any], finish=True,
                interceptors: dict | None = None) -> RunResult:
    """Run ``program`` for every party in its own thread and merge statistics."""
    outputs, errors = {}, {}
    if interceptors:
        for p in parties:
            if p.role in interceptors:
                p.net.interceptor = interceptors[p.role]

    def body(p: Party):
        try:
            out = program(p)
            if finish:
                p.finish()
            outputs[p.role] = out
        except PeerClosed as exc:
            errors[p.role] = PeerClosedAbort(str(exc), p.role)
        except TransportError as exc:
            errors[p.role] = AbortError(f"transport: {exc}", p.role)
        except Exception as exc:  # noqa: BLE001 - reported to the caller
            errors[p.role] = exc
        finally:
            if p.role in errors:
                p.net.close()

    threads = [threading.Thread(target=body, args=(p,), daemon=True) for p in parties]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    merged = CommStats()
    for p in parties:
        merged.merge(p.stats)
    for ph in Phase:
        counts = {p.role: p.stats.round_count(ph) for p in parties}
        if not errors and len(set(counts.values())) != 1:
            raise RuntimeError(f"round counters diverged in {ph.name}: {counts}")
        merged.rounds[ph] = max(counts.values())
    return RunResult(outputs, errors, merged, {p.role: p.stats for p in parties},
                     {p.role: list(p.net.slots) for p in parties})


def run_session(program: Callable[[Party], Any], config: SessionConfig | None = None, seed=0,
                interceptors=None, adversary=None, timeout=None, finish=True) -> RunResult:
    parties = make_parties(config, seed, timeout=timeout, adversary=adversary)
    return run_parties(parties, program, finish=finish, interceptors=interceptors)
