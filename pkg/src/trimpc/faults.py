"""Fault injection for tests and demonstrations.

Two mechanisms: a :class:`Deviation` adversary changes a value at a named
deviation point inside a protocol (``ctx.deviate(point, value)``), and slot
interceptors rewrite a single outgoing message on the wire.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .sharing import Role
from .transport import SendSlot


def perturb(value: Any) -> Any:
    """A minimal change: +1 on the first array entry or one flipped bit in bytes."""
    if isinstance(value, (bytes, bytearray)):
        out = bytearray(value)
        if not out:
            return b"\x00"
        out[0] ^= 1
        return bytes(out)
    if isinstance(value, np.ndarray):
        out = value.copy()
        out.flat[0] = (out.flat[0] + np.uint64(1)) if out.dtype == np.uint64 else out.flat[0] ^ 1
        return out
    raise TypeError(f"no default perturbation for {type(value).__name__}")


@dataclass
class Deviation:
    """Corrupt ``role`` rewrites the value at ``point`` with ``fn``.

    ``occurrence`` selects which visit of the point is changed (all visits
    when None).  ``hits`` counts the visits that were changed.
    """

    role: Role
    point: str
    fn: Callable[[Any], Any] = perturb
    occurrence: int | None = None
    hits: int = 0
    seen: int = field(default=0, repr=False)

    def act(self, ctx, point: str, value):
        if point != self.point:
            return value
        self.seen += 1
        if self.occurrence is not None and self.seen - 1 != self.occurrence:
            return value
        self.hits += 1
        return self.fn(value)


@dataclass
class SlotFlip:
    """Interceptor flipping one bit of the ``index``-th message a party sends."""

    index: int
    byte: int = 0
    bit: int = 0
    fired: SendSlot | None = None

    def __call__(self, slot: SendSlot, payload: bytes) -> bytes:
        if slot.index != self.index:
            return payload
        self.fired = slot
        if not payload:
            return b"\x01"
        out = bytearray(payload)
        out[min(self.byte, len(out) - 1)] ^= 1 << self.bit
        return bytes(out)


@dataclass
class SlotDrop:
    """Interceptor replacing the ``index``-th message with an empty payload."""

    index: int
    fired: SendSlot | None = None

    def __call__(self, slot: SendSlot, payload: bytes) -> bytes:
        if slot.index != self.index:
            return payload
        self.fired = slot
        return b""
