"""Arithmetic in Z_{2^ell}, fixed-point encoding and shift helpers.

Scalars are wrapped in :class:`RingElem`; protocol code works on numpy
``uint64`` arrays whose entries are kept reduced modulo ``2**ell``.  The
boolean ring is simply ``ell == 1``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

SUPPORTED_ELL = (1, 8, 16, 32, 64)
_WIRE_DTYPES = {8: "<u1", 16: "<u2", 32: "<u4", 64: "<u8"}


class RangeError(ValueError):
    """Raised when a rational does not fit the fixed-point range."""


class Ring:
    """The ring Z_{2^ell} acting on uint64 arrays."""

    def __init__(self, ell: int):
        if not 1 <= ell <= 64:
            raise ValueError(f"unsupported ring width {ell}")
        self.ell = ell
        self.modulus = 1 << ell
        self.mask = np.uint64(self.modulus - 1)

    def __repr__(self) -> str:
        return f"Ring({self.ell})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Ring) and other.ell == self.ell

    def __hash__(self) -> int:
        return hash(("Ring", self.ell))

    def wrap(self, x) -> np.ndarray:
        """Reduce anything array-like into canonical uint64 form."""
        if isinstance(x, np.ndarray) and x.dtype == np.uint64:
            arr = x
        elif isinstance(x, np.ndarray) and x.dtype.kind == "i":
            arr = x.astype(np.int64).view(np.uint64)
        elif isinstance(x, np.ndarray) and x.dtype.kind in "ub":
            arr = x.astype(np.uint64)
        else:
            arr = np.asarray(
                [int(v) % (1 << 64) for v in np.ravel(np.asarray(x, dtype=object))],
                dtype=np.uint64,
            ).reshape(np.shape(x))
        if self.ell < 64:
            arr = arr & self.mask
        return arr

    def zeros(self, shape) -> np.ndarray:
        return np.zeros(shape, dtype=np.uint64)

    def random(self, rng: np.random.Generator, shape) -> np.ndarray:
        raw = rng.integers(0, 1 << 64, size=shape, dtype=np.uint64)
        return raw & self.mask if self.ell < 64 else raw

    # arithmetic; numpy uint64 wraps modulo 2^64 so masking is all we need
    def add(self, a, b):
        return self._m(np.add(a, b, dtype=np.uint64))

    def sub(self, a, b):
        return self._m(np.subtract(a, b, dtype=np.uint64))

    def mul(self, a, b):
        return self._m(np.multiply(a, b, dtype=np.uint64))

    def neg(self, a):
        return self._m(np.negative(np.asarray(a, dtype=np.uint64)))

    def scale(self, c: int, a):
        return self.mul(np.uint64(c % (1 << 64)), a)

    def _m(self, x):
        return x & self.mask if self.ell < 64 else x

    def to_signed(self, a) -> np.ndarray:
        """Two's-complement interpretation as int64."""
        a = np.asarray(a, dtype=np.uint64)
        if self.ell == 64:
            return a.view(np.int64)
        s = a.astype(np.int64)
        return np.where(s >= (1 << (self.ell - 1)), s - (1 << self.ell), s)

    def msb(self, a) -> np.ndarray:
        return (np.asarray(a, dtype=np.uint64) >> np.uint64(self.ell - 1)) & np.uint64(1)

    def bits(self, a) -> np.ndarray:
        """Bit decomposition; result has a trailing axis of length ell, LSB first."""
        a = np.asarray(a, dtype=np.uint64)
        shifts = np.arange(self.ell, dtype=np.uint64)
        return (a[..., None] >> shifts) & np.uint64(1)

    def from_bits(self, bits) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.uint64)
        shifts = np.arange(bits.shape[-1], dtype=np.uint64)
        return self._m(np.bitwise_or.reduce(bits << shifts, axis=-1))

    # wire form
    def nbytes(self, count: int) -> int:
        if self.ell == 1:
            return (count + 7) // 8
        return count * _wire_width(self.ell)

    def to_bytes(self, a) -> bytes:
        a = np.ascontiguousarray(a, dtype=np.uint64).ravel()
        if self.ell == 1:
            return np.packbits(a.astype(np.uint8), bitorder="little").tobytes()
        if self.ell in _WIRE_DTYPES:
            return a.astype(_WIRE_DTYPES[self.ell]).tobytes()
        return a.astype("<u8").tobytes()

    def from_bytes(self, data: bytes, shape) -> np.ndarray:
        count = int(np.prod(shape, dtype=np.int64))
        if len(data) != self.nbytes(count):
            raise ValueError(f"expected {self.nbytes(count)} bytes, got {len(data)}")
        if self.ell == 1:
            raw = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
            if raw[count:].any():
                raise ValueError("nonzero padding bits")
            out = raw[:count].astype(np.uint64)
        else:
            dt = _WIRE_DTYPES.get(self.ell, "<u8")
            out = np.frombuffer(data, dtype=dt).astype(np.uint64)
            if self.ell not in _WIRE_DTYPES and (out >> np.uint64(self.ell)).any():
                raise ValueError("element out of range")
        return out.reshape(shape)


def _wire_width(ell: int) -> int:
    return {8: 1, 16: 2, 32: 4, 64: 8}.get(ell, 8)


@lru_cache(maxsize=None)
def get_ring(ell: int) -> Ring:
    return Ring(ell)


BOOL = get_ring(1)


@dataclass(frozen=True)
class RingElem:
    """A single element of Z_{2^ell}."""

    value: int
    ell: int = 64

    def __post_init__(self):
        object.__setattr__(self, "value", int(self.value) % (1 << self.ell))

    def _coerce(self, other) -> int:
        if isinstance(other, RingElem):
            if other.ell != self.ell:
                raise ValueError("ring width mismatch")
            return other.value
        return int(other)

    def __add__(self, other):
        return RingElem(self.value + self._coerce(other), self.ell)

    def __sub__(self, other):
        return RingElem(self.value - self._coerce(other), self.ell)

    def __mul__(self, other):
        return RingElem(self.value * self._coerce(other), self.ell)

    __radd__ = __add__
    __rmul__ = __mul__

    def __rsub__(self, other):
        return RingElem(self._coerce(other) - self.value, self.ell)

    def __neg__(self):
        return RingElem(-self.value, self.ell)

    def __int__(self):
        return self.value

    def signed(self) -> int:
        half = 1 << (self.ell - 1)
        return self.value - (1 << self.ell) if self.value >= half else self.value

    def to_bytes(self) -> bytes:
        return get_ring(self.ell).to_bytes(np.array([self.value], dtype=np.uint64))


@dataclass(frozen=True)
class FixedPoint:
    raw: RingElem
    d: int = 13

    def decode(self) -> Fraction:
        return Fraction(self.raw.signed(), 1 << self.d)

    def __float__(self):
        return self.raw.signed() / (1 << self.d)


def _round_half_away(q: Fraction) -> int:
    n = abs(q.numerator) * 2 + q.denominator
    mag = n // (2 * q.denominator)
    return mag if q >= 0 else -mag


def encode_fixed(q, d: int = 13, ell: int = 64) -> FixedPoint:
    """Encode a rational as two's-complement fixed point with d fraction bits."""
    scaled = _round_half_away(Fraction(q) * (1 << d))
    if abs(scaled) >= 1 << (ell - 1):
        raise RangeError(f"{q} does not fit in {ell} bits with d={d}")
    return FixedPoint(RingElem(scaled, ell), d)


def decode_fixed(x: FixedPoint) -> Fraction:
    return x.decode()


def arith_shift_trunc(v: RingElem, d: int) -> RingElem:
    return RingElem(v.signed() >> d, v.ell)


def logical_split(r: RingElem, d: int) -> tuple[RingElem, RingElem]:
    return RingElem(r.value >> d, r.ell), RingElem(r.value & ((1 << d) - 1), r.ell)


# array forms used by the protocols

def encode_array(x, d: int = 13, ring: Ring = get_ring(64)) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    scaled = np.sign(x) * np.floor(np.abs(x) * float(1 << d) + 0.5)
    if np.any(np.abs(scaled) >= float(1 << (ring.ell - 1))):
        raise RangeError("value out of fixed-point range")
    return ring.wrap(scaled.astype(np.int64))


def decode_array(a, d: int = 13, ring: Ring = get_ring(64)) -> np.ndarray:
    return ring.to_signed(a).astype(np.float64) / float(1 << d)


def ashr_array(a, d: int, ring: Ring = get_ring(64)) -> np.ndarray:
    """Sign-preserving right shift of each element."""
    return ring.wrap(ring.to_signed(a) >> d)
