"""Galois-ring extensions GR(2^ell, delta) = Z_{2^ell}[X]/(h(X)).

Elements are numpy uint64 arrays whose last axis holds the ``delta``
coefficients (lowest degree first).  ``h`` is a monic polynomial that is
irreducible modulo 2, so the lifts of distinct GF(2^delta) elements form an
exceptional set: their pairwise differences are units.  That is what lets
the proof system interpolate over a ring that is not a field.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .ring import Ring, get_ring


def _gf2_mod(a: int, b: int) -> int:
    db = b.bit_length()
    while a.bit_length() >= db:
        a ^= b << (a.bit_length() - db)
    return a


def is_irreducible_gf2(poly: int) -> bool:
    deg = poly.bit_length() - 1
    if deg < 1:
        return False
    for cand in range(2, 1 << (deg // 2 + 1)):
        if cand.bit_length() - 1 > deg // 2:
            break
        if _gf2_mod(poly, cand) == 0:
            return False
    return True


@lru_cache(maxsize=None)
def find_modulus(delta: int) -> int:
    """Smallest irreducible binary polynomial of degree ``delta`` (bitmask)."""
    if delta == 8:
        return 0x11B
    for low in range(1, 1 << delta, 2):
        poly = (1 << delta) | low
        if is_irreducible_gf2(poly):
            return poly
    raise ValueError(f"no irreducible polynomial of degree {delta}")


class GaloisRing:
    def __init__(self, ell: int, delta: int):
        if delta < 1:
            raise ValueError("extension degree must be positive")
        self.ell = ell
        self.delta = delta
        self.base: Ring = get_ring(ell)
        self.modulus = find_modulus(delta)
        # X^delta = -sum_{t in taps} X^t
        self.taps = [t for t in range(delta) if (self.modulus >> t) & 1]

    def __repr__(self) -> str:
        return f"GaloisRing(ell={self.ell}, delta={self.delta})"

    def _m(self, a):
        return a & self.base.mask if self.ell < 64 else a

    # construction
    def zeros(self, shape=()) -> np.ndarray:
        return np.zeros(tuple(shape) + (self.delta,), dtype=np.uint64)

    def one(self) -> np.ndarray:
        out = self.zeros()
        out[0] = 1
        return out

    def embed(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.uint64)
        out = self.zeros(x.shape)
        out[..., 0] = x
        return out

    def lift(self, k: int) -> np.ndarray:
        """Lift of the GF(2^delta) element whose bit pattern is ``k``."""
        if not 0 <= k < (1 << self.delta):
            raise ValueError("point outside the exceptional set")
        return np.array([(k >> t) & 1 for t in range(self.delta)], dtype=np.uint64)

    def lift_many(self, ks) -> np.ndarray:
        ks = np.asarray(ks, dtype=np.uint64)
        shifts = np.arange(self.delta, dtype=np.uint64)
        return (ks[..., None] >> shifts) & np.uint64(1)

    # arithmetic
    def add(self, a, b):
        return self._m(np.add(a, b, dtype=np.uint64))

    def sub(self, a, b):
        return self._m(np.subtract(a, b, dtype=np.uint64))

    def neg(self, a):
        return self._m(np.negative(np.asarray(a, dtype=np.uint64)))

    def smul(self, s, a):
        """Base-ring scalar(s) ``s`` times extension element(s) ``a``."""
        return self._m(np.multiply(np.asarray(s, dtype=np.uint64)[..., None], a, dtype=np.uint64))

    def reduce(self, wide: np.ndarray) -> np.ndarray:
        """Fold a product with ``2*delta - 1`` coefficients back to ``delta``."""
        d = self.delta
        wide = wide.copy()
        for k in range(wide.shape[-1] - 1, d - 1, -1):
            c = wide[..., k]
            for t in self.taps:
                wide[..., k - d + t] -= c
        return self._m(wide[..., :d])

    def mul(self, a, b):
        a = np.asarray(a, dtype=np.uint64)
        b = np.asarray(b, dtype=np.uint64)
        d = self.delta
        shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
        wide = np.zeros(shape + (2 * d - 1,), dtype=np.uint64)
        for i in range(d):
            wide[..., i:i + d] += a[..., i:i + 1] * b
        return self.reduce(wide)

    def dot(self, a, b, axis: int):
        """Sum over ``axis`` (counted on the element axes) of a * b."""
        return self._m(self.mul(a, b).sum(axis=axis, dtype=np.uint64))

    def contract(self, x, consts, subscripts: str):
        """Bilinear contraction of extension arrays via ``np.einsum``.

        ``subscripts`` names the element axes only (no limb axis), e.g.
        ``"pij,jk->pik"``; limb products are folded afterwards.
        """
        d = self.delta
        lhs, out = subscripts.split("->")
        s1, s2 = lhs.split(",")
        wide = None
        for u in range(d):
            part = np.einsum(f"{s1},{s2}z->{out}z", x[..., u], consts, dtype=np.uint64)
            if wide is None:
                wide = np.zeros(part.shape[:-1] + (2 * d - 1,), dtype=np.uint64)
            wide[..., u:u + d] += part
        return self.reduce(wide)

    def pow(self, a, e: int):
        result = np.broadcast_to(self.one(), np.shape(a)).copy()
        base = np.asarray(a, dtype=np.uint64)
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    def inv(self, a) -> np.ndarray:
        """Inverse of a unit: GF(2^delta) inverse, then Newton lifting."""
        a = np.asarray(a, dtype=np.uint64)
        low = GaloisRing(1, self.delta)
        x = low.pow(a & np.uint64(1), (1 << self.delta) - 2)
        if np.any(low.mul(x, a & np.uint64(1))[..., 0] != 1) or np.any(
                low.mul(x, a & np.uint64(1))[..., 1:]):
            raise ZeroDivisionError("element is not a unit")
        two = self.embed(2)
        bits = 1
        while bits < self.ell:
            x = self.mul(x, self.sub(two, self.mul(a, x)))
            bits *= 2
        return x

    def is_zero(self, a) -> np.ndarray:
        return ~np.any(np.asarray(a), axis=-1)

    @property
    def elem(self) -> tuple:
        return (self.delta,)

    def sum(self, a, axis):
        """Sum over element axes (negative values skip the limb axis)."""
        axes = axis if isinstance(axis, tuple) else (axis,)
        axes = tuple(x - 1 if x < 0 else x for x in axes)
        return self._m(np.sum(a, axis=axes, dtype=np.uint64))

    def nbytes(self, count: int) -> int:
        return self.base.nbytes(count * self.delta)

    def mat(self, c) -> np.ndarray:
        """Row u holds X^u * c, so x * c == x @ mat(c)."""
        c = np.asarray(c, dtype=np.uint64)
        rows = [c]
        for _ in range(1, self.delta):
            wide = np.zeros(c.shape[:-1] + (self.delta + 1,), dtype=np.uint64)
            wide[..., 1:] = rows[-1]
            rows.append(self.reduce(wide))
        return np.stack(rows, axis=-2)

    def lin(self, x, xs: str, c, cs: str, out: str):
        """``einsum`` of elements ``x`` against public constants ``c``.

        Subscripts name element axes only; products go through the
        multiplication matrices of the constants.
        """
        return self._m(_mm_einsum(np.asarray(x, dtype=np.uint64), xs + "#",
                                  self.mat(c), cs + "#@", out + "@"))

    def slin(self, s, ss: str, c, cs: str, out: str):
        """``einsum`` of base-ring scalars ``s`` against elements ``c``."""
        return self._m(_mm_einsum(np.asarray(s, dtype=np.uint64), ss,
                                  np.asarray(c, dtype=np.uint64), cs + "#", out + "#"))

    # polynomials over the extension: arrays (n_coeffs, delta)
    def poly_mul(self, p, q):
        out = self.zeros((p.shape[0] + q.shape[0] - 1,))
        for i in range(p.shape[0]):
            out[i:i + q.shape[0]] = self.add(out[i:i + q.shape[0]], self.mul(p[i], q))
        return out

    def poly_eval(self, coeffs, x):
        """Horner evaluation; ``coeffs`` has shape (..., n, delta)."""
        acc = coeffs[..., -1, :]
        for h in range(coeffs.shape[-2] - 2, -1, -1):
            acc = self.add(self.mul(acc, x), coeffs[..., h, :])
        return acc

    # randomness and wire form
    def sample(self, prf, key: str, label: str, shape) -> np.ndarray:
        shape = tuple(shape) + (self.delta,)
        return prf.sample(key, label, shape, self.base)

    def random(self, rng: np.random.Generator, shape) -> np.ndarray:
        return self.base.random(rng, tuple(shape) + (self.delta,))

    def to_bytes(self, a) -> bytes:
        return self.base.to_bytes(np.ascontiguousarray(a))

    def from_bytes(self, data: bytes, shape) -> np.ndarray:
        return self.base.from_bytes(data, tuple(shape) + (self.delta,))

    def from_seed(self, seed: bytes, label: str, shape) -> np.ndarray:
        from .crypto import seeded_sample
        return seeded_sample(seed, label, tuple(shape) + (self.delta,), self.base)


def _mm_einsum(x, xs: str, y, ys: str, out: str):
    """Two-operand ``einsum`` without repeated-index sums, as one batched matmul."""
    batch = [ch for ch in out if ch in xs and ch in ys]
    left = [ch for ch in out if ch in xs and ch not in ys]
    right = [ch for ch in out if ch in ys and ch not in xs]
    inner = [ch for ch in xs if ch in ys and ch not in out]
    for arr_subs, name in ((xs, "x"), (ys, "y")):
        extra = [ch for ch in arr_subs if ch not in out and ch not in inner]
        if extra:
            raise ValueError(f"unsupported summed axis in {name}: {extra}")
    size = {}
    for subs, arr in ((xs, x), (ys, y)):
        for ch, n in zip(subs, arr.shape):
            size[ch] = max(size.get(ch, 1), n)

    def arrange(arr, subs, mid, last):
        order = batch + mid + last
        arr = np.expand_dims(arr, tuple(range(arr.ndim, arr.ndim + sum(ch not in subs for ch in order))))
        have = list(subs) + [ch for ch in order if ch not in subs]
        arr = arr.transpose([have.index(ch) for ch in order])
        shape = [size[ch] for ch in batch]
        arr = np.broadcast_to(arr, [size[ch] if ch in subs or ch in batch else 1 for ch in order])
        n_mid = int(np.prod([size[ch] if ch in subs else 1 for ch in mid], dtype=np.int64))
        n_last = int(np.prod([size[ch] if ch in subs else 1 for ch in last], dtype=np.int64))
        return arr.reshape(shape + [n_mid, n_last])

    a = arrange(x, xs, left, inner)
    b = arrange(y, ys, inner, right)
    res = np.matmul(a, b)
    res = res.reshape([size[ch] for ch in batch + left + right])
    have = batch + left + right
    return res.transpose([have.index(ch) for ch in out])


class BinaryField:
    """GF(2^delta) for delta <= 8 with uint8 elements and a full product table.

    Same interface as :class:`GaloisRing` (the boolean case ell = 1) but
    each element is a single byte holding its coefficient bits, so sums are
    XORs and products are table lookups.
    """

    def __init__(self, delta: int):
        if not 1 <= delta <= 8:
            raise ValueError("table field needs 1 <= delta <= 8")
        self.ell = 1
        self.delta = delta
        self.base: Ring = get_ring(1)
        self.modulus = find_modulus(delta)
        size = 1 << delta
        a = np.arange(size, dtype=np.int64)
        wide = np.zeros((size, size), dtype=np.int64)
        for t in range(delta):
            wide ^= ((a[None, :] >> t) & 1) * (a[:, None] << t)
        for k in range(2 * delta - 2, delta - 1, -1):
            hit = (wide >> k) & 1
            wide ^= hit * (self.modulus << (k - delta))
        self.table = wide.astype(np.uint8)
        self.inv_table = np.zeros(size, dtype=np.uint8)
        rows, cols = np.nonzero(self.table == 1)
        self.inv_table[rows] = cols
        self.mask = size - 1

    def __repr__(self) -> str:
        return f"BinaryField(delta={self.delta})"

    elem = ()

    def zeros(self, shape=()) -> np.ndarray:
        return np.zeros(tuple(shape), dtype=np.uint8)

    def one(self) -> np.ndarray:
        return np.uint8(1)

    def embed(self, x) -> np.ndarray:
        return (np.asarray(x) & 1).astype(np.uint8)

    def lift(self, k: int) -> np.ndarray:
        if not 0 <= k <= self.mask:
            raise ValueError("point outside the exceptional set")
        return np.uint8(k)

    def lift_many(self, ks) -> np.ndarray:
        ks = np.asarray(ks)
        if np.any((ks < 0) | (ks > self.mask)):
            raise ValueError("point outside the exceptional set")
        return ks.astype(np.uint8)

    def add(self, a, b):
        return np.bitwise_xor(a, b, dtype=np.uint8)

    sub = add

    def neg(self, a):
        return np.asarray(a, dtype=np.uint8)

    def smul(self, s, a):
        return np.multiply((np.asarray(s) & 1).astype(np.uint8), a, dtype=np.uint8)

    def mul(self, a, b):
        return self.table[np.asarray(a, dtype=np.uint8), np.asarray(b, dtype=np.uint8)]

    def sum(self, a, axis):
        axes = axis if isinstance(axis, tuple) else (axis,)
        out = np.asarray(a, dtype=np.uint8)
        for ax in sorted((x % out.ndim for x in axes), reverse=True):
            out = np.bitwise_xor.reduce(out, axis=ax)
        return out

    def dot(self, a, b, axis: int):
        return self.sum(self.mul(a, b), axis)

    def pow(self, a, e: int):
        result = np.ones(np.shape(a), dtype=np.uint8)
        base = np.asarray(a, dtype=np.uint8)
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    def inv(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=np.uint8)
        if np.any(a == 0):
            raise ZeroDivisionError("element is not a unit")
        return self.inv_table[a]

    def is_zero(self, a) -> np.ndarray:
        return np.asarray(a) == 0

    def sample(self, prf, key: str, label: str, shape) -> np.ndarray:
        n = int(np.prod(shape, dtype=np.int64))
        raw = np.frombuffer(prf.bytes(key, label, n), dtype=np.uint8)
        return (raw & self.mask).reshape(tuple(shape))

    def random(self, rng: np.random.Generator, shape) -> np.ndarray:
        return rng.integers(0, self.mask + 1, size=tuple(shape), dtype=np.uint8)

    def from_seed(self, seed: bytes, label: str, shape) -> np.ndarray:
        from .crypto import seeded_bytes
        n = int(np.prod(shape, dtype=np.int64))
        raw = np.frombuffer(seeded_bytes(seed, label, n), dtype=np.uint8)
        return (raw & self.mask).reshape(tuple(shape))

    def nbytes(self, count: int) -> int:
        return count

    def _contract(self, x, xs, c, cs, out, op):
        letters = "".join(dict.fromkeys(xs + cs))

        def expand(arr, subs):
            arr = np.asarray(arr)
            order = [subs.index(ch) for ch in letters if ch in subs]
            arr = arr.transpose(order)
            dims = iter(arr.shape)
            return arr.reshape([next(dims) if ch in subs else 1 for ch in letters])

        prod = op(expand(x, xs), expand(c, cs))
        summed = tuple(i for i, ch in enumerate(letters) if ch not in out)
        if summed:
            prod = self.sum(prod, summed)
        kept = [ch for ch in letters if ch in out]
        return prod.transpose([kept.index(ch) for ch in out])

    def lin(self, x, xs: str, c, cs: str, out: str):
        return self._contract(x, xs, c, cs, out, self.mul)

    def slin(self, s, ss: str, c, cs: str, out: str):
        return self._contract(s, ss, c, cs, out, self.smul)

    def to_bytes(self, a) -> bytes:
        return np.ascontiguousarray(a, dtype=np.uint8).tobytes()

    def from_bytes(self, data: bytes, shape) -> np.ndarray:
        n = int(np.prod(shape, dtype=np.int64))
        if len(data) != n:
            raise ValueError("wrong field element byte length")
        out = np.frombuffer(data, dtype=np.uint8).reshape(tuple(shape)).copy()
        if np.any(out > self.mask):
            raise ValueError("field element out of range")
        return out


@lru_cache(maxsize=None)
def get_galois(ell: int, delta: int) -> GaloisRing:
    return GaloisRing(ell, delta)


@lru_cache(maxsize=None)
def get_extension(ell: int, delta: int):
    """Fastest available representation of GR(2^ell, delta)."""
    if ell == 1 and delta <= 8:
        return BinaryField(delta)
    return GaloisRing(ell, delta)
