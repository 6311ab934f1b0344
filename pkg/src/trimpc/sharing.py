"""Share records and the local algebra on them.

Component order follows the role table used throughout the package:

======  ===========  ===========  ==========
role    c0           c1           c2
======  ===========  ===========  ==========
P0      [alpha]_1    [alpha]_2    beta+gamma
P1      [alpha]_1    beta         gamma
P2      [alpha]_2    beta         gamma
======  ===========  ===========  ==========

with ``beta = v + alpha`` and ``alpha = [alpha]_1 + [alpha]_2``.  Every
component combines linearly, so addition and public scaling are local.
Boolean shares are the same record over the ring with ``ell == 1``.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .ring import Ring, get_ring


class Role(IntEnum):
    P0 = 0
    P1 = 1
    P2 = 2


SERVERS = (Role.P0, Role.P1, Role.P2)
EVALUATORS = (Role.P1, Role.P2)


def other_evaluator(j: Role) -> Role:
    return Role.P2 if j == Role.P1 else Role.P1


def _arr(x) -> np.ndarray:
    return np.asarray(x, dtype=np.uint64)


@dataclass
class RssShare:
    """One party's view of a value under the three-component sharing."""

    role: Role
    ring: Ring
    c0: np.ndarray
    c1: np.ndarray
    c2: np.ndarray

    def __post_init__(self):
        self.role = Role(self.role)
        self.c0, self.c1, self.c2 = _arr(self.c0), _arr(self.c1), _arr(self.c2)

    @property
    def shape(self):
        return self.c0.shape

    # named views; raise when the holder does not own the component
    @property
    def beta(self) -> np.ndarray:
        if self.role == Role.P0:
            raise AttributeError("P0 does not hold beta")
        return self.c1

    @property
    def gamma(self) -> np.ndarray:
        if self.role == Role.P0:
            raise AttributeError("P0 does not hold gamma")
        return self.c2

    @property
    def beta_plus_gamma(self) -> np.ndarray:
        if self.role != Role.P0:
            raise AttributeError("only P0 holds beta+gamma")
        return self.c2

    def alpha_share(self, j: Role) -> np.ndarray:
        """[alpha]_j for j in {P1, P2}."""
        if self.role == Role.P0:
            return self.c0 if j == Role.P1 else self.c1
        if self.role != j:
            raise AttributeError(f"{self.role.name} does not hold [alpha]_{int(j)}")
        return self.c0

    @property
    def alpha(self) -> np.ndarray:
        if self.role != Role.P0:
            raise AttributeError("only P0 holds alpha in full")
        return self.ring.add(self.c0, self.c1)

    def _check(self, other: "RssShare"):
        if other.role != self.role or other.ring != self.ring:
            raise ValueError("share role or ring mismatch")

    def __add__(self, other: "RssShare") -> "RssShare":
        self._check(other)
        r = self.ring
        return RssShare(self.role, r, r.add(self.c0, other.c0), r.add(self.c1, other.c1),
                        r.add(self.c2, other.c2))

    def __sub__(self, other: "RssShare") -> "RssShare":
        self._check(other)
        r = self.ring
        return RssShare(self.role, r, r.sub(self.c0, other.c0), r.sub(self.c1, other.c1),
                        r.sub(self.c2, other.c2))

    def __neg__(self) -> "RssShare":
        r = self.ring
        return RssShare(self.role, r, r.neg(self.c0), r.neg(self.c1), r.neg(self.c2))

    __xor__ = __add__

    def scale(self, c) -> "RssShare":
        """Multiply by a public constant (scalar or array broadcastable to the shape)."""
        r = self.ring
        c = r.wrap(c)
        return RssShare(self.role, r, r.mul(self.c0, c), r.mul(self.c1, c), r.mul(self.c2, c))

    def add_const(self, c) -> "RssShare":
        r = self.ring
        c = r.wrap(c)
        if self.role == Role.P0:
            return RssShare(self.role, r, np.broadcast_to(self.c0, np.broadcast(self.c0, c).shape).copy(),
                            np.broadcast_to(self.c1, np.broadcast(self.c1, c).shape).copy(),
                            r.add(self.c2, c))
        c2 = np.broadcast_to(self.c2, np.broadcast(self.c2, c).shape).copy()
        c0 = np.broadcast_to(self.c0, c2.shape).copy()
        return RssShare(self.role, r, c0, r.add(self.c1, c), c2)

    def map(self, fn) -> "RssShare":
        """Apply an index/reshape function to every component."""
        return RssShare(self.role, self.ring, fn(self.c0), fn(self.c1), fn(self.c2))

    def __getitem__(self, idx) -> "RssShare":
        return self.map(lambda a: a[idx])

    def reshape(self, *shape) -> "RssShare":
        return self.map(lambda a: a.reshape(*shape))

    def to_bytes(self) -> bytes:
        r = self.ring
        return bytes([int(self.role)]) + b"".join(r.to_bytes(c) for c in (self.c0, self.c1, self.c2))

    @classmethod
    def from_bytes(cls, data: bytes, ring: Ring, shape) -> "RssShare":
        role = Role(data[0])
        n = ring.nbytes(int(np.prod(shape, dtype=np.int64)))
        parts = [ring.from_bytes(data[1 + i * n:1 + (i + 1) * n], shape) for i in range(3)]
        if len(data) != 1 + 3 * n:
            raise ValueError("bad share encoding length")
        return cls(role, ring, *parts)


BoolRssShare = RssShare


def concat(shares, axis: int = 0) -> RssShare:
    first = shares[0]
    for s in shares[1:]:
        first._check(s)
    return RssShare(first.role, first.ring,
                    *(np.concatenate([getattr(s, c) for s in shares], axis=axis)
                      for c in ("c0", "c1", "c2")))


def stack(shares, axis: int = 0) -> RssShare:
    first = shares[0]
    return RssShare(first.role, first.ring,
                    *(np.stack([getattr(s, c) for s in shares], axis=axis)
                      for c in ("c0", "c1", "c2")))


@dataclass
class AngleShare:
    """Masked sharing: P0 holds ([lam]_1, [lam]_2); Pj holds ([lam]_j, v + lam)."""

    role: Role
    ring: Ring
    c0: np.ndarray
    c1: np.ndarray

    def __post_init__(self):
        self.role = Role(self.role)
        self.c0, self.c1 = _arr(self.c0), _arr(self.c1)

    @property
    def shape(self):
        return self.c0.shape

    def lam_share(self, j: Role) -> np.ndarray:
        if self.role == Role.P0:
            return self.c0 if j == Role.P1 else self.c1
        if self.role != j:
            raise AttributeError("missing lambda share")
        return self.c0

    @property
    def masked(self) -> np.ndarray:
        if self.role == Role.P0:
            raise AttributeError("P0 does not hold the masked value")
        return self.c1


@dataclass
class SqShare:
    """Additive sharing between P1 and P2."""

    holder: Role
    ring: Ring
    part: np.ndarray

    def __post_init__(self):
        if self.holder not in EVALUATORS:
            raise ValueError("additive shares are held by P1 and P2 only")
        self.part = _arr(self.part)


def make_rss(v, a1, a2, g, ring: Ring | None = None):
    """Build all three parties' shares from explicit randomness."""
    ring = ring or get_ring(64)
    v, a1, a2, g = (ring.wrap(x) for x in (v, a1, a2, g))
    beta = ring.add(ring.add(v, a1), a2)
    return (RssShare(Role.P0, ring, a1, a2, ring.add(beta, g)),
            RssShare(Role.P1, ring, a1, beta, g),
            RssShare(Role.P2, ring, a2, beta, g))


def open_from_components(beta, a1, a2, ring: Ring | None = None):
    ring = ring or get_ring(64)
    return ring.sub(ring.sub(ring.wrap(beta), ring.wrap(a1)), ring.wrap(a2))


def reconstruct(shares) -> np.ndarray:
    """Test helper: recover v from the three parties' records and check consistency."""
    by_role = {s.role: s for s in shares}
    s0, s1, s2 = by_role[Role.P0], by_role[Role.P1], by_role[Role.P2]
    r = s0.ring
    if not (np.array_equal(s0.c0, s1.c0) and np.array_equal(s0.c1, s2.c0)
            and np.array_equal(s1.c1, s2.c1) and np.array_equal(s1.c2, s2.c2)
            and np.array_equal(s0.c2, r.add(s1.c1, s1.c2))):
        raise ValueError("inconsistent shares")
    return r.sub(r.sub(s1.c1, s0.c0), s0.c1)


def public_share(role: Role, ring: Ring, c) -> RssShare:
    """Sharing of a public constant: alpha = gamma = 0, beta = c."""
    c = ring.wrap(c)
    z = np.zeros_like(c)
    if role == Role.P0:
        return RssShare(role, ring, z, z.copy(), c)
    return RssShare(role, ring, z, c, z.copy())


def linear_combine(c0, terms, ring: Ring | None = None, role: Role | None = None) -> RssShare:
    """c0 + sum(coeff * share); ``ring``/``role`` are needed only when terms is empty."""
    if terms:
        role = terms[0][1].role
        ring = terms[0][1].ring
        acc = None
        for coeff, share in terms:
            if share.role != role:
                raise ValueError("role mismatch in linear combination")
            t = share.scale(coeff)
            acc = t if acc is None else acc + t
        return acc.add_const(c0)
    if ring is None or role is None:
        raise ValueError("ring and role required for a constant")
    return public_share(role, ring, c0)


_PAIRS = {
    frozenset((Role.P1, Role.P2)): "12",
    frozenset((Role.P0, Role.P1)): "01",
    frozenset((Role.P0, Role.P2)): "02",
}


def jsh_table_share(role: Role, pair, v, r, ring: Ring) -> RssShare:
    """One party's share of a value known to ``pair`` in preprocessing.

    ``r`` is common randomness known to all three parties; ``v`` may be None
    for the party outside the pair.
    """
    kind = _PAIRS[frozenset(pair)]
    r = ring.wrap(r)
    z = np.zeros_like(r)
    if role not in pair:
        return RssShare(role, ring, z, z.copy(), r)
    v = ring.wrap(v)
    nv = ring.neg(v)
    if kind == "12":
        return RssShare(role, ring, z, v, ring.sub(r, v))
    if kind == "01":
        return RssShare(role, ring, nv, z, r)
    if role == Role.P0:
        return RssShare(role, ring, z, nv, r)
    return RssShare(role, ring, nv, z, r)


def jsh_noninteractive_assign(pair, v, r, ring: Ring | None = None):
    """All three parties' shares of ``v`` per the joint-sharing assignment table."""
    ring = ring or get_ring(64)
    v, r = ring.wrap(v), ring.wrap(r)
    return tuple(jsh_table_share(role, pair, v, r, ring) for role in SERVERS)
