"""Dot products, truncation, comparison and activations built on layer1."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .context import Party
from .core import jsh12_gamma, jsh12_online, pi_sh
from .layer1 import (MultPrep, _prod, bit2a_online, bit2a_prep, bitext_online, bitext_prep,
                     mult_online, mult_prep, pi_and)
from .ring import Ring, ashr_array, encode_array
from .sharing import Role, RssShare, concat


def pi_dotp(ctx: Party, x: RssShare, y: RssShare) -> RssShare:
    """Inner products over the last axis; online cost does not depend on its length."""
    return mult_online(ctx, x, y, mult_prep(ctx, x, y, "dot"))


# ---------------------------------------------------------------------------
# truncation pairs

@dataclass
class TruncPair:
    """Random r held additively by P1 (R1) and P2 (R2), P0 knows r; and a sharing of r shifted by d.

    ``r_part`` is R_j at P_j and r itself at P0.
    """

    r_part: np.ndarray
    rd: RssShare
    d: int


def _low(ring: Ring, a, d: int) -> np.ndarray:
    return ring.wrap(a) & np.uint64((1 << d) - 1)


def pi_truncpair(ctx: Party, shape, d: int | None = None, ring: Ring | None = None) -> TruncPair:
    """Preprocessing only: P0 shares the shifted mask and P1, P2 check it against their parts of r.

    The low-bit shares of P1 and P2 may carry into bit d.  P0 knows the
    carry and shares ``ashr(r) + 1 - carry``, while P1 lowers its low-bit
    share by 2^d, so the pair satisfies r = 2^d r^d + r_d exactly modulo
    2^ell.  The result is off from the true shift by at most one.
    """
    ring = ring or ctx.ring
    d = ctx.config.d if d is None else d
    shape = tuple(shape)
    me = ctx.role
    with ctx.prep():
        lab = ctx.op("trunc")
        r1 = ctx.rand("k01", f"{lab}/R", shape, ring) if me != Role.P2 else None
        r2 = ctx.rand("k02", f"{lab}/R", shape, ring) if me != Role.P1 else None
        rd_val = None
        if me == Role.P0:
            r = ring.add(r1, r2)
            carry = (_low(ring, r1, d) + _low(ring, r2, d)) >> np.uint64(d)
            rd_val = ring.sub(ring.add(ashr_array(r, d, ring), 1), carry)
            rd_val = ctx.deviate("trunc.rd", rd_val)
        rd = pi_sh(ctx, Role.P0, rd_val, shape, ring)
        scale = 1 << d
        u = v = None
        if me == Role.P1:
            rd1 = ring.sub(rd.c1, rd.c0)
            low1 = ring.sub(_low(ring, r1, d), scale)
            u = ring.sub(ring.sub(r1, ring.scale(scale, rd1)), low1)
            u = ctx.deviate("trunc.u", u)
        elif me == Role.P2:
            rd2 = ring.neg(rd.c0)
            v = ring.sub(ring.add(ring.scale(scale, rd2), _low(ring, r2, d)), r2)
        ctx.expect_equal(Role.P1, Role.P2, u if me == Role.P1 else v, f"{lab}/uv", ring)
    part = {Role.P0: ring.add(r1, r2) if me == Role.P0 else None, Role.P1: r1, Role.P2: r2}[me]
    return TruncPair(part, rd, d)


# ---------------------------------------------------------------------------
# truncated products

@dataclass
class DotTrPrep:
    mult: MultPrep
    pair: TruncPair
    gamma: np.ndarray | None


def dotp_tr_prep(ctx: Party, x: RssShare, y: RssShare, kind: str = "dot",
                 shift: int | None = None) -> DotTrPrep:
    """Product preprocessing plus one truncation pair per output."""
    mp = mult_prep(ctx, x, y, kind)
    pair = pi_truncpair(ctx, mp.out.shape, shift, x.ring)
    with ctx.prep():
        gamma = jsh12_gamma(ctx, mp.out.shape, x.ring)
    return DotTrPrep(mp, pair, gamma)


def dotp_tr_online(ctx: Party, x: RssShare, y: RssShare, prep: DotTrPrep) -> RssShare:
    """P1 and P2 open z - r in one round, shift it and jointly share the result.

    P0 vouches for z - r by hash, and P1's message towards P0 inside the
    joint sharing rides along with that round.
    """
    ring, me = x.ring, ctx.role
    mp, pair = prep.mult, prep.pair
    kind = mp.kind
    lab = ctx.op("dotptr.on")
    shape = mp.out.shape
    if me == Role.P0:
        ax, ay = ring.add(x.c0, x.c1), ring.add(y.c0, y.c1)
        star = ring.add(ring.sub(ring.neg(_prod(ring, kind, x.c2, ay)), _prod(ring, kind, ax, y.c2)),
                        ring.sub(ring.add(ring.scale(2, mp.gamma_xy), mp.chi), pair.r_part))
        star = ctx.deviate("dotptr.star", star)
        ctx.round()
        for j in (Role.P1, Role.P2):
            ctx.expect_equal(Role.P0, j, star, f"{lab}/star", ring)
        zr = jsh12_online(ctx, None, prep.gamma, shape, ring)
        ctx.count_gates(int(np.prod(shape, dtype=np.int64)))
        return zr + pair.rd
    j = int(me)
    bx, by = x.c1, y.c1
    bxy = _prod(ring, kind, bx, by)
    part = ring.add(ring.sub(ring.sub(ring.scale(j - 1, bxy), _prod(ring, kind, bx, y.c0)),
                             _prod(ring, kind, x.c0, by)), ring.sub(mp.gamma_xy, pair.r_part))
    peer = Role.P2 if me == Role.P1 else Role.P1
    ctx.send(peer, ctx.deviate("dotptr.zr", part), ring)
    ctx.round()
    opened = ring.add(part, ctx.recv(peer, shape, ring))
    check = ring.add(ring.sub(opened, bxy), mp.psi)
    for r in (Role.P1, Role.P2):
        ctx.expect_equal(Role.P0, r, check if r == me else None, f"{lab}/star", ring)
    shifted = ashr_array(opened, pair.d, ring)
    zr = jsh12_online(ctx, shifted, prep.gamma, shape, ring)
    ctx.count_gates(int(np.prod(shape, dtype=np.int64)))
    return zr + pair.rd


def pi_dotp_tr(ctx: Party, x: RssShare, y: RssShare, shift: int | None = None) -> RssShare:
    """Inner product over the last axis, shifted right by ``shift`` (default d) bits."""
    return dotp_tr_online(ctx, x, y, dotp_tr_prep(ctx, x, y, "dot", shift))


def pi_matmul_tr(ctx: Party, x: RssShare, y: RssShare, shift: int | None = None) -> RssShare:
    """Matrix product with truncation; each output costs what one truncated dot product costs."""
    return dotp_tr_online(ctx, x, y, dotp_tr_prep(ctx, x, y, "mm", shift))


def pi_trunc(ctx: Party, x: RssShare, shift: int | None = None) -> RssShare:
    """Truncate an existing sharing by multiplying with the public one."""
    one = _public_ones(ctx, x.shape + (1,), x.ring)
    return pi_dotp_tr(ctx, x.reshape(*x.shape, 1), one, shift)


def _public_ones(ctx: Party, shape, ring: Ring) -> RssShare:
    ones = np.ones(shape, dtype=np.uint64)
    z = np.zeros(shape, dtype=np.uint64)
    if ctx.role == Role.P0:
        return RssShare(ctx.role, ring, z, z.copy(), ones)
    return RssShare(ctx.role, ring, z, ones, z.copy())


# ---------------------------------------------------------------------------
# comparison and activations

def _bits(ctx: Party, v: RssShare, variant: str | None) -> RssShare:
    return bitext_online(ctx, v, bitext_prep(ctx, v, variant))


def _to_arith(ctx: Party, b: RssShare, ring: Ring) -> RssShare:
    return bit2a_online(ctx, b, bit2a_prep(ctx, b, ring))


def pi_compare(ctx: Party, x: RssShare, y: RssShare, variant: str | None = None) -> RssShare:
    """Boolean sharing of x < y for fixed-point operands whose difference does not wrap."""
    return _bits(ctx, x - y, variant)


def pi_relu(ctx: Party, v: RssShare, variant: str | None = None) -> RssShare:
    """max(0, v) as (1 - sign bit) times v."""
    nb = _bits(ctx, v, variant).add_const(1)
    nr = _to_arith(ctx, nb, v.ring)
    return mult_online(ctx, nr, v, mult_prep(ctx, nr, v, "mul"))


def pi_sig(ctx: Party, v: RssShare, variant: str | None = None) -> RssShare:
    """Piecewise sigmoid: 0 below -1/2, v + 1/2 in between, 1 above 1/2."""
    ring, d = v.ring, ctx.config.d
    half = int(encode_array(0.5, d, ring))
    one = 1 << d
    shape = v.shape
    both = concat([v.add_const(half).reshape(-1), v.add_const(ring.neg(half)).reshape(-1)])
    bits = _bits(ctx, both, variant)
    n = int(np.prod(shape, dtype=np.int64))
    b1, b2 = bits[:n], bits[n:]
    mid = pi_and(ctx, b1.add_const(1), b2)
    arith = _to_arith(ctx, concat([mid, b2.add_const(1)]), ring)
    mid_r, upper = arith[:n], arith[n:]
    shifted = v.add_const(half).reshape(-1)
    prod = mult_online(ctx, mid_r, shifted, mult_prep(ctx, mid_r, shifted, "mul"))
    return (prod + upper.scale(one)).reshape(*shape)
