"""Multiplication, boolean circuits over shares, bit extraction and Bit2A.

Every protocol is split into a preprocessing part, which only touches the
masks (alpha, gamma) and may therefore run before the inputs exist, and an
online part.  The ``pi_*`` wrappers run both back to back.

Three product shapes share one code path: ``mul`` (elementwise), ``dot``
(sum over the last axis) and ``mm`` (matrix product).
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .context import Party
from .core import jsh12_gamma, jsh12_online, jsh_prep_known
from .garble import (AND, NOT, ONE, XOR, ZERO, BoolCircuit, GarbledCircuit, GarbleError,
                     build_adder, build_msb_circuit, build_ppa_msb, evaluate, garble,
                     label_commitments, output_proof)
from .ring import Ring, get_ring
from .sharing import AngleShare, Role, RssShare, public_share, stack
from .zkmult import zk_matmul, zk_mult_batch

KINDS = ("mul", "dot", "mm")


def _prod(ring: Ring, kind: str, a, b):
    if kind == "mul":
        return ring.mul(a, b)
    if kind == "dot":
        return ring._m(np.multiply(a, b, dtype=np.uint64).sum(axis=-1, dtype=np.uint64))
    return ring._m(np.matmul(a, b, dtype=np.uint64))


def _out_shape(kind: str, xs, ys):
    if kind == "mul":
        return np.broadcast_shapes(xs, ys)
    if kind == "dot":
        return np.broadcast_shapes(xs, ys)[:-1]
    return xs[:-1] + ys[-1:]


def fresh_mask(ctx: Party, shape, ring: Ring, label: str) -> RssShare:
    """A random mask-only sharing: alpha shares from k01/k02, gamma from k12."""
    shape = tuple(shape)
    z = np.zeros(shape, dtype=np.uint64)
    me = ctx.role
    if me == Role.P0:
        return RssShare(me, ring, ctx.rand("k01", label, shape, ring),
                        ctx.rand("k02", label, shape, ring), z)
    key = "k01" if me == Role.P1 else "k02"
    return RssShare(me, ring, ctx.rand(key, label, shape, ring), z,
                    ctx.rand("k12", label, shape, ring))


def _mask_part(x: RssShare):
    """(c0, second mask component): P0 -> ([a]1, [a]2); Pj -> ([a]j, gamma)."""
    return (x.c0, x.c1) if x.role == Role.P0 else (x.c0, x.c2)


# ---------------------------------------------------------------------------
# multiplication

@dataclass
class MultPrep:
    """Preprocessed material of a batch of products.

    P0 holds the output alpha shares, Gamma = alpha_x * alpha_y and chi in
    full.  P1 and P2 hold their alpha share and gamma of the output, their
    shares of Gamma and chi, psi in full and their share of psi.
    """

    role: Role
    ring: Ring
    kind: str
    out: RssShare                 # mask-only sharing of the output
    gamma_xy: np.ndarray
    chi: np.ndarray
    psi: np.ndarray | None = None
    psi_share: np.ndarray | None = None

    def take(self, idx) -> "MultPrep":
        pick = (lambda a: None if a is None else a[idx])
        return MultPrep(self.role, self.ring, self.kind, self.out[idx], pick(self.gamma_xy),
                        pick(self.chi), pick(self.psi), pick(self.psi_share))


def mult_prep(ctx: Party, x: RssShare, y: RssShare, kind: str = "mul",
              out: RssShare | None = None) -> MultPrep:
    """Preprocessing of a product from the masks of ``x`` and ``y`` alone.

    ``d = gamma_x - alpha_x`` and ``e = gamma_y - alpha_y`` are relabelled as
    masked sharings (lambda = alpha, masked value = gamma) and multiplied
    with the verified masked product.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown product kind {kind!r}")
    ring = x.ring
    me = ctx.role
    lab = ctx.op("mult")
    ax, mx = _mask_part(x)
    ay, my = _mask_part(y)
    if kind == "mul":
        shape = np.broadcast_shapes(x.shape, y.shape)
        ax, mx, ay, my = (np.broadcast_to(a, shape) for a in (ax, mx, ay, my))
    oshape = _out_shape(kind, x.shape, y.shape)
    with ctx.prep():
        if out is None:
            out = fresh_mask(ctx, oshape, ring, f"{lab}/z")
        d = AngleShare(me, ring, ax, mx)
        e = AngleShare(me, ring, ay, my)
        if kind == "mm":
            f = zk_matmul(ctx, d, e)
        elif kind == "dot":
            shape = np.broadcast_shapes(x.shape, y.shape)
            d = AngleShare(me, ring, np.broadcast_to(ax, shape), np.broadcast_to(mx, shape))
            e = AngleShare(me, ring, np.broadcast_to(ay, shape), np.broadcast_to(my, shape))
            f = zk_mult_batch(ctx, d, e)
        else:
            f = zk_mult_batch(ctx, d, e)
        agg = (lambda a: ring._m(a.sum(axis=-1, dtype=np.uint64))) if kind == "dot" else (lambda a: a)
        if me == Role.P0:
            gxy = _prod(ring, kind, ring.add(ax, mx), ring.add(ay, my))
            chi = agg(ring.add(f.c0, f.c1))
            return MultPrep(me, ring, kind, out, gxy, chi)
        # evaluators: mx, my are gamma_x, gamma_y
        chi_j = agg(f.c0)
        if kind == "mm":
            psi = ring.sub(f.c1, _prod(ring, kind, mx, my))
        else:
            psi = agg(ring.sub(f.c1, ring.mul(mx, my)))
        psi1 = ctx.rand("k12", f"{lab}/psi", oshape, ring)
        psi_j = psi1 if me == Role.P1 else ring.sub(psi, psi1)
        gxy_j = ring.add(ring.add(_prod(ring, kind, mx, ay), _prod(ring, kind, ax, my)),
                         ring.sub(psi_j, chi_j))
        return MultPrep(me, ring, kind, out, gxy_j, chi_j, psi, psi_j)


def mult_online(ctx: Party, x: RssShare, y: RssShare, prep: MultPrep) -> RssShare:
    """One round: P1 and P2 swap their shares of beta_z.

    P0's check value and P2's hash of beta_z + gamma_z are deferred to the
    verification epoch; P1's beta_z + gamma_z message to P0 needs no round of
    its own.
    """
    ring, kind, me = x.ring, prep.kind, ctx.role
    lab = ctx.op("mult.on")
    out = prep.out
    shape = out.shape
    if me == Role.P0:
        ax, ay = ring.add(x.c0, x.c1), ring.add(y.c0, y.c1)
        az = ring.add(out.c0, out.c1)
        bstar = ring.add(ring.sub(ring.neg(_prod(ring, kind, x.c2, ay)), _prod(ring, kind, ax, y.c2)),
                         ring.add(ring.add(az, ring.scale(2, prep.gamma_xy)), prep.chi))
        bstar = ctx.deviate("mult.bstar", bstar)
        ctx.round()
        for j in (Role.P1, Role.P2):
            ctx.expect_equal(Role.P0, j, bstar, f"{lab}/bstar", ring)
        bg = ctx.recv(Role.P1, shape, ring)
        ctx.expect_equal(Role.P2, Role.P0, bg, f"{lab}/bg", ring)
        ctx.count_gates(int(np.prod(shape, dtype=np.int64)))
        return RssShare(me, ring, out.c0, out.c1, bg)

    j = int(me)
    bx, by = x.c1, y.c1
    bz_j = ring.add(ring.sub(ring.sub(ring.scale(j - 1, _prod(ring, kind, bx, by)),
                                      _prod(ring, kind, bx, y.c0)), _prod(ring, kind, x.c0, by)),
                    ring.add(prep.gamma_xy, out.c0))
    peer = Role.P2 if me == Role.P1 else Role.P1
    ctx.send(peer, ctx.deviate("mult.bz", bz_j), ring)
    ctx.round()
    bz = ring.add(bz_j, ctx.recv(peer, shape, ring))
    check = ring.add(ring.sub(bz, _prod(ring, kind, bx, by)), prep.psi)
    for r in (Role.P1, Role.P2):
        ctx.expect_equal(Role.P0, r, check if r == me else None, f"{lab}/bstar", ring)
    bg = ring.add(bz, out.c2)
    if me == Role.P1:
        ctx.send(Role.P0, ctx.deviate("mult.bg", bg), ring)
    ctx.expect_equal(Role.P2, Role.P0, bg if me == Role.P2 else None, f"{lab}/bg", ring)
    ctx.count_gates(int(np.prod(shape, dtype=np.int64)))
    return RssShare(me, ring, out.c0, bz, out.c2)


def pi_mult(ctx: Party, x: RssShare, y: RssShare, kind: str = "mul") -> RssShare:
    prep = mult_prep(ctx, x, y, kind)
    return mult_online(ctx, x, y, prep)


def pi_and(ctx: Party, x: RssShare, y: RssShare) -> RssShare:
    """AND of boolean sharings (the product over Z_2)."""
    return pi_mult(ctx, x, y, "mul")


# ---------------------------------------------------------------------------
# boolean circuits over shares

@dataclass
class CircuitPrep:
    circuit: BoolCircuit
    mult: MultPrep | None
    and_index: dict = field(default_factory=dict)  # output wire -> row in mult


def circuit_prep(ctx: Party, circ: BoolCircuit, masks: dict) -> CircuitPrep:
    """Masks of every wire and one batched product preprocessing for all AND gates.

    ``masks[name]`` is a boolean sharing of shape (n, width) whose mask
    components are final; its value components are ignored.
    """
    ring = get_ring(1)
    ands = circ.and_gates
    n = next(iter(masks.values())).shape[0]
    if not ands:
        return CircuitPrep(circ, None)
    lab = ctx.op("circ")
    with ctx.prep():
        zmask = fresh_mask(ctx, (len(ands), n), ring, f"{lab}/and")
    wire = {}
    for name, ids in circ.inputs.items():
        m = masks[name]
        for i, w in enumerate(ids):
            wire[w] = m[:, i]
    zero = public_share(ctx.role, ring, np.zeros(n, dtype=np.uint64))
    wire[ZERO] = wire[ONE] = zero
    index = {}
    for g in circ.gates:
        if g.op == XOR:
            wire[g.out] = wire[g.a] + wire[g.b]
        elif g.op == NOT:
            wire[g.out] = wire[g.a]
        else:
            index[g.out] = len(index)
            wire[g.out] = zmask[index[g.out]]
    xs = stack([wire[g.a] for g in ands])
    ys = stack([wire[g.b] for g in ands])
    mp = mult_prep(ctx, xs, ys, "mul", out=zmask)
    return CircuitPrep(circ, mp, index)


def circuit_online(ctx: Party, prep: CircuitPrep, inputs: dict) -> RssShare:
    """Evaluate gate by gate; all AND gates of one depth share a round."""
    circ = prep.circuit
    ring = get_ring(1)
    n = next(iter(inputs.values())).shape[0]
    wire = {}
    for name, ids in circ.inputs.items():
        s = inputs[name]
        for i, w in enumerate(ids):
            wire[w] = s[:, i]
    wire[ZERO] = public_share(ctx.role, ring, np.zeros(n, dtype=np.uint64))
    wire[ONE] = public_share(ctx.role, ring, np.ones(n, dtype=np.uint64))
    depth = circ.and_levels()
    max_depth = max((depth[g.out] for g in circ.gates), default=0)
    for level in range(max_depth + 1):
        for g in circ.gates:
            if g.op == AND or depth[g.out] != level:
                continue
            if g.op == XOR:
                wire[g.out] = wire[g.a] + wire[g.b]
            else:
                wire[g.out] = wire[g.a].add_const(1)
        layer = [g for g in circ.gates if g.op == AND and depth[g.out] == level + 1]
        if not layer:
            continue
        rows = np.array([prep.and_index[g.out] for g in layer])
        xs = stack([wire[g.a] for g in layer])
        ys = stack([wire[g.b] for g in layer])
        zs = mult_online(ctx, xs, ys, prep.mult.take(rows))
        for i, g in enumerate(layer):
            wire[g.out] = zs[i]
    return stack([wire[w] for w in circ.outputs], axis=1)


def eval_circuit(ctx: Party, circ: BoolCircuit, inputs: dict) -> RssShare:
    prep = circuit_prep(ctx, circ, inputs)
    return circuit_online(ctx, prep, inputs)


# ---------------------------------------------------------------------------
# bit extraction

def _flat(x: RssShare) -> RssShare:
    return x.reshape(-1)


def _bool_jsh12_mask(ctx: Party, gamma, shape) -> RssShare:
    """Mask-only view of a (P1, P2) joint sharing: alpha = 0, gamma known."""
    z = np.zeros(shape, dtype=np.uint64)
    ring = get_ring(1)
    if ctx.role == Role.P0:
        return RssShare(ctx.role, ring, z, z.copy(), z.copy())
    return RssShare(ctx.role, ring, z, z.copy(), gamma)


def _alpha_bits(ctx: Party, v: RssShare, j: Role):
    """Bits of -[alpha]_j at the two parties that know it, else None."""
    ring = v.ring
    if ctx.role not in (Role.P0, j):
        return None
    return ring.bits(ring.neg(v.alpha_share(j)))


@dataclass
class PpaPrep:
    neg_alpha: RssShare       # boolean sharing of the bits of -alpha, (n, ell)
    gamma: np.ndarray | None  # for the joint sharing of the bits of beta
    circ: CircuitPrep


def bitext_ppa_prep(ctx: Party, v: RssShare) -> PpaPrep:
    """Bits of -alpha by a prefix adder over the two alpha shares, then the msb circuit's masks."""
    x = _flat(v)
    n, ell = x.shape[0], x.ring.ell
    boolr = get_ring(1)
    with ctx.prep():
        s1 = jsh_prep_known(ctx, (Role.P0, Role.P1), _alpha_bits(ctx, x, Role.P1), (n, ell), boolr)
        s2 = jsh_prep_known(ctx, (Role.P0, Role.P2), _alpha_bits(ctx, x, Role.P2), (n, ell), boolr)
        neg_alpha = eval_circuit(ctx, _adder(ell), {"x": s1, "y": s2})
        gamma = jsh12_gamma(ctx, (n, ell), boolr)
        cp = circuit_prep(ctx, _ppa(ell), {"x": _bool_jsh12_mask(ctx, gamma, (n, ell)),
                                          "y": neg_alpha})
    return PpaPrep(neg_alpha, gamma, cp)


def bitext_ppa_online(ctx: Party, v: RssShare, prep: PpaPrep) -> RssShare:
    """msb(beta - alpha): 1 + log2(ell) rounds of AND layers."""
    x = _flat(v)
    n, ell = x.shape[0], x.ring.ell
    boolr = get_ring(1)
    beta_bits = None if ctx.role == Role.P0 else x.ring.bits(x.c1)
    bb = jsh12_online(ctx, beta_bits, prep.gamma, (n, ell), boolr)
    out = circuit_online(ctx, prep.circ, {"x": bb, "y": prep.neg_alpha})
    return out[:, 0].reshape(*v.shape)


_CIRCUITS = {}


def _cached(kind, ell, builder):
    key = (kind, ell)
    if key not in _CIRCUITS:
        _CIRCUITS[key] = builder(ell)
    return _CIRCUITS[key]


def _adder(ell):
    return _cached("add", ell, build_adder)


def _ppa(ell):
    return _cached("ppa", ell, build_ppa_msb)


def _gc_circuit(ell):
    return _cached("gc", ell, build_msb_circuit)


@dataclass
class GcPrep:
    r1: RssShare
    r2: RssShare
    gamma: np.ndarray | None
    tag: str
    n: int
    garbling: object = None      # garblers only
    gc: GarbledCircuit | None = None  # evaluator only
    fixed: dict = field(default_factory=dict)  # evaluator: labels of u2..u5
    u1_commit: np.ndarray | None = None          # evaluator: (n, ell, 2, 2)


def _labels_to_bytes(labels) -> bytes:
    return np.ascontiguousarray(labels, dtype=np.uint64).astype("<u8").tobytes()


def _labels_from_bytes(data: bytes, shape) -> np.ndarray:
    return np.frombuffer(data, dtype="<u8").astype(np.uint64).reshape(tuple(shape) + (2,))


def _pick(both, bits):
    """Select entry ``bits`` from the value axis of (n, w, 2, 2) label data."""
    return np.take_along_axis(both, bits.astype(np.int64)[..., None, None], axis=2)[:, :, 0]


def bitext_gc_prep(ctx: Party, v: RssShare) -> GcPrep:
    """P0 and P1 garble; P2 receives the circuit from P1 and a digest plus its input openings from P0.

    The digest is compared before anything is evaluated, so a corrupt
    garbler cannot make P2 compute a different function.
    """
    x = _flat(v)
    n, ell = x.shape[0], x.ring.ell
    boolr = get_ring(1)
    me = ctx.role
    circ = _gc_circuit(ell)
    with ctx.prep():
        tag = ctx.op("bitext.gc")
        r1 = ctx.rand("k01", f"{tag}/r1", (n,), boolr) if me != Role.P2 else None
        r2 = ctx.rand("k02", f"{tag}/r2", (n,), boolr) if me != Role.P1 else None
        sr1 = jsh_prep_known(ctx, (Role.P0, Role.P1), r1, (n,), boolr)
        sr2 = jsh_prep_known(ctx, (Role.P0, Role.P2), r2, (n,), boolr)
        gamma = jsh12_gamma(ctx, (n,), boolr)
        prep = GcPrep(sr1, sr2, gamma, tag, n)
        if me in (Role.P0, Role.P1):
            rand = (lambda name, shape: ctx.rand("k01", f"{tag}/{name}", shape, get_ring(64)))
            G = garble(circ, n, rand, tag)
            prep.garbling = G
            a1_bits = x.ring.bits(x.alpha_share(Role.P1))
            fixed = np.concatenate([G.labels("u2", a1_bits), G.labels("u4", r1[:, None])], axis=1)
            comms = [label_commitments(G.both_labels(k), tag) for k in ("u1", "u3", "u5")]
            payload = G.gc.to_bytes() + _labels_to_bytes(fixed) + b"".join(map(_labels_to_bytes, comms))
            if me == Role.P1:
                ctx.send_bytes(Role.P2, ctx.deviate("gc.payload", payload))
            else:
                known = {"u3": x.ring.bits(x.alpha_share(Role.P2)), "u5": r2[:, None]}
                opens = b"".join(_labels_to_bytes(G.labels(k, known[k])) for k in ("u3", "u5"))
                msg = hashlib.sha256(payload).digest() + opens
                ctx.send_bytes(Role.P2, ctx.deviate("gc.open", msg))
        ctx.round()
        if me == Role.P2:
            _receive_gc(ctx, prep, x, circ, r2)
    return prep


def _receive_gc(ctx: Party, prep: GcPrep, x: RssShare, circ: BoolCircuit, r2):
    n, ell = prep.n, x.ring.ell
    payload = ctx.recv_bytes(Role.P1)
    msg = ctx.recv_bytes(Role.P0)
    if len(msg) < 32 or hashlib.sha256(payload).digest() != msg[:32]:
        ctx.abort("garbled circuit from P1 does not match P0's digest")
    gc_len = GarbledCircuit.size(circ, n)
    fixed_len = n * (ell + 1) * 16
    comm_len = n * (2 * ell + 1) * 2 * 16
    if len(payload) != gc_len + fixed_len + comm_len:
        ctx.abort("garbled circuit payload has the wrong size")
    prep.gc = GarbledCircuit.from_bytes(circ, n, payload[:gc_len])
    fixed = _labels_from_bytes(payload[gc_len:gc_len + fixed_len], (n, ell + 1))
    pos = gc_len + fixed_len
    comm = {}
    for k, w in (("u1", ell), ("u3", ell), ("u5", 1)):
        size = n * w * 2 * 16
        comm[k] = _labels_from_bytes(payload[pos:pos + size], (n, w, 2))
        pos += size
    if len(msg) != 32 + n * (ell + 1) * 16:
        ctx.abort("label openings from P0 have the wrong size")
    opened = {"u3": _labels_from_bytes(msg[32:32 + n * ell * 16], (n, ell)),
              "u5": _labels_from_bytes(msg[32 + n * ell * 16:], (n, 1))}
    known = {"u3": x.ring.bits(x.c0), "u5": r2[:, None]}
    labels = {"u2": fixed[:, :ell], "u4": fixed[:, ell:]}
    for k in ("u3", "u5"):
        if not np.array_equal(label_commitments(opened[k], prep.tag), _pick(comm[k], known[k])):
            ctx.abort(f"label opening for {k} does not match its commitment")
        labels[k] = opened[k]
    prep.fixed = labels
    prep.u1_commit = comm["u1"]


def bitext_gc_online(ctx: Party, v: RssShare, prep: GcPrep) -> RssShare:
    """Two rounds: P1 opens the labels of beta to P2; P2 returns the masked msb and a label proof."""
    x = _flat(v)
    n, ell = prep.n, x.ring.ell
    boolr = get_ring(1)
    me = ctx.role
    circ = _gc_circuit(ell)
    vbit = None
    if me == Role.P1:
        bits = x.ring.bits(x.c1)
        lab = prep.garbling.labels("u1", bits)
        ctx.send_bytes(Role.P2, ctx.deviate("gc.u1", _labels_to_bytes(lab)))
    ctx.round()
    if me == Role.P2:
        data = ctx.recv_bytes(Role.P1)
        if len(data) != n * ell * 16:
            ctx.abort("label openings from P1 have the wrong size")
        u1 = _labels_from_bytes(data, (n, ell))
        bits = x.ring.bits(x.c1)
        if not np.array_equal(label_commitments(u1, prep.tag), _pick(prep.u1_commit, bits)):
            ctx.abort("label opening for u1 does not match its commitment")
        labels = dict(prep.fixed)
        labels["u1"] = u1
        try:
            out_bits, out_labels = evaluate(circ, prep.gc, labels, prep.tag)
        except GarbleError as exc:
            ctx.abort(str(exc))
        vbit = out_bits[:, 0]
        reply = boolr.to_bytes(vbit) + output_proof(out_labels[:, 0])
        ctx.send_bytes(Role.P1, ctx.deviate("gc.out", reply))
    ctx.round()
    if me == Role.P1:
        data = ctx.recv_bytes(Role.P2)
        nb = boolr.nbytes(n)
        if len(data) != nb + 32:
            ctx.abort("malformed evaluation result from P2")
        try:
            vbit = boolr.from_bytes(data[:nb], (n,))
        except ValueError:
            ctx.abort("malformed evaluation result from P2")
        G = prep.garbling
        expect = G.out_zero[:, 0] ^ (vbit[:, None] * G.delta)
        if output_proof(expect) != data[nb:]:
            ctx.abort("output label proof from P2 does not match the claimed bits")
    sv = jsh12_online(ctx, vbit, prep.gamma, (n,), boolr)
    return (sv + prep.r1 + prep.r2).reshape(*v.shape)


def bitext_prep(ctx: Party, v: RssShare, variant: str | None = None):
    variant = variant or ctx.config.bitext
    if variant == "gc":
        return bitext_gc_prep(ctx, v)
    return bitext_ppa_prep(ctx, v)


def bitext_online(ctx: Party, v: RssShare, prep) -> RssShare:
    if isinstance(prep, GcPrep):
        return bitext_gc_online(ctx, v, prep)
    return bitext_ppa_online(ctx, v, prep)


def pi_bitext(ctx: Party, v: RssShare, variant: str | None = None) -> RssShare:
    """Boolean sharing of the sign bit of ``v``."""
    return bitext_online(ctx, v, bitext_prep(ctx, v, variant))


def pi_bitext_ppa(ctx: Party, v: RssShare) -> RssShare:
    return pi_bitext(ctx, v, "ppa")


def pi_bitext_gc(ctx: Party, v: RssShare) -> RssShare:
    return pi_bitext(ctx, v, "gc")


# ---------------------------------------------------------------------------
# bit to arithmetic

@dataclass
class Bit2aPrep:
    alpha_r: RssShare         # arithmetic sharing of the bit alpha_b
    gamma: np.ndarray | None  # for the joint sharing of beta_b
    mult: MultPrep


def bit2a_prep(ctx: Party, b: RssShare, ring: Ring | None = None) -> Bit2aPrep:
    ring = ring or ctx.ring
    shape = b.shape
    me = ctx.role
    with ctx.prep():
        a1 = b.alpha_share(Role.P1) if me in (Role.P0, Role.P1) else None
        a2 = b.alpha_share(Role.P2) if me in (Role.P0, Role.P2) else None
        s1 = jsh_prep_known(ctx, (Role.P0, Role.P1), a1, shape, ring)
        s2 = jsh_prep_known(ctx, (Role.P0, Role.P2), a2, shape, ring)
        u = pi_mult(ctx, s1, s2)
        alpha_r = s1 + s2 - u.scale(2)
        gamma = jsh12_gamma(ctx, shape, ring)
        z = np.zeros(shape, dtype=np.uint64)
        xmask = RssShare(me, ring, z, z.copy(), z.copy() if me == Role.P0 else gamma)
        mp = mult_prep(ctx, xmask, alpha_r, "mul")
    return Bit2aPrep(alpha_r, gamma, mp)


def bit2a_online(ctx: Party, b: RssShare, prep: Bit2aPrep) -> RssShare:
    """b = beta_b + alpha_b - 2 beta_b alpha_b over the arithmetic ring: one round."""
    ring = prep.alpha_r.ring
    beta = None if ctx.role == Role.P0 else b.c1
    br = jsh12_online(ctx, beta, prep.gamma, b.shape, ring)
    v = mult_online(ctx, br, prep.alpha_r, prep.mult)
    return br + prep.alpha_r - v.scale(2)


def pi_bit2a(ctx: Party, b: RssShare, ring: Ring | None = None) -> RssShare:
    return bit2a_online(ctx, b, bit2a_prep(ctx, b, ring))
