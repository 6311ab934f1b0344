"""Distributed zero-knowledge verification of masked multiplications.

The semi-honest part computes a masked sharing of f = d*e from masked
sharings of d and e.  Afterwards each server proves to the other two that
its own messages were computed correctly, using a fully linear proof whose
polynomial arithmetic runs in a Galois-ring extension of Z_{2^ell}.

Proof layout.  A statement is a set of claims ``sum_i a[i, j] * b[i, j] =
C[j]`` arranged as ``rows x columns`` with ``columns = M``.  Row i defines
polynomials f_i, g_i of degree M through (x_0 -> mask, x_j -> a[i, j]) and
(x_0 -> mask', x_j -> b[i, j]); the prover sends p = sum_i f_i g_i by its
values at the 2M+1 points x_0 .. x_2M.  Verifiers hold additive shares of
a, b, C and of the proof, evaluate every linear query locally, then swap
their answers and check

* ``p(r) == sum_i f_i(r) g_i(r)`` at a random point r, and
* ``sum_p rho_p sum_j tau_j (p_p(x_j) - C[p, j]) == 0`` over all proofs p
  for random weights rho, tau (the output-consistency value; in "total"
  mode all columns of all proofs add up to one claim instead).

Repetitions use fresh masks and fresh challenges.  The extension is either
a :class:`GaloisRing` (limb axis last) or, for the boolean ring, a table
driven :class:`BinaryField`; the code below only touches it through the
shared interface, so "element axes" never include the limb axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .crypto import pair_key
from .galois import GaloisRing, get_extension
from .ring import Ring
from .sharing import AngleShare, Role, SERVERS
from .transport import MsgType

LO_HI = {
    Role.P0: (Role.P1, Role.P2),
    Role.P1: (Role.P0, Role.P2),
    Role.P2: (Role.P0, Role.P1),
}


def error_per_rep(batch: int, delta: int, extra: float = 0.0) -> float:
    """Cheating probability of one repetition.

    The polynomial identity test at r fails with probability at most
    2M / (challenge range); the two-level output weighting adds 2 / 2^delta.
    """
    size = 1 << delta
    return 2 * batch / (size - 2 * batch - 1) + 2.0 / size + extra


def reps_for(error: float, sec_bits: int = 40) -> int:
    return max(1, math.ceil(sec_bits / -math.log2(error)))


def _ins(F, x, axis: int):
    """Insert a new element axis (negative positions skip limb axes)."""
    return np.expand_dims(x, axis - len(F.elem) if axis < 0 else axis)


def _lagrange(F, nodes, weights, pts):
    """Lagrange basis over ``nodes`` evaluated at ``pts``: (..., N)."""
    diffs = F.sub(_ins(F, pts, -1), nodes)
    n = diffs.shape[len(diffs.shape) - len(F.elem) - 1]
    cols = []
    for j in range(n):
        acc = None
        for m in range(n):
            if m != j:
                t = diffs[(Ellipsis, m) + (slice(None),) * len(F.elem)]
                acc = t if acc is None else F.mul(acc, t)
        cols.append(F.mul(acc, weights[j]))
    return np.stack(cols, axis=-1 - len(F.elem))


class FlpSystem:
    """Interpolation data for a batch width ``M`` over one extension."""

    def __init__(self, F, batch: int):
        if 2 * batch + 2 > (1 << F.delta):
            raise ValueError("exceptional set too small for this batch width")
        self.F = F
        self.M = batch
        n = 2 * batch + 1
        nodes = F.lift_many(np.arange(n))
        self.nodes = nodes
        self.small = nodes[:batch + 1]
        self.w_small = self._weights(self.small)
        self.w_full = self._weights(nodes)
        # L_j(x_k) over x_0..x_M for the extra points k = M+1..2M
        ext = _lagrange(F, self.small, self.w_small, nodes[batch + 1:])
        self.ext0 = ext[:, 0]
        self.ext_d = ext[:, 1:]
        self.ext0_sq = F.mul(self.ext0, self.ext0)
        self.cross = F.mul(_ins(F, self.ext0, -1), self.ext_d)
        self.quad = F.mul(_ins(F, self.ext_d, -1), _ins(F, self.ext_d, -2))
        self.n_coeffs = n
        self.first_challenge = n

    def _weights(self, nodes):
        F = self.F
        out = []
        for j in range(len(nodes)):
            acc = None
            for m in range(len(nodes)):
                if m != j:
                    t = F.sub(nodes[j], nodes[m])
                    acc = t if acc is None else F.mul(acc, t)
            out.append(F.inv(acc))
        return out

    def lag_small(self, r):
        return _lagrange(self.F, self.small, self.w_small, r)

    def lag_full(self, r):
        return _lagrange(self.F, self.nodes, self.w_full, r)

    def challenge(self, idx):
        return self.F.lift_many(np.asarray(idx) + self.first_challenge)

    @property
    def challenge_range(self) -> int:
        return (1 << self.F.delta) - self.first_challenge


@lru_cache(maxsize=None)
def get_flp(ell: int, delta: int, batch: int) -> FlpSystem:
    return FlpSystem(get_extension(ell, delta), batch)


@dataclass
class Statement:
    """One prover's statement as seen by one party.

    ``a`` and ``b`` have shape (P, m, M) for base-ring entries
    (``scalar=True``) or (R, P, m, M) extension elements with a
    per-repetition statement.  At the prover they are the full values; at
    a verifier they are that verifier's additive shares and ``claim``
    holds its share of the claimed column values: (P, M) or (R, P, M) in
    "columns" mode, (R,) in "total" mode.
    """

    a: np.ndarray
    b: np.ndarray
    claim: np.ndarray | None = None
    scalar: bool = True
    mode: str = "columns"

    @property
    def dims(self):
        return self.a.shape[:3] if self.scalar else self.a.shape[1:4]  # (P, m, M)


def _prove(flp: FlpSystem, st: Statement, z1, z2):
    """Values of p at x_0 .. x_2M for every repetition: (R, P, 2M+1).

    With c_k = L_0(x_k) and E_kj = L_j(x_k) at an extra point x_k,
    ``p(x_k) = sum_jl S_jl E_kj E_kl + c_k sum_j E_kj Z_j + c_k^2 zz`` where
    S are the row sums of a_j b_l, Z_j the row sums of z1 b_j + z2 a_j and
    zz the row sum of z1 z2.  Only zz needs products of two secrets.
    """
    F = flp.F
    R = z1.shape[0]
    zz = F.sum(F.mul(z1, z2), 2)  # (R, P)
    if st.scalar:
        S = F.base._m(np.einsum("pij,pil->pjl", st.a, st.b, dtype=np.uint64))
        dd = F.slin(S, "pjl", flp.quad, "kjl", "pk")[None]
        Z = F.add(F.slin(st.b, "pij", z1, "rpi", "rpj"), F.slin(st.a, "pij", z2, "rpi", "rpj"))
        pn = F.embed(np.diagonal(S, axis1=1, axis2=2))
        pn = np.broadcast_to(pn[None], (R,) + pn.shape)
    else:
        fd = F.lin(st.a, "rpij", flp.ext_d, "kj", "rpik")
        gd = F.lin(st.b, "rpij", flp.ext_d, "kj", "rpik")
        dd = F.sum(F.mul(fd, gd), 2)
        Z = F.add(F.sum(F.mul(_ins(F, z1, -1), st.b), 2), F.sum(F.mul(_ins(F, z2, -1), st.a), 2))
        pn = F.sum(F.mul(st.a, st.b), 2)
    p_ext = F.add(F.add(dd, F.lin(Z, "rpj", flp.cross, "kj", "rpk")),
                  F.lin(zz, "rp", flp.ext0_sq, "k", "rpk"))
    return np.concatenate([_ins(F, zz, 2), pn, p_ext], axis=2)


def _answers(flp: FlpSystem, st: Statement, z1, z2, vals, r, fold):
    """A verifier's share of (f(r), g(r), p(r), output value)."""
    F = flp.F
    M = flp.M
    lag = flp.lag_small(r)  # (R, M+1)
    l0, lj = lag[:, 0], lag[:, 1:]
    if st.scalar:
        fa = F.slin(st.a, "pij", lj, "rj", "rpi")
        fb = F.slin(st.b, "pij", lj, "rj", "rpi")
    else:
        fa = F.lin(st.a, "rpij", lj, "rj", "rpi")
        fb = F.lin(st.b, "rpij", lj, "rj", "rpi")
    f = F.add(F.lin(z1, "rpi", l0, "r", "rpi"), fa)
    gg = F.add(F.lin(z2, "rpi", l0, "r", "rpi"), fb)
    pr = F.lin(vals, "rpk", flp.lag_full(r), "rk", "rp")
    pn = vals[:, :, 1:M + 1]
    if st.mode == "total":
        out = F.sub(F.sum(pn, (1, 2)), st.claim)
    else:
        rho, tau = fold
        inner = F.lin(F.sub(pn, st.claim), "rpj", tau, "rj", "rp")
        out = F.sum(F.mul(rho, inner), 1)
    return f, gg, pr, out


def verdicts(flp: FlpSystem, st: Statement, z1, z2, vals, r, fold) -> np.ndarray:
    """Per-repetition accept bits of the two verifiers combined.

    The answers are linear in the verifiers' shares, so running
    :func:`_answers` on reconstructed inputs gives the sum of both
    verifiers' answers.  Used to measure soundness without networking.
    """
    F = flp.F
    f, gg, pr, out = _answers(flp, st, z1, z2, vals, r, fold)
    lhs = F.sum(F.mul(f, gg), -1)
    same = np.all(F.is_zero(F.sub(lhs, pr)), axis=1)
    return same & F.is_zero(out)


def _answer_bytes(F, parts) -> bytes:
    return b"".join(F.to_bytes(p) for p in parts)


def _split_answers(F, data: bytes, shapes):
    out, pos = [], 0
    for sh in shapes:
        n = F.nbytes(int(np.prod(sh, dtype=np.int64)))
        out.append(F.from_bytes(data[pos:pos + n], sh))
        pos += n
    if pos != len(data):
        raise ValueError("bad answer length")
    return out


def zk_verify_all(ctx, flp: FlpSystem, statements: dict, reps: int, label: str):
    """Run the three proofs in parallel: one round for proofs, one for answers.

    ``statements`` maps each prover role to the statement as this party
    sees it (full values for its own proof, shares for the other two).
    """
    F = flp.F
    ne = len(F.elem)
    me = ctx.role
    bad = []
    masks = {}
    proofs = {}
    for prover in SERVERS:
        st = statements[prover]
        P, m, _ = st.dims
        lo, hi = LO_HI[prover]
        lab = f"{label}/P{int(prover)}"
        shape = (reps, P, m)
        if me == prover:
            z_lo = [F.sample(ctx.prf, pair_key(prover, lo), f"{lab}/z{t}", shape) for t in (1, 2)]
            z_hi = [F.sample(ctx.prf, pair_key(prover, hi), f"{lab}/z{t}", shape) for t in (1, 2)]
            z1, z2 = F.add(z_lo[0], z_hi[0]), F.add(z_lo[1], z_hi[1])
            vals = _prove(flp, st, z1, z2)
            v_lo = F.sample(ctx.prf, pair_key(prover, lo), f"{lab}/c", vals.shape[:vals.ndim - ne])
            v_hi = F.sub(vals, v_lo)
            v_hi = ctx.deviate("zk.proof", v_hi)
            ctx.send_bytes(hi, F.to_bytes(v_hi), MsgType.PROOF, amortizable=True)
        elif me in (lo, hi):
            key = pair_key(prover, me)
            masks[prover] = [F.sample(ctx.prf, key, f"{lab}/z{t}", shape) for t in (1, 2)]
            if me == lo:
                proofs[prover] = F.sample(ctx.prf, key, f"{lab}/c", (reps, P, flp.n_coeffs))
    for prover in SERVERS:
        if me == LO_HI[prover][1]:
            P = statements[prover].dims[0]
            data = ctx.recv_bytes(prover, MsgType.PROOF)
            try:
                proofs[prover] = F.from_bytes(data, (reps, P, flp.n_coeffs))
            except ValueError:
                ctx.abort(f"malformed proof from {prover.name}")
    ctx.round()

    # answers
    mine = {}
    for prover in SERVERS:
        if me == prover:
            continue
        st = statements[prover]
        P, m, M = st.dims
        lo, hi = LO_HI[prover]
        jkey = pair_key(lo, hi)
        lab = f"{label}/P{int(prover)}"
        idx = ctx.prf.integers(jkey, f"{lab}/r", reps, flp.challenge_range)
        r = flp.challenge(idx)
        fold = (F.sample(ctx.prf, jkey, f"{lab}/rho", (reps, P)),
                F.sample(ctx.prf, jkey, f"{lab}/tau", (reps, M)))
        z1, z2 = masks[prover]
        parts = _answers(flp, st, z1, z2, proofs[prover], r, fold)
        mine[prover] = parts
        other = hi if me == lo else lo
        payload = ctx.deviate("zk.answer", _answer_bytes(F, parts))
        ctx.send_bytes(other, payload, MsgType.PROOF, amortizable=True)
    for prover in SERVERS:
        if me == prover:
            continue
        lo, hi = LO_HI[prover]
        other = hi if me == lo else lo
        parts = mine[prover]
        data = ctx.recv_bytes(other, MsgType.PROOF)
        try:
            f2, g2, pr2, out2 = _split_answers(F, data, [p.shape[:p.ndim - ne] for p in parts])
        except ValueError:
            bad.append(prover)
            continue
        f, gg, pr, out = parts
        lhs = F.sum(F.mul(F.add(f, f2), F.add(gg, g2)), -1)
        ok = np.array_equal(lhs, F.add(pr, pr2)) and bool(np.all(F.is_zero(F.add(out, out2))))
        if not ok:
            bad.append(prover)
    ctx.round()
    if bad:
        ctx.abort("zero-knowledge verification rejected " + ", ".join(p.name for p in bad))


def _layout(vals: list, M: int, rows_first=True):
    """Stack row vectors of length n into (P, rows, M) with zero padding."""
    n = vals[0].shape[0]
    P = max(1, -(-n // M))
    out = np.zeros((P * M, len(vals)), dtype=np.uint64)
    for i, v in enumerate(vals):
        out[:n, i] = v
    return out.reshape(P, M, len(vals)).transpose(0, 2, 1).copy()


def _col_claim(F, v, M: int):
    n = v.shape[0]
    P = max(1, -(-n // M))
    out = np.zeros(P * M, dtype=np.uint64)
    out[:n] = v
    return F.embed(out.reshape(P, M))


def zk_params(ctx, ring: Ring | None = None):
    cfg = ctx.config
    flp = get_flp((ring or ctx.ring).ell, cfg.zk_delta, cfg.zk_batch)
    return flp, cfg.reps


def zk_mult_batch(ctx, d: AngleShare, e: AngleShare) -> AngleShare:
    """Masked sharing of f = d * e for every element, verified in zero knowledge.

    Four preprocessing rounds: P0's correction share, the P1/P2 exchange,
    the proofs and the verifier answers.
    """
    ring: Ring = d.ring
    me = ctx.role
    shape = d.shape
    n = int(np.prod(shape, dtype=np.int64))
    flat = lambda a: np.ascontiguousarray(a).reshape(n)  # noqa: E731
    lab = ctx.op("zkpc")
    with ctx.prep():
        # semi-honest product
        if me == Role.P0:
            ld1, ld2 = flat(d.c0), flat(d.c1)
            le1, le2 = flat(e.c0), flat(e.c1)
            lde = ring.mul(ring.add(ld1, ld2), ring.add(le1, le2))
            lde1 = ctx.rand("k01", f"{lab}/lde", (n,), ring)
            lde2 = ring.sub(lde, lde1)
            lf1 = ctx.rand("k01", f"{lab}/lf", (n,), ring)
            lf2 = ctx.rand("k02", f"{lab}/lf", (n,), ring)
            ctx.send(Role.P2, ctx.deviate("zk.lde2", lde2), ring)
        elif me == Role.P1:
            ld, le, D, E = flat(d.c0), flat(e.c0), flat(d.c1), flat(e.c1)
            lde_j = ctx.rand("k01", f"{lab}/lde", (n,), ring)
            lf_j = ctx.rand("k01", f"{lab}/lf", (n,), ring)
        else:
            ld, le, D, E = flat(d.c0), flat(e.c0), flat(d.c1), flat(e.c1)
            lf_j = ctx.rand("k02", f"{lab}/lf", (n,), ring)
            lde_j = ctx.recv(Role.P0, (n,), ring)
        ctx.round()
        if me != Role.P0:
            j = int(me)
            s = ring.add(ring.sub(ring.sub(ring.scale(j - 1, ring.mul(D, E)), ring.mul(ld, E)),
                                  ring.mul(le, D)), ring.add(lde_j, lf_j))
            peer = Role.P2 if me == Role.P1 else Role.P1
            ctx.send(peer, ctx.deviate("zk.s", s), ring)
            s_other = ctx.recv(peer, (n,), ring)
            masked = ring.add(s, s_other)
        ctx.round()

        # statements
        flp, reps = zk_params(ctx, ring)
        M = flp.M
        gr = flp.F
        z = np.zeros(n, dtype=np.uint64)
        st = {}
        if me == Role.P0:
            st[Role.P0] = Statement(_layout([ring.add(ld1, ld2)], M), _layout([ring.add(le1, le2)], M))
            st[Role.P1] = Statement(_layout([ld1, le1], M), _layout([z, z], M),
                                    _col_claim(gr, ring.add(lde1, lf1), M))
            st[Role.P2] = Statement(_layout([ld2, le2], M), _layout([z, z], M),
                                    _col_claim(gr, ring.add(lde2, lf2), M))
        elif me == Role.P1:
            st[Role.P0] = Statement(_layout([ld], M), _layout([le], M), _col_claim(gr, lde_j, M))
            st[Role.P1] = Statement(_layout([ld, le], M), _layout([E, D], M))
            st[Role.P2] = Statement(_layout([z, z], M), _layout([E, D], M),
                                    _col_claim(gr, ring.sub(ring.mul(D, E), s_other), M))
        else:
            st[Role.P0] = Statement(_layout([ld], M), _layout([le], M), _col_claim(gr, lde_j, M))
            st[Role.P1] = Statement(_layout([z, z], M), _layout([E, D], M),
                                    _col_claim(gr, ring.neg(s_other), M))
            st[Role.P2] = Statement(_layout([ld, le], M), _layout([E, D], M))
        zk_verify_all(ctx, flp, st, reps, lab)

    if me == Role.P0:
        return AngleShare(me, ring, lf1.reshape(shape), lf2.reshape(shape))
    return AngleShare(me, ring, lf_j.reshape(shape), masked.reshape(shape))


# ---------------------------------------------------------------------------
# matrix products

def matmul_reps(ctx) -> int:
    cfg = ctx.config
    extra = 2.0 / (1 << cfg.zk_delta)
    if cfg.zk_reps is not None:
        return cfg.zk_reps
    return reps_for(error_per_rep(cfg.zk_batch, cfg.zk_delta, extra), cfg.zk_sec_bits)


def _mm(ring: Ring, a, b):
    return ring._m(np.matmul(a, b, dtype=np.uint64))


def _row_layout(gr: GaloisRing, vecs, M: int):
    """(R, K, delta) vectors -> (R, 1, rows*ceil(K/M), M, delta)."""
    R, K, d = vecs[0].shape
    per = -(-K // M)
    blocks = []
    for v in vecs:
        pad = np.zeros((R, per * M, d), dtype=np.uint64)
        pad[:, :K] = v
        blocks.append(pad.reshape(R, per, M, d))
    return np.concatenate(blocks, axis=1)[:, None]


def zk_matmul(ctx, d: AngleShare, e: AngleShare) -> AngleShare:
    """Masked sharing of the matrix product D E, checked as one compressed claim.

    The verifiers of each proof fold the S x J output claims with random
    vectors sigma (left) and tau (right) taken from their joint key; the
    prover receives the seed after its messages are fixed and proves the
    single inner product (sigma^T A)(B tau) of length K.  Everything runs in
    four preprocessing rounds: products and corrections, seeds, proofs,
    answers.
    """
    ring: Ring = ctx.ring
    me = ctx.role
    S, K = d.shape
    K2, J = e.shape
    if K != K2:
        raise ValueError("inner dimensions differ")
    lab = ctx.op("zkmm")
    flp = get_flp(ring.ell, ctx.config.zk_delta, ctx.config.zk_batch)
    gr = flp.F
    reps = matmul_reps(ctx)
    with ctx.prep():
        if me == Role.P0:
            ld1, ld2, le1, le2 = d.c0, d.c1, e.c0, e.c1
            lde = _mm(ring, ring.add(ld1, ld2), ring.add(le1, le2))
            lde1 = ctx.rand("k01", f"{lab}/lde", (S, J))
            lde2 = ctx.rand("k02", f"{lab}/lde", (S, J))
            lf1 = ctx.rand("k01", f"{lab}/lf", (S, J))
            lf2 = ctx.rand("k02", f"{lab}/lf", (S, J))
            corr = ring.sub(ring.sub(lde, lde1), lde2)
            ctx.send(Role.P1, ctx.deviate("mm.corr.P1", corr))
            ctx.send(Role.P2, ctx.deviate("mm.corr.P2", corr))
        else:
            j = int(me)
            key = "k01" if me == Role.P1 else "k02"
            ld, le, D, E = d.c0, e.c0, d.c1, e.c1
            lde_j = ctx.rand(key, f"{lab}/lde", (S, J))
            lf_j = ctx.rand(key, f"{lab}/lf", (S, J))
            DE = _mm(ring, D, E)
            s = ring.add(ring.sub(ring.sub(ring.scale(j - 1, DE), _mm(ring, ld, E)), _mm(ring, D, le)),
                         ring.add(lde_j, lf_j))
            peer = Role.P2 if me == Role.P1 else Role.P1
            ctx.send(peer, ctx.deviate("mm.s", s))
            corr = ctx.recv(Role.P0, (S, J))
            s_other = ctx.recv(peer, (S, J))
            masked = ring.add(ring.add(s, s_other), corr)
        ctx.expect_equal(Role.P1, Role.P2, None if me == Role.P0 else corr, f"{lab}/corr")
        ctx.round()

        # seeds for the folding vectors, sent by the lower verifier
        seeds = {}
        for prover in SERVERS:
            lo, hi = LO_HI[prover]
            if me == lo:
                seed = ctx.prf.bytes(pair_key(lo, hi), f"{lab}/P{int(prover)}/seed", 16)
                seeds[prover] = seed
                ctx.send_bytes(prover, ctx.deviate("mm.seed", seed), MsgType.DATA, amortizable=True)
            elif me == hi:
                seeds[prover] = ctx.prf.bytes(pair_key(lo, hi), f"{lab}/P{int(prover)}/seed", 16)
        seeds[me] = ctx.recv_bytes(LO_HI[me][0], MsgType.DATA)
        if len(seeds[me]) != 16:
            ctx.abort("malformed folding seed")
        ctx.round()

        def fold(prover):
            sd = seeds[prover]
            sig = gr.from_seed(sd, "sigma", (reps, S))
            tau = gr.from_seed(sd, "tau", (reps, J))
            return sig, tau

        def left(sig, A):  # sigma^T A : (R, K, delta)
            return ring._m(np.einsum("rsu,sk->rku", sig, A, dtype=np.uint64))

        def right(B, tau):  # B tau : (R, K, delta)
            return ring._m(np.einsum("kj,rju->rku", B, tau, dtype=np.uint64))

        def bil(sig, X, tau):  # sigma^T X tau : (R, delta)
            xt = ring._m(np.einsum("sj,rju->rsu", X, tau, dtype=np.uint64))
            return gr.dot(sig, xt, axis=-2)

        M = flp.M
        st = {}
        zeros = None
        for prover in SERVERS:
            sig, tau = fold(prover)
            if zeros is None:
                zeros = np.zeros((reps, K, gr.delta), dtype=np.uint64)
            if prover == Role.P0:
                if me == Role.P0:
                    A = ring.add(ld1, ld2)
                    B = ring.add(le1, le2)
                    st[prover] = Statement(_row_layout(gr, [left(sig, A)], M),
                                           _row_layout(gr, [right(B, tau)], M), scalar=False, mode="total")
                else:
                    claim = lde_j if me == Role.P2 else ring.add(lde_j, corr)
                    st[prover] = Statement(_row_layout(gr, [left(sig, ld)], M),
                                           _row_layout(gr, [right(le, tau)], M),
                                           bil(sig, claim, tau), scalar=False, mode="total")
            else:
                j = int(prover)
                if me == prover:
                    st[prover] = Statement(_row_layout(gr, [left(sig, ld), right(le, tau)], M),
                                           _row_layout(gr, [right(E, tau), left(sig, D)], M),
                                           scalar=False, mode="total")
                elif me == Role.P0:
                    ldj, lej = (ld1, le1) if j == 1 else (ld2, le2)
                    ldej, lfj = (lde1, lf1) if j == 1 else (lde2, lf2)
                    st[prover] = Statement(_row_layout(gr, [left(sig, ldj), right(lej, tau)], M),
                                           _row_layout(gr, [zeros, zeros], M),
                                           bil(sig, ring.add(ldej, lfj), tau), scalar=False, mode="total")
                else:
                    # the other evaluator holds D and E
                    claim = ring.neg(s_other) if j == 1 else ring.sub(DE, s_other)
                    st[prover] = Statement(_row_layout(gr, [zeros, zeros], M),
                                           _row_layout(gr, [right(E, tau), left(sig, D)], M),
                                           bil(sig, claim, tau), scalar=False, mode="total")
        zk_verify_all(ctx, flp, st, reps, lab)

    if me == Role.P0:
        return AngleShare(me, ring, lf1, lf2)
    return AngleShare(me, ring, lf_j, masked)
