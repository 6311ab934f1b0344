"""Input sharing, joint sharing, reconstruction and fair reconstruction.

All functions are called by every server with the same public arguments
(shape, dealer, pair); private inputs are ``None`` at roles that do not know
them.
"""
from __future__ import annotations

import hashlib

import numpy as np

from .context import AbortError, FairAbort, Party
from .crypto import Opening, commit, verify_opening
from .ring import Ring
from .sharing import EVALUATORS, Role, RssShare, jsh_table_share, other_evaluator
from .transport import CLIENT, MsgType, Phase


def _shape(shape) -> tuple:
    return tuple(np.atleast_1d(shape).tolist()) if not isinstance(shape, tuple) else shape


# sharing by one dealer

def sh_masks(ctx: Party, dealer: Role, shape, ring: Ring | None = None, label: str | None = None):
    """Preprocessing of the sharing protocol: (alpha_1, alpha_2, gamma) where known, else None."""
    ring = ring or ctx.ring
    shape = _shape(shape)
    lab = label or ctx.op("sh")
    if dealer == Role.P0:
        keys = ("k01", "k02", "kP")
    elif dealer == Role.P1:
        keys = ("k01", "kP", "k12")
    else:
        keys = ("kP", "k02", "k12")
    out = []
    for key in keys:
        out.append(ctx.rand(key, lab, shape, ring) if ctx.keys.has(key) else None)
    return tuple(out)


def pi_sh(ctx: Party, dealer: Role, v, shape, ring: Ring | None = None) -> RssShare:
    """Share a value known only to ``dealer``."""
    ring = ring or ctx.ring
    shape = _shape(shape)
    dealer = Role(dealer)
    me = ctx.role
    with ctx.prep():
        a1, a2, g = sh_masks(ctx, dealer, shape, ring)
    lab = ctx.op("sh.check")
    if dealer == Role.P0:
        if me == Role.P0:
            beta = ring.add(ring.add(ring.wrap(v), a1), a2)
            beta = ctx.deviate("sh.beta", beta)
            for j in EVALUATORS:
                ctx.send(j, ctx.deviate(f"sh.beta.{j.name}", beta), ring)
        ctx.round()
        if me != Role.P0:
            beta = ctx.recv(Role.P0, shape, ring)
        # P1 and P2 cross-check the beta they were dealt
        for s, r in ((Role.P1, Role.P2), (Role.P2, Role.P1)):
            ctx.expect_equal(s, r, beta if me in (s, r) else None, lab, ring)
        if me == Role.P0:
            return RssShare(me, ring, a1, a2, ring.add(beta, g))
        return RssShare(me, ring, a1 if me == Role.P1 else a2, beta, g)

    other = other_evaluator(dealer)
    if me == dealer:
        beta = ring.add(ring.add(ring.wrap(v), a1), a2)
        ctx.send(other, ctx.deviate("sh.beta", beta), ring)
    ctx.round()
    if me == other:
        beta = ctx.recv(dealer, shape, ring)
    return _finish_evaluator_share(ctx, ring, shape, a1, a2, g, beta if me != Role.P0 else None, lab)


def _finish_evaluator_share(ctx, ring, shape, a1, a2, g, beta, lab) -> RssShare:
    """P1 forwards beta+gamma to P0 (no extra round), P2 vouches for it by hash."""
    me = ctx.role
    if me == Role.P1:
        ctx.send(Role.P0, ctx.deviate("sh.bg", ring.add(beta, g)), ring)
    if me == Role.P0:
        bg = ctx.recv(Role.P1, shape, ring)
        ctx.expect_equal(Role.P2, Role.P0, bg, lab, ring)
        return RssShare(me, ring, a1, a2, bg)
    ctx.expect_equal(Role.P2, Role.P0, ring.add(beta, g) if me == Role.P2 else None, lab, ring)
    return RssShare(me, ring, a1 if me == Role.P1 else a2, beta, g)


# joint sharing

def jsh_prep_known(ctx: Party, pair, v, shape, ring: Ring | None = None) -> RssShare:
    """Joint sharing of a value both members of ``pair`` know in preprocessing (no messages)."""
    ring = ring or ctx.ring
    shape = _shape(shape)
    lab = ctx.op("jsh.t")
    r = ctx.rand("kP", lab, shape, ring)
    return jsh_table_share(ctx.role, tuple(Role(p) for p in pair), v if ctx.role in pair else None, r, ring)


def jsh12_gamma(ctx: Party, shape, ring: Ring | None = None):
    """Preprocessing for an online (P1, P2) joint sharing: gamma from k12."""
    ring = ring or ctx.ring
    lab = ctx.op("jsh12")
    return ctx.rand("k12", lab, _shape(shape), ring) if ctx.role != Role.P0 else None


def jsh12_online(ctx: Party, v, gamma, shape, ring: Ring | None = None) -> RssShare:
    """P1 and P2 both know v: alpha = 0, beta = v; P0 learns v + gamma from P1 and a hash from P2."""
    ring = ring or ctx.ring
    shape = _shape(shape)
    lab = ctx.op("jsh12.check")
    z = np.zeros(shape, dtype=np.uint64)
    me = ctx.role
    if me == Role.P1:
        ctx.send(Role.P0, ctx.deviate("jsh.bg", ring.add(v, gamma)), ring)
    if me == Role.P0:
        bg = ctx.recv(Role.P1, shape, ring)
        ctx.expect_equal(Role.P2, Role.P0, bg, lab, ring)
        return RssShare(me, ring, z, z.copy(), bg)
    ctx.expect_equal(Role.P2, Role.P0, ring.add(v, gamma) if me == Role.P2 else None, lab, ring)
    return RssShare(me, ring, z, ring.wrap(v), gamma)


def pi_jsh(ctx: Party, pair, v, shape, ring: Ring | None = None) -> RssShare:
    """Joint sharing of a value known to both members of ``pair`` in the online phase."""
    ring = ring or ctx.ring
    shape = _shape(shape)
    pair = tuple(Role(p) for p in pair)
    if set(pair) == {Role.P1, Role.P2}:
        with ctx.prep():
            g = jsh12_gamma(ctx, shape, ring)
        return jsh12_online(ctx, v, g, shape, ring)
    dealer = pair[0] if pair[0] != Role.P0 else pair[1]
    other = other_evaluator(dealer)
    with ctx.prep():
        a1, a2, g = sh_masks(ctx, dealer, shape, ring)
    lab = ctx.op("jsh.check")
    me = ctx.role
    beta = None
    if me in (dealer, Role.P0):
        beta = ring.add(ring.add(ring.wrap(v), a1), a2)
    if me == dealer:
        ctx.send(other, ctx.deviate("jsh.beta", beta), ring)
    ctx.round()
    if me == other:
        beta = ctx.recv(dealer, shape, ring)
    # the co-holder P0 vouches for beta towards the receiving evaluator
    ctx.expect_equal(Role.P0, other, beta if me in (Role.P0, other) else None, lab, ring)
    return _finish_evaluator_share(ctx, ring, shape, a1, a2, g, beta if me != Role.P0 else None, lab)


# reconstruction

def _digest(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def pi_rec(ctx: Party, x: RssShare, target: Role | None = None) -> np.ndarray | None:
    """Open ``x`` towards every server (``target`` None) or towards one server."""
    ctx.verify()
    ring, shape, me = x.ring, x.shape, ctx.role
    targets = (Role.P0, Role.P1, Role.P2) if target is None else (Role(target),)
    # (receiver, value sender, hash sender, which component)
    plan = {Role.P1: (Role.P2, Role.P0, "a2"), Role.P2: (Role.P0, Role.P1, "a1"),
            Role.P0: (Role.P1, Role.P2, "beta")}

    def component(name):
        if name == "a1":
            return x.alpha_share(Role.P1)
        if name == "a2":
            return x.alpha_share(Role.P2)
        return x.beta

    for recv_role in targets:
        vs, hs, comp = plan[recv_role]
        if me == vs:
            ctx.send(recv_role, ctx.deviate(f"rec.{comp}", component(comp)), ring)
        if me == hs:
            ctx.send_hash(recv_role, ring.to_bytes(ctx.deviate(f"rec.h.{comp}", component(comp))))
    ctx.round()
    if me not in targets:
        return None
    vs, hs, comp = plan[me]
    val = ctx.recv(vs, shape, ring)
    h = ctx.recv_hash(hs)
    if _digest(ring.to_bytes(val)) != h:
        ctx.abort(f"reconstruction: value from {vs.name} disagrees with hash from {hs.name}")
    if me == Role.P0:
        return ring.sub(ring.sub(val, x.c0), x.c1)
    if me == Role.P1:
        return ring.sub(ring.sub(x.beta, x.c0), val)
    return ring.sub(ring.sub(x.beta, val), x.c0)


# fair reconstruction

_CONTINUE = b"\x00"
_ABORT = b"\x01"


def _commit_arr(ctx: Party, key: str, label: str, arr, ring: Ring):
    return commit(ring.to_bytes(arr), ctx.salt(key, label))


def _frec_session_pair(ctx: Party):
    """One (r1, r2) pair per session, committed towards the evaluator that lacks it."""
    if "frec.r" in ctx.cache:
        return ctx.cache["frec.r"]
    mine: dict[Role, object] = {}
    with ctx.prep():
        for j in EVALUATORS:
            key = f"k0{int(j)}"
            if ctx.keys.has(key):
                rj = ctx.prf.bytes(key, "frec.r", 16)
                mine[j] = commit(rj, ctx.salt(key, "frec.r"))
        state = {"own": mine, "theirs": {}}
        ctx.cache["frec.r"] = state
    return state


def _frec_prep(ctx: Party, x: RssShare, lab: str):
    """Commit to [alpha]_1, [alpha]_2 (and the session r pair) towards the evaluator lacking them.

    Returns the agreed digests keyed by evaluator and this party's own
    commitment objects.
    """
    ring, me = x.ring, ctx.role
    state = _frec_session_pair(ctx)
    first = not state.get("sent")
    coms, digests = {}, {}
    with ctx.prep():
        for j in EVALUATORS:
            key = f"k0{int(j)}"
            if ctx.keys.has(key):
                coms[j] = _commit_arr(ctx, key, lab + f".a{int(j)}", x.alpha_share(j), ring)
                digests[j] = coms[j].digest
        for j in EVALUATORS:
            if me in (Role.P0, j):
                payload = coms[j].digest + (state["own"][j].digest if first else b"")
                ctx.send_bytes(other_evaluator(j), payload, MsgType.COMMIT, amortizable=True)
        ctx.round()
        if me != Role.P0:
            j = other_evaluator(me)
            a = ctx.recv_bytes(Role.P0, MsgType.COMMIT)
            b = ctx.recv_bytes(j, MsgType.COMMIT)
            if a != b or len(a) != (64 if first else 32):
                ctx.abort("fair reconstruction: preprocessing commitments disagree")
            digests[j] = a[:32]
            if first:
                state["theirs"][j] = a[32:]
        state["sent"] = True
    return digests, coms, state


def _valid_abort(sig: bytes, digest: bytes | None) -> bool:
    if not sig.startswith(_ABORT) or digest is None:
        return False
    try:
        return verify_opening(digest, Opening.from_bytes(sig[1:]))
    except ValueError:
        return False


def _frec_decide(ctx: Party, x: RssShare, lab: str):
    """Commit-phase rounds shared by server and client fair reconstruction.

    Returns (agreed digests, local commitment objects).  Raises FairAbort
    when the session must stop without anyone learning the value.
    """
    ctx.verify()
    ring, me = x.ring, ctx.role
    digests, coms, state = _frec_prep(ctx, x, lab)
    # round 1: commitment on beta towards P0
    if me != Role.P0:
        cb = _commit_arr(ctx, "k12", lab + ".b", x.beta, ring)
        coms["b"] = cb
        digests["b"] = cb.digest
        ctx.send_bytes(Role.P0, ctx.deviate("frec.commit_beta", cb.digest), MsgType.COMMIT)
    ctx.round()
    signals = {}
    if me == Role.P0:
        c1 = ctx.recv_bytes(Role.P1, MsgType.COMMIT)
        c2 = ctx.recv_bytes(Role.P2, MsgType.COMMIT)
        ok = c1 == c2 and len(c1) == 32
        digests["b"] = c1
        for j in EVALUATORS:
            other = other_evaluator(j)
            # proof of origin: the opening of the r value the receiver cannot know
            proof = state["own"][other].opening.to_bytes()
            signals[j] = _CONTINUE if ok else _ABORT + proof
        signals = ctx.deviate("frec.signal", signals)
        for j in EVALUATORS:
            ctx.send_bytes(j, signals[j], MsgType.SIGNAL)
    # round 2: P0's verdict
    ctx.round()
    if me == Role.P0:
        ctx.round()
        if not ok:
            ctx.abort("fair reconstruction: beta commitments disagree", FairAbort)
        return digests, coms
    mine = ctx.recv_bytes(Role.P0, MsgType.SIGNAL)
    other = other_evaluator(me)
    ctx.send_bytes(other, ctx.deviate("frec.forward", mine), MsgType.SIGNAL)
    # round 3: evaluators exchange what P0 told them
    ctx.round()
    fwd = ctx.recv_bytes(other, MsgType.SIGNAL)
    theirs_r = state["theirs"].get(other)
    own_r = state["own"][me].digest
    if _valid_abort(mine, theirs_r) or _valid_abort(fwd, own_r):
        ctx.abort("fair reconstruction: P0 reported inconsistent commitments", FairAbort)
    return digests, coms


def _pick_opening(ctx: Party, candidates, digest: bytes, ring: Ring, shape, what: str):
    for raw in candidates:
        try:
            op = Opening.from_bytes(raw)
        except ValueError:
            continue
        if verify_opening(digest, op):
            try:
                return ring.from_bytes(op.value, shape)
            except ValueError:
                continue
    ctx.abort(f"fair reconstruction: no valid opening for {what}", FairAbort)


def pi_frec(ctx: Party, x: RssShare) -> np.ndarray:
    """Fair reconstruction towards all servers: all honest servers output or none do."""
    ring, shape, me = x.ring, x.shape, ctx.role
    lab = ctx.op("frec")
    digests, coms = _frec_decide(ctx, x, lab)
    # round 4: every missing component is opened by both of its holders
    sends = {}
    if me == Role.P0:
        sends = {Role.P2: coms[Role.P1].opening, Role.P1: coms[Role.P2].opening}
    elif me == Role.P1:
        sends = {Role.P2: coms[Role.P1].opening, Role.P0: coms["b"].opening}
    else:
        sends = {Role.P1: coms[Role.P2].opening, Role.P0: coms["b"].opening}
    sends = ctx.deviate("frec.open", {k: v.to_bytes() for k, v in sends.items()})
    for peer in (Role.P0, Role.P1, Role.P2):
        if peer in sends:
            ctx.send_bytes(peer, sends[peer], MsgType.OPEN)
    ctx.round()
    holders = {Role.P0: (Role.P1, Role.P2), Role.P1: (Role.P0, Role.P2), Role.P2: (Role.P0, Role.P1)}
    got = [ctx.recv_bytes(p, MsgType.OPEN) for p in holders[me]]
    if me == Role.P0:
        beta = _pick_opening(ctx, got, digests["b"], ring, shape, "beta")
        return ring.sub(ring.sub(beta, x.c0), x.c1)
    missing = other_evaluator(me)
    a_other = _pick_opening(ctx, got, digests[missing], ring, shape, f"[alpha]_{int(missing)}")
    return ring.sub(ring.sub(x.beta, x.c0), a_other)


# outsourced parties

class ClientSession:
    """A data owner or query client talking to the three servers."""

    def __init__(self, endpoint, ring: Ring, phase=Phase.ONLINE):
        self.net = endpoint
        self.ring = ring
        self.phase = phase

    def send(self, server, arr, mtype=MsgType.CLIENT_DATA):
        self.net.send(int(server), mtype, self.phase, self.ring.to_bytes(arr))

    def recv_raw(self, server, mtype):
        return self.net.recv(int(server), mtype, self.phase)

    def recv(self, server, shape, mtype=MsgType.CLIENT_DATA):
        return self.ring.from_bytes(self.recv_raw(server, mtype), _shape(shape))


def client_share(ctx: Party, shape, ring: Ring | None = None) -> RssShare:
    """Server side of client input sharing."""
    ring = ring or ctx.ring
    shape = _shape(shape)
    me = ctx.role
    lab = ctx.op("csh")
    with ctx.prep():
        a1 = ctx.rand("k01", lab, shape, ring) if ctx.keys.has("k01") else None
        a2 = ctx.rand("k02", lab, shape, ring) if ctx.keys.has("k02") else None
        g = ctx.rand("k12", lab, shape, ring) if ctx.keys.has("k12") else None
    if me == Role.P1:
        ctx.send_bytes(CLIENT, ring.to_bytes(ctx.deviate("csh.alpha", a1)), MsgType.CLIENT_DATA)
    elif me == Role.P2:
        ctx.send_bytes(CLIENT, ring.to_bytes(ctx.deviate("csh.alpha", a2)), MsgType.CLIENT_DATA)
    else:
        ctx.send_bytes(CLIENT, _digest(ring.to_bytes(a1) + ring.to_bytes(a2)), MsgType.CLIENT_HASH,
                       amortizable=True)
    ctx.round()
    check = ctx.op("csh.check")
    beta = None
    if me != Role.P0:
        try:
            beta = ring.from_bytes(ctx.recv_bytes(CLIENT, MsgType.CLIENT_DATA), shape)
        except ValueError as exc:
            ctx.abort(f"malformed input from the client: {exc}")
        for s, r in ((Role.P1, Role.P2), (Role.P2, Role.P1)):
            ctx.expect_equal(s, r, beta, check, ring)
    else:
        for s, r in ((Role.P1, Role.P2), (Role.P2, Role.P1)):
            ctx.expect_equal(s, r, None, check, ring)
    ctx.round()
    return _finish_evaluator_share(ctx, ring, shape, a1, a2, g, beta, check)


def client_send_input(cl: ClientSession, v) -> None:
    """Client side of input sharing."""
    ring = cl.ring
    v = ring.wrap(v)
    a1 = cl.recv(Role.P1, v.shape)
    a2 = cl.recv(Role.P2, v.shape)
    h = cl.recv_raw(Role.P0, MsgType.CLIENT_HASH)
    if _digest(ring.to_bytes(a1) + ring.to_bytes(a2)) != h:
        raise AbortError("client: mask shares disagree with P0's hash", CLIENT)
    beta = ring.add(ring.add(v, a1), a2)
    for j in EVALUATORS:
        cl.send(j, beta)


def client_reconstruct(ctx: Party, x: RssShare) -> None:
    """Server side of fair output delivery to the client."""
    lab = ctx.op("crec")
    digests, coms = _frec_decide(ctx, x, lab)
    me = ctx.role
    if me == Role.P0:
        own = {"a1": coms[Role.P1].digest, "a2": coms[Role.P2].digest, "b": digests["b"]}
    elif me == Role.P1:
        own = {"a1": coms[Role.P1].digest, "a2": digests[Role.P2], "b": coms["b"].digest}
    else:
        own = {"a1": digests[Role.P1], "a2": coms[Role.P2].digest, "b": coms["b"].digest}
    payload = ctx.deviate("crec.commit", own["a1"] + own["a2"] + own["b"])
    ctx.send_bytes(CLIENT, payload, MsgType.CLIENT_COMMIT, amortizable=True)
    ctx.round()
    opens = []
    if me in (Role.P0, Role.P1):
        opens.append(coms[Role.P1].opening.to_bytes())
    if me in (Role.P0, Role.P2):
        opens.append(coms[Role.P2].opening.to_bytes())
    if me in EVALUATORS:
        opens.append(coms["b"].opening.to_bytes())
    opens = ctx.deviate("crec.open", opens)
    for o in opens:
        ctx.send_bytes(CLIENT, o, MsgType.CLIENT_OPEN)
    ctx.round()


def client_receive_output(cl: ClientSession, shape) -> np.ndarray:
    """Client side: majority commitments, then accept matching openings."""
    ring = cl.ring
    shape = _shape(shape)
    coms = {s: cl.recv_raw(s, MsgType.CLIENT_COMMIT) for s in (Role.P0, Role.P1, Role.P2)}
    agreed = []
    for k in range(3):
        votes = [c[32 * k:32 * (k + 1)] for c in coms.values() if len(c) == 96]
        best = max(set(votes), key=votes.count) if votes else None
        if best is None or votes.count(best) < 2:
            raise AbortError("client: no majority commitment", CLIENT)
        agreed.append(best)
    got = {Role.P0: [cl.recv_raw(Role.P0, MsgType.CLIENT_OPEN) for _ in range(2)],
           Role.P1: [cl.recv_raw(Role.P1, MsgType.CLIENT_OPEN) for _ in range(2)],
           Role.P2: [cl.recv_raw(Role.P2, MsgType.CLIENT_OPEN) for _ in range(2)]}
    cands = {0: got[Role.P0][0:1] + got[Role.P1][0:1],
             1: got[Role.P0][1:2] + got[Role.P2][0:1],
             2: got[Role.P1][1:2] + got[Role.P2][1:2]}
    vals = []
    for k in range(3):
        for raw in cands[k]:
            try:
                op = Opening.from_bytes(raw)
            except ValueError:
                continue
            if verify_opening(agreed[k], op):
                vals.append(ring.from_bytes(op.value, shape))
                break
        else:
            raise AbortError("client: no opening matches the agreed commitment", CLIENT)
    a1, a2, beta = vals
    return ring.sub(ring.sub(beta, a1), a2)
