import threading

import numpy as np
import pytest

from conftest import ROLES, config_for, run3, shares_of
from trimpc.context import AbortError, make_parties, run_parties, run_session
from trimpc.core import (ClientSession, client_receive_output, client_reconstruct, client_send_input,
                         client_share, jsh_prep_known, pi_frec, pi_jsh, pi_rec, pi_sh)
from trimpc.faults import Deviation, perturb
from trimpc.ring import get_ring
from trimpc.sharing import Role
from trimpc.transport import CLIENT, LoopbackHub, MsgType, Phase


def own(ctx, dealer, v, shape):
    return pi_sh(ctx, dealer, v if ctx.role == dealer else None, shape)


def honest_abort(res, corrupt):
    return bool(res.aborted_honest(corrupt))


@pytest.mark.parametrize("dealer", ROLES)
def test_share_then_open_is_identity(dealer, rng):
    ring = get_ring(64)
    v = ring.random(rng, (10_000,))
    res = run_session(lambda c: pi_rec(c, own(c, dealer, v, v.shape)), config_for())
    res.raise_first()
    for r in ROLES:
        assert np.array_equal(res.outputs[r], v)


def test_share_small_example():
    v = np.array([5], dtype=np.uint64)
    res = run_session(lambda c: pi_rec(c, own(c, Role.P2, v, (1,))), config_for())
    assert all(int(res.outputs[r][0]) == 5 for r in ROLES)


def test_share_shares_are_valid(rng):
    ring = get_ring(16)
    v = ring.random(rng, (50,))
    out, _ = run3(lambda c: own(c, Role.P1, v, v.shape), ell=16)
    assert np.array_equal(out, v)


def test_corrupt_p1_forwarding_wrong_beta_gamma_makes_p0_abort():
    v = np.arange(4, dtype=np.uint64)
    adv = Deviation(Role.P1, "sh.bg")
    res = run_session(lambda c: own(c, Role.P2, v, (4,)), config_for(), adversary=adv)
    assert adv.hits == 1
    assert isinstance(res.errors.get(Role.P0), AbortError)


def test_dealer_p0_sends_no_beta_gamma_message():
    v = np.arange(4, dtype=np.uint64)
    res = run_session(lambda c: own(c, Role.P0, v, (4,)), config_for())
    res.raise_first()
    p1 = res.per_party[Role.P1]
    assert p1.bytes(Phase.ONLINE, amortizable=False) == 0
    # P0 sends beta to both evaluators: 4 elements each
    assert res.per_party[Role.P0].bytes(Phase.ONLINE, amortizable=False) == 2 * 4 * 8


@pytest.mark.parametrize("point", ["sh.beta.P1", "sh.beta.P2"])
def test_dealer_p0_equivocating_is_caught(point):
    v = np.arange(4, dtype=np.uint64)
    adv = Deviation(Role.P0, point)
    res = run_session(lambda c: own(c, Role.P0, v, (4,)), config_for(), adversary=adv)
    assert honest_abort(res, Role.P0)


@pytest.mark.parametrize("pair", [(Role.P1, Role.P2), (Role.P0, Role.P1), (Role.P0, Role.P2)])
def test_joint_share_roundtrip(pair, rng):
    ring = get_ring(64)
    v = ring.random(rng, (20,))
    out, _ = run3(lambda c: pi_jsh(c, pair, v if c.role in pair else None, v.shape))
    assert np.array_equal(out, v)


def test_joint_share_p1_p2_gives_p0_consistent_value():
    v = np.array([4], dtype=np.uint64)
    res = run_session(lambda c: pi_jsh(c, (Role.P1, Role.P2), v if c.role != Role.P0 else None, (1,)),
                      config_for())
    res.raise_first()
    p0, p1 = res.outputs[Role.P0], res.outputs[Role.P1]
    assert p1.beta[0] == 4
    assert p0.c2[0] == get_ring(64).add(p1.beta, p1.c2)[0]


@pytest.mark.parametrize("pair,point,liar", [
    ((Role.P1, Role.P0), "jsh.beta", Role.P1),
    ((Role.P2, Role.P0), "jsh.beta", Role.P2),
    ((Role.P1, Role.P2), "jsh.bg", Role.P1),
])
def test_joint_share_lying_dealer_aborts(pair, point, liar):
    v = np.array([4, 9], dtype=np.uint64)
    adv = Deviation(liar, point)
    res = run_session(lambda c: pi_jsh(c, pair, v if c.role in pair else None, (2,)),
                      config_for(), adversary=adv)
    assert adv.hits == 1
    assert honest_abort(res, liar)


def test_joint_share_known_in_preprocessing_is_silent(rng):
    v = get_ring(64).random(rng, (8,))
    pair = (Role.P1, Role.P2)
    out, res = run3(lambda c: jsh_prep_known(c, pair, v if c.role in pair else None, v.shape))
    assert np.array_equal(out, v)
    assert res.stats.bytes() == 0


@pytest.mark.parametrize("target", ROLES)
def test_single_target_reconstruction(target, rng):
    ring = get_ring(64)
    v = ring.random(rng, (6,))
    sh = shares_of(v, ring, rng)
    res = run_session(lambda c: pi_rec(c, sh[c.role], target), config_for())
    res.raise_first()
    assert np.array_equal(res.outputs[target], v)
    assert all(res.outputs[r] is None for r in ROLES if r != target)


@pytest.mark.parametrize("corrupt,point", [
    (Role.P0, "rec.a1"), (Role.P0, "rec.h.a2"), (Role.P1, "rec.beta"), (Role.P1, "rec.h.a1"),
    (Role.P2, "rec.a2"), (Role.P2, "rec.h.beta"),
])
def test_reconstruction_value_hash_mismatch_aborts(corrupt, point, rng):
    ring = get_ring(64)
    v = ring.random(rng, (3,))
    sh = shares_of(v, ring, rng)
    adv = Deviation(corrupt, point)
    res = run_session(lambda c: pi_rec(c, sh[c.role]), config_for(), adversary=adv)
    assert adv.hits == 1
    assert honest_abort(res, corrupt)
    for r in ROLES:
        if r != corrupt and r in res.outputs:
            assert np.array_equal(res.outputs[r], v)


def test_fair_reconstruction_honest(rng):
    ring = get_ring(64)
    v = ring.random(rng, (5,))
    sh = shares_of(v, ring, rng)
    res = run_session(lambda c: pi_frec(c, sh[c.role]), config_for())
    res.raise_first()
    assert all(np.array_equal(res.outputs[r], v) for r in ROLES)


def test_abort_poisons_the_session():
    v = np.arange(3, dtype=np.uint64)
    adv = Deviation(Role.P1, "sh.bg")

    def prog(c):
        x = own(c, Role.P2, v, (3,))
        try:
            c.verify()
        except AbortError:
            pass
        return pi_rec(c, x)

    res = run_session(prog, config_for(timeout=3), adversary=adv)
    assert isinstance(res.errors.get(Role.P0), AbortError)


# ---------------------------------------------------------------------------
# client gateway

def _with_client(cfg, server_prog, client_prog, adversary=None):
    hub = LoopbackHub(roles=(0, 1, 2, CLIENT))
    parties = make_parties(cfg, 0, hub=hub, adversary=adversary)
    cl = ClientSession(hub.endpoint(CLIENT, timeout=cfg.timeout), parties[0].ring)
    box = {}

    def client_body():
        try:
            box["out"] = client_prog(cl)
        except Exception as exc:  # noqa: BLE001
            box["err"] = exc

    t = threading.Thread(target=client_body, daemon=True)
    t.start()
    res = run_parties(parties, server_prog)
    t.join()
    return res, box


def test_client_input_and_output_roundtrip(rng):
    ring = get_ring(64)
    v = ring.random(rng, (7,))
    cfg = config_for(timeout=5)

    def servers(c):
        x = client_share(c, v.shape)
        client_reconstruct(c, x)
        return pi_rec(c, x)

    def client(cl):
        client_send_input(cl, v)
        return client_receive_output(cl, v.shape)

    res, box = _with_client(cfg, servers, client)
    res.raise_first()
    assert np.array_equal(box["out"], v)
    assert all(np.array_equal(res.outputs[r], v) for r in ROLES)


@pytest.mark.parametrize("corrupt", [Role.P1, Role.P2])
def test_client_detects_bad_mask_share(corrupt, rng):
    v = get_ring(64).random(rng, (3,))
    cfg = config_for(timeout=2)
    res, box = _with_client(cfg, lambda c: client_share(c, v.shape), lambda cl: client_send_input(cl, v),
                            Deviation(corrupt, "csh.alpha"))
    assert isinstance(box.get("err"), AbortError)


@pytest.mark.parametrize("corrupt", ROLES)
def test_client_output_survives_one_bad_commitment(corrupt, rng):
    ring = get_ring(64)
    v = ring.random(rng, (4,))
    sh = shares_of(v, ring, rng)
    cfg = config_for(timeout=5)
    res, box = _with_client(cfg, lambda c: client_reconstruct(c, sh[c.role]),
                            lambda cl: client_receive_output(cl, v.shape),
                            Deviation(corrupt, "crec.commit"))
    assert "err" not in box
    assert np.array_equal(box["out"], v)


@pytest.mark.parametrize("corrupt", ROLES)
def test_client_output_survives_one_bad_opening(corrupt, rng):
    ring = get_ring(64)
    v = ring.random(rng, (4,))
    sh = shares_of(v, ring, rng)
    adv = Deviation(corrupt, "crec.open", lambda opens: [perturb(o) for o in opens])
    res, box = _with_client(config_for(timeout=5), lambda c: client_reconstruct(c, sh[c.role]),
                            lambda cl: client_receive_output(cl, v.shape), adv)
    assert np.array_equal(box["out"], v)


def test_malformed_client_input_aborts():
    cfg = config_for(ell=16, timeout=2)

    def client(cl):
        for s in (Role.P1, Role.P2):
            cl.recv(s, (2,))
        cl.recv_raw(Role.P0, MsgType.CLIENT_HASH)
        for j in (Role.P1, Role.P2):
            cl.net.send(int(j), MsgType.CLIENT_DATA, Phase.ONLINE, b"\x01\x02\x03")

    res, _ = _with_client(cfg, lambda c: client_share(c, (2,)), client)
    assert isinstance(res.errors.get(Role.P1), AbortError)
