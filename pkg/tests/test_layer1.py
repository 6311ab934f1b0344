import numpy as np
import pytest

from conftest import ROLES, config_for, run3, shares_of
from trimpc.context import AbortError, run_session
from trimpc.faults import Deviation
from trimpc.layer1 import mult_online, mult_prep, pi_and, pi_bit2a, pi_bitext, pi_mult
from trimpc.ring import get_ring
from trimpc.sharing import Role, make_rss, public_share
from trimpc.transport import Phase

BOOL = get_ring(1)


def prep_identities(ax, ay, gx, gy, psi, ring):
    """Gamma, chi and the product they certify, straight from the defining formulas."""
    Gamma = ring.mul(ax, ay)
    chi = ring.add(ring.sub(ring.add(ring.mul(gx, ay), ring.mul(gy, ax)), Gamma), psi)
    f = ring.sub(ring.add(ring.mul(gx, gy), psi), chi)
    return Gamma, chi, f


def test_prep_identities_example():
    ring = get_ring(64)
    Gamma, chi, f = prep_identities(*[np.uint64(v) for v in (1, 2, 3, 4, 5)], ring)
    assert (int(Gamma), int(chi), int(f)) == (2, 13, 4)
    assert int(f) == (3 - 1) * (4 - 2)


def _prep_material(ell, n, seed):
    ring = get_ring(ell)
    rng = np.random.default_rng(seed)
    x, y = ring.random(rng, (n,)), ring.random(rng, (n,))
    sx, sy = shares_of(x, ring, rng), shares_of(y, ring, rng)
    res = run_session(lambda c: mult_prep(c, sx[c.role], sy[c.role]), config_for(ell))
    res.raise_first()
    return ring, sx, sy, res.outputs


@pytest.mark.parametrize("ell", [16, 64])
def test_prep_material_satisfies_identities(ell):
    ring, sx, sy, mp = _prep_material(ell, 1000, ell)
    ax = ring.add(sx[Role.P0].c0, sx[Role.P0].c1)
    ay = ring.add(sy[Role.P0].c0, sy[Role.P0].c1)
    gx, gy = sx[Role.P1].c2, sy[Role.P1].c2
    p0, p1, p2 = mp[Role.P0], mp[Role.P1], mp[Role.P2]
    assert np.array_equal(p1.psi, p2.psi)
    Gamma, chi, f = prep_identities(ax, ay, gx, gy, p1.psi, ring)
    assert np.array_equal(p0.gamma_xy, Gamma)
    assert np.array_equal(p0.chi, chi)
    assert np.array_equal(ring.add(p1.gamma_xy, p2.gamma_xy), Gamma)
    assert np.array_equal(ring.add(p1.chi, p2.chi), chi)
    assert np.array_equal(ring.add(p1.psi_share, p2.psi_share), p1.psi)
    assert np.array_equal(f, ring.mul(ring.sub(gx, ax), ring.sub(gy, ay)))


def test_prep_with_zero_masks_is_all_zero():
    ring = get_ring(64)
    z = np.zeros(4, dtype=np.uint64)
    sh = dict(zip(ROLES, make_rss(z, z, z, z, ring)))
    res = run_session(lambda c: mult_prep(c, sh[c.role], sh[c.role]), config_for())
    res.raise_first()
    p0, p1 = res.outputs[Role.P0], res.outputs[Role.P1]
    assert not p0.gamma_xy.any()
    assert np.array_equal(p0.chi, p1.psi)


def test_zero_masks_give_plain_product():
    ring = get_ring(64)
    x, y = np.array([2], dtype=np.uint64), np.array([3], dtype=np.uint64)
    z = np.zeros(1, dtype=np.uint64)
    sx = dict(zip(ROLES, make_rss(x, z, z, z, ring)))
    sy = dict(zip(ROLES, make_rss(y, z, z, z, ring)))

    def prog(c):
        out = public_share(c.role, ring, np.zeros(1, dtype=np.uint64))
        return mult_online(c, sx[c.role], sy[c.role], mult_prep(c, sx[c.role], sy[c.role], out=out))

    res = run_session(prog, config_for())
    res.raise_first()
    assert int(res.outputs[Role.P1].beta[0]) == 6
    assert int(res.outputs[Role.P2].beta[0]) == 6


@pytest.mark.parametrize("ell", [8, 16, 64])
def test_mult_matches_plaintext(ell, rng):
    ring = get_ring(ell)
    x, y = ring.random(rng, (2000,)), ring.random(rng, (2000,))
    out, _ = run3(pi_mult, [shares_of(x, ring, rng), shares_of(y, ring, rng)], ell=ell)
    assert np.array_equal(out, ring.mul(x, y))


def test_mult_costs(rng):
    ring = get_ring(64)
    n = 1 << 10
    x, y = ring.random(rng, (n,)), ring.random(rng, (n,))
    _, res = run3(pi_mult, [shares_of(x, ring, rng), shares_of(y, ring, rng)])
    s = res.stats
    assert s.bytes(Phase.ONLINE, amortizable=False) == 3 * 8 * n
    assert s.bytes(Phase.PRE, amortizable=False) == 3 * 8 * n
    assert s.round_count(Phase.ONLINE) == 1
    assert s.round_count(Phase.VERIFY) == 2


@pytest.mark.parametrize("corrupt,point", [
    (Role.P0, "zk.lde2"),   # P0's share of the masked product that becomes [Gamma]
    (Role.P1, "mult.bz"), (Role.P2, "mult.bz"),
    (Role.P1, "mult.bg"),
    (Role.P0, "mult.bstar"),
])
def test_mult_deviations_abort(corrupt, point, rng):
    ring = get_ring(64)
    x, y = ring.random(rng, (5,)), ring.random(rng, (5,))
    sx, sy = shares_of(x, ring, rng), shares_of(y, ring, rng)
    adv = Deviation(corrupt, point)
    res = run_session(lambda c: pi_mult(c, sx[c.role], sy[c.role]), config_for(timeout=5), adversary=adv)
    assert adv.hits >= 1
    assert res.aborted_honest(corrupt)


@pytest.mark.parametrize("kind", ["dot", "mm"])
def test_product_kinds(kind, rng):
    ring = get_ring(64)
    if kind == "dot":
        x, y = ring.random(rng, (6, 9)), ring.random(rng, (6, 9))
        expect = ring._m(np.multiply(x, y, dtype=np.uint64).sum(-1, dtype=np.uint64))
    else:
        x, y = ring.random(rng, (4, 7)), ring.random(rng, (7, 3))
        expect = ring._m(np.matmul(x, y, dtype=np.uint64))
    out, res = run3(lambda c, a, b: pi_mult(c, a, b, kind), [shares_of(x, ring, rng), shares_of(y, ring, rng)])
    assert np.array_equal(out, expect)
    assert res.stats.bytes(Phase.ONLINE, amortizable=False) == 3 * 8 * expect.size


def test_and_truth_table(rng):
    a = np.array([0, 0, 1, 1], dtype=np.uint64)
    b = np.array([0, 1, 0, 1], dtype=np.uint64)
    out, _ = run3(pi_and, [shares_of(a, BOOL, rng), shares_of(b, BOOL, rng)])
    assert out.tolist() == [0, 0, 0, 1]


# ---------------------------------------------------------------------------
# bit extraction

@pytest.mark.parametrize("variant", ["ppa", "gc"])
def test_bitext_exhaustive_8_bits(variant, rng):
    ring = get_ring(8)
    v = np.arange(256, dtype=np.uint64)
    out, _ = run3(lambda c, x: pi_bitext(c, x, variant), [shares_of(v, ring, rng)], ell=8)
    assert np.array_equal(out, (v >= 128).astype(np.uint64))


@pytest.mark.parametrize("variant", ["ppa", "gc"])
def test_bitext_examples(variant, rng):
    ring = get_ring(64)
    v = ring.wrap(np.array([-1, 0, 1, 2**63, 2**63 - 1], dtype=object))
    out, _ = run3(lambda c, x: pi_bitext(c, x, variant), [shares_of(v, ring, rng)])
    assert out.tolist() == [1, 0, 0, 1, 0]


def test_bitext_variants_agree(rng):
    ring = get_ring(64)
    v = ring.random(rng, (300,))
    sh = shares_of(v, ring, rng)
    a, _ = run3(lambda c, x: pi_bitext(c, x, "ppa"), [sh])
    b, _ = run3(lambda c, x: pi_bitext(c, x, "gc"), [sh])
    assert np.array_equal(a, b)
    assert np.array_equal(a, ring.msb(v))


@pytest.mark.parametrize("ell", [8, 16, 32, 64])
def test_bitext_online_rounds(ell, rng):
    ring = get_ring(ell)
    v = ring.random(rng, (4,))
    _, ppa = run3(lambda c, x: pi_bitext(c, x, "ppa"), [shares_of(v, ring, rng)], ell=ell)
    _, gc = run3(lambda c, x: pi_bitext(c, x, "gc"), [shares_of(v, ring, rng)], ell=ell)
    assert ppa.stats.round_count(Phase.ONLINE) == 1 + (ell.bit_length() - 1)
    assert gc.stats.round_count(Phase.ONLINE) == 2


def test_gc_msb_one_reaches_evaluator_unmasked_when_masks_vanish():
    # with r1 = r2 = 0 the evaluator's clear bit is the msb itself
    from trimpc.garble import build_msb_circuit
    circ = build_msb_circuit(8)
    bits = lambda v: ((np.uint64(v) >> np.arange(8, dtype=np.uint64)) & np.uint64(1))[None]  # noqa: E731
    out = circ.evaluate({"u1": bits(200), "u2": bits(0), "u3": bits(0),
                         "u4": np.zeros((1, 1), dtype=np.uint8), "u5": np.zeros((1, 1), dtype=np.uint8)})
    assert int(out[0, 0]) == 1


@pytest.mark.parametrize("corrupt,point", [
    (Role.P1, "gc.payload"), (Role.P0, "gc.open"), (Role.P1, "gc.u1"), (Role.P2, "gc.out"),
])
def test_gc_tampering_aborts(corrupt, point, rng):
    ring = get_ring(16)
    v = ring.random(rng, (6,))
    sh = shares_of(v, ring, rng)
    adv = Deviation(corrupt, point)
    res = run_session(lambda c: pi_bitext(c, sh[c.role], "gc"), config_for(16, timeout=5), adversary=adv)
    assert adv.hits == 1
    assert res.aborted_honest(corrupt)


def test_gc_tampered_table_is_refused_by_the_evaluator(rng):
    ring = get_ring(16)
    v = ring.random(rng, (3,))
    sh = shares_of(v, ring, rng)

    def flip_row(payload):
        out = bytearray(payload)
        out[100] ^= 4
        return bytes(out)

    adv = Deviation(Role.P1, "gc.payload", flip_row)
    res = run_session(lambda c: pi_bitext(c, sh[c.role], "gc"), config_for(16, timeout=5), adversary=adv)
    assert isinstance(res.errors.get(Role.P2), AbortError)


# ---------------------------------------------------------------------------
# bit to arithmetic

@pytest.mark.parametrize("a1,a2,beta", [(a1, a2, bt) for a1 in (0, 1) for a2 in (0, 1) for bt in (0, 1)])
def test_bit2a_all_component_patterns(a1, a2, beta, rng):
    b = beta ^ a1 ^ a2
    g = int(rng.integers(0, 2))
    arr = lambda v: np.array([v], dtype=np.uint64)  # noqa: E731
    sh = dict(zip(ROLES, make_rss(arr(b), arr(a1), arr(a2), arr(g), BOOL)))
    assert int(sh[Role.P1].beta[0]) == beta
    out, _ = run3(pi_bit2a, [sh])
    assert int(out[0]) == b


@pytest.mark.parametrize("ell", [8, 64])
def test_bit2a_random(ell, rng):
    bits = rng.integers(0, 2, 200).astype(np.uint64)
    out, res = run3(pi_bit2a, [shares_of(bits, BOOL, rng)], ell=ell)
    assert np.array_equal(out, bits)
    assert res.stats.round_count(Phase.ONLINE) == 1


def test_bit2a_zero_shares(rng):
    z = np.zeros(3, dtype=np.uint64)
    sh = dict(zip(ROLES, make_rss(z, z, z, z, BOOL)))
    out, _ = run3(pi_bit2a, [sh])
    assert not out.any()
