import numpy as np
import pytest

from conftest import config_for, run3, shares_of
from trimpc.context import run_session
from trimpc.faults import Deviation
from trimpc.layer2 import (pi_compare, pi_dotp, pi_dotp_tr, pi_matmul_tr, pi_relu, pi_sig, pi_trunc,
                           pi_truncpair)
from trimpc.ml import sig_fixed
from trimpc.ring import ashr_array, decode_array, encode_array, get_ring
from trimpc.sharing import Role, reconstruct
from trimpc.transport import Phase

D = 13
R64 = get_ring(64)
ULP = 2.0 ** -D


def dot_oracle(x, y, ring):
    """Exact inner products with Python integers, reduced mod 2^ell."""
    mod = 1 << ring.ell
    return np.array([sum(int(a) * int(b) for a, b in zip(r, s)) % mod for r, s in zip(x, y)],
                    dtype=np.uint64)


def signed(v, ring):
    return np.asarray(ring.to_signed(v), dtype=np.int64)


@pytest.mark.parametrize("n", [1, 10, 100, 1000])
def test_dotp_matches_oracle_and_costs_three_elements(n, rng):
    x, y = R64.random(rng, (5, n)), R64.random(rng, (5, n))
    out, res = run3(pi_dotp, [shares_of(x, R64, rng), shares_of(y, R64, rng)])
    assert np.array_equal(out, dot_oracle(x, y, R64))
    assert res.stats.bytes(Phase.ONLINE, amortizable=False) == 5 * 24
    assert res.stats.bytes(Phase.PRE, amortizable=False) == 5 * 3 * n * 8
    assert res.stats.round_count(Phase.ONLINE) == 1


def test_dotp_of_length_one_is_a_product(rng):
    x, y = R64.random(rng, (8, 1)), R64.random(rng, (8, 1))
    out, _ = run3(pi_dotp, [shares_of(x, R64, rng), shares_of(y, R64, rng)])
    assert np.array_equal(out, R64.mul(x[:, 0], y[:, 0]))


# ---------------------------------------------------------------------------
# truncation pairs

def _pairs(n, ell=64, d=D, adversary=None):
    cfg = config_for(ell, d=d, timeout=5)
    res = run_session(lambda c: pi_truncpair(c, (n,)), cfg, adversary=adversary)
    return res


def test_truncpair_identity_and_shift():
    res = _pairs(1000)
    res.raise_first()
    ring = R64
    r = res.outputs[Role.P0].r_part
    assert np.array_equal(ring.add(res.outputs[Role.P1].r_part, res.outputs[Role.P2].r_part), r)
    rd = reconstruct([res.outputs[p].rd for p in (Role.P0, Role.P1, Role.P2)])
    shifted = ashr_array(r, D, ring)
    low_mod = np.uint64((1 << (64 - D)) - 1)
    # equal to the shift modulo 2^(ell-d), up to the carry of the two low-bit shares
    diff = ring.sub(rd, shifted) & low_mod
    assert set(np.unique(diff).tolist()) <= {0, 1}
    # r1 = 2^d rd1 + low1 and r2 = 2^d rd2 + low2 reassemble r exactly
    low1 = ring.sub(res.outputs[Role.P1].r_part & np.uint64((1 << D) - 1), 1 << D)
    low2 = res.outputs[Role.P2].r_part & np.uint64((1 << D) - 1)
    assert np.array_equal(ring.add(ring.add(ring.scale(1 << D, rd), low1), low2), r)


def test_truncpair_uv_check_passes_and_costs_one_sharing():
    res = _pairs(64)
    res.raise_first()
    assert res.stats.bytes(Phase.PRE, amortizable=False) == 2 * 64 * 8


@pytest.mark.parametrize("point,corrupt", [("trunc.rd", Role.P0), ("trunc.u", Role.P1)])
def test_truncpair_deviation_aborts(point, corrupt):
    adv = Deviation(corrupt, point)
    res = _pairs(8, adversary=adv)
    assert adv.hits == 1
    assert res.aborted_honest(corrupt)


def test_truncpair_shifted_by_one_is_caught():
    adv = Deviation(Role.P0, "trunc.rd", lambda v: R64.add(v, 1))
    res = _pairs(8, adversary=adv)
    assert res.aborted_honest(Role.P0)


# ---------------------------------------------------------------------------
# truncated products

def fixed_shares(vals, rng, d=D):
    return shares_of(encode_array(vals, d, R64), R64, rng)


def test_half_times_half():
    rng = np.random.default_rng(1)
    x = fixed_shares(np.array([[0.5]]), rng)
    y = fixed_shares(np.array([[0.5]]), rng)
    out, _ = run3(pi_dotp_tr, [x, y])
    assert abs(float(decode_array(out, D, R64)[0]) - 0.25) <= ULP


def test_zero_vectors(rng):
    z = np.zeros((3, 4))
    out, _ = run3(pi_dotp_tr, [fixed_shares(z, rng), fixed_shares(z, rng)])
    assert not out.any()


def test_truncated_dotp_within_one_ulp(rng):
    raw_x = rng.integers(-2**20, 2**20, (500, 8))
    raw_y = rng.integers(-2**20, 2**20, (500, 8))
    # keep the exact product inside the signed range: |sum| < 8 * 2^40
    x, y = R64.wrap(raw_x), R64.wrap(raw_y)
    out, res = run3(pi_dotp_tr, [shares_of(x, R64, rng), shares_of(y, R64, rng)])
    exact = (raw_x.astype(object) * raw_y.astype(object)).sum(1)
    oracle = np.array([v >> D for v in exact], dtype=np.int64)
    assert np.max(np.abs(signed(out, R64) - oracle)) <= 1
    assert res.stats.bytes(Phase.ONLINE, amortizable=False) == 500 * 24
    assert res.stats.bytes(Phase.PRE, amortizable=False) == 500 * (3 * 8 + 2) * 8
    assert res.stats.round_count(Phase.ONLINE) == 1


def test_custom_shift(rng):
    raw_x = rng.integers(-2**12, 2**12, (50, 3))
    raw_y = rng.integers(-2**12, 2**12, (50, 3))
    out, _ = run3(lambda c, a, b: pi_dotp_tr(c, a, b, 20),
                  [shares_of(R64.wrap(raw_x), R64, rng), shares_of(R64.wrap(raw_y), R64, rng)])
    exact = (raw_x.astype(object) * raw_y.astype(object)).sum(1)
    oracle = np.array([v >> 20 for v in exact], dtype=np.int64)
    assert np.max(np.abs(signed(out, R64) - oracle)) <= 1


def test_matmul_tr(rng):
    a = rng.uniform(-4, 4, (6, 5))
    b = rng.uniform(-4, 4, (5, 3))
    ea, eb = encode_array(a, D, R64), encode_array(b, D, R64)
    out, res = run3(pi_matmul_tr, [shares_of(ea, R64, rng), shares_of(eb, R64, rng)])
    sa, sb = signed(ea, R64).astype(object), signed(eb, R64).astype(object)
    oracle = np.array([[v >> D for v in row] for row in sa.dot(sb)], dtype=np.int64)
    assert np.max(np.abs(signed(out, R64) - oracle)) <= 1
    assert res.stats.bytes(Phase.ONLINE, amortizable=False) == 18 * 24


def test_trunc_of_existing_sharing(rng):
    vals = rng.integers(-2**30, 2**30, 200)
    out, _ = run3(pi_trunc, [shares_of(R64.wrap(vals), R64, rng)])
    oracle = vals >> D
    assert np.max(np.abs(signed(out, R64) - oracle)) <= 1


@pytest.mark.parametrize("point,corrupt", [("dotptr.zr", Role.P1), ("dotptr.zr", Role.P2),
                                           ("dotptr.star", Role.P0)])
def test_truncated_dotp_deviation_aborts(point, corrupt, rng):
    x, y = R64.random(rng, (4, 3)), R64.random(rng, (4, 3))
    sx, sy = shares_of(x, R64, rng), shares_of(y, R64, rng)
    adv = Deviation(corrupt, point)
    res = run_session(lambda c: pi_dotp_tr(c, sx[c.role], sy[c.role]), config_for(timeout=5),
                      adversary=adv)
    assert adv.hits == 1
    assert res.aborted_honest(corrupt)


# ---------------------------------------------------------------------------
# comparison and activations

def test_compare_examples(rng):
    x = fixed_shares(np.array([1.0, 2.0, -3.0]), rng)
    y = fixed_shares(np.array([2.0, 2.0, -4.0]), rng)
    out, _ = run3(pi_compare, [x, y])
    assert out.tolist() == [1, 0, 0]


@pytest.mark.parametrize("variant", ["ppa", "gc"])
def test_compare_exhaustive_8_bits(variant, rng):
    ring = get_ring(8)
    # operands in [-64, 63] so their difference never wraps
    a, b = np.meshgrid(np.arange(-64, 64), np.arange(-64, 64))
    a, b = a.ravel(), b.ravel()
    out, _ = run3(lambda c, x, y: pi_compare(c, x, y, variant),
                  [shares_of(ring.wrap(a), ring, rng), shares_of(ring.wrap(b), ring, rng)], ell=8)
    assert np.array_equal(out, (a < b).astype(np.uint64))


def test_relu_examples(rng):
    out, _ = run3(pi_relu, [fixed_shares(np.array([-3.0, 4.0, 0.0]), rng)])
    assert decode_array(out, D, R64).tolist() == [0.0, 4.0, 0.0]


def test_relu_matches_oracle_and_abs_identity(rng):
    vals = rng.uniform(-1000, 1000, 1000)
    raw = encode_array(vals, D, R64)
    sh = shares_of(raw, R64, rng)
    out, _ = run3(pi_relu, [sh])
    s = signed(raw, R64)
    assert np.array_equal(signed(out, R64), np.maximum(s, 0))
    neg, _ = run3(pi_relu, [shares_of(R64.neg(raw), R64, rng)])
    assert np.array_equal(signed(R64.add(out, neg), R64), np.abs(s))


def test_relu_gc_variant(rng):
    vals = rng.uniform(-10, 10, 100)
    raw = encode_array(vals, D, R64)
    out, _ = run3(lambda c, v: pi_relu(c, v, "gc"), [shares_of(raw, R64, rng)])
    assert np.array_equal(signed(out, R64), np.maximum(signed(raw, R64), 0))


@pytest.mark.parametrize("v,expected", [(0.0, 0.5), (1.0, 1.0), (-1.0, 0.0), (0.25, 0.75), (-0.5, 0.0),
                                        (0.5, 1.0)])
def test_sig_examples(v, expected, rng):
    out, _ = run3(pi_sig, [fixed_shares(np.array([v]), rng)])
    assert float(decode_array(out, D, R64)[0]) == expected


def test_sig_monotone_clamped_and_matches_oracle(rng):
    grid = np.linspace(-2, 2, 1000)
    raw = encode_array(grid, D, R64)
    out, _ = run3(pi_sig, [shares_of(raw, R64, rng)])
    dec = decode_array(out, D, R64)
    assert np.all(np.diff(dec) >= 0)
    assert dec.min() >= 0.0 and dec.max() <= 1.0
    assert np.array_equal(out, sig_fixed(raw, D, R64))


def test_sig_keeps_shape(rng):
    raw = encode_array(rng.uniform(-1, 1, (3, 4)), D, R64)
    out, _ = run3(pi_sig, [shares_of(raw, R64, rng)])
    assert out.shape == (3, 4)
