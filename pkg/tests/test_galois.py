import numpy as np
import pytest
from hypothesis import given, strategies as st

from trimpc.galois import (BinaryField, GaloisRing, find_modulus, get_extension,
                           is_irreducible_gf2)


def poly_mulmod(a, b, modulus, delta, ell):
    """Schoolbook product of coefficient lists, reduced by the monic modulus, in Python ints."""
    mod = 1 << ell
    wide = [0] * (2 * delta - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            wide[i + j] += x * y
    low = [(modulus >> t) & 1 for t in range(delta)]
    for k in range(2 * delta - 2, delta - 1, -1):
        c = wide[k]
        wide[k] = 0
        for t in range(delta):
            wide[k - delta + t] -= c * low[t]
    return [w % mod for w in wide[:delta]]


def test_irreducibility():
    assert is_irreducible_gf2(0b111)
    assert not is_irreducible_gf2(0b101)
    assert find_modulus(8) == 0x11B
    for delta in range(2, 12):
        assert is_irreducible_gf2(find_modulus(delta))


@pytest.mark.parametrize("ell,delta", [(8, 8), (16, 4), (64, 8), (32, 3)])
def test_mul_matches_polynomial_oracle(ell, delta, rng):
    gr = GaloisRing(ell, delta)
    a, b = gr.random(rng, (50,)), gr.random(rng, (50,))
    got = gr.mul(a, b)
    for x, y, z in zip(a, b, got):
        assert [int(v) for v in z] == poly_mulmod([int(v) for v in x], [int(v) for v in y],
                                                  gr.modulus, delta, ell)


@pytest.mark.parametrize("ell", [8, 64])
def test_exceptional_set(ell):
    gr = GaloisRing(ell, 8)
    pts = gr.lift_many(np.arange(256))
    one = gr.one()
    for i in (0, 1, 17, 200):
        diff = gr.sub(pts[i], np.delete(pts, i, axis=0))
        assert np.all(gr.mul(diff, gr.inv(diff)) == one)


def test_non_unit_inverse_rejected():
    gr = GaloisRing(8, 8)
    with pytest.raises(ZeroDivisionError):
        gr.inv(gr.embed(2))


@given(st.integers(0, 2 ** 32))
def test_ring_axioms(seed):
    rng = np.random.default_rng(seed)
    gr = GaloisRing(16, 5)
    a, b, c = (gr.random(rng, ()) for _ in range(3))
    assert np.array_equal(gr.mul(a, b), gr.mul(b, a))
    assert np.array_equal(gr.mul(a, gr.add(b, c)), gr.add(gr.mul(a, b), gr.mul(a, c)))
    assert np.array_equal(gr.mul(gr.mul(a, b), c), gr.mul(a, gr.mul(b, c)))
    assert np.array_equal(gr.mul(a, gr.one()), a)


def test_binary_field_matches_galois_ring(rng):
    bf, gr = BinaryField(8), GaloisRing(1, 8)
    a = rng.integers(0, 256, 500, dtype=np.uint8)
    b = rng.integers(0, 256, 500, dtype=np.uint8)
    lift = lambda v: gr.lift_many(v.astype(np.uint64))  # noqa: E731
    got = gr.mul(lift(a), lift(b))
    assert np.array_equal(lift(bf.mul(a, b)), got)
    nz = a[a != 0]
    assert np.all(bf.mul(nz, bf.inv(nz)) == 1)


def test_get_extension_backends():
    assert isinstance(get_extension(1, 8), BinaryField)
    assert isinstance(get_extension(64, 8), GaloisRing)


@pytest.mark.parametrize("F", [GaloisRing(8, 4), BinaryField(6)])
def test_wire_roundtrip(F, rng):
    a = F.random(rng, (3, 2))
    assert np.array_equal(F.from_bytes(F.to_bytes(a), (3, 2)), a)
