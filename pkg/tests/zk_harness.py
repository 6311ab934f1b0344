"""Offline soundness trials for the multiplication proof.

Each trial builds a random statement of ``rows`` x ``M`` products, lets an
honest or cheating prover produce the proof values, samples fresh masks,
challenge and output weights, and asks :func:`verdicts` whether the two
verifiers together would accept.
"""
import numpy as np

from trimpc.ring import get_ring
from trimpc.zkmult import Statement, _prove, get_flp, verdicts

ATTACKS = ("honest", "proof_noise", "claim_noise", "root_planting")


def criterion_bound(M, delta):
    return 2 * (2 * M - 1) / (2 ** delta - 2)


def _elem_shape(F, arr):
    return arr.shape[:arr.ndim - len(F.elem)]


def _nonzero(F, rng, shape):
    x = F.random(rng, shape)
    zero = F.is_zero(x)
    while zero.any():
        x[zero] = F.random(rng, (int(zero.sum()),))
        zero = F.is_zero(x)
    return x


def run_trials(attack, trials, ell=8, delta=8, M=4, rows=3, seed=0):
    """Acceptance bits of ``trials`` independent repetitions under ``attack``."""
    flp = get_flp(ell, delta, M)
    F, ring = flp.F, get_ring(ell)
    rng = np.random.default_rng(seed)
    a, b = ring.random(rng, (1, rows, M)), ring.random(rng, (1, rows, M))
    true = ring._m(np.einsum("pij,pij->pj", a, b, dtype=np.uint64))
    claim = np.broadcast_to(F.embed(true)[None], (trials, 1, M) + F.elem).copy()
    z1, z2 = F.random(rng, (trials, 1, rows)), F.random(rng, (trials, 1, rows))
    vals = _prove(flp, Statement(a, b, F.embed(true)), z1, z2)
    if attack == "proof_noise":
        vals = F.add(vals, _nonzero(F, rng, _elem_shape(F, vals)))
    elif attack == "claim_noise":
        claim = F.add(claim, _nonzero(F, rng, (trials, 1, M)))
    elif attack == "root_planting":
        # shift p by a nonzero degree-2M polynomial vanishing at 2M challenge points
        # and move the claim along with it, so the output check still passes
        roots = flp.challenge(np.arange(2 * M))
        shift = None
        for s in roots:
            t = F.sub(flp.nodes, s)
            shift = t if shift is None else F.mul(shift, t)
        vals = F.add(vals, shift[None, None])
        claim = F.add(claim, shift[None, None, 1:M + 1])
    elif attack != "honest":
        raise ValueError(attack)
    st = Statement(a, b, claim)
    r = flp.challenge(rng.integers(0, flp.challenge_range, trials))
    fold = (F.random(rng, (trials, 1)), F.random(rng, (trials, M)))
    return verdicts(flp, st, z1, z2, vals, r, fold)
