import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from trimpc.config import SessionConfig
from trimpc.context import run_session
from trimpc.sharing import Role, make_rss, reconstruct

settings.register_profile(
    "trimpc", deadline=None, max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("trimpc")

ROLES = (Role.P0, Role.P1, Role.P2)


def shares_of(v, ring, rng):
    """Per-role sharings of ``v`` with fresh random masks."""
    v = ring.wrap(v)
    a1, a2, g = (ring.random(rng, v.shape) for _ in range(3))
    return dict(zip(ROLES, make_rss(v, a1, a2, g, ring)))


def config_for(ell=64, **kw):
    kw.setdefault("d", min(13, ell - 2))
    return SessionConfig(ell=ell, **kw)


def run3(fn, inputs=(), cfg=None, **kw):
    """Run ``fn(ctx, *shares)`` at all three servers; returns (opened output, RunResult)."""
    cfg = cfg or config_for(**kw)

    def prog(ctx):
        return fn(ctx, *[s[ctx.role] for s in inputs])

    res = run_session(prog, cfg)
    res.raise_first()
    return reconstruct([res.outputs[r] for r in ROLES]), res


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
