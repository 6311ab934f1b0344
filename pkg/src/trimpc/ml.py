"""Regression training, inference and feed-forward networks over shared fixed-point data.

Secure routines take :class:`Party` and shared arrays; the ``*_sim``
functions replay the same arithmetic in the clear (same batches, same
shift-based truncation) and serve as test oracles.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .context import Party
from .core import pi_sh
from .layer2 import pi_matmul_tr, pi_relu, pi_sig
from .ring import Ring, ashr_array, encode_array, get_ring
from .sharing import Role, RssShare, concat, public_share


class CsvError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    """Mini-batch gradient descent; ``lr / batch`` must be a power of two."""

    lr: float = 1 / 128
    batch: int = 128
    iterations: int = 10
    nf: int = 2
    d: int = 13
    ell: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.batch < 1 or self.iterations < 0 or self.nf < 1:
            raise ValueError("batch, iterations and nf must be positive")
        step = self.lr / self.batch
        k = -math.log2(step) if step > 0 else float("nan")
        if not (k == k and k >= 0 and float(k).is_integer()):
            raise ValueError(f"lr/batch = {step} is not a power of two")

    @property
    def k(self) -> int:
        """Extra shift applied by the update: lr / batch = 2^-k."""
        return int(round(-math.log2(self.lr / self.batch)))


# ---------------------------------------------------------------------------
# data ingestion and batching

def csv_load(path, label: str | int | None = -1):
    """Read a numeric CSV with a header row.

    Returns ``(features, labels, header)``; ``label`` picks the label column
    by name or index, or is None when the file has no label column.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CsvError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    width = len(header)
    data = []
    for r, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != width:
            raise CsvError(f"{path}: row {r} has {len(row)} fields, expected {width}")
        vals = []
        for c, cell in enumerate(row, start=1):
            try:
                vals.append(float(cell))
            except ValueError:
                raise CsvError(f"{path}: row {r} col {c}: not a number: {cell!r}") from None
        data.append(vals)
    mat = np.array(data, dtype=np.float64).reshape(len(data), width)
    if label is None:
        return mat, None, header
    col = header.index(label) if isinstance(label, str) else label % width
    keep = [i for i in range(width) if i != col]
    return mat[:, keep], mat[:, col], [header[i] for i in keep]


def csv_write(path, mat, header=None) -> None:
    mat = np.atleast_2d(np.asarray(mat, dtype=np.float64))
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header or [f"c{i}" for i in range(mat.shape[1])])
        for row in mat:
            w.writerow([repr(float(v)) for v in row])


def batch_select(seed: int, epoch: int, i: int, n_rows: int, batch: int) -> np.ndarray:
    """Row indices of batch ``i`` in ``epoch``: a public-seed permutation cut into ``batch``-sized pieces."""
    perm = np.random.default_rng([seed, epoch]).permutation(n_rows)
    return perm[i * batch:(i + 1) * batch]


def batch_schedule(seed: int, n_rows: int, batch: int, iterations: int):
    """Index sets of the first ``iterations`` batches, epoch after epoch."""
    per_epoch = -(-n_rows // batch)
    return [batch_select(seed, t // per_epoch, t % per_epoch, n_rows, batch) for t in range(iterations)]


# ---------------------------------------------------------------------------
# sharing helpers

def share_fixed(ctx: Party, owner: Role, values, shape) -> RssShare:
    """``owner`` encodes real values at d fraction bits and shares them."""
    raw = encode_array(values, ctx.config.d, ctx.ring) if ctx.role == owner else None
    return pi_sh(ctx, owner, raw, tuple(shape))


def _t(x: RssShare) -> RssShare:
    return x.map(lambda a: a.T)


def zeros_shared(ctx: Party, shape) -> RssShare:
    return public_share(ctx.role, ctx.ring, np.zeros(shape, dtype=np.uint64))


# ---------------------------------------------------------------------------
# regression

def _forward(ctx: Party, x: RssShare, w: RssShare, logistic: bool) -> RssShare:
    y = pi_matmul_tr(ctx, x, w.reshape(-1, 1)).reshape(-1)
    return pi_sig(ctx, y) if logistic else y


def _train_iter(ctx: Party, x: RssShare, y: RssShare, w: RssShare, cfg: TrainConfig,
                logistic: bool) -> RssShare:
    diff = _forward(ctx, x, w, logistic) - y
    grad = pi_matmul_tr(ctx, _t(x), diff.reshape(-1, 1), cfg.d + cfg.k).reshape(-1)
    return w - grad


def linreg_train_iter(ctx: Party, x: RssShare, y: RssShare, w: RssShare, cfg: TrainConfig) -> RssShare:
    """w - lr/B * X^T (X w - Y) on one batch."""
    return _train_iter(ctx, x, y, w, cfg, False)


def logreg_train_iter(ctx: Party, x: RssShare, y: RssShare, w: RssShare, cfg: TrainConfig) -> RssShare:
    """w - lr/B * X^T (sig(X w) - Y) on one batch."""
    return _train_iter(ctx, x, y, w, cfg, True)


def train(ctx: Party, x: RssShare, y: RssShare, cfg: TrainConfig, logistic: bool = False,
          w: RssShare | None = None) -> RssShare:
    """Run ``cfg.iterations`` updates from zero weights over the public batch schedule."""
    w = zeros_shared(ctx, (cfg.nf,)) if w is None else w
    step = logreg_train_iter if logistic else linreg_train_iter
    for idx in batch_schedule(cfg.seed, x.shape[0], cfg.batch, cfg.iterations):
        w = step(ctx, x[idx], y[idx], w, cfg)
    return w


def linreg_infer(ctx: Party, x: RssShare, w: RssShare) -> RssShare:
    return _forward(ctx, x, w, False)


def logreg_infer(ctx: Party, x: RssShare, w: RssShare) -> RssShare:
    return _forward(ctx, x, w, True)


# ---------------------------------------------------------------------------
# neural network inference

# activations held by one pass; the prefix-adder ReLU proves every AND layer
# over the whole pass at once and needs about 0.5 MB per activation
_PASS_BUDGET = {"ppa": 4096, "gc": 16384}


def nn_infer(ctx: Party, x: RssShare, weights: list[RssShare], rows: int | None = None,
             variant: str | None = None) -> RssShare:
    """Truncated matrix products with ReLU between layers.

    Samples go through in passes of ``rows``; the default keeps the hidden
    activations of one pass within a memory budget for the chosen variant.
    """
    if rows is None:
        widest = max([1] + [w.shape[1] for w in weights[:-1]])
        rows = max(1, _PASS_BUDGET[variant or ctx.config.bitext] // widest)
    outs = []
    for start in range(0, x.shape[0], rows):
        h = x[start:start + rows]
        for li, wm in enumerate(weights):
            h = pi_matmul_tr(ctx, h, wm)
            if li + 1 < len(weights):
                h = pi_relu(ctx, h, variant)
        outs.append(h)
    return concat(outs)


# ---------------------------------------------------------------------------
# plaintext oracles

def _mm(ring: Ring, a, b) -> np.ndarray:
    return ring._m(np.matmul(a, b, dtype=np.uint64))


def sig_fixed(v, d: int, ring: Ring) -> np.ndarray:
    """The piecewise sigmoid on raw fixed-point values."""
    s = ring.to_signed(v)
    half, one = 1 << (d - 1), 1 << d
    out = np.where(s >= half, one, np.where(s < -half, 0, s + half))
    return ring.wrap(out)


def train_sim(x_raw, y_raw, cfg: TrainConfig, logistic: bool = False, w_raw=None) -> np.ndarray:
    """Plaintext replay of :func:`train` on raw ring values with exact shifts."""
    ring = get_ring(cfg.ell)
    x_raw, y_raw = ring.wrap(x_raw), ring.wrap(y_raw)
    w = ring.zeros((cfg.nf,)) if w_raw is None else ring.wrap(w_raw)
    for idx in batch_schedule(cfg.seed, x_raw.shape[0], cfg.batch, cfg.iterations):
        xb, yb = x_raw[idx], y_raw[idx]
        fwd = ashr_array(_mm(ring, xb, w), cfg.d, ring)
        if logistic:
            fwd = sig_fixed(fwd, cfg.d, ring)
        diff = ring.sub(fwd, yb)
        grad = ashr_array(_mm(ring, xb.T, diff), cfg.d + cfg.k, ring)
        w = ring.sub(w, grad)
    return w


def nn_plain(x, weights) -> np.ndarray:
    """Double-precision forward pass."""
    h = np.asarray(x, dtype=np.float64)
    for li, wm in enumerate(weights):
        h = h @ np.asarray(wm, dtype=np.float64)
        if li + 1 < len(weights):
            h = np.maximum(h, 0.0)
    return h
