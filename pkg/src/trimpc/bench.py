"""Named workloads with communication, round and wall-clock reports.

A workload is an SPMD program run by each server.  Only the measured part
(the protocol under test and the verification epoch that closes it) enters
the report; input sharing and output reconstruction stay outside it.
"""
from __future__ import annotations

import struct
import time
from dataclasses import dataclass, fields
from pathlib import Path


from .config import ConfigError, SessionConfig, _coerce
from .context import Party, make_parties, run_parties
from .core import jsh_prep_known, pi_frec
from .layer1 import pi_bitext, pi_mult
from .layer2 import pi_dotp, pi_dotp_tr, pi_relu, pi_sig
from .ml import (TrainConfig, csv_load, csv_write, linreg_infer, logreg_infer, nn_infer,
                 share_fixed, train)
from .ring import decode_array
from .sharing import Role
from .transport import CommStats, MsgType, Phase

PROTOCOL_WORKLOADS = ("mult", "dotp", "dotp_tr", "bitext", "relu", "sig")
ML_WORKLOADS = ("linreg_train", "logreg_train", "linreg_infer", "logreg_infer", "nn_infer")
WORKLOADS = PROTOCOL_WORKLOADS + ML_WORKLOADS


@dataclass(frozen=True)
class WorkloadConfig:
    workload: str = "mult"
    count: int = 1024
    n: int = 100
    data: str = ""
    model: str = ""
    label: str = "last"
    owner: str = "P0"
    batch: int = 128
    lr: float = 1.0
    iterations: int = 5
    rows: int = 0  # samples per NN pass; 0 picks one from the memory budget
    seed: int = 0

    def __post_init__(self):
        if self.workload not in WORKLOADS:
            raise ConfigError(f"unknown workload {self.workload!r}; choose from {', '.join(WORKLOADS)}")
        if self.owner not in ("P0", "P1", "P2"):
            raise ConfigError("owner must be P0, P1 or P2")
        if self.workload in ML_WORKLOADS and not self.data:
            raise ConfigError(f"workload {self.workload} needs data=<csv path>")
        if self.workload.endswith("_infer") and not self.model:
            raise ConfigError(f"workload {self.workload} needs model=<path>")

    @property
    def owner_role(self) -> Role:
        return Role[self.owner]


def workload_from_kv(kv: dict[str, str], **overrides) -> WorkloadConfig:
    base = WorkloadConfig.__dataclass_fields__
    updates = {}
    for f in fields(WorkloadConfig):
        if f.name in kv:
            try:
                updates[f.name] = _coerce(kv[f.name], base[f.name].default)
            except ValueError:
                raise ConfigError(f"bad value for {f.name}: {kv[f.name]!r}") from None
    updates.update({k: v for k, v in overrides.items() if v is not None})
    if "workload" not in updates:
        raise ConfigError("no workload given")
    return WorkloadConfig(**updates)


# ---------------------------------------------------------------------------
# helpers

def random_shared(ctx: Party, shape, ring=None):
    """Random sharing of a value known to P1 and P2 only; no messages."""
    ring = ring or ctx.ring
    lab = ctx.op("bench.in")
    v = ctx.rand("k12", lab, tuple(shape), ring) if ctx.role != Role.P0 else None
    return jsh_prep_known(ctx, (Role.P1, Role.P2), v, shape, ring)


def _public_shape(ctx: Party, owner: Role, shape) -> tuple:
    """The data owner announces the dimensions of its input."""
    if ctx.role == owner:
        msg = struct.pack(f"<{len(shape) + 1}Q", len(shape), *shape)
        for p in Role:
            if p != owner:
                ctx.send_bytes(p, msg, MsgType.SIGNAL, amortizable=True, phase=Phase.PRE)
        return tuple(shape)
    msg = ctx.recv_bytes(owner, MsgType.SIGNAL, phase=Phase.PRE)
    (k,) = struct.unpack_from("<Q", msg)
    return struct.unpack_from(f"<{k}Q", msg, 8)


def _load_rows(path):
    x, _, _ = csv_load(path, None)
    return x


def _load_model(path: Path, nn: bool):
    path = Path(path)
    if nn:
        files = sorted(path.glob("w*.csv")) if path.is_dir() else [path]
        if not files:
            raise ConfigError(f"no weight files w*.csv in {path}")
        return [_load_rows(f) for f in files]
    return [_load_rows(path).reshape(-1)]


@dataclass
class Measured:
    stats: CommStats
    wall: float


def _measure(ctx: Party, fn):
    before = ctx.stats.snapshot()
    t = time.perf_counter()
    out = fn()
    ctx.verify()
    return out, Measured(ctx.stats.snapshot() - before, time.perf_counter() - t)


# ---------------------------------------------------------------------------
# programs

def _protocol_program(ctx: Party, w: WorkloadConfig):
    c = w.count
    if w.workload == "mult":
        x, y = random_shared(ctx, (c,)), random_shared(ctx, (c,))
        fn = lambda: pi_mult(ctx, x, y)  # noqa: E731
    elif w.workload in ("dotp", "dotp_tr"):
        x, y = random_shared(ctx, (c, w.n)), random_shared(ctx, (c, w.n))
        op = pi_dotp if w.workload == "dotp" else pi_dotp_tr
        fn = lambda: op(ctx, x, y)  # noqa: E731
    else:
        x = random_shared(ctx, (c,))
        op = {"bitext": pi_bitext, "relu": pi_relu, "sig": pi_sig}[w.workload]
        fn = lambda: op(ctx, x)  # noqa: E731
    _, m = _measure(ctx, fn)
    return {}, m


def _ml_program(ctx: Party, w: WorkloadConfig):
    owner = w.owner_role
    d = ctx.config.d
    mine = ctx.role == owner
    x_val = y_val = None
    if mine:
        label = None if w.workload.endswith("_infer") else (-1 if w.label == "last" else w.label)
        x_val, y_val, _ = csv_load(w.data, label)
    shape = _public_shape(ctx, owner, x_val.shape if mine else None)
    x = share_fixed(ctx, owner, x_val, shape)
    outputs = {}
    if w.workload.endswith("_train"):
        y = share_fixed(ctx, owner, y_val, shape[:1])
        cfg = TrainConfig(lr=w.lr, batch=w.batch, iterations=w.iterations, nf=shape[1], d=d,
                          ell=ctx.config.ell, seed=w.seed)
        logistic = w.workload == "logreg_train"
        res, m = _measure(ctx, lambda: train(ctx, x, y, cfg, logistic))
        outputs["weights"] = decode_array(pi_frec(ctx, res), d, ctx.ring).reshape(-1, 1)
        return outputs, m
    nn = w.workload == "nn_infer"
    mats = _load_model(Path(w.model), nn) if mine else None
    count = _public_shape(ctx, owner, (len(mats),) if mine else None)[0]
    weights = []
    for i in range(count):
        ws = _public_shape(ctx, owner, mats[i].shape if mine else None)
        weights.append(share_fixed(ctx, owner, mats[i] if mine else None, ws))
    if nn:
        fn = lambda: nn_infer(ctx, x, weights, rows=w.rows or None)  # noqa: E731
    else:
        op = linreg_infer if w.workload == "linreg_infer" else logreg_infer
        fn = lambda: op(ctx, x, weights[0])  # noqa: E731
    res, m = _measure(ctx, fn)
    pred = decode_array(pi_frec(ctx, res), d, ctx.ring)
    outputs["predictions"] = pred.reshape(pred.shape[0], -1)
    return outputs, m


def program(ctx: Party, w: WorkloadConfig):
    if w.workload in PROTOCOL_WORKLOADS:
        return _protocol_program(ctx, w)
    return _ml_program(ctx, w)


# ---------------------------------------------------------------------------
# reports

def _ops(w: WorkloadConfig) -> int:
    if w.workload in PROTOCOL_WORKLOADS:
        return w.count
    return w.iterations if w.workload.endswith("_train") else 0


def build_report(w: WorkloadConfig, cfg: SessionConfig, stats: CommStats, wall: float,
                 scope: str, n_rows: int | None = None) -> dict:
    rep = {"workload": w.workload, "scope": scope, "ell": cfg.ell, "d": cfg.d,
           "bitext": cfg.bitext, "count": w.count if w.workload in PROTOCOL_WORKLOADS else n_rows}
    if w.workload in ("dotp", "dotp_tr"):
        rep["n"] = w.n
    rep.update(stats.as_dict())
    ops = _ops(w) or (n_rows or 0)
    elem = cfg.ell // 8
    if ops:
        rep["ops"] = ops
        for ph in Phase:
            name = ph.name.lower()
            rep[f"{name}.elements.per_op"] = stats.bytes(ph, amortizable=False) / elem / ops
    rep["wall_seconds"] = round(wall, 4)
    if ops and wall > 0:
        rep["ops_per_min"] = round(ops * 60.0 / wall, 2)
    return rep


def format_kv(rep: dict) -> str:
    return "".join(f"{k}={_fmt(v)}\n" for k, v in rep.items())


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def format_table(rep: dict) -> str:
    rows = [("phase", "per-gate bytes", "amortizable bytes", "rounds")]
    for ph in Phase:
        n = ph.name.lower()
        rows.append((n, str(rep[f"{n}.bytes.per_gate"]), str(rep[f"{n}.bytes.amortizable"]),
                     str(rep[f"{n}.rounds"])))
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    lines = ["  ".join(c.ljust(widths[i]) for i, c in enumerate(r)) for r in rows]
    tail = f"wall {rep['wall_seconds']} s"
    if "ops_per_min" in rep:
        tail += f", {rep['ops_per_min']} ops/min"
    return "\n".join(lines + [tail]) + "\n"


def write_outputs(out_dir: Path, rep: dict, outputs: dict, suffix: str = "") -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"stats{suffix}.txt").write_text(format_kv(rep))
    for name, mat in outputs.items():
        header = ["w"] if name == "weights" else [f"y{i}" for i in range(mat.shape[1])]
        csv_write(out_dir / f"{name}{suffix}.csv", mat, header)


def run_local(cfg: SessionConfig, w: WorkloadConfig, seed=0):
    """All three servers in this process over the loopback transport."""
    parties = make_parties(cfg, seed)
    res = run_parties(parties, lambda ctx: program(ctx, w))
    if res.errors:
        return res, None, None
    outs = {r: res.outputs[r] for r in Role}
    merged = CommStats()
    for r in Role:
        merged.merge(outs[r][1].stats)
    for ph in Phase:
        merged.rounds[ph] = max(outs[r][1].stats.round_count(ph) for r in Role)
    wall = max(outs[r][1].wall for r in Role)
    outputs = outs[Role.P0][0]
    n_rows = next((v.shape[0] for v in outputs.values()), None) if "predictions" in outputs else None
    return res, build_report(w, cfg, merged, wall, "all", n_rows), outputs
