"""Command-line front end.

Exit codes: 0 success, 2 protocol abort (including timeouts and closed
peers), 3 configuration error.
"""
from __future__ import annotations

import sys
from pathlib import Path

import click

from .bench import WORKLOADS, build_report, format_kv, format_table, program, run_local, write_outputs, workload_from_kv
from .config import ConfigError, load_config, parse_kv, session_from_kv
from .context import AbortError, Party
from .crypto import KeyFileError, load_key_file, write_key_files
from .ml import CsvError
from .sharing import Role
from .transport import CommStats, HandshakeError, TcpEndpoint, TransportError, params_digest

EXIT_OK, EXIT_ABORT, EXIT_CONFIG = 0, 2, 3


def _addresses(kv: dict) -> dict:
    out = {}
    for role in Role:
        key = f"addr.{role.name}"
        if key not in kv:
            raise ConfigError(f"missing {key}=host:port")
        host, _, port = kv[key].rpartition(":")
        try:
            out[int(role)] = (host or "127.0.0.1", int(port))
        except ValueError:
            raise ConfigError(f"bad address {kv[key]!r}") from None
    return out


def _session_digest(cfg) -> bytes:
    return params_digest(ell=cfg.ell, d=cfg.d, bitext=cfg.bitext, zk_delta=cfg.zk_delta,
                         zk_batch=cfg.zk_batch, reps=cfg.reps, epoch=cfg.epoch_gates)


def run_server(role: Role, cfg, kv: dict, w, out_dir: Path):
    """Join the three-server session over TCP and run one workload; returns the report."""
    key_dir = Path(kv.get("key_dir", "keys"))
    keys = load_key_file(key_dir / f"{role.name.lower()}.keys")
    if keys.role != role:
        raise ConfigError(f"key file belongs to {keys.role.name}, not {role.name}")
    stats = CommStats()
    ep = TcpEndpoint(int(role), _addresses(kv), _session_digest(cfg), stats=stats,
                     timeout=cfg.timeout, connect_timeout=float(kv.get("connect_timeout", cfg.timeout)))
    ctx = Party(role, keys, ep, cfg)
    try:
        outputs, m = program(ctx, w)
        ctx.finish()
    finally:
        ep.close()
    n_rows = next(iter(outputs.values())).shape[0] if "predictions" in outputs else None
    rep = build_report(w, cfg, m.stats, m.wall, role.name, n_rows)
    write_outputs(out_dir, rep, outputs, f"_{role.name}")
    return rep


def _fail(code: int, msg: str):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


@click.group()
def main():
    """Three-server secure computation: run servers, benchmarks and ML workloads."""


@main.command()
@click.option("--out-dir", type=click.Path(path_type=Path), default=Path("keys"), show_default=True)
@click.option("--seed", type=int, default=None, help="Deterministic keys (testing only).")
def keygen(out_dir, seed):
    """Write one key file per server."""
    for role, path in write_key_files(out_dir, seed).items():
        click.echo(f"{role.name}: {path}")


@main.command()
@click.option("--role", default=None, type=click.Choice(["P0", "P1", "P2", "all"]),
              help="Server role (default: the config's role, else 'all'); "
                   "'all' runs the three servers in this process.")
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None,
              help="Flat key=value config file.")
@click.option("--workload", type=click.Choice(WORKLOADS), default=None)
@click.option("--out-dir", type=click.Path(path_type=Path), default=Path("out"), show_default=True)
@click.option("--set", "extra", multiple=True, metavar="KEY=VALUE", help="Override a config entry.")
@click.option("--table/--no-table", default=True, help="Also print a human-readable table.")
def run(role, config_path, workload, out_dir, extra, table):
    """Run a workload and write key=value stats (plus weights or predictions) to OUT_DIR."""
    try:
        kv = {}
        if config_path is not None:
            _, kv = load_config(config_path)
        kv.update(parse_kv("\n".join(extra)))
        role = role or kv.get("role", "all")
        if role not in ("P0", "P1", "P2", "all"):
            raise ConfigError(f"bad role {role!r}")
        cfg = session_from_kv(kv)
        w = workload_from_kv(kv, workload=workload)
        if role == "all":
            res, rep, outputs = run_local(cfg, w, seed=int(kv.get("key_seed", 0)))
            if res.errors:
                errs = list(res.errors.values())
                for e in errs:
                    if isinstance(e, (ConfigError, CsvError, KeyFileError, FileNotFoundError)):
                        _fail(EXIT_CONFIG, str(e))
                _fail(EXIT_ABORT, f"abort: {errs[0]}")
            write_outputs(out_dir, rep, outputs)
        else:
            rep = run_server(Role[role], cfg, kv, w, out_dir)
    except (ConfigError, CsvError, KeyFileError, HandshakeError, FileNotFoundError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    except (AbortError, TransportError, OSError) as exc:
        _fail(EXIT_ABORT, f"abort: {exc}")
    click.echo(format_kv(rep), nl=False)
    if table:
        click.echo(format_table(rep), nl=False)


if __name__ == "__main__":
    main()
