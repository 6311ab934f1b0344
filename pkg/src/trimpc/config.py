"""Session and workload configuration."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SessionConfig:
    ell: int = 64
    d: int = 13
    epoch_gates: int = 1 << 16
    timeout: float = 30.0
    zk_delta: int = 8
    zk_batch: int = 4
    zk_sec_bits: int = 40
    zk_reps: int | None = None
    bitext: str = "ppa"

    def __post_init__(self):
        if self.ell not in (8, 16, 32, 64):
            raise ConfigError(f"ell must be one of 8, 16, 32, 64 (got {self.ell})")
        if not 0 <= self.d < self.ell - 1:
            raise ConfigError("fraction bits out of range")
        if self.zk_batch < 1 or self.zk_batch & (self.zk_batch - 1):
            raise ConfigError("zk_batch must be a power of two")
        if 2 * self.zk_batch + 2 > (1 << self.zk_delta):
            raise ConfigError("extension degree too small for the proof batch")
        if self.bitext not in ("ppa", "gc"):
            raise ConfigError("bitext must be 'ppa' or 'gc'")

    @property
    def zk_error_per_rep(self) -> float:
        """Soundness error of one proof repetition (identity test plus output check)."""
        m = self.zk_batch
        size = 1 << self.zk_delta
        return 2 * m / (size - 2 * m - 1) + 2.0 / size

    @property
    def reps(self) -> int:
        if self.zk_reps is not None:
            return self.zk_reps
        return max(1, math.ceil(self.zk_sec_bits / -math.log2(self.zk_error_per_rep)))

    def with_(self, **kw) -> "SessionConfig":
        return replace(self, **kw)


def parse_kv(text: str) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected key=value")
        out[key.strip()] = val.strip()
    return out


def _coerce(value: str, default):
    if isinstance(default, bool):
        return value.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int) or default is None:
        return int(value)
    if isinstance(default, float):
        return float(value)
    return value


def session_from_kv(kv: dict[str, str]) -> SessionConfig:
    base = SessionConfig()
    names = {f.name for f in fields(SessionConfig)}
    updates = {}
    for k, v in kv.items():
        if k in names:
            try:
                updates[k] = _coerce(v, getattr(base, k))
            except ValueError:
                raise ConfigError(f"bad value for {k}: {v!r}") from None
    return replace(base, **updates)


def load_config(path) -> tuple[SessionConfig, dict[str, str]]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"missing config file {path}")
    kv = parse_kv(path.read_text())
    return session_from_kv(kv), kv
