"""Key setup, keyed pseudorandom streams, hashing and commitments."""
from __future__ import annotations

import hashlib
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .ring import Ring
from .sharing import Role

KEY_NAMES = ("k01", "k02", "k12", "kP")
KEY_HOLDERS = {
    Role.P0: ("k01", "k02", "kP"),
    Role.P1: ("k01", "k12", "kP"),
    Role.P2: ("k02", "k12", "kP"),
}


class MissingKeyError(KeyError):
    pass


class KeyFileError(ValueError):
    pass


def pair_key(a: Role, b: Role) -> str:
    lo, hi = sorted((int(a), int(b)))
    return f"k{lo}{hi}"


@dataclass
class SessionKeys:
    role: Role
    keys: dict[str, bytes]

    def __post_init__(self):
        self.role = Role(self.role)
        expected = set(KEY_HOLDERS[self.role])
        if set(self.keys) != expected:
            raise KeyFileError(f"{self.role.name} must hold exactly {sorted(expected)}")

    def has(self, name: str) -> bool:
        return name in self.keys

    def get(self, name: str) -> bytes:
        try:
            return self.keys[name]
        except KeyError:
            raise MissingKeyError(f"{self.role.name} does not hold {name}") from None


def setup_keys(seed: int | bytes | None = None) -> dict[Role, SessionKeys]:
    """Trusted key generation; each pair key goes to exactly its two holders."""
    if seed is None:
        master = {name: os.urandom(16) for name in KEY_NAMES}
    else:
        base = seed if isinstance(seed, bytes) else str(seed).encode()
        master = {name: hashlib.sha256(b"trimpc-setup|" + base + b"|" + name.encode()).digest()[:16]
                  for name in KEY_NAMES}
    return {role: SessionKeys(role, {n: master[n] for n in names})
            for role, names in KEY_HOLDERS.items()}


def write_key_files(directory, seed=None) -> dict[Role, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = {}
    for role, sk in setup_keys(seed).items():
        path = directory / f"{role.name.lower()}.keys"
        lines = [f"role={role.name}"] + [f"{n}={sk.keys[n].hex()}" for n in KEY_HOLDERS[role]]
        path.write_text("\n".join(lines) + "\n")
        out[role] = path
    return out


def load_key_file(path) -> SessionKeys:
    path = Path(path)
    if not path.exists():
        raise KeyFileError(f"missing key file {path}")
    role = None
    keys: dict[str, bytes] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, sep, val = line.partition("=")
        if not sep:
            raise KeyFileError(f"{path}:{lineno}: expected name=value")
        name, val = name.strip(), val.strip()
        if name == "role":
            role = Role[val]
            continue
        if name in keys:
            raise KeyFileError(f"{path}:{lineno}: duplicate key {name}")
        if name not in KEY_NAMES:
            raise KeyFileError(f"{path}:{lineno}: unknown key {name}")
        raw = bytes.fromhex(val)
        if len(raw) != 16:
            raise KeyFileError(f"{path}:{lineno}: key {name} must be 128 bits")
        keys[name] = raw
    if role is None:
        raise KeyFileError(f"{path}: no role line")
    return SessionKeys(role, keys)


class Prf:
    """AES-128 in counter mode, one stream per (key, label).

    The initial counter block is the first 8 bytes of SHA-256(label)
    followed by a zero block index, so distinct labels never share a
    keystream and consecutive draws under one label never overlap.
    """

    def __init__(self, keys: SessionKeys):
        self.keys = keys
        self._streams: dict[tuple[str, str], object] = {}
        self.drawn: dict[tuple[str, str], int] = {}

    def _stream(self, key: str, label: str):
        st = self._streams.get((key, label))
        if st is None:
            nonce = hashlib.sha256(label.encode()).digest()[:8] + bytes(8)
            st = Cipher(algorithms.AES(self.keys.get(key)), modes.CTR(nonce)).encryptor()
            self._streams[(key, label)] = st
        return st

    def bytes(self, key: str, label: str, n: int) -> bytes:
        out = self._stream(key, label).update(bytes(n))
        self.drawn[(key, label)] = self.drawn.get((key, label), 0) + n
        return out

    def ring(self, key: str, label: str, count: int, ring: Ring, shape=None) -> np.ndarray:
        """Uniform ring elements; ``shape`` defaults to ``(count,)``."""
        width = 1 if ring.ell <= 8 else (2 if ring.ell <= 16 else (4 if ring.ell <= 32 else 8))
        dt = {1: "<u1", 2: "<u2", 4: "<u4", 8: "<u8"}[width]
        raw = np.frombuffer(self.bytes(key, label, count * width), dtype=dt).astype(np.uint64)
        raw = raw & ring.mask if ring.ell < 64 else raw
        return raw.reshape(shape if shape is not None else (count,))

    def sample(self, key: str, label: str, shape, ring: Ring) -> np.ndarray:
        shape = tuple(np.atleast_1d(shape)) if not isinstance(shape, tuple) else shape
        return self.ring(key, label, int(np.prod(shape, dtype=np.int64)), ring, shape)

    def integers(self, key: str, label: str, count: int, bound: int) -> np.ndarray:
        """Integers in [0, bound); the 64-bit draw makes modular bias negligible."""
        raw = np.frombuffer(self.bytes(key, label, 8 * count), dtype="<u8")
        return (raw % np.uint64(bound)).astype(np.int64)

    def forget(self, label: str):
        for k in [k for k in self._streams if k[1] == label]:
            del self._streams[k]


def prf_sample(prf: Prf, key: str, label: str, count: int, ring: Ring) -> np.ndarray:
    return prf.ring(key, label, count, ring)


def transcript_hash(items) -> bytes:
    h = hashlib.sha256()
    for item in items:
        h.update(struct.pack("<Q", len(item)))
        h.update(item)
    return h.digest()


@dataclass(frozen=True)
class Opening:
    value: bytes
    salt: bytes

    def to_bytes(self) -> bytes:
        return struct.pack("<I", len(self.value)) + self.value + self.salt

    @classmethod
    def from_bytes(cls, data: bytes) -> "Opening":
        if len(data) < 4:
            raise ValueError("truncated opening")
        (n,) = struct.unpack("<I", data[:4])
        if len(data) != 4 + n + 16:
            raise ValueError("bad opening length")
        return cls(data[4:4 + n], data[4 + n:])


@dataclass(frozen=True)
class Commitment:
    digest: bytes
    opening: Opening | None = field(default=None, compare=False)


def commit(value: bytes, salt: bytes) -> Commitment:
    if len(salt) != 16:
        raise ValueError("salt must be 16 bytes")
    return Commitment(hashlib.sha256(value + salt).digest(), Opening(value, salt))


def verify_opening(digest: bytes, opening: Opening) -> bool:
    return len(opening.salt) == 16 and hashlib.sha256(opening.value + opening.salt).digest() == digest


def seeded_bytes(seed: bytes, label: str, n: int) -> bytes:
    """``n`` pseudorandom bytes expanded from a one-off 16-byte seed (AES-CTR)."""
    nonce = hashlib.sha256(label.encode()).digest()[:8] + bytes(8)
    enc = Cipher(algorithms.AES(seed), modes.CTR(nonce)).encryptor()
    return enc.update(bytes(n))


def seeded_sample(seed: bytes, label: str, shape, ring: Ring) -> np.ndarray:
    """Ring elements expanded from a one-off 16-byte seed."""
    shape = tuple(shape)
    count = int(np.prod(shape, dtype=np.int64))
    raw = np.frombuffer(seeded_bytes(seed, label, 8 * count), dtype="<u8").astype(np.uint64)
    if ring.ell < 64:
        raw = raw & ring.mask
    return raw.reshape(shape)
