"""Binary checkpoint format.

Layout (all integers little-endian)::

    b"WAVEGEN\\0"  magic
    u32            format version
    u64 + bytes    config as UTF-8 ``key=value`` lines, sorted by key
    u32            block count
    per block:     u16 name length, name, u8 rank, rank x u64 dims, f8 data

Nothing may follow the last block.
"""
from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

from ..exceptions import CheckpointError, ConfigurationError
from ..numerics import ParameterStore

MAGIC = b"WAVEGEN\0"
VERSION = 1

_U8 = struct.Struct("<B")
_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")


def format_config(config: dict[str, str]) -> str:
    lines = []
    for key in sorted(config):
        value = str(config[key])
        if "=" in key or "\n" in key or "\n" in value:
            raise ConfigurationError(f"config entry {key!r} cannot be written as key=value")
        lines.append(f"{key}={value}\n")
    return "".join(lines)


def parse_config(text: str) -> dict[str, str]:
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigurationError(f"line {n}: expected key=value, got {line!r}")
        out[key.strip()] = value.strip()
    return out


def save_checkpoint(params: ParameterStore, config: dict[str, str], path) -> Path:
    path = Path(path)
    text = format_config(config).encode("utf-8")
    chunks = [MAGIC, _U32.pack(VERSION), _U64.pack(len(text)), text, _U32.pack(len(params.names()))]
    for name, t in params.items():
        raw = name.encode("utf-8")
        arr = np.ascontiguousarray(t.data, dtype="<f8")
        chunks += [_U16.pack(len(raw)), raw, _U8.pack(arr.ndim)]
        chunks += [_U64.pack(d) for d in arr.shape]
        chunks.append(arr.tobytes())
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(b"".join(chunks))
    os.replace(tmp, path)
    return path


class _Reader:
    def __init__(self, buf: bytes, path):
        self.buf, self.pos, self.path = buf, 0, path

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.buf):
            raise CheckpointError(f"{self.path}: truncated while reading {what} at byte {self.pos}")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, s: struct.Struct, what: str) -> int:
        return s.unpack(self.take(s.size, what))[0]


def read_checkpoint(path) -> tuple[dict[str, np.ndarray], dict[str, str]]:
    """Raw blocks and config, with only structural validation."""
    r = _Reader(Path(path).read_bytes(), path)
    if r.take(len(MAGIC), "magic") != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    version = r.unpack(_U32, "version")
    if version != VERSION:
        raise CheckpointError(f"{path}: format version {version}, expected {VERSION}")
    text_len = r.unpack(_U64, "config length")
    try:
        config = parse_config(r.take(text_len, "config").decode("utf-8"))
    except (UnicodeDecodeError, ConfigurationError) as exc:
        raise CheckpointError(f"{path}: bad config block: {exc}") from None
    blocks: dict[str, np.ndarray] = {}
    for _ in range(r.unpack(_U32, "block count")):
        name = r.take(r.unpack(_U16, "name length"), "block name").decode("utf-8", "replace")
        rank = r.unpack(_U8, f"rank of {name}")
        shape = tuple(r.unpack(_U64, f"dims of {name}") for _ in range(rank))
        n = int(np.prod(shape, dtype=np.int64))
        data = np.frombuffer(r.take(8 * n, f"data of {name}"), dtype="<f8")
        if name in blocks:
            raise CheckpointError(f"{path}: duplicate block {name!r}")
        blocks[name] = data.reshape(shape).astype(np.float64)
    if r.pos != len(r.buf):
        raise CheckpointError(f"{path}: {len(r.buf) - r.pos} trailing bytes after the last block")
    return blocks, config


def load_checkpoint(path) -> tuple[ParameterStore, dict[str, str]]:
    """Parameters and config, checked against the blocks the config implies."""
    from ..models import network_from_config

    blocks, config = read_checkpoint(path)
    try:
        net = network_from_config(config)
    except (ConfigurationError, ValueError, TypeError) as exc:
        raise CheckpointError(f"{path}: config does not describe a network: {exc}") from None
    expected = net.params.shapes()
    unknown = sorted(set(blocks) - set(expected))
    if unknown:
        raise CheckpointError(f"{path}: unknown block(s) {unknown}")
    missing = sorted(set(expected) - set(blocks))
    if missing:
        raise CheckpointError(f"{path}: missing block(s) {missing}")
    for name, arr in blocks.items():
        if arr.shape != expected[name]:
            raise CheckpointError(f"{path}: block {name!r} has shape {arr.shape}, expected {expected[name]}")
    net.params.load_arrays(blocks)
    return net.params, config


def save_network(net, path, extra: dict[str, str] | None = None) -> Path:
    config = {**net.config_dict(), "label": net.label, **(extra or {})}
    return save_checkpoint(net.params, config, path)


def load_network(path):
    from ..models import network_from_config

    params, config = load_checkpoint(path)
    net = network_from_config(config)
    net.params = params
    net.meta = config
    return net
