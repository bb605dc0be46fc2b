"""64-bit FNV-1a hashing and the canonical replica-state digest."""

from __future__ import annotations

__all__ = ["fnv1a64", "state_hash"]

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes, h: int = _FNV_OFFSET) -> int:
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK
    return h


def state_hash(kv: dict[str, bytes], commit_idx: int, exec_idx: int) -> int:
    """Digest of (kv, commit_idx, exec_idx) over a canonical ordering: keys
    sorted, every field length-prefixed, indices big-endian u64."""
    h = _FNV_OFFSET
    for key in sorted(kv):
        kb = key.encode()
        h = fnv1a64(len(kb).to_bytes(4, "big") + kb, h)
        vb = kv[key]
        h = fnv1a64(len(vb).to_bytes(4, "big") + vb, h)
    h = fnv1a64((commit_idx & _MASK).to_bytes(8, "big"), h)
    h = fnv1a64((exec_idx & _MASK).to_bytes(8, "big"), h)
    return h
