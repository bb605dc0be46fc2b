"""Shard-to-server assignment policies and their bitmap wire form.

Balanced round-robin gives server s the c consecutive shards starting at its
own index (mod n). Unbalanced policies carry arbitrary per-server sets over a
possibly wider coding scheme.
"""

from __future__ import annotations

from dataclasses import dataclass

from .erasure import CodingScheme

__all__ = [
    "AssignmentPolicy",
    "ClusterParams",
    "InvalidParameterError",
    "MalformedBitmapError",
    "balanced_rr",
    "decode_bitmap",
    "encode_bitmap",
    "unbalanced",
]


class InvalidParameterError(ValueError):
    pass


class MalformedBitmapError(ValueError):
    pass


@dataclass(frozen=True)
class ClusterParams:
    """Cluster-wide constants: n servers, majority m, tolerated failures f,
    and the default (n, m) coding scheme."""

    n: int
    m: int
    f: int
    scheme: CodingScheme

    def __post_init__(self):
        if self.n < 3 or self.n % 2 == 0:
            raise InvalidParameterError("n must be odd and >= 3")
        if self.m != (self.n + 1) // 2:
            raise InvalidParameterError("m must be ceil(n/2)")
        if not 0 <= self.f <= self.n - self.m:
            raise InvalidParameterError("f must lie in [0, n - m]")

    @classmethod
    def for_cluster(cls, n: int, f: int | None = None) -> "ClusterParams":
        m = (n + 1) // 2
        if f is None:
            f = n - m
        return cls(n=n, m=m, f=f, scheme=CodingScheme(n, m))


@dataclass(frozen=True)
class AssignmentPolicy:
    """per_server[s] is the set of shard indices server s is responsible
    for persisting; n_shards is the codeword width the indices refer to."""

    per_server: tuple[frozenset[int], ...]
    n_shards: int

    @property
    def n_servers(self) -> int:
        return len(self.per_server)

    def shards_of(self, server: int) -> frozenset[int]:
        return self.per_server[server]


def balanced_rr(params: ClusterParams, c: int) -> AssignmentPolicy:
    """Round-robin policy: server s takes shards {s, s+1, ..., s+c-1} mod n."""
    if not 1 <= c <= params.m:
        raise InvalidParameterError(f"c={c} outside [1, {params.m}]")
    n = params.n
    per = tuple(
        frozenset((s + k) % n for k in range(c)) for s in range(n)
    )
    return AssignmentPolicy(per_server=per, n_shards=params.scheme.n_shards)


def unbalanced(per_server: list[set[int]], scheme: CodingScheme) -> AssignmentPolicy:
    """Arbitrary per-server shard sets over an explicitly supplied scheme."""
    for s, shard_set in enumerate(per_server):
        for idx in shard_set:
            if not 0 <= idx < scheme.n_shards:
                raise InvalidParameterError(
                    f"server {s} references shard {idx} outside scheme width {scheme.n_shards}"
                )
    return AssignmentPolicy(
        per_server=tuple(frozenset(s) for s in per_server),
        n_shards=scheme.n_shards,
    )


def encode_bitmap(policy: AssignmentPolicy) -> bytes:
    """Row-major bitmap: one row of ceil(n_shards/8) bytes per server; bit j
    of row s (most significant bit first) set iff shard j is assigned to
    server s."""
    row_bytes = (policy.n_shards + 7) // 8
    out = bytearray(policy.n_servers * row_bytes)
    for s, shard_set in enumerate(policy.per_server):
        base = s * row_bytes
        for j in shard_set:
            out[base + j // 8] |= 0x80 >> (j % 8)
    return bytes(out)


def decode_bitmap(data: bytes, n_servers: int, n_shards: int) -> AssignmentPolicy:
    row_bytes = (n_shards + 7) // 8
    if len(data) != n_servers * row_bytes:
        raise MalformedBitmapError(
            f"bitmap is {len(data)} bytes, expected {n_servers * row_bytes}"
        )
    per = []
    for s in range(n_servers):
        base = s * row_bytes
        shard_set = set()
        for j in range(n_shards):
            if data[base + j // 8] & (0x80 >> (j % 8)):
                shard_set.add(j)
        per.append(frozenset(shard_set))
    # stray bits past n_shards in the last byte of a row are not tolerated
    for s in range(n_servers):
        base = s * row_bytes
        for j in range(n_shards, row_bytes * 8):
            if data[base + j // 8] & (0x80 >> (j % 8)):
                raise MalformedBitmapError(f"row {s} sets bit {j} past shard width")
    return AssignmentPolicy(per_server=tuple(per), n_shards=n_shards)
