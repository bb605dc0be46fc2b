"""Acceptance-pattern algebra and commit safety conditions.

An acceptance pattern maps each replying server to the shard set it has made
durable for one log slot. Commit requires enough nodes (majority for ballot
safety) and enough shard coverage to survive f further failures.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Mapping

from .assignment import ClusterParams, balanced_rr

__all__ = [
    "AcceptancePattern",
    "Config",
    "InvalidConfigError",
    "c4_valid",
    "candidate_configs",
    "check_commit_general",
    "check_commit_rr",
    "check_config",
    "cover",
    "multipaxos_config",
    "nodes",
    "rspaxos_config",
    "rspaxos_f",
    "rr_pattern",
    "subcover",
    "subcover_rr_bound",
]

AcceptancePattern = Mapping[int, frozenset[int]]


class InvalidConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Config:
    """Per-instance choice: quorum size q and shards-per-follower c."""

    q: int
    c: int


def check_config(config: Config, params: ClusterParams) -> Config:
    """Range validation: 1 <= c <= m and m <= q <= n. Availability under f
    failures is a separate, stronger predicate (c4_valid)."""
    if not 1 <= config.c <= params.m:
        raise InvalidConfigError(f"c={config.c} outside [1, {params.m}]")
    if not params.m <= config.q <= params.n:
        raise InvalidConfigError(f"q={config.q} outside [{params.m}, {params.n}]")
    return config


def nodes(ap: AcceptancePattern) -> int:
    return len(ap)


def cover(ap: AcceptancePattern) -> int:
    seen: set[int] = set()
    for shard_set in ap.values():
        seen |= shard_set
    return len(seen)


def subcover(ap: AcceptancePattern, f: int) -> int:
    """Worst-case distinct-shard count after removing any f replies.

    Brute force over all (nodes-f)-subsets; exponential, meant for small n
    and for checking the closed forms.
    """
    if f <= 0:
        return cover(ap)
    keep = len(ap) - f
    if keep <= 0:
        return 0
    best = None
    for subset in combinations(sorted(ap), keep):
        got = len(frozenset().union(*(ap[s] for s in subset)))
        if best is None or got < best:
            best = got
    return best


def subcover_rr_bound(q: int, c: int, f: int) -> int:
    """Lower bound on subcover for any q-reply pattern under balanced
    round-robin with c shards per server; met with equality when the
    replying servers are consecutive."""
    return q - f + c - 1


def check_commit_general(ap: AcceptancePattern, params: ClusterParams, f: int | None = None) -> bool:
    """Slot may commit iff >= m nodes accepted and any f of them can fail
    without dropping reachable coverage below d."""
    if f is None:
        f = params.f
    if nodes(ap) < params.m:
        return False
    return subcover(ap, f) >= params.scheme.d


def check_commit_rr(config: Config, nodes_replied: int) -> bool:
    """Balanced round-robin fast path: the pattern shape is fixed by c, so
    counting replies suffices. Config validity is enforced at construction,
    not here."""
    return nodes_replied >= config.q


def c4_valid(config: Config, params: ClusterParams) -> bool:
    """Availability-safe region at f = n - m: n >= q >= m and q + c >= n + 1."""
    return (
        params.m <= config.q <= params.n
        and config.q + config.c >= params.n + 1
    )


def candidate_configs(params: ClusterParams) -> list[Config]:
    """The boundary line q + c = n + 1, ordered by ascending q. Every point
    trades quorum size against shards per follower at equal safety."""
    return [Config(q=q, c=params.n + 1 - q) for q in range(params.m, params.n + 1)]


def multipaxos_config(params: ClusterParams) -> Config:
    return Config(q=params.m, c=params.m)


def rspaxos_config(params: ClusterParams) -> Config:
    p = params.scheme.p
    return Config(q=params.m + (p + 1) // 2, c=1)


def rspaxos_f(params: ClusterParams) -> int:
    return params.scheme.p // 2


def rr_pattern(params: ClusterParams, c: int, servers: list[int]) -> dict[int, frozenset[int]]:
    """Acceptance pattern in which each listed server vouches for its full
    balanced round-robin slice."""
    policy = balanced_rr(params, c)
    return {s: policy.shards_of(s) for s in servers}
