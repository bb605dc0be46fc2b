"""Configuration-region explorer: for each (n, q, c) grid point, compare the
closed-form validity test against an exhaustive oracle that enumerates every
possible acceptance pattern and checks worst-case shard coverage after f
failures."""

from __future__ import annotations

from itertools import combinations

from ..assignment import ClusterParams
from ..quorum import Config, c4_valid, multipaxos_config, rspaxos_config, subcover


def oracle_valid(params: ClusterParams, config: Config) -> bool:
    """Brute force: every acceptance pattern of exactly q round-robin
    acceptances must keep >= d distinct shards after the worst f of them are
    removed. Patterns narrower than q never commit, so q replies is the
    exact worst case a recovery must survive. The pattern shape is derived
    inline (server s vouches for shards s..s+c-1 mod n) so the oracle does
    not depend on the policy constructors it is checking."""
    if config.q > params.n:
        return False
    n = params.n
    for servers in combinations(range(n), config.q):
        ap = {s: frozenset((s + j) % n for j in range(config.c)) for s in servers}
        if subcover(ap, params.f) < params.scheme.d:
            return False
    return True


def explore_rows(n_list: list[int]) -> list[dict]:
    rows = []
    for n in n_list:
        params = ClusterParams.for_cluster(n)
        for q in range(1, n + 1):
            for c in range(1, n + 1):
                config = Config(q=q, c=c)
                rows.append(
                    {
                        "n": n,
                        "q": q,
                        "c": c,
                        "valid_c4": c4_valid(config, params),
                        "valid_oracle": oracle_valid(params, config),
                    }
                )
    return rows


def special_points(n: int) -> dict[str, Config]:
    params = ClusterParams.for_cluster(n)
    return {
        "multipaxos": multipaxos_config(params),
        "rspaxos": rspaxos_config(params),
    }


def format_rows(rows: list[dict]) -> list[str]:
    return [
        f"n={r['n']} q={r['q']} c={r['c']} "
        f"valid_c4={str(r['valid_c4']).lower()} valid_oracle={str(r['valid_oracle']).lower()}"
        for r in rows
    ]
