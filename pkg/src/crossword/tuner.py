"""Per-follower response-time models and the per-instance config chooser.

The leader records (size, rtt) pairs for every follower round it completes
(payload-carrying rounds and zero-size heartbeats alike), fits a line
t(v) = intercept + slope * v over a sliding window, and picks the candidate
(q, c) whose predicted completion time is lowest for the payload at hand.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .assignment import ClusterParams
from .quorum import Config, candidate_configs, multipaxos_config

__all__ = [
    "Datapoint",
    "LinearModel",
    "RttTuner",
    "choose_config",
    "ols_fit",
    "transmitted_size",
]

WINDOW_MS = 2000.0
REFIT_MS = 200.0
OUTLIER_FRAC = 0.05
TIE_REL = 0.02  # estimates this close count as tied; tie goes to smaller q


@dataclass(frozen=True)
class Datapoint:
    at_ms: float
    size_bytes: float
    rtt_ms: float


@dataclass(frozen=True)
class LinearModel:
    intercept_ms: float
    slope_ms_per_byte: float
    fitted_at_ms: float

    def predict(self, size_bytes: float) -> float:
        return self.intercept_ms + self.slope_ms_per_byte * size_bytes


def ols_fit(points: list[Datapoint]) -> tuple[float, float] | None:
    """Least-squares (intercept, slope) after dropping the highest-rtt 5% as
    outliers; None when the surviving points cannot pin down a line. The
    slope is clamped at zero: response time never shrinks with size."""
    if len(points) < 2:
        return None
    drop = int(OUTLIER_FRAC * len(points))
    if drop:
        kept = sorted(points, key=lambda pt: pt.rtt_ms)[: len(points) - drop]
    else:
        kept = list(points)
    if len(kept) < 2:
        return None
    n = len(kept)
    mean_v = sum(pt.size_bytes for pt in kept) / n
    mean_t = sum(pt.rtt_ms for pt in kept) / n
    sxx = sum((pt.size_bytes - mean_v) ** 2 for pt in kept)
    if sxx == 0.0:
        return None
    sxy = sum((pt.size_bytes - mean_v) * (pt.rtt_ms - mean_t) for pt in kept)
    slope = max(0.0, sxy / sxx)
    return mean_t - slope * mean_v, slope


def transmitted_size(v_p: float, c: int, params: ClusterParams) -> float:
    """Bytes sent to one follower for a payload of v_p under c shards per
    follower: c shards of v_p / m bytes each."""
    return v_p * c / params.m


def choose_config(
    v_p: float,
    models: dict[int, LinearModel],
    healthy_followers: int,
    params: ClusterParams,
    tie_rel: float = TIE_REL,
) -> Config:
    """Pick the candidate config minimizing predicted commit time.

    Completion of (q, c) is the (q-1)-th smallest follower estimate at size
    transmitted_size(v_p, c): the leader itself is the q-th member. q is
    capped at 1 + healthy_followers. Falls back to (m, m) when no candidate
    has enough models to estimate (cold start)."""
    cands = [
        cfg for cfg in candidate_configs(params) if cfg.q <= 1 + healthy_followers
    ]
    scored: list[tuple[float, Config]] = []
    for cfg in cands:
        if len(models) < cfg.q - 1:
            continue
        size = transmitted_size(v_p, cfg.c, params)
        times = sorted(m.predict(size) for m in models.values())
        scored.append((times[cfg.q - 2], cfg))
    if not scored:
        return multipaxos_config(params)
    best = min(est for est, _ in scored)
    threshold = best + abs(best) * tie_rel
    tied = [cfg for est, cfg in scored if est <= threshold]
    return min(tied, key=lambda cfg: cfg.q)


class RttTuner:
    """Sliding-window store plus model cache for one leader term."""

    def __init__(
        self,
        params: ClusterParams,
        window_ms: float = WINDOW_MS,
        refit_ms: float = REFIT_MS,
    ):
        self.params = params
        self.window_ms = window_ms
        self.refit_ms = refit_ms
        self._points: dict[int, deque[Datapoint]] = {}
        self._cache: dict[int, tuple[float, LinearModel | None]] = {}

    def record(self, peer: int, size_bytes: float, rtt_ms: float, now_ms: float) -> None:
        dq = self._points.setdefault(peer, deque())
        dq.append(Datapoint(now_ms, size_bytes, rtt_ms))
        self._evict(dq, now_ms)

    def _evict(self, dq: deque[Datapoint], now_ms: float) -> None:
        horizon = now_ms - self.window_ms
        while dq and dq[0].at_ms < horizon:
            dq.popleft()

    def model_for(self, peer: int, now_ms: float) -> LinearModel | None:
        cached = self._cache.get(peer)
        if cached is not None and now_ms - cached[0] < self.refit_ms:
            return cached[1]
        dq = self._points.get(peer)
        model = None
        if dq:
            self._evict(dq, now_ms)
            fit = ols_fit(list(dq))
            if fit is not None:
                model = LinearModel(fit[0], fit[1], now_ms)
        self._cache[peer] = (now_ms, model)
        return model

    def choose(self, v_p: float, healthy_peers: list[int], now_ms: float) -> Config:
        models = {}
        for peer in healthy_peers:
            m = self.model_for(peer, now_ms)
            if m is not None:
                models[peer] = m
        return choose_config(v_p, models, len(healthy_peers), self.params)
