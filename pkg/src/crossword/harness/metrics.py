"""Run metrics: per-second throughput/latency, per-instance config choices,
per-link byte counts, staleness samples, and failover gaps, emitted as
line-delimited JSON records."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field


def nearest_rank_p95(samples: list[float]) -> float:
    """P95 by nearest rank: the ceil(0.95*N)-th smallest sample."""
    if not samples:
        return 0.0
    ordered = sorted(samples)
    rank = math.ceil(0.95 * len(ordered))
    return ordered[rank - 1]


@dataclass
class MetricsReport:
    seconds: list[dict] = field(default_factory=list)
    instances: list[dict] = field(default_factory=list)
    links: list[dict] = field(default_factory=list)
    staleness: list[dict] = field(default_factory=list)
    failover_gaps: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def records(self):
        for rec in self.seconds:
            yield {"type": "second", **rec}
        for rec in self.instances:
            yield {"type": "instance", **rec}
        for rec in self.links:
            yield {"type": "link", **rec}
        for rec in self.staleness:
            yield {"type": "staleness", **rec}
        for rec in self.failover_gaps:
            yield {"type": "failover", **rec}
        yield {"type": "summary", **self.summary}

    def write_jsonl(self, fh) -> None:
        for rec in self.records():
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def build_report(
    history,
    commit_events,
    link_stats,
    staleness_samples,
    duration_ms: float,
    gap_threshold_ms: float = 250.0,
) -> MetricsReport:
    """Assemble the report from a finished run.

    history: list of OpRecord. commit_events: (leader, slot, q, c,
    payload_len, latency_ms, t_ms) tuples. link_stats: {(src, dst):
    LinkStats}. staleness_samples: (t_ms, key, versions_behind).
    """
    report = MetricsReport()

    completed = [op for op in history if op.respond_ms is not None]
    buckets: dict[int, list] = {}
    for op in completed:
        buckets.setdefault(int(op.respond_ms // 1000.0), []).append(op)
    for sec in range(int(math.ceil(duration_ms / 1000.0))):
        ops = buckets.get(sec, [])
        lats = [op.respond_ms - op.invoke_ms for op in ops]
        report.seconds.append(
            {
                "t_s": sec,
                "ops": len(ops),
                "puts": sum(1 for op in ops if op.kind == "put"),
                "gets": sum(1 for op in ops if op.kind == "get"),
                "mean_ms": (sum(lats) / len(lats)) if lats else 0.0,
                "p95_ms": nearest_rank_p95(lats),
            }
        )

    for leader, slot, q, c, payload_len, latency_ms, t_ms in commit_events:
        report.instances.append(
            {
                "slot": slot,
                "leader": leader,
                "chosen_q": q,
                "chosen_c": c,
                "payload_len": payload_len,
                "commit_ms": latency_ms,
                "t_ms": t_ms,
            }
        )

    for (src, dst), st in sorted(link_stats.items()):
        report.links.append(
            {
                "src": src,
                "dst": dst,
                "bytes": st.bytes,
                "msgs": st.msgs,
                "payload_bytes": st.payload_bytes,
            }
        )

    for t_ms, key, behind in staleness_samples:
        report.staleness.append({"t_ms": t_ms, "key": key, "versions_behind": behind})

    commit_times = sorted(ev[6] for ev in commit_events)
    prev = 0.0
    for t in commit_times + [duration_ms]:
        if t - prev > gap_threshold_ms:
            report.failover_gaps.append({"start_ms": prev, "gap_ms": t - prev})
        prev = t

    all_lats = [op.respond_ms - op.invoke_ms for op in completed]
    report.summary = {
        "ops_completed": len(completed),
        "ops_pending": len(history) - len(completed),
        "puts_acked": sum(1 for op in completed if op.kind == "put"),
        "mean_ms": (sum(all_lats) / len(all_lats)) if all_lats else 0.0,
        "p95_ms": nearest_rank_p95(all_lats),
        "throughput_ops_per_s": len(completed) / (duration_ms / 1000.0) if duration_ms else 0.0,
        "mean_staleness": (
            sum(s[2] for s in staleness_samples) / len(staleness_samples)
            if staleness_samples
            else 0.0
        ),
    }
    return report
