"""Linearizability check for per-key register histories.

Wing–Gong style search: repeatedly pick an operation whose invocation
precedes every remaining operation's response (so it may legally go first),
apply it to the register model, and recurse; memoize on (remaining set,
register value) so equivalent frontiers are explored once. Keys are checked
independently — each key is its own register.

Verdicts: ("ok", None), ("violation", witness ops), or ("inconclusive",
reason) when the search budget runs out — a budget exhaustion is explicitly
not a violation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

INF = float("inf")


@dataclass(frozen=True)
class LinOp:
    client: int
    seq: int
    kind: str  # "put" | "get"
    key: str
    token: str | None  # put: value written; get: value observed (None = absent)
    invoke_ms: float
    respond_ms: float | None  # None = pending


def from_history(records) -> list[LinOp]:
    """Convert workload OpRecords to checker ops. Pending gets are dropped
    (no observed value, so they constrain nothing); pending puts are kept
    (they may or may not have taken effect)."""
    ops = []
    for rec in records:
        if rec.respond_ms is None and rec.kind == "get":
            continue
        ops.append(
            LinOp(
                client=rec.client,
                seq=rec.seq,
                kind=rec.kind,
                key=rec.key,
                token=rec.token,
                invoke_ms=rec.invoke_ms,
                respond_ms=rec.respond_ms,
            )
        )
    return ops


class _Budget:
    __slots__ = ("left",)

    def __init__(self, left: int):
        self.left = left

    def spend(self) -> bool:
        self.left -= 1
        return self.left >= 0


def _search_key(ops: list[LinOp], budget: _Budget) -> bool | None:
    """True = linearizable, False = not, None = budget exhausted."""
    n = len(ops)
    if n == 0:
        return True
    responds = [op.respond_ms if op.respond_ms is not None else INF for op in ops]
    full = frozenset(range(n))
    seen: set[tuple[frozenset, str | None]] = set()
    # stack of (remaining, value); value None = key absent
    stack: list[tuple[frozenset, str | None]] = [(full, None)]
    while stack:
        remaining, value = stack.pop()
        if all(responds[i] == INF for i in remaining):
            return True  # only pending ops left; they may simply never take effect
        state = (remaining, value)
        if state in seen:
            continue
        seen.add(state)
        if not budget.spend():
            return None
        frontier = min(responds[i] for i in remaining)
        for i in remaining:
            op = ops[i]
            if op.invoke_ms > frontier:
                continue  # someone else finished before this one began
            rest = remaining - {i}
            if op.kind == "put":
                stack.append((rest, op.token))
                if op.respond_ms is None:
                    # a pending put may also never take effect
                    stack.append((rest, value))
            else:
                if op.token == value:
                    stack.append((rest, value))
    return False


def _check_ops(ops: list[LinOp], budget: _Budget):
    verdict = _search_key(ops, budget)
    if verdict is None:
        return "inconclusive"
    return "ok" if verdict else "violation"


def _shrink(ops: list[LinOp], budget_per_try: int) -> list[LinOp]:
    """Greedy minimization: drop ops one at a time while the remainder still
    violates."""
    current = list(ops)
    changed = True
    while changed:
        changed = False
        for i in range(len(current)):
            trial = current[:i] + current[i + 1 :]
            if _check_ops(trial, _Budget(budget_per_try)) == "violation":
                current = trial
                changed = True
                break
    return current


def check_linearizable(ops, budget: int = 2_000_000):
    """Check a whole history (any mix of keys). Returns ("ok", None),
    ("violation", minimal witness ops), or ("inconclusive", reason)."""
    by_key: dict[str, list[LinOp]] = {}
    for op in ops:
        if op.kind == "get" and op.respond_ms is None:
            continue  # nothing was observed; the op constrains nothing
        by_key.setdefault(op.key, []).append(op)
    for key in sorted(by_key):
        key_ops = sorted(by_key[key], key=lambda op: op.invoke_ms)
        verdict = _check_ops(key_ops, _Budget(budget))
        if verdict == "inconclusive":
            return "inconclusive", f"search budget exhausted on key {key!r}"
        if verdict == "violation":
            witness = _shrink(key_ops, budget_per_try=min(budget, 200_000))
            return "violation", witness
    return "ok", None


# ---------------------------------------------------------------- file I/O


def write_history(ops, fh) -> None:
    for op in ops:
        fh.write(
            json.dumps(
                {
                    "client": op.client,
                    "seq": op.seq,
                    "kind": op.kind,
                    "key": op.key,
                    "token": op.token,
                    "invoke_ms": op.invoke_ms,
                    "respond_ms": op.respond_ms,
                },
                sort_keys=True,
            )
            + "\n"
        )


def read_history(fh) -> list[LinOp]:
    ops = []
    for line_no, line in enumerate(fh, 1):
        line = line.strip()
        if not line:
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"history line {line_no}: not valid JSON: {exc}") from exc
        try:
            ops.append(
                LinOp(
                    client=int(raw["client"]),
                    seq=int(raw["seq"]),
                    kind=str(raw["kind"]),
                    key=str(raw["key"]),
                    token=raw.get("token"),
                    invoke_ms=float(raw["invoke_ms"]),
                    respond_ms=(
                        float(raw["respond_ms"]) if raw.get("respond_ms") is not None else None
                    ),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"history line {line_no}: bad record: {exc}") from exc
    return ops


def describe(op: LinOp) -> str:
    span = f"[{op.invoke_ms:.3f}, {op.respond_ms:.3f}]" if op.respond_ms is not None else (
        f"[{op.invoke_ms:.3f}, pending]"
    )
    if op.kind == "put":
        return f"put({op.key} := {op.token}) by c{op.client}#{op.seq} {span}"
    shown = op.token if op.token is not None else "<absent>"
    return f"get({op.key}) = {shown} by c{op.client}#{op.seq} {span}"
