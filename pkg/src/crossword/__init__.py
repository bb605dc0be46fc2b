"""Replicated KV consensus with per-instance erasure coding, an adaptive
shard/quorum chooser, and a deterministic discrete-event network simulator."""

__version__ = "0.1.0"
