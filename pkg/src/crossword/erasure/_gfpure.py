"""numpy fallback kernel: GF(256) matrix times shard-matrix product."""

from __future__ import annotations

import numpy as np

from ._tables import MUL


def gf_matmul(m: np.ndarray, s: np.ndarray) -> np.ndarray:
    """out[i] = XOR_j  m[i,j] * s[j]  over GF(256).

    m: (r, k) uint8 coefficients; s: (k, L) uint8 shard rows; returns (r, L).
    Each term is one 256-byte table row indexed by a whole shard.
    """
    r, k = m.shape
    length = s.shape[1]
    out = np.zeros((r, length), dtype=np.uint8)
    if length == 0:
        return out
    for i in range(r):
        acc = out[i]
        for j in range(k):
            coef = m[i, j]
            if coef:
                acc ^= MUL[coef][s[j]]
    return out
