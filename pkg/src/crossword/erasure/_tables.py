"""GF(2^8) arithmetic tables and small dense matrix helpers.

Field: polynomial basis mod 0x11d, generator 2. Scalar ops and the d x d
inversions here are tiny; the bulk matrix-times-shards work lives in the
kernel modules.
"""

from __future__ import annotations

import numpy as np

PRIM = 0x11D

# --- exp/log tables ---

EXP = np.zeros(512, dtype=np.uint8)
LOG = np.zeros(256, dtype=np.int32)

_x = 1
for _i in range(255):
    EXP[_i] = _x
    LOG[_x] = _i
    _x <<= 1
    if _x & 0x100:
        _x ^= PRIM
EXP[255:510] = EXP[0:255]  # wraparound spares a mod in scalar paths

# full 256x256 product table; one 256-byte row per left operand
_la = LOG[:, None] + LOG[None, :]
MUL = EXP[_la % 255].astype(np.uint8)
MUL[0, :] = 0
MUL[:, 0] = 0


def gf_mul(a: int, b: int) -> int:
    return int(MUL[a, b])


def gf_inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("gf_inv(0)")
    return int(EXP[255 - LOG[a]])


def gf_matinv(m: list[list[int]]) -> list[list[int]]:
    """Invert a square matrix over GF(256) by Gauss-Jordan elimination.

    Raises ZeroDivisionError if singular. Inputs the generator produces are
    never singular (Cauchy construction), so a failure here means corruption.
    """
    k = len(m)
    aug = [list(row) + [1 if i == j else 0 for j in range(k)] for i, row in enumerate(m)]
    for col in range(k):
        pivot = next((r for r in range(col, k) if aug[r][col] != 0), None)
        if pivot is None:
            raise ZeroDivisionError("singular matrix")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv_p = gf_inv(aug[col][col])
        aug[col] = [gf_mul(v, inv_p) for v in aug[col]]
        for r in range(k):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [v ^ gf_mul(f, w) for v, w in zip(aug[r], aug[col])]
    return [row[k:] for row in aug]


def cauchy_parity_rows(d: int, p: int) -> np.ndarray:
    """Parity block C of the systematic generator [I_d; C], shape (p, d).

    C[i][j] = 1 / (x_i ^ y_j) with x_i = d + i and y_j = j, all distinct
    field elements. Any d rows of [I_d; C] then form an invertible matrix:
    expanding the determinant over the identity rows reduces it to a square
    Cauchy submatrix, which is always nonsingular.
    """
    if d + p > 256:
        raise ValueError("d + p exceeds field size")
    rows = np.zeros((p, d), dtype=np.uint8)
    for i in range(p):
        for j in range(d):
            rows[i, j] = gf_inv((d + i) ^ j)
    return rows


def generator_row(scheme_d: int, index: int) -> list[int]:
    """Row `index` of the full generator [I_d; C] for a given d."""
    if index < scheme_d:
        return [1 if j == index else 0 for j in range(scheme_d)]
    return [gf_inv((scheme_d + (index - scheme_d)) ^ j) for j in range(scheme_d)]
