# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel: GF(256) matrix times shard-matrix product."""


def gf_matmul_into(const unsigned char[:, ::1] m,
                   const unsigned char[:, ::1] s,
                   const unsigned char[:, ::1] mul,
                   unsigned char[:, ::1] out):
    """out[i] ^= m[i,j] * s[j] over GF(256); out must be zeroed by the caller."""
    cdef Py_ssize_t r = m.shape[0]
    cdef Py_ssize_t k = m.shape[1]
    cdef Py_ssize_t length = s.shape[1]
    cdef Py_ssize_t i, j, t
    cdef unsigned char coef
    cdef const unsigned char *mulrow
    cdef const unsigned char *srow
    cdef unsigned char *orow
    if length == 0 or r == 0:
        return
    for i in range(r):
        orow = &out[i, 0]
        for j in range(k):
            coef = m[i, j]
            if coef == 0:
                continue
            mulrow = &mul[coef, 0]
            srow = &s[j, 0]
            for t in range(length):
                orow[t] ^= mulrow[srow[t]]
