# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled add-compare-select core of the soft-input Viterbi decoder."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def viterbi_batch(const double[:, :, ::1] llr, const signed char[:, ::1] sign,
                  int memory):
    """Decode a batch of terminated rate-1/n blocks.

    llr  : (n_blocks, n_steps, n_out) mother-code LLRs, positive favours 0
    sign : (n_states * 2, n_out) branch signs (+1 for output bit 0) indexed
           by ``(state << 1) | input``
    """
    cdef Py_ssize_t n_blocks = llr.shape[0]
    cdef Py_ssize_t n_steps = llr.shape[1]
    cdef Py_ssize_t n_out = llr.shape[2]
    cdef int n_states = 1 << memory
    cdef int half = n_states >> 1
    cdef Py_ssize_t b, t, k
    cdef int ns, u, p0, p1, low
    cdef double bm0, bm1, c0, c1
    out = np.empty((n_blocks, n_steps), dtype=np.uint8)
    cdef unsigned char[:, ::1] out_v = out
    dec = np.empty((n_steps, n_states), dtype=np.uint8)
    cdef unsigned char[:, ::1] dec_v = dec
    pm_a = np.empty(n_states, dtype=np.float64)
    pm_b = np.empty(n_states, dtype=np.float64)
    cdef double[::1] pm = pm_a
    cdef double[::1] pm_new = pm_b
    cdef double[::1] tmp

    with nogil:
        for b in range(n_blocks):
            for ns in range(n_states):
                pm[ns] = -INFINITY
            pm[0] = 0.0
            for t in range(n_steps):
                for ns in range(n_states):
                    u = ns // half
                    low = (ns % half) << 1
                    p0 = low
                    p1 = low | 1
                    bm0 = 0.0
                    bm1 = 0.0
                    for k in range(n_out):
                        bm0 = bm0 + sign[(p0 << 1) | u, k] * llr[b, t, k]
                        bm1 = bm1 + sign[(p1 << 1) | u, k] * llr[b, t, k]
                    c0 = pm[p0] + bm0
                    c1 = pm[p1] + bm1
                    if c1 > c0:
                        pm_new[ns] = c1
                        dec_v[t, ns] = 1
                    else:
                        pm_new[ns] = c0
                        dec_v[t, ns] = 0
                tmp = pm
                pm = pm_new
                pm_new = tmp
            ns = 0
            for t in range(n_steps - 1, -1, -1):
                out_v[b, t] = ns // half
                ns = ((ns % half) << 1) | dec_v[t, ns]
    return out
