"""NumPy Viterbi decoder, vectorized over blocks and trellis states.

Performs exactly the same floating-point operations in the same order as the
compiled kernel, so both produce identical decisions.
"""

import numpy as np


def viterbi_batch(llr, sign, memory):
    llr = np.ascontiguousarray(llr, dtype=np.float64)
    n_blocks, n_steps, n_out = llr.shape
    n_states = 1 << memory
    half = n_states >> 1
    ns = np.arange(n_states)
    u = ns // half
    p0 = (ns % half) << 1
    p1 = p0 | 1
    s0 = sign[(p0 << 1) | u].astype(np.float64)  # (n_states, n_out)
    s1 = sign[(p1 << 1) | u].astype(np.float64)
    pm = np.full((n_blocks, n_states), -np.inf)
    pm[:, 0] = 0.0
    dec = np.empty((n_steps, n_blocks, n_states), dtype=np.uint8)
    for t in range(n_steps):
        lt = llr[:, t, :]
        bm0 = np.zeros((n_blocks, n_states))
        bm1 = np.zeros((n_blocks, n_states))
        for k in range(n_out):
            bm0 = bm0 + s0[None, :, k] * lt[:, k, None]
            bm1 = bm1 + s1[None, :, k] * lt[:, k, None]
        c0 = pm[:, p0] + bm0
        c1 = pm[:, p1] + bm1
        take1 = c1 > c0
        dec[t] = take1
        pm = np.where(take1, c1, c0)
    out = np.empty((n_blocks, n_steps), dtype=np.uint8)
    state = np.zeros(n_blocks, dtype=np.int64)
    rows = np.arange(n_blocks)
    for t in range(n_steps - 1, -1, -1):
        out[:, t] = state // half
        state = ((state % half) << 1) | dec[t, rows, state]
    return out
