"""Pure numpy flooding min-sum kernel, used when the compiled core is absent."""

from __future__ import annotations

import numpy as np


def _padded_layout(chk_ptr: np.ndarray, n_edges: int):
    m = chk_ptr.size - 1
    deg = np.diff(chk_ptr)
    width = int(deg.max()) if m and n_edges else 0
    edge_chk = np.repeat(np.arange(m), deg)
    pad = np.full((m, max(width, 1)), n_edges, dtype=np.int64)
    pad[edge_chk, np.arange(n_edges) - chk_ptr[edge_chk]] = np.arange(n_edges)
    return pad, edge_chk


def min_sum(chk_ptr, edge_var, ch_llr, syndrome, max_iters, fixed_alpha, clamp, track):
    """Same contract as the compiled ``min_sum``."""
    chk_ptr = np.asarray(chk_ptr, dtype=np.int64)
    edge_var = np.asarray(edge_var, dtype=np.int64)
    ch_llr = np.asarray(ch_llr, dtype=np.float64)
    syndrome = np.asarray(syndrome, dtype=np.uint8)
    m = chk_ptr.size - 1
    n = ch_llr.size
    n_edges = edge_var.size
    pad, edge_chk = _padded_layout(chk_ptr, n_edges)
    rows = np.arange(m)
    edge_ids = np.arange(n_edges)
    syn = syndrome.astype(np.int64)

    total = ch_llr.copy()
    c2v = np.zeros(n_edges)
    e_hat = np.zeros(n, dtype=np.uint8)
    flips = np.zeros(n, dtype=np.int64)
    llr_out = np.clip(ch_llr, -clamp, clamp)
    converged = False
    iters = 0

    for it in range(1, max_iters + 1):
        alpha = fixed_alpha if fixed_alpha > 0 else 1.0 - 2.0**-it
        v2c = np.clip(total[edge_var] - c2v, -clamp, clamp)
        neg = v2c < 0
        mag = np.append(np.abs(v2c), np.inf)[pad]
        arg = mag.argmin(axis=1)
        min1 = mag[rows, arg]
        mag[rows, arg] = np.inf
        min2 = mag.min(axis=1)
        min_edge = pad[rows, arg]
        parity = (np.append(neg, False)[pad].sum(axis=1) + syn) & 1

        is_min = min_edge[edge_chk] == edge_ids
        out = alpha * np.where(is_min, min2[edge_chk], min1[edge_chk])
        out = np.where(parity[edge_chk].astype(bool) ^ neg, -out, out)
        c2v = np.clip(out, -clamp, clamp)

        total = ch_llr + np.bincount(edge_var, weights=c2v, minlength=n)
        llr_out = np.clip(total, -clamp, clamp)
        bits = (total <= 0).astype(np.uint8)
        if track:
            flips += bits ^ e_hat
        e_hat = bits
        iters = it

        checks = (np.append(e_hat[edge_var], 0)[pad].sum(axis=1) + syn) & 1
        if not checks.any():
            converged = True
            break
    return converged, iters, e_hat, llr_out, flips
