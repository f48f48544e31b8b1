"""Compiled Louvain kernel operating on dense local node indices."""
import numpy as np
from numba import njit

# Gains below this are treated as ties; ties keep the node where it is.
_GAIN_EPS = 1e-10
_MAX_SWEEPS = 10_000


@njit(cache=True, nogil=True)
def _csr(n, u, v, w):
    """Symmetric CSR of the off-diagonal edges plus per-node self-loop weight."""
    loops = np.zeros(n, dtype=np.float64)
    deg = np.zeros(n, dtype=np.int64)
    for e in range(len(u)):
        if u[e] == v[e]:
            loops[u[e]] += w[e]
        else:
            deg[u[e]] += 1
            deg[v[e]] += 1
    indptr = np.zeros(n + 1, dtype=np.int64)
    for i in range(n):
        indptr[i + 1] = indptr[i] + deg[i]
    fill = indptr[:-1].copy()
    indices = np.empty(indptr[n], dtype=np.int64)
    weights = np.empty(indptr[n], dtype=np.float64)
    for e in range(len(u)):
        a = u[e]
        b = v[e]
        if a != b:
            indices[fill[a]] = b
            weights[fill[a]] = w[e]
            fill[a] += 1
            indices[fill[b]] = a
            weights[fill[b]] = w[e]
            fill[b] += 1
    # sort each row by neighbour so candidate order is canonical
    for i in range(n):
        lo = indptr[i]
        hi = indptr[i + 1]
        if hi - lo > 1:
            order = np.argsort(indices[lo:hi], kind="mergesort")
            indices[lo:hi] = indices[lo:hi][order]
            weights[lo:hi] = weights[lo:hi][order]
    return indptr, indices, weights, loops


@njit(cache=True, nogil=True)
def _level_modularity(comm, n_comm, indptr, indices, weights, loops, k, m2):
    inside = np.zeros(n_comm, dtype=np.float64)
    tot = np.zeros(n_comm, dtype=np.float64)
    for i in range(len(comm)):
        c = comm[i]
        tot[c] += k[i]
        inside[c] += 2.0 * loops[i]
        for p in range(indptr[i], indptr[i + 1]):
            if comm[indices[p]] == c:
                inside[c] += weights[p]
    q = 0.0
    for c in range(n_comm):
        q += inside[c] / m2 - (tot[c] / m2) ** 2
    return q


@njit(cache=True, nogil=True)
def _local_moving(n, indptr, indices, weights, k, m2, order):
    comm = np.arange(n)
    tot = k.copy()
    neigh_w = np.zeros(n, dtype=np.float64)
    seen = np.zeros(n, dtype=np.bool_)
    cand = np.empty(n, dtype=np.int64)
    moved_any = False
    for _ in range(_MAX_SWEEPS):
        moves = 0
        for idx in range(n):
            i = order[idx]
            ci = comm[i]
            nc = 0
            for p in range(indptr[i], indptr[i + 1]):
                c = comm[indices[p]]
                if not seen[c]:
                    seen[c] = True
                    cand[nc] = c
                    nc += 1
                neigh_w[c] += weights[p]
            tot[ci] -= k[i]
            ki = k[i]
            best = ci
            best_gain = neigh_w[ci] - tot[ci] * ki / m2
            for j in range(nc):
                c = cand[j]
                gain = neigh_w[c] - tot[c] * ki / m2
                if gain > best_gain + _GAIN_EPS:
                    best_gain = gain
                    best = c
            tot[best] += ki
            comm[i] = best
            if best != ci:
                moves += 1
            for j in range(nc):
                c = cand[j]
                seen[c] = False
                neigh_w[c] = 0.0
        if moves == 0:
            break
        moved_any = True
    return comm, moved_any


@njit(cache=True, nogil=True)
def _renumber(comm):
    n = len(comm)
    mapping = np.full(n, -1, dtype=np.int64)
    out = np.empty(n, dtype=np.int64)
    nxt = 0
    for i in range(n):
        c = comm[i]
        if mapping[c] < 0:
            mapping[c] = nxt
            nxt += 1
        out[i] = mapping[c]
    return out, nxt


@njit(cache=True, nogil=True)
def _aggregate(comm, n_comm, indptr, indices, weights, loops):
    new_loops = np.zeros(n_comm, dtype=np.float64)
    n = len(comm)
    cnt = 0
    for i in range(n):
        new_loops[comm[i]] += loops[i]
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            if j > i:
                cnt += 1
    keys = np.empty(cnt, dtype=np.int64)
    vals = np.empty(cnt, dtype=np.float64)
    e = 0
    for i in range(n):
        ci = comm[i]
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            if j > i:
                cj = comm[j]
                if ci == cj:
                    new_loops[ci] += weights[p]
                else:
                    a = min(ci, cj)
                    b = max(ci, cj)
                    keys[e] = a * n_comm + b
                    vals[e] = weights[p]
                    e += 1
    keys = keys[:e]
    vals = vals[:e]
    order = np.argsort(keys, kind="mergesort")
    keys = keys[order]
    vals = vals[order]
    m = 0
    uu = np.empty(e, dtype=np.int64)
    vv = np.empty(e, dtype=np.int64)
    ww = np.empty(e, dtype=np.float64)
    for x in range(e):
        if m > 0 and keys[x] == keys[x - 1]:
            ww[m - 1] += vals[x]
        else:
            uu[m] = keys[x] // n_comm
            vv[m] = keys[x] % n_comm
            ww[m] = vals[x]
            m += 1
    # fold loops back in as u == v rows
    nl = 0
    for c in range(n_comm):
        if new_loops[c] > 0:
            nl += 1
    U = np.empty(m + nl, dtype=np.int64)
    V = np.empty(m + nl, dtype=np.int64)
    W = np.empty(m + nl, dtype=np.float64)
    U[:m] = uu[:m]
    V[:m] = vv[:m]
    W[:m] = ww[:m]
    x = m
    for c in range(n_comm):
        if new_loops[c] > 0:
            U[x] = c
            V[x] = c
            W[x] = new_loops[c]
            x += 1
    return U, V, W


@njit(cache=True, nogil=True)
def louvain_kernel(n, u, v, w, seed):
    """Run Louvain on ``n`` nodes with undirected edge rows ``(u, v, w)``.

    Returns the community of each node and the modularity after each level
    (index 0 is the singleton partition).
    """
    np.random.seed(seed)
    labels = np.arange(n)
    trace = np.empty(64, dtype=np.float64)
    nt = 0
    cur_n = n
    cu = u.astype(np.int64)
    cv = v.astype(np.int64)
    cw = w.astype(np.float64)
    while True:
        indptr, indices, weights, loops = _csr(cur_n, cu, cv, cw)
        k = np.zeros(cur_n, dtype=np.float64)
        for i in range(cur_n):
            k[i] = 2.0 * loops[i]
            for p in range(indptr[i], indptr[i + 1]):
                k[i] += weights[p]
        m2 = k.sum()
        if nt == 0:
            trace[0] = _level_modularity(np.arange(cur_n), cur_n, indptr, indices, weights, loops, k, m2)
            nt = 1
        order = np.random.permutation(cur_n)
        comm, moved = _local_moving(cur_n, indptr, indices, weights, k, m2, order)
        if not moved:
            break
        comm, n_comm = _renumber(comm)
        if nt == len(trace):
            grown = np.empty(2 * nt, dtype=np.float64)
            grown[:nt] = trace
            trace = grown
        trace[nt] = _level_modularity(comm, n_comm, indptr, indices, weights, loops, k, m2)
        nt += 1
        for i in range(n):
            labels[i] = comm[labels[i]]
        cu, cv, cw = _aggregate(comm, n_comm, indptr, indices, weights, loops)
        cur_n = n_comm
        if n_comm == 1:
            break
    labels, _ = _renumber(labels)
    return labels, trace[:nt]
