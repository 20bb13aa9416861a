"""Hot inner loops.

Every kernel exists twice: a ``*_nb`` version written as explicit loops and
compiled with numba, and a ``*_np`` version that vectorizes the same
computation with numpy.  The unsuffixed names dispatch on
:data:`pottslab._jit.USE_NUMBA`.  Both versions return bit-identical integer
results; float results agree to rounding.

Assignments are encoded as integers ``idx = sum_v colors[v] * k**v`` (vertex 0
is the least significant digit).  Graph adjacency is passed as CSR arrays.
"""

import numpy as np

from ._jit import USE_NUMBA, njit

# ---------------------------------------------------------------------------
# Enumeration of all k**n assignments: energy histograms
# ---------------------------------------------------------------------------


@njit
def energy_histogram_nb(n, k, indptr, indices, n_edges, size_ok, first, start, stop):
    """Histogram of H over assignments ``start <= idx < stop`` of the free digits.

    Vertices ``0..first-1`` are pinned to color 0.  ``size_ok[s]`` tells
    whether a class of size ``s`` is within the balance window.  Returns
    ``(hist_all, hist_bal)`` of length ``n_edges + 1``.
    """
    hist = np.zeros(n_edges + 1, dtype=np.int64)
    hist_bal = np.zeros(n_edges + 1, dtype=np.int64)
    if start >= stop:
        return hist, hist_bal
    col = np.zeros(n, dtype=np.int64)
    rem = start
    for v in range(first, n):
        col[v] = rem % k
        rem //= k
    cnt = np.zeros(k, dtype=np.int64)
    for v in range(n):
        cnt[col[v]] += 1
    bad = 0
    for c in range(k):
        if not size_ok[cnt[c]]:
            bad += 1
    energy = 0
    for v in range(n):
        for p in range(indptr[v], indptr[v + 1]):
            w = indices[p]
            if w > v and col[w] == col[v]:
                energy += 1
    for _ in range(start, stop):
        hist[energy] += 1
        if bad == 0:
            hist_bal[energy] += 1
        # odometer increment with incremental energy / class-size updates
        v = first
        while v < n:
            old = col[v]
            new = old + 1
            if new == k:
                new = 0
            delta = 0
            for p in range(indptr[v], indptr[v + 1]):
                cw = col[indices[p]]
                if cw == new:
                    delta += 1
                elif cw == old:
                    delta -= 1
            energy += delta
            if not size_ok[cnt[old]]:
                bad -= 1
            cnt[old] -= 1
            if not size_ok[cnt[old]]:
                bad += 1
            if not size_ok[cnt[new]]:
                bad -= 1
            cnt[new] += 1
            if not size_ok[cnt[new]]:
                bad += 1
            col[v] = new
            if new != 0:
                break
            v += 1
    return hist, hist_bal


def _decode_block(idx, n, k, first):
    cols = np.zeros((idx.size, n), dtype=np.int64)
    rem = idx.copy()
    for v in range(first, n):
        cols[:, v] = rem % k
        rem //= k
    return cols


def energy_histogram_np(n, k, indptr, indices, n_edges, size_ok, first, start, stop, block=1 << 15):
    hist = np.zeros(n_edges + 1, dtype=np.int64)
    hist_bal = np.zeros(n_edges + 1, dtype=np.int64)
    eu, ev = _csr_to_edges(n, indptr, indices)
    size_ok = np.asarray(size_ok, dtype=bool)
    for b0 in range(start, stop, block):
        idx = np.arange(b0, min(b0 + block, stop), dtype=np.int64)
        cols = _decode_block(idx, n, k, first)
        energy = (cols[:, eu] == cols[:, ev]).sum(axis=1)
        counts = (cols[:, :, None] == np.arange(k)).sum(axis=1)
        bal = size_ok[counts].all(axis=1)
        hist += np.bincount(energy, minlength=n_edges + 1)
        hist_bal += np.bincount(energy[bal], minlength=n_edges + 1)
    return hist, hist_bal


def _csr_to_edges(n, indptr, indices):
    src = np.repeat(np.arange(n), np.diff(indptr))
    keep = indices > src
    return src[keep], np.asarray(indices)[keep]


def energy_histogram(n, k, indptr, indices, n_edges, size_ok, first, start, stop):
    fn = energy_histogram_nb if USE_NUMBA else energy_histogram_np
    return fn(n, k, indptr, indices, n_edges, np.asarray(size_ok, dtype=np.bool_), first, start, stop)


@njit
def energy_table_nb(n, k, indptr, indices):
    """H(sigma) for every assignment index, in index order."""
    total = k**n
    out = np.empty(total, dtype=np.int64)
    col = np.zeros(n, dtype=np.int64)
    energy = indices.size // 2  # all-zero coloring: every edge monochromatic
    for idx in range(total):
        out[idx] = energy
        v = 0
        while v < n:
            old = col[v]
            new = old + 1
            if new == k:
                new = 0
            for p in range(indptr[v], indptr[v + 1]):
                cw = col[indices[p]]
                if cw == new:
                    energy += 1
                elif cw == old:
                    energy -= 1
            col[v] = new
            if new != 0:
                break
            v += 1
    return out


def energy_table_np(n, k, indptr, indices, block=1 << 15):
    total = k**n
    out = np.empty(total, dtype=np.int64)
    eu, ev = _csr_to_edges(n, indptr, indices)
    for b0 in range(0, total, block):
        idx = np.arange(b0, min(b0 + block, total), dtype=np.int64)
        cols = _decode_block(idx, n, k, 0)
        out[b0 : b0 + idx.size] = (cols[:, eu] == cols[:, ev]).sum(axis=1)
    return out


def energy_table(n, k, indptr, indices):
    fn = energy_table_nb if USE_NUMBA else energy_table_np
    return fn(n, k, indptr, indices)


# ---------------------------------------------------------------------------
# Random-cluster (FK) expansion: subset counts by (|A|, components)
# ---------------------------------------------------------------------------


@njit
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@njit
def fk_counts_nb(n, eu, ev):
    """``table[j, c]`` = number of edge subsets with j edges and c components.

    Subsets are visited in binary-reflected Gray order so consecutive
    subsets differ in one edge; the union-find is rebuilt for each subset.
    """
    m = eu.size
    table = np.zeros((m + 1, n + 1), dtype=np.int64)
    member = np.zeros(m, dtype=np.bool_)
    parent = np.empty(n, dtype=np.int64)
    size = 0
    for g in range(1 << m):
        if g > 0:
            # bit flipped between gray(g-1) and gray(g) is the lowest set bit of g
            b = 0
            while not (g >> b) & 1:
                b += 1
            member[b] = not member[b]
            size += 1 if member[b] else -1
        for v in range(n):
            parent[v] = v
        comps = n
        for e in range(m):
            if member[e]:
                ru = _find(parent, eu[e])
                rv = _find(parent, ev[e])
                if ru != rv:
                    parent[ru] = rv
                    comps -= 1
        table[size, comps] += 1
    return table


def fk_counts_np(n, eu, ev, block=1 << 14):
    m = eu.size
    table = np.zeros((m + 1, n + 1), dtype=np.int64)
    bits = np.arange(m)
    for b0 in range(0, 1 << m, block):
        sub = np.arange(b0, min(b0 + block, 1 << m), dtype=np.int64)
        member = ((sub[:, None] >> bits) & 1).astype(bool)
        labels = np.broadcast_to(np.arange(n), (sub.size, n)).copy()
        # min-label propagation over active edges; converges in at most n passes
        changed = True
        while changed:
            changed = False
            for e in range(m):
                u, v = eu[e], ev[e]
                low = np.minimum(labels[:, u], labels[:, v])
                hit = member[:, e] & (labels[:, u] != labels[:, v])
                if hit.any():
                    changed = True
                    labels[hit, u] = low[hit]
                    labels[hit, v] = low[hit]
        comps = (labels == np.arange(n)).sum(axis=1)
        np.add.at(table, (member.sum(axis=1), comps), 1)
    return table


def fk_counts(n, eu, ev):
    fn = fk_counts_nb if USE_NUMBA else fk_counts_np
    return fn(n, np.asarray(eu, dtype=np.int64), np.asarray(ev, dtype=np.int64))


# ---------------------------------------------------------------------------
# Single-site dynamics
# ---------------------------------------------------------------------------


@njit
def heat_bath_nb(indptr, indices, col, k, boltz, u_vertex, u_color, energy, trace_energy, trace_state, powk):
    """Run ``len(u_vertex)`` heat-bath updates in place on ``col``.

    ``boltz[j] = exp(-beta * j)``.  Traces are written when non-empty; the
    state trace needs ``powk[v] = k**v``.  Returns the final energy.
    """
    n = col.size
    steps = u_vertex.size
    cnt = np.zeros(k, dtype=np.int64)
    w = np.empty(k, dtype=np.float64)
    want_e = trace_energy.size > 0
    want_s = trace_state.size > 0
    state = 0
    if want_s:
        for v in range(n):
            state += col[v] * powk[v]
    for t in range(steps):
        v = int(u_vertex[t] * n)
        if v == n:
            v = n - 1
        for c in range(k):
            cnt[c] = 0
        for p in range(indptr[v], indptr[v + 1]):
            cnt[col[indices[p]]] += 1
        tot = 0.0
        for c in range(k):
            w[c] = boltz[cnt[c]]
            tot += w[c]
        r = u_color[t] * tot
        new = k - 1
        acc = 0.0
        for c in range(k):
            acc += w[c]
            if r < acc:
                new = c
                break
        old = col[v]
        if new != old:
            energy += cnt[new] - cnt[old]
            col[v] = new
            if want_s:
                state += (new - old) * powk[v]
        if want_e:
            trace_energy[t] = energy
        if want_s:
            trace_state[t] = state
    return energy


def heat_bath_np(indptr, indices, col, k, boltz, u_vertex, u_color, energy, trace_energy, trace_state, powk):
    n = col.size
    want_e = trace_energy.size > 0
    want_s = trace_state.size > 0
    state = int(np.dot(col, powk)) if want_s else 0
    verts = np.minimum((u_vertex * n).astype(np.int64), n - 1)
    for t in range(u_vertex.size):
        v = verts[t]
        cnt = np.bincount(col[indices[indptr[v] : indptr[v + 1]]], minlength=k)
        w = boltz[cnt]
        cum = np.cumsum(w)
        new = min(int(np.searchsorted(cum, u_color[t] * cum[-1], side="right")), k - 1)
        old = col[v]
        if new != old:
            energy += cnt[new] - cnt[old]
            col[v] = new
            state += (new - old) * int(powk[v]) if want_s else 0
        if want_e:
            trace_energy[t] = energy
        if want_s:
            trace_state[t] = state
    return energy


@njit
def metropolis_nb(indptr, indices, col, k, boltz, u_vertex, u_color, energy, trace_energy, trace_state, powk):
    """Metropolis updates: propose a uniform color for a uniform vertex.

    ``u_color`` must have length ``2 * len(u_vertex)``: one uniform for the
    proposal and one for acceptance per step.
    """
    n = col.size
    want_e = trace_energy.size > 0
    want_s = trace_state.size > 0
    state = 0
    if want_s:
        for v in range(n):
            state += col[v] * powk[v]
    for t in range(u_vertex.size):
        v = int(u_vertex[t] * n)
        if v == n:
            v = n - 1
        new = int(u_color[2 * t] * k)
        if new == k:
            new = k - 1
        old = col[v]
        if new != old:
            delta = 0
            for p in range(indptr[v], indptr[v + 1]):
                cw = col[indices[p]]
                if cw == new:
                    delta += 1
                elif cw == old:
                    delta -= 1
            if delta <= 0 or u_color[2 * t + 1] < boltz[delta]:
                energy += delta
                col[v] = new
                if want_s:
                    state += (new - old) * powk[v]
        if want_e:
            trace_energy[t] = energy
        if want_s:
            trace_state[t] = state
    return energy


def metropolis_np(indptr, indices, col, k, boltz, u_vertex, u_color, energy, trace_energy, trace_state, powk):
    n = col.size
    want_e = trace_energy.size > 0
    want_s = trace_state.size > 0
    state = int(np.dot(col, powk)) if want_s else 0
    verts = np.minimum((u_vertex * n).astype(np.int64), n - 1)
    props = np.minimum((u_color[0::2] * k).astype(np.int64), k - 1)
    for t in range(u_vertex.size):
        v, new, old = verts[t], props[t], col[verts[t]]
        if new != old:
            nb = col[indices[indptr[v] : indptr[v + 1]]]
            delta = int((nb == new).sum() - (nb == old).sum())
            if delta <= 0 or u_color[2 * t + 1] < boltz[delta]:
                energy += delta
                col[v] = new
                state += (new - old) * int(powk[v]) if want_s else 0
        if want_e:
            trace_energy[t] = energy
        if want_s:
            trace_state[t] = state
    return energy


def heat_bath(*args):
    return (heat_bath_nb if USE_NUMBA else heat_bath_np)(*args)


def metropolis(*args):
    return (metropolis_nb if USE_NUMBA else metropolis_np)(*args)


# ---------------------------------------------------------------------------
# Euclidean projections onto (box-constrained) simplices
# ---------------------------------------------------------------------------


@njit
def project_rows_bounded_nb(V, lo, hi):
    """Project each row of V onto ``{x : sum x = 1, lo <= x <= hi}``.

    Exact breakpoint walk on the piecewise-linear map
    ``lam -> sum clip(v - lam, lo, hi)``.  Requires ``sum lo <= 1 <= sum hi``.
    """
    r, k = V.shape
    out = np.empty_like(V)
    bp = np.empty(2 * k)
    kind = np.empty(2 * k, dtype=np.int64)
    for i in range(r):
        for j in range(k):
            bp[2 * j] = V[i, j] - hi[i, j]
            kind[2 * j] = 1
            bp[2 * j + 1] = V[i, j] - lo[i, j]
            kind[2 * j + 1] = -1
        order = np.argsort(bp, kind="mergesort")
        g = 0.0
        for j in range(k):
            g += hi[i, j]
        lam = bp[order[0]]
        nfree = 0
        found = False
        for q in range(2 * k):
            b = bp[order[q]]
            g_next = g - nfree * (b - lam)
            if g_next <= 1.0 and nfree > 0:
                lam = lam + (g - 1.0) / nfree
                found = True
                break
            g = g_next
            lam = b
            nfree += kind[order[q]]
        if not found:
            # g == 1 exactly at a breakpoint (or degenerate box); lam is valid
            pass
        for j in range(k):
            x = V[i, j] - lam
            if x < lo[i, j]:
                x = lo[i, j]
            elif x > hi[i, j]:
                x = hi[i, j]
            out[i, j] = x
    return out


def project_rows_bounded_np(V, lo, hi, iters=100):
    V = np.asarray(V, dtype=float)
    a = (V - hi).min(axis=1)
    b = (V - lo).max(axis=1)
    for _ in range(iters):
        mid = 0.5 * (a + b)
        g = np.clip(V - mid[:, None], lo, hi).sum(axis=1)
        big = g > 1.0
        a = np.where(big, mid, a)
        b = np.where(big, b, mid)
    lam = 0.5 * (a + b)
    x = np.clip(V - lam[:, None], lo, hi)
    free = (V - lam[:, None] > lo) & (V - lam[:, None] < hi)
    nfree = free.sum(axis=1)
    fixed_mass = np.where(free, 0.0, x).sum(axis=1)
    free_v = np.where(free, V, 0.0).sum(axis=1)
    ok = nfree > 0
    lam_exact = np.where(ok, (free_v - (1.0 - fixed_mass)) / np.maximum(nfree, 1), lam)
    return np.clip(V - lam_exact[:, None], lo, hi)


def project_rows_bounded(V, lo, hi):
    fn = project_rows_bounded_nb if USE_NUMBA else project_rows_bounded_np
    V = np.ascontiguousarray(V, dtype=np.float64)
    lo = np.ascontiguousarray(np.broadcast_to(lo, V.shape), dtype=np.float64)
    hi = np.ascontiguousarray(np.broadcast_to(hi, V.shape), dtype=np.float64)
    return fn(V, lo, hi)


@njit
def dykstra_nb(M, lo, hi, tol, max_sweeps):
    """Dykstra's alternating projection onto rows-bounded-simplex ∩ cols-bounded-simplex.

    Returns ``(X, sweeps, residual)`` where residual is the largest row or
    column sum error of X.
    """
    X = M.copy()
    P = np.zeros_like(M)
    Q = np.zeros_like(M)
    loT = np.ascontiguousarray(lo.T)
    hiT = np.ascontiguousarray(hi.T)
    residual = np.inf
    for sweep in range(1, max_sweeps + 1):
        Y = project_rows_bounded_nb(X + P, lo, hi)
        P = X + P - Y
        Zt = project_rows_bounded_nb(np.ascontiguousarray((Y + Q).T), loT, hiT)
        Z = Zt.T.copy()
        Q = Y + Q - Z
        change = np.abs(Z - X).max()
        X = Z
        rs = np.abs(X.sum(axis=1) - 1.0).max()
        residual = rs
        if change < tol and rs < tol:
            return X, sweep, residual
    return X, max_sweeps, residual


def dykstra_np(M, lo, hi, tol, max_sweeps):
    X = np.array(M, dtype=float)
    P = np.zeros_like(X)
    Q = np.zeros_like(X)
    residual = np.inf
    for sweep in range(1, max_sweeps + 1):
        Y = project_rows_bounded_np(X + P, lo, hi)
        P = X + P - Y
        Z = project_rows_bounded_np((Y + Q).T, lo.T, hi.T).T
        Q = Y + Q - Z
        change = np.abs(Z - X).max()
        X = Z
        residual = np.abs(X.sum(axis=1) - 1.0).max()
        if change < tol and residual < tol:
            return X, sweep, residual
    return X, max_sweeps, residual


def dykstra(M, lo, hi, tol, max_sweeps):
    M = np.ascontiguousarray(M, dtype=np.float64)
    lo = np.ascontiguousarray(np.broadcast_to(lo, M.shape), dtype=np.float64)
    hi = np.ascontiguousarray(np.broadcast_to(hi, M.shape), dtype=np.float64)
    fn = dykstra_nb if USE_NUMBA else dykstra_np
    return fn(M, lo, hi, float(tol), int(max_sweeps))
