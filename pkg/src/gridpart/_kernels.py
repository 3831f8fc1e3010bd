"""Hot loops.  Each ``@jit`` kernel is valid plain Python as well; where the
pure-Python run would be hopelessly slow a vectorised numpy twin is provided
and chosen when acceleration is disabled.
"""

import numpy as np
from scipy import ndimage

from ._accel import NUMBA_ENABLED, jit

INF_CUT = 1 << 60
# room for every connected run of up to five cells rooted at one vertex
SET_BUFFER = 4096


# --------------------------------------------------------------------------
# ordering-consistent dynamic program


@jit
def dp_sweep_jit(order, nbrs, deg, w_ord, k, lo, hi, tol):
    n = order.size
    pos = np.empty(n, np.int64)
    for p in range(n):
        pos[order[p]] = p + 1
    cut = np.full((n + 1, k + 1), INF_CUT, np.int64)
    back = np.full((n + 1, k + 1), -1, np.int64)
    cut[0, 0] = 0
    t_lo = np.full(n + 1, k + 1, np.int64)
    t_hi = np.full(n + 1, -1, np.int64)
    t_lo[0] = 0
    t_hi[0] = 0
    for s in range(1, n + 1):
        weight = 0.0
        delta = 0
        for j in range(s, 0, -1):
            v = order[j - 1]
            weight += w_ord[j - 1]
            if weight > hi + tol:
                break
            for q in range(deg[v]):
                p = pos[nbrs[v, q]]
                if p < j:
                    delta += 1
                elif p <= s:
                    delta -= 1
            if weight < lo - tol or t_hi[j - 1] < 0:
                continue
            top = min(t_hi[j - 1], k - 1)
            for tp in range(t_lo[j - 1], top + 1):
                prev = cut[j - 1, tp]
                if prev >= INF_CUT:
                    continue
                cand = prev + delta
                # strict: among equal cuts the first (largest) j wins
                if cand < cut[s, tp + 1]:
                    cut[s, tp + 1] = cand
                    back[s, tp + 1] = j
        for t in range(k + 1):
            if cut[s, t] < INF_CUT:
                if t < t_lo[s]:
                    t_lo[s] = t
                t_hi[s] = t
    return cut, back


def dp_sweep_numpy(order, nbrs, deg, w_ord, k, lo, hi, tol):
    n = order.size
    pos = np.empty(n, np.int64)
    pos[order] = np.arange(1, n + 1)
    cut = np.full((n + 1, k + 1), np.inf)
    back = np.full((n + 1, k + 1), -1, np.int64)
    cut[0, 0] = 0.0
    d = np.zeros(n + 2, np.int64)  # d[j]: edges between prefix <j and window j..s
    j_min = 1
    for s in range(1, n + 1):
        # window sums accumulated from s downward, same order as the jit kernel
        sums = np.cumsum(w_ord[j_min - 1 : s][::-1])
        over = np.flatnonzero(sums > hi + tol)
        width = over[0] if over.size else sums.size
        j_min = s - width + 1
        if width == 0:
            continue
        v = order[s - 1]
        ps = pos[nbrs[v, : deg[v]]]
        d[s] = 0
        for p in ps[ps < s]:
            d[max(p + 1, j_min) : s + 1] += 1
        js = np.arange(s, j_min - 1, -1)
        ok = sums[:width] >= lo - tol
        js = js[ok]
        if js.size == 0:
            continue
        cand = cut[js - 1, :k] + d[js][:, None]
        best = np.argmin(cand, axis=0)
        vals = cand[best, np.arange(k)]
        finite = np.isfinite(vals)
        cut[s, 1:][finite] = vals[finite]
        back[s, 1:][finite] = js[best[finite]]
    out = np.where(np.isfinite(cut), cut, INF_CUT).astype(np.int64)
    return out, back


dp_sweep = dp_sweep_jit if NUMBA_ENABLED else dp_sweep_numpy


# --------------------------------------------------------------------------
# simulated annealing


@jit
def _allowed(y, x, i, j, lab, nbrs, deg, full):
    if y < x:
        return False
    if full:
        return True
    if lab[y] != i:
        return False
    for q in range(deg[y]):
        if lab[nbrs[y, q]] == j:
            return True
    return False


@jit
def rooted_sets(x, i, j, lab, nbrs, deg, max_run, full, loc_stamp, loc_idx, stamp,
                local, adjm, depth, out):
    """Connected vertex sets of size <= max_run whose smallest index is ``x``.

    With ``full`` false the sets are restricted to the vertices of part ``i``
    touching part ``j``.  Sets are written to ``out`` as bitmasks over
    ``local[:size]``; returns ``(n_sets, size)``.
    """
    local[0] = x
    depth[0] = 0
    loc_stamp[x] = stamp
    loc_idx[x] = 0
    size = 1
    head = 0
    while head < size:
        u = local[head]
        if depth[head] < max_run - 1:
            for q in range(deg[u]):
                w = nbrs[u, q]
                if loc_stamp[w] != stamp and _allowed(w, x, i, j, lab, nbrs, deg, full):
                    loc_stamp[w] = stamp
                    loc_idx[w] = size
                    local[size] = w
                    depth[size] = depth[head] + 1
                    size += 1
        head += 1
    for a in range(size):
        u = local[a]
        m = np.int64(0)
        for q in range(deg[u]):
            w = nbrs[u, q]
            if loc_stamp[w] == stamp:
                m |= np.int64(1) << loc_idx[w]
        adjm[a] = m
    out[0] = 1
    n_out = 1
    begin = 0
    for _ in range(max_run - 1):
        end = n_out
        for s in range(begin, end):
            S = out[s]
            frontier = np.int64(0)
            for b in range(size):
                if (S >> b) & 1:
                    frontier |= adjm[b]
            frontier &= ~S
            for b in range(size):
                if (frontier >> b) & 1:
                    T = S | (np.int64(1) << b)
                    seen = False
                    for t in range(end, n_out):
                        if out[t] == T:
                            seen = True
                            break
                    if not seen:
                        if n_out == out.size:
                            return -1, size
                        out[n_out] = T
                        n_out += 1
        if n_out == end:
            break
        begin = end
    return n_out, size


@jit
def max_rooted_count(nbrs, deg, n_vertices, candidates, max_run):
    loc_stamp = np.zeros(n_vertices, np.int64)
    loc_idx = np.zeros(n_vertices, np.int64)
    local = np.zeros(64, np.int64)
    adjm = np.zeros(64, np.int64)
    depth = np.zeros(64, np.int64)
    out = np.zeros(SET_BUFFER, np.int64)
    lab = np.zeros(n_vertices, np.int64)
    best = 0
    for t in range(candidates.size):
        count, _ = rooted_sets(candidates[t], 0, 0, lab, nbrs, deg, max_run, True,
                               loc_stamp, loc_idx, t + 1, local, adjm, depth, out)
        if count < 0:
            return -1
        if count > best:
            best = count
    return best


@jit
def _donor_connected(i, sel, ns, lab, nbrs, deg, remaining, mark, stamp, queue):
    for a in range(ns):
        mark[sel[a]] = stamp
    start = -1
    for a in range(ns):
        u = sel[a]
        for q in range(deg[u]):
            w = nbrs[u, q]
            if lab[w] == i and mark[w] != stamp:
                start = w
                break
        if start >= 0:
            break
    if start < 0:
        return False
    mark[start] = stamp
    queue[0] = start
    head = 0
    tail = 1
    while head < tail:
        u = queue[head]
        head += 1
        for q in range(deg[u]):
            w = nbrs[u, q]
            if lab[w] == i and mark[w] != stamp:
                mark[w] = stamp
                queue[tail] = w
                tail += 1
    return tail == remaining


@jit
def _rand_index(n):
    r = int(np.random.random() * n)
    return r if r < n else n - 1


@jit
def anneal_kernel(labels0, nbrs, deg, edges, weights, k, lo, hi, tol, temperature,
                  cooling, max_iters, no_improve, max_run, cmax, max_attempts, seed):
    np.random.seed(seed)
    n = labels0.size
    lab = labels0.copy()
    pw = np.zeros(k)
    size = np.zeros(k, np.int64)
    for v in range(n):
        pw[lab[v]] += weights[v]
        size[lab[v]] += 1
    n_edges = edges.shape[0]
    # slot -> edge id, and the set of cut edges kept as a swap-remove list
    edge_of = np.full(nbrs.shape, -1, np.int64)
    for e in range(n_edges):
        a = edges[e, 0]
        b = edges[e, 1]
        for q in range(deg[a]):
            if nbrs[a, q] == b:
                edge_of[a, q] = e
        for q in range(deg[b]):
            if nbrs[b, q] == a:
                edge_of[b, q] = e
    cut_list = np.empty(n_edges, np.int64)
    cut_pos = np.full(n_edges, -1, np.int64)
    cut = 0
    for e in range(n_edges):
        if lab[edges[e, 0]] != lab[edges[e, 1]]:
            cut_list[cut] = e
            cut_pos[e] = cut
            cut += 1
    best = lab.copy()
    best_cut = cut
    trace_it = np.empty(max_iters + 1, np.int64)
    trace_cut = np.empty(max_iters + 1, np.int64)
    trace_it[0] = 0
    trace_cut[0] = cut
    n_trace = 1

    mark = np.zeros(n, np.int64)
    queue = np.empty(n, np.int64)
    loc_stamp = np.zeros(n, np.int64)
    loc_idx = np.zeros(n, np.int64)
    local = np.zeros(64, np.int64)
    adjm = np.zeros(64, np.int64)
    depth = np.zeros(64, np.int64)
    out = np.zeros(SET_BUFFER, np.int64)
    sel = np.zeros(max(max_run, 1), np.int64)
    stamp = 0
    temp = temperature
    last_gain = 0
    it = 0
    accepted = 0
    while it < max_iters and it - last_gain < no_improve:
        it += 1
        found = False
        i = -1
        j = -1
        ns = 0
        for _ in range(max_attempts):
            if cut == 0:
                break
            e = cut_list[_rand_index(cut)]
            a = edges[e, 0]
            b = edges[e, 1]
            if np.random.random() < 0.5:
                x = a
                y = b
            else:
                x = b
                y = a
            i = lab[x]
            j = lab[y]
            mult = 0
            for q in range(deg[x]):
                if lab[nbrs[x, q]] == j:
                    mult += 1
            # thin to one draw per (vertex, target part) pair
            if mult > 1 and np.random.random() * mult >= 1.0:
                continue
            # every run rooted at x contains x, so x alone bounds the balance test
            if pw[i] - weights[x] < lo - tol or pw[j] + weights[x] > hi + tol:
                continue
            if max_run <= 1:
                sel[0] = x
                ns = 1
            else:
                stamp += 1
                n_sets, count = rooted_sets(x, i, j, lab, nbrs, deg, max_run, False,
                                            loc_stamp, loc_idx, stamp, local, adjm, depth, out)
                if np.random.random() * cmax >= n_sets:
                    continue
                mask = out[_rand_index(n_sets)]
                ns = 0
                for bit in range(count):
                    if (mask >> bit) & 1:
                        sel[ns] = local[bit]
                        ns += 1
            if size[i] <= ns:
                continue
            moved = 0.0
            for a2 in range(ns):
                moved += weights[sel[a2]]
            if pw[i] - moved < lo - tol or pw[j] + moved > hi + tol:
                continue
            stamp += 1
            if not _donor_connected(i, sel, ns, lab, nbrs, deg, size[i] - ns, mark, stamp, queue):
                continue
            found = True
            break
        if found:
            stamp += 1
            for a2 in range(ns):
                mark[sel[a2]] = stamp
            delta = 0
            for a2 in range(ns):
                u = sel[a2]
                for q in range(deg[u]):
                    w = nbrs[u, q]
                    if mark[w] == stamp:
                        continue
                    if lab[w] == i:
                        delta += 1
                    elif lab[w] == j:
                        delta -= 1
            take = True
            if delta > 0:
                take = np.random.random() < np.exp(-delta / temp)
            if take:
                moved = 0.0
                for a2 in range(ns):
                    lab[sel[a2]] = j
                    moved += weights[sel[a2]]
                pw[i] -= moved
                pw[j] += moved
                size[i] -= ns
                size[j] += ns
                for a2 in range(ns):
                    u = sel[a2]
                    for q in range(deg[u]):
                        e = edge_of[u, q]
                        is_cut = lab[u] != lab[nbrs[u, q]]
                        if is_cut and cut_pos[e] < 0:
                            cut_list[cut] = e
                            cut_pos[e] = cut
                            cut += 1
                        elif not is_cut and cut_pos[e] >= 0:
                            cut -= 1
                            last = cut_list[cut]
                            cut_list[cut_pos[e]] = last
                            cut_pos[last] = cut_pos[e]
                            cut_pos[e] = -1
                accepted += 1
                trace_it[n_trace] = it
                trace_cut[n_trace] = cut
                n_trace += 1
                if cut < best_cut:
                    best_cut = cut
                    best[:] = lab
                    last_gain = it
        temp *= cooling
    return best, lab, best_cut, cut, trace_it[:n_trace].copy(), trace_cut[:n_trace].copy(), it, accepted


# --------------------------------------------------------------------------
# kernel smoothing of a grid field


@jit
def smooth_field_jit(field, kernel, iters):
    m, n = field.shape
    rad = kernel.shape[0] // 2
    cur = field.copy()
    nxt = np.empty_like(cur)
    for _ in range(iters):
        for r in range(m):
            for c in range(n):
                num = 0.0
                den = 0.0
                for dr in range(-rad, rad + 1):
                    rr = r + dr
                    if rr < 0 or rr >= m:
                        continue
                    for dc in range(-rad, rad + 1):
                        cc = c + dc
                        if cc < 0 or cc >= n:
                            continue
                        wgt = kernel[dr + rad, dc + rad]
                        num += wgt * cur[rr, cc]
                        den += wgt
                nxt[r, c] = num / den
        cur, nxt = nxt, cur
    return cur


def smooth_field_numpy(field, kernel, iters):
    cur = np.asarray(field, dtype=np.float64).copy()
    den = ndimage.correlate(np.ones_like(cur), kernel, mode="constant", cval=0.0)
    for _ in range(iters):
        cur = ndimage.correlate(cur, kernel, mode="constant", cval=0.0) / den
    return cur


smooth_field = smooth_field_jit if NUMBA_ENABLED else smooth_field_numpy


# --------------------------------------------------------------------------
# Monte-Carlo part sums by inverse-CDF sampling


@jit
def mc_part_sums_jit(u, cdf, vals, natoms, labels, k):
    n_samples, n_vertices = u.shape
    out = np.zeros((n_samples, k))
    for s in range(n_samples):
        for v in range(n_vertices):
            x = u[s, v]
            lo = 0
            hi = natoms[v] - 1
            # first atom whose cumulative mass exceeds x
            while lo < hi:
                mid = (lo + hi) // 2
                if cdf[v, mid] > x:
                    hi = mid
                else:
                    lo = mid + 1
            out[s, labels[v]] += vals[v, lo]
    return out


def mc_part_sums_numpy(u, cdf, vals, natoms, labels, k):
    n_samples, n_vertices = u.shape
    out = np.zeros((n_samples, k))
    for v in range(n_vertices):
        na = natoms[v]
        idx = np.searchsorted(cdf[v, :na], u[:, v], side="right")
        np.minimum(idx, na - 1, out=idx)
        out[:, labels[v]] += vals[v, idx]
    return out


mc_part_sums = mc_part_sums_jit if NUMBA_ENABLED else mc_part_sums_numpy
