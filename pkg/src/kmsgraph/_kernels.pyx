# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; see ``_purepy`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef double SINGULAR_RTOL = 1e-10
cdef int OVERFLOW = -2


cdef int _solve(double* S, double* x, int n) noexcept nogil:
    """Gaussian elimination with partial pivoting on the n x n row-major S.

    The right-hand side is e_{n-1}.  Returns 0 when a pivot falls below the
    relative threshold.
    """
    cdef int i, j, k, p
    cdef double scale = 0.0, best, t, f
    cdef double b[64]
    for i in range(n * n):
        if fabs(S[i]) > scale:
            scale = fabs(S[i])
    for i in range(n):
        b[i] = 0.0
    b[n - 1] = 1.0
    for k in range(n):
        p = k
        best = fabs(S[k * n + k])
        for i in range(k + 1, n):
            if fabs(S[i * n + k]) > best:
                best = fabs(S[i * n + k])
                p = i
        if best <= SINGULAR_RTOL * scale:
            return 0
        if p != k:
            for j in range(n):
                t = S[k * n + j]
                S[k * n + j] = S[p * n + j]
                S[p * n + j] = t
            t = b[k]
            b[k] = b[p]
            b[p] = t
        for i in range(k + 1, n):
            f = S[i * n + k] / S[k * n + k]
            if f != 0.0:
                for j in range(k, n):
                    S[i * n + j] -= f * S[k * n + j]
                b[i] -= f * b[k]
    for i in range(n - 1, -1, -1):
        t = b[i]
        for j in range(i + 1, n):
            t -= S[i * n + j] * x[j]
        x[i] = t / S[i * n + i]
    return 1


def vertex_candidates(M, double tol):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] Mc = np.ascontiguousarray(M, dtype=np.float64)
    cdef int n = Mc.shape[0]
    if n > 32:
        raise ValueError("dimension too large")
    if n == 1:
        if Mc[0, 0] >= -tol:
            return np.ones((1, 1))
        return np.zeros((0, 1))
    cdef int nc = 2 * n, r = n - 1
    cdef cnp.ndarray[cnp.float64_t, ndim=2] C = np.vstack([np.eye(n), Mc])
    cdef double* S = <double*> malloc(n * n * sizeof(double))
    cdef double* x = <double*> malloc(n * sizeof(double))
    cdef int* idx = <int*> malloc(r * sizeof(int))
    cdef int i, j, k
    cdef double v
    cdef bint feasible
    out = []
    try:
        for i in range(r):
            idx[i] = i
        while True:
            for i in range(r):
                for j in range(n):
                    S[i * n + j] = C[idx[i], j]
            for j in range(n):
                S[r * n + j] = 1.0
            if _solve(S, x, n):
                feasible = True
                for k in range(nc):
                    v = 0.0
                    for j in range(n):
                        v += C[k, j] * x[j]
                    if v < -tol:
                        feasible = False
                        break
                if feasible:
                    out.append([x[j] for j in range(n)])
            # next combination
            i = r - 1
            while i >= 0 and idx[i] == nc - r + i:
                i -= 1
            if i < 0:
                break
            idx[i] += 1
            for j in range(i + 1, r):
                idx[j] = idx[j - 1] + 1
    finally:
        free(S)
        free(x)
        free(idx)
    if not out:
        return np.zeros((0, n))
    return np.array(out)


cdef struct Tab:
    int* prefix
    int* child
    int* edges
    int* length
    int* src
    int* dfs_order
    int* dfs_start
    int* subtree
    int pw
    int cw
    int ew


cdef class _TableView:
    cdef Tab t
    cdef object keep

    def __cinit__(self, table):
        prefix = np.ascontiguousarray(table.prefix, dtype=np.int32)
        child = np.ascontiguousarray(table.child, dtype=np.int32)
        edges = np.ascontiguousarray(table.edges, dtype=np.int32)
        length = np.ascontiguousarray(table.length, dtype=np.int32)
        src = np.ascontiguousarray(table.src, dtype=np.int32)
        dfs_order = np.ascontiguousarray(table.dfs_order, dtype=np.int32)
        dfs_start = np.ascontiguousarray(table.dfs_start, dtype=np.int32)
        subtree = np.ascontiguousarray(table.subtree, dtype=np.int32)
        self.keep = (prefix, child, edges, length, src, dfs_order, dfs_start, subtree)
        self.t.prefix = <int*> cnp.PyArray_DATA(prefix)
        self.t.child = <int*> cnp.PyArray_DATA(child)
        self.t.edges = <int*> cnp.PyArray_DATA(edges)
        self.t.length = <int*> cnp.PyArray_DATA(length)
        self.t.src = <int*> cnp.PyArray_DATA(src)
        self.t.dfs_order = <int*> cnp.PyArray_DATA(dfs_order)
        self.t.dfs_start = <int*> cnp.PyArray_DATA(dfs_start)
        self.t.subtree = <int*> cnp.PyArray_DATA(subtree)
        self.t.pw = prefix.shape[1]
        self.t.cw = child.shape[1]
        self.t.ew = edges.shape[1]


cdef inline void _mul(Tab* t, int mu, int nu, int al, int ga, int* rm, int* rn) noexcept nogil:
    cdef int ln = t.length[nu], la = t.length[al], r, k
    if ln <= la and t.prefix[al * t.pw + ln] == nu:
        r = mu
        for k in range(ln, la):
            r = t.child[r * t.cw + t.edges[al * t.ew + k]]
            if r < 0:
                rm[0] = OVERFLOW
                rn[0] = OVERFLOW
                return
        rm[0] = r
        rn[0] = ga
        return
    if la < ln and t.prefix[nu * t.pw + la] == al:
        r = ga
        for k in range(la, ln):
            r = t.child[r * t.cw + t.edges[nu * t.ew + k]]
            if r < 0:
                rm[0] = OVERFLOW
                rn[0] = OVERFLOW
                return
        rm[0] = mu
        rn[0] = r
        return
    rm[0] = -1
    rn[0] = -1


cdef inline int _apply(Tab* t, int mu, int nu, int delta) noexcept nogil:
    cdef int ln = t.length[nu], ld = t.length[delta], r, k
    if ld < ln or t.prefix[delta * t.pw + ln] != nu:
        return -1
    r = mu
    for k in range(ln, ld):
        r = t.child[r * t.cw + t.edges[delta * t.ew + k]]
        if r < 0:
            return -1
    return r


def nf_multiply(table, mu, nu, al, ga):
    cdef _TableView tv = _TableView(table)
    cdef int[::1] a = np.ascontiguousarray(mu, dtype=np.int32)
    cdef int[::1] b = np.ascontiguousarray(nu, dtype=np.int32)
    cdef int[::1] c = np.ascontiguousarray(al, dtype=np.int32)
    cdef int[::1] d = np.ascontiguousarray(ga, dtype=np.int32)
    cdef Py_ssize_t N = a.shape[0], i
    out_mu = np.empty(N, dtype=np.int32)
    out_nu = np.empty(N, dtype=np.int32)
    cdef int[::1] om = out_mu
    cdef int[::1] on = out_nu
    with nogil:
        for i in range(N):
            _mul(&tv.t, a[i], b[i], c[i], d[i], &om[i], &on[i])
    return out_mu, out_nu


def nf_apply(table, mu, nu, delta):
    cdef _TableView tv = _TableView(table)
    cdef int[::1] a = np.ascontiguousarray(mu, dtype=np.int32)
    cdef int[::1] b = np.ascontiguousarray(nu, dtype=np.int32)
    cdef int[::1] c = np.ascontiguousarray(delta, dtype=np.int32)
    cdef Py_ssize_t N = a.shape[0], i
    out = np.empty(N, dtype=np.int32)
    cdef int[::1] o = out
    with nogil:
        for i in range(N):
            o[i] = _apply(&tv.t, a[i], b[i], c[i])
    return out


def _domain_images(table, mus, nus, int domain_length):
    """CSR lists, per normal form ``y``, of ``(d, pi(y) h_d)`` for ``d`` extending ``nu(y)``."""
    ptr = np.zeros(len(mus) + 1, dtype=np.int64)
    ext = {}
    for q in np.unique(nus).tolist():
        ext[q] = table.extensions(q, domain_length).astype(np.int32)
    counts = np.array([len(ext[q]) for q in np.asarray(nus).tolist()], dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    ds = np.concatenate([ext[q] for q in np.asarray(nus).tolist()]) if len(mus) else np.zeros(0, np.int32)
    ys = np.repeat(np.asarray(mus, dtype=np.int32), counts)
    yn = np.repeat(np.asarray(nus, dtype=np.int32), counts)
    mids = nf_apply(table, ys, yn, ds)
    return ptr, ds.astype(np.int32), mids


def homomorphism_scan(table, mus, nus, int domain_length):
    cdef _TableView tv = _TableView(table)
    cdef Tab* t = &tv.t
    cdef int[::1] xs = np.ascontiguousarray(mus, dtype=np.int32)
    cdef int[::1] ys = np.ascontiguousarray(nus, dtype=np.int32)
    p_, d_, m_ = _domain_images(table, mus, nus, domain_length)
    cdef long long[::1] ptr = p_
    cdef int[::1] ds = d_
    cdef int[::1] mids = m_
    cdef Py_ssize_t N = xs.shape[0], i, j, q
    cdef int xm, xn, pm, pn, d, lhs, rhs, mid
    cdef long long checked = 0, bad = 0
    cdef Py_ssize_t fi = -1, fj = -1
    cdef int fd = -1
    with nogil:
        for i in range(N):
            xm = xs[i]
            xn = ys[i]
            for j in range(N):
                _mul(t, xm, xn, xs[j], ys[j], &pm, &pn)
                checked += ptr[j + 1] - ptr[j]
                for q in range(ptr[j], ptr[j + 1]):
                    d = ds[q]
                    mid = mids[q]
                    if pm == OVERFLOW:
                        lhs = OVERFLOW
                    elif pm < 0:
                        lhs = -1
                    else:
                        lhs = _apply(t, pm, pn, d)
                    if mid >= 0:
                        rhs = _apply(t, xm, xn, mid)
                    else:
                        rhs = -1
                    if lhs != rhs:
                        if bad == 0:
                            fi = i
                            fj = j
                            fd = d
                        bad += 1
    return checked, bad, (fi, fj, fd)


cdef struct Phi:
    double* m
    double* w
    int mw
    int ww
    int off
    int ns


cdef class _PhiData:
    """Owns the per-state mass vectors and the table of exp(-beta * k)."""
    cdef Phi p
    cdef object keep

    def __cinit__(self, masses, betas, int max_len):
        m = np.ascontiguousarray(np.atleast_2d(np.asarray(masses, dtype=np.float64)))
        b = np.atleast_1d(np.asarray(betas, dtype=np.float64))
        w = np.ascontiguousarray(np.exp(-np.outer(b, np.arange(-max_len, max_len + 1))))
        self.keep = (m, w)
        self.p.m = <double*> cnp.PyArray_DATA(m)
        self.p.w = <double*> cnp.PyArray_DATA(w)
        self.p.mw = m.shape[1]
        self.p.ww = w.shape[1]
        self.p.off = max_len
        self.p.ns = m.shape[0]


cdef inline int _check(Tab* t, Phi* ph, double* worst, int am, int an, int bm, int bn) noexcept nogil:
    """Returns 1 if some side is nonzero, 0 if both vanish, -1 on overflow."""
    cdef int r1m, r1n, r2m, r2n, s, deg
    cdef bint d1, d2
    cdef double lhs, rhs, diff
    _mul(t, am, an, bm, bn, &r1m, &r1n)
    _mul(t, bm, bn, am, an, &r2m, &r2n)
    if r1m == OVERFLOW or r2m == OVERFLOW:
        return -1
    d1 = r1m >= 0 and r1m == r1n
    d2 = r2m >= 0 and r2m == r2n
    if not (d1 or d2):
        return 0
    deg = t.length[am] - t.length[an]
    for s in range(ph.ns):
        lhs = 0.0
        rhs = 0.0
        if d1:
            lhs = ph.w[s * ph.ww + ph.off + t.length[r1m]] * ph.m[s * ph.mw + t.src[r1m]]
        if d2:
            rhs = (ph.w[s * ph.ww + ph.off + deg] * ph.w[s * ph.ww + ph.off + t.length[r2m]]
                   * ph.m[s * ph.mw + t.src[r2m]])
        diff = fabs(lhs - rhs)
        if diff > worst[s]:
            worst[s] = diff
    return 1


def kms_scan_all(table, mus, nus, masses, betas):
    cdef _TableView tv = _TableView(table)
    cdef Tab* t = &tv.t
    cdef _PhiData pd = _PhiData(masses, betas, 2 * table.depth)
    cdef Phi* ph = &pd.p
    cdef int[::1] xs = np.ascontiguousarray(mus, dtype=np.int32)
    cdef int[::1] ys = np.ascontiguousarray(nus, dtype=np.int32)
    worst_arr = np.zeros(ph.ns)
    cdef double[::1] worst = worst_arr
    cdef Py_ssize_t N = xs.shape[0], i, j
    cdef long long pairs = 0, nonzero = 0
    cdef int rc
    cdef bint overflow = False
    with nogil:
        for i in range(N):
            for j in range(N):
                pairs += 1
                rc = _check(t, ph, &worst[0], xs[i], ys[i], xs[j], ys[j])
                if rc < 0:
                    overflow = True
                    break
                nonzero += rc
            if overflow:
                break
    if overflow:
        raise ValueError("path table too shallow for these products")
    return worst_arr, pairs, nonzero


def kms_scan_support(table, mus, nus, masses, betas, int max_len):
    cdef _TableView tv = _TableView(table)
    cdef Tab* t = &tv.t
    cdef _PhiData pd = _PhiData(masses, betas, 2 * table.depth)
    cdef Phi* ph = &pd.p
    cdef int[::1] xs = np.ascontiguousarray(mus, dtype=np.int32)
    cdef int[::1] ys = np.ascontiguousarray(nus, dtype=np.int32)
    worst_arr = np.zeros(ph.ns)
    cdef double[::1] worst = worst_arr
    # paths with range x and length <= max_len, in id (hence length) order
    short = table.ids_up_to(max_len)
    rng_short = table.rng[short]
    order = np.argsort(rng_short, kind="stable")
    cdef int[::1] by_range = np.ascontiguousarray(short[order], dtype=np.int32)
    cdef long long[::1] rptr = np.concatenate(
        [[0], np.cumsum(np.bincount(rng_short, minlength=table.graph.n))]).astype(np.int64)
    cdef Py_ssize_t N = xs.shape[0], i, q
    cdef long long pairs = 0, nonzero = 0
    cdef int am, an, lm, ln, x, room, ap, bm, bn, k, e, rc
    cdef bint overflow = False
    with nogil:
        for i in range(N):
            am = xs[i]
            an = ys[i]
            lm = t.length[am]
            ln = t.length[an]
            x = t.src[am]
            room = max_len - (lm if lm > ln else ln)
            if room >= 0:
                for q in range(rptr[x], rptr[x + 1]):
                    ap = by_range[q]
                    if t.length[ap] > room:
                        break
                    bm = an
                    bn = am
                    for k in range(t.length[ap]):
                        e = t.edges[ap * t.ew + k]
                        bm = t.child[bm * t.cw + e]
                        bn = t.child[bn * t.cw + e]
                    pairs += 1
                    rc = _check(t, ph, &worst[0], am, an, bm, bn)
                    if rc < 0:
                        overflow = True
                        break
                    nonzero += rc
            if overflow:
                break
            k = 1
            while k <= lm and k <= ln and t.edges[am * t.ew + lm - k] == t.edges[an * t.ew + ln - k]:
                pairs += 1
                rc = _check(t, ph, &worst[0], am, an,
                            t.prefix[an * t.pw + ln - k], t.prefix[am * t.pw + lm - k])
                if rc < 0:
                    overflow = True
                    break
                nonzero += rc
                k += 1
            if overflow:
                break
    if overflow:
        raise ValueError("path table too shallow for these products")
    return worst_arr, pairs, nonzero
