"""Pure-Python kernels.  Same signatures and results as the compiled ``_kernels``.

Used when the extension is not built, and as the reference the compiled
kernels are tested against.
"""

from __future__ import annotations

import itertools

import numpy as np

# Relative singular-value threshold below which an active-set system is skipped.
SINGULAR_RTOL = 1e-10
OVERFLOW = -2


def vertex_candidates(M, tol):
    """Feasible basic solutions of ``{m >= 0, M m >= 0, sum(m) == 1}``.

    Every choice of ``n - 1`` of the ``2n`` inequalities is made tight, the
    normalisation row is appended, and the square system is solved.  Singular
    systems are skipped.  Results are not deduplicated.
    """
    M = np.ascontiguousarray(M, dtype=np.float64)
    n = M.shape[0]
    C = np.vstack([np.eye(n), M])
    if n == 1:
        m = np.ones((1, 1))
        return m if M[0, 0] >= -tol else np.zeros((0, 1))
    combos = np.array(list(itertools.combinations(range(2 * n), n - 1)), dtype=np.intp)
    systems = np.empty((len(combos), n, n))
    systems[:, : n - 1, :] = C[combos]
    systems[:, n - 1, :] = 1.0
    sv = np.linalg.svd(systems, compute_uv=False)
    ok = sv[:, -1] > SINGULAR_RTOL * sv[:, 0]
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    sol = np.linalg.solve(systems[ok], np.broadcast_to(rhs, (int(ok.sum()), n))[..., None])[..., 0]
    feasible = (sol @ C.T >= -tol).all(axis=1)
    return sol[feasible]


class _Lists:
    """List-of-lists views; indexing lists is much faster than numpy scalars."""

    def __init__(self, table):
        self.prefix = table.prefix.tolist()
        self.child = table.child.tolist()
        self.edges = table.edges.tolist()
        self.length = table.length.tolist()
        self.src = table.src.tolist()

    def mul(self, mu, nu, al, ga):
        return _mul(self.prefix, self.child, self.edges, self.length, mu, nu, al, ga)

    def apply(self, mu, nu, delta):
        return _apply(self.prefix, self.child, self.edges, self.length, mu, nu, delta)


def _mul(prefix, child, edges, length, mu, nu, al, ga):
    ln = length[nu]
    la = length[al]
    if ln <= la and prefix[al][ln] == nu:
        r = mu
        row = edges[al]
        for k in range(ln, la):
            r = child[r][row[k]]
            if r < 0:
                return OVERFLOW, OVERFLOW
        return r, ga
    if la < ln and prefix[nu][la] == al:
        r = ga
        row = edges[nu]
        for k in range(la, ln):
            r = child[r][row[k]]
            if r < 0:
                return OVERFLOW, OVERFLOW
        return mu, r
    return -1, -1


def _apply(prefix, child, edges, length, mu, nu, delta):
    ln = length[nu]
    ld = length[delta]
    if ld < ln or prefix[delta][ln] != nu:
        return -1
    r = mu
    row = edges[delta]
    for k in range(ln, ld):
        r = child[r][row[k]]
        if r < 0:
            return -1
    return r


def nf_multiply(table, mu, nu, al, ga):
    """Batch product ``(s_mu s_nu^*)(s_al s_ga^*)``; returns id arrays, -1 for zero."""
    t = _Lists(table)
    out_mu = np.empty(len(mu), dtype=np.int32)
    out_nu = np.empty(len(mu), dtype=np.int32)
    for i, (a, b, c, d) in enumerate(zip(np.asarray(mu).tolist(), np.asarray(nu).tolist(),
                                         np.asarray(al).tolist(), np.asarray(ga).tolist())):
        out_mu[i], out_nu[i] = t.mul(a, b, c, d)
    return out_mu, out_nu


def nf_apply(table, mu, nu, delta):
    """Batch action of ``T_mu T_nu^*`` on basis vectors ``h_delta``; -1 for zero."""
    t = _Lists(table)
    out = np.empty(len(mu), dtype=np.int32)
    for i, (a, b, c) in enumerate(zip(np.asarray(mu).tolist(), np.asarray(nu).tolist(),
                                      np.asarray(delta).tolist())):
        out[i] = t.apply(a, b, c)
    return out


def homomorphism_scan(table, mus, nus, domain_length):
    """Compare ``pi(x y)`` with ``pi(x) pi(y)`` on basis vectors of length <= ``domain_length``.

    Loops over all ordered pairs of the given normal forms.  Only vectors
    extending ``nu(y)`` are visited: every other vector is killed by ``pi(y)``
    and by ``pi(x y)`` alike.  Returns ``(checked, violations, first)``.
    """
    t = _Lists(table)
    mus = np.asarray(mus).tolist()
    nus = np.asarray(nus).tolist()
    ext = {}
    for q in set(nus):
        ext[q] = table.extensions(q, domain_length).tolist()
    checked = 0
    bad = 0
    first = (-1, -1, -1)
    for i in range(len(mus)):
        xm, xn = mus[i], nus[i]
        for j in range(len(mus)):
            ym, yn = mus[j], nus[j]
            pm, pn = t.mul(xm, xn, ym, yn)
            for d in ext[yn]:
                checked += 1
                if pm == OVERFLOW:
                    lhs = OVERFLOW
                elif pm < 0:
                    lhs = -1
                else:
                    lhs = t.apply(pm, pn, d)
                mid = t.apply(ym, yn, d)
                rhs = t.apply(xm, xn, mid) if mid >= 0 else -1
                if lhs != rhs:
                    if bad == 0:
                        first = (i, j, d)
                    bad += 1
    return checked, bad, first


def _phi_tables(table, masses, betas, max_len):
    masses = np.atleast_2d(np.asarray(masses, dtype=np.float64))
    betas = np.atleast_1d(np.asarray(betas, dtype=np.float64))
    weights = np.exp(-np.outer(betas, np.arange(-max_len, max_len + 1)))
    return masses.tolist(), weights.tolist(), max_len


def kms_scan_all(table, mus, nus, masses, betas):
    """Largest ``|phi(ab) - exp(-beta(|mu| - |nu|)) phi(ba)|`` over all ordered pairs.

    ``a`` and ``b`` both range over the normal forms ``(mus[i], nus[i])``;
    ``masses[k]`` and ``betas[k]`` describe state ``k``.  Returns
    ``(max_violation[k], pairs, nonzero_pairs)``.
    """
    t = _Lists(table)
    mus = np.asarray(mus).tolist()
    nus = np.asarray(nus).tolist()
    ms, w, off = _phi_tables(table, masses, betas, 2 * table.depth)
    nstates = len(ms)
    worst = [0.0] * nstates
    length, src = t.length, t.src
    pairs = 0
    nonzero = 0
    for i in range(len(mus)):
        am, an = mus[i], nus[i]
        deg = length[am] - length[an]
        for j in range(len(mus)):
            bm, bn = mus[j], nus[j]
            pairs += 1
            r1 = t.mul(am, an, bm, bn)
            r2 = t.mul(bm, bn, am, an)
            if r1[0] == OVERFLOW or r2[0] == OVERFLOW:
                raise ValueError("path table too shallow for these products")
            d1 = r1[0] >= 0 and r1[0] == r1[1]
            d2 = r2[0] >= 0 and r2[0] == r2[1]
            if not (d1 or d2):
                continue
            nonzero += 1
            for s in range(nstates):
                lhs = w[s][off + length[r1[0]]] * ms[s][src[r1[0]]] if d1 else 0.0
                rhs = w[s][off + deg] * w[s][off + length[r2[0]]] * ms[s][src[r2[0]]] if d2 else 0.0
                diff = abs(lhs - rhs)
                if diff > worst[s]:
                    worst[s] = diff
    return np.array(worst), pairs, nonzero


def kms_scan_support(table, mus, nus, masses, betas, max_len):
    """Same check, but each ``a`` is paired only with the ``b`` of lengths
    ``<= max_len`` for which ``ab`` or ``ba`` can be a diagonal ``s_k s_k^*``.

    Those are ``b = (nu a', mu a')`` and ``b = (nu0, mu0)`` where ``mu, nu``
    share the suffix removed from ``mu0, nu0``.  Returns
    ``(max_violation[k], pairs, nonzero_pairs)``.
    """
    t = _Lists(table)
    mus = np.asarray(mus).tolist()
    nus = np.asarray(nus).tolist()
    ms, w, off = _phi_tables(table, masses, betas, 2 * table.depth)
    nstates = len(ms)
    worst = [0.0] * nstates
    length, src, child, edges, prefix = t.length, t.src, t.child, t.edges, t.prefix
    ext_cache = {}
    pairs = 0
    nonzero = 0

    def check(am, an, bm, bn):
        nonlocal pairs, nonzero
        pairs += 1
        r1 = t.mul(am, an, bm, bn)
        r2 = t.mul(bm, bn, am, an)
        if r1[0] == OVERFLOW or r2[0] == OVERFLOW:
            raise ValueError("path table too shallow for these products")
        d1 = r1[0] >= 0 and r1[0] == r1[1]
        d2 = r2[0] >= 0 and r2[0] == r2[1]
        if not (d1 or d2):
            return
        nonzero += 1
        deg = length[am] - length[an]
        for s in range(nstates):
            lhs = w[s][off + length[r1[0]]] * ms[s][src[r1[0]]] if d1 else 0.0
            rhs = w[s][off + deg] * w[s][off + length[r2[0]]] * ms[s][src[r2[0]]] if d2 else 0.0
            diff = abs(lhs - rhs)
            if diff > worst[s]:
                worst[s] = diff

    for i in range(len(mus)):
        am, an = mus[i], nus[i]
        lm, ln = length[am], length[an]
        x = src[am]
        room = max_len - max(lm, ln)
        if room >= 0:
            key = (x, room)
            if key not in ext_cache:
                ext_cache[key] = table.extensions(x, room).tolist()
            for ap in ext_cache[key]:
                bm, bn = an, am
                row = edges[ap]
                for k in range(length[ap]):
                    bm = child[bm][row[k]]
                    bn = child[bn][row[k]]
                check(am, an, bm, bn)
        k = 1
        while k <= min(lm, ln) and edges[am][lm - k] == edges[an][ln - k]:
            check(am, an, prefix[an][ln - k], prefix[am][lm - k])
            k += 1
    return np.array(worst), pairs, nonzero
