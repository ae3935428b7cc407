"""Independent reference implementations used by the tests.

Deliberately naive: explicit loops, scipy root finding and direct
evaluation of the defining sums, sharing no code with the package.
"""

import math

import numpy as np
from scipy.optimize import brentq


def modular(values, pvals, vol):
    total, sup = 0.0, 0.0
    for v, p in zip(values, pvals):
        if v == 0:
            continue
        if math.isinf(p):
            sup = max(sup, v)
        else:
            total += v ** p * vol
    return total + sup


def luxemburg(values, pvals, vol):
    values = list(map(float, values))
    if max(values, default=0.0) == 0:
        return 0.0
    f = lambda t: modular([v / math.exp(t) for v in values], pvals, vol) - 1.0
    lo, hi = -1.0, 1.0
    while f(lo) <= 0:
        lo -= 4.0
    while f(hi) > 0:
        hi += 4.0
    return math.exp(brentq(f, lo, hi, xtol=1e-14, rtol=1e-14))


def lp_classical(values, p, vol):
    if math.isinf(p):
        return max(values)
    return sum(v ** p for v in values if v > 0) ** (1 / p) * vol ** (1 / p)


def nested_level_term(values, pvals, qvals, vol):
    """inf{lam : rho_p(f / lam**(1/q)) <= 1} by brentq in log lam."""
    if max(values) == 0:
        return 0.0
    f = lambda t: modular([v * math.exp(-t / q) for v, q in zip(values, qvals)], pvals, vol) - 1
    lo, hi = -1.0, 1.0
    while f(lo) <= 0:
        lo -= 4.0
    while f(hi) > 0:
        hi += 4.0
    return math.exp(brentq(f, lo, hi, xtol=1e-14, rtol=1e-14))


def besov_constant(entries, n, p, q, s):
    """Closed form for constant exponents from (j, m, value) entries."""
    per = {}
    for j, _, v in entries:
        per.setdefault(j, []).append(v)
    levels = []
    for j, vals in per.items():
        if math.isinf(p):
            levels.append(2.0 ** (j * s) * max(vals))
        else:
            levels.append(2.0 ** (j * s) * (sum(v ** p for v in vals) * 2.0 ** (-j * n)) ** (1 / p))
    if not levels:
        return 0.0
    if math.isinf(q):
        return max(levels)
    return sum(x ** q for x in levels) ** (1 / q)


def triebel_constant_1d(entries, lo, hi, L, p, q, s):
    """f-norm in one dimension: loop over cells, then classical L_p."""
    h = 2.0 ** -L
    cells = int(round((hi - lo) / h))
    vals = []
    for c in range(cells):
        x = lo + (c + 0.5) * h
        terms = []
        for j, m, v in entries:
            a = m[0] * 2.0 ** -j
            if a <= x < a + 2.0 ** -j:
                terms.append(2.0 ** (j * s) * v)
        if not terms:
            vals.append(0.0)
        elif math.isinf(q):
            vals.append(max(terms))
        else:
            vals.append(sum(t ** q for t in terms) ** (1 / q))
    return lp_classical(vals, p, h)


def sorted_rows(gamma):
    return [sorted(gamma.row(j).tolist(), reverse=True) for j in range(gamma.J_max + 1)]


def franke_direct(gamma, p0, p1, q, k_extra=80):
    """I, II, III and the discretized sum by evaluating g(2**(-kn)) directly."""
    n, J = gamma.n, gamma.J_max
    rows = sorted_rows(gamma)

    def star(j, l):
        return rows[j][l] if l < len(rows[j]) else 0.0

    I = II = III = D = 0.0
    K = 0
    while 2 ** (K * n) < 10 * max(len(r) for r in rows) * 2 ** (J * n):
        K += 1
    for k in range(-K, J + k_extra):
        a = b = c = 0.0
        for j in range(J + 1):
            idx = int(math.floor(2.0 ** ((j - k) * n)))
            term = star(j, idx) ** q
            if k <= 0:
                a += term
            elif j < k:
                b += term
            else:
                c += term
        w = 2.0 ** (-k * n)
        r = p1 / q
        I += w * a ** r
        II += w * b ** r
        III += w * c ** r
        D += w * (a + b + c) ** r
    return I ** (1 / p1), II ** (1 / p1), III ** (1 / p1), D ** (1 / p1)


def aux_lhs_1d(values, L, eps):
    """Left side of the auxiliary inequality for a 1-D step function on an integer box."""
    lam = eps / (1 + eps)
    total = 0.0
    cells = len(values)
    j_extra = int(math.ceil(60 / lam))
    for j in range(0, L + j_extra):
        if j <= L:
            f = 2 ** (L - j)
            inner = 0.0
            for m in range(cells // f):
                inner += min(values[m * f:(m + 1) * f]) ** (1 + eps) * 2.0 ** (-j)
        else:
            inner = sum(v ** (1 + eps) for v in values) * 2.0 ** (-L)
        total += 2.0 ** (-j * lam) * inner ** (1 / (1 + eps))
    return total


def tower_norms(p0, p1, q, J, s0=1.0):
    """b^{s0}_{p0,p1} and f^{s1}_{p1,q} norms of the tower on [0, 1).

    The tower has one coefficient per level on the cube touching 0, scaled so
    that every level has unit b-norm. A point in [2^{-k-1}, 2^{-k}) lies in
    cubes 0..k, so the f-norm is a sum over dyadic shells. The coefficients
    are returned only for J <= 60 (they overflow beyond that).
    """
    gamma = [2.0 ** (-j * s0 + j / p0) for j in range(J + 1)] if J <= 60 else None
    # with c_j = 2^{j s1} gamma_j = 2^{j/p1}, shell k contributes
    # 2^{-k-1} c_k^{p1} (sum_{i<=k} 2^{-iq/p1})^{p1/q}
    r = 2.0 ** (-q / p1)
    partial = [(1 - r ** (k + 1)) / (1 - r) for k in range(J + 1)]
    total = sum(0.5 * partial[k] ** (p1 / q) for k in range(J)) + partial[J] ** (p1 / q)
    return gamma, (J + 1) ** (1.0 / p1), total ** (1.0 / p1)


def tower_limit(p1, q):
    """Limit of f/b for the tower as J grows."""
    return (1.0 - 2.0 ** (-q / p1)) ** (-1.0 / q) * 2.0 ** (-1.0 / p1)
