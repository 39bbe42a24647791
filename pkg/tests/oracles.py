"""Brute-force reference computations used to derive expected values.

Everything here works on plain dicts keyed by sequence tuples and uses
itertools enumeration, so it shares no code path with the package.
"""

import itertools
import math

import numpy as np
from scipy.optimize import linprog


def sequences(n, a):
    return list(itertools.product(range(a), repeat=n))


def as_dict(P):
    """{x: P(x)} using an index computed here, not by the package."""
    out = {}
    for x in sequences(P.n, P.a):
        idx = 0
        for v in x:
            idx = idx * P.a + v
        out[x] = float(P.p[idx])
    return out


def fdict(f, n, a):
    vals = np.asarray(f.values if hasattr(f, "values") else f, dtype=float)
    return dict(zip(sequences(n, a), vals))


def prefix_prob(p, prefix):
    k = len(prefix)
    return sum(v for x, v in p.items() if x[:k] == tuple(prefix))


def suffix_law(p, prefix, start):
    """Law of X_{start..n} (1-based start) given the prefix, as a dict."""
    k = len(prefix)
    z = prefix_prob(p, prefix)
    law = {}
    for x, v in p.items():
        if x[:k] == tuple(prefix):
            key = x[start - 1:]
            law[key] = law.get(key, 0.0) + v / z
    return law


def tv(d1, d2):
    keys = set(d1) | set(d2)
    return 0.5 * sum(abs(d1.get(k, 0.0) - d2.get(k, 0.0)) for k in keys)


def eta_bar(p, n, a, i, j):
    best = 0.0
    for y in itertools.product(range(a), repeat=i - 1):
        for w, w2 in itertools.combinations(range(a), 2):
            if prefix_prob(p, y + (w,)) > 0 and prefix_prob(p, y + (w2,)) > 0:
                best = max(best, tv(suffix_law(p, y + (w,), j), suffix_law(p, y + (w2,), j)))
    return best


def _nonempty_subsets(items):
    for r in range(1, len(items) + 1):
        yield from itertools.combinations(items, r)


def phi(p, n, a, k):
    """phi_k by enumerating every event A in sigma(X_1..j), B in sigma(X_{j+k..n})."""
    best = 0.0
    for j in range(1, n - k + 1):
        heads = list(itertools.product(range(a), repeat=j))
        tails = list(itertools.product(range(a), repeat=n - j - k + 1))
        for A in _nonempty_subsets(heads):
            A = set(A)
            pA = sum(v for x, v in p.items() if x[:j] in A)
            if pA <= 0:
                continue
            for B in _nonempty_subsets(tails):
                B = set(B)
                pB = sum(v for x, v in p.items() if x[j + k - 1:] in B)
                pAB = sum(v for x, v in p.items() if x[:j] in A and x[j + k - 1:] in B)
                best = max(best, abs(pAB / pA - pB))
    return best


def hamming(x, y):
    return sum(u != v for u, v in zip(x, y))


def lipschitz(fd, dist):
    best = 0.0
    for x, y in itertools.combinations(fd, 2):
        d = dist(x, y)
        if d > 0:
            best = max(best, abs(fd[x] - fd[y]) / d)
    return best


def psi(fd, n, a, w):
    """Psi recursion on a dict table with per-point weight w."""
    if n == 0:
        return 0.0
    pos = sum(max(v, 0.0) for v in fd.values()) * w ** n
    proj = {}
    for x, v in fd.items():
        proj[x[1:]] = proj.get(x[1:], 0.0) + w * v
    return pos + psi(proj, n - 1, a, w)


def lp_sup(fd, dist, diam, w):
    """max sum_x w^n f(x) g(x) over all-pairs Lipschitz g in [0, diam], dense, interior point."""
    pts = list(fd)
    N = len(pts)
    n = len(pts[0])
    rows, rhs = [], []
    for s, t in itertools.permutations(range(N), 2):
        r = np.zeros(N)
        r[s], r[t] = 1.0, -1.0
        rows.append(r)
        rhs.append(dist(pts[s], pts[t]))
    c = -np.array([fd[x] for x in pts]) * w ** n
    res = linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=(0, diam),
                  method="highs-ipm")
    assert res.status == 0
    return -res.fun


def cond_mean(p, fd, prefix):
    k = len(prefix)
    z = prefix_prob(p, prefix)
    return sum(v * fd[x] for x, v in p.items() if x[:k] == tuple(prefix)) / z


def alpha(p, dist, t):
    """1 - min{P(A_t) : P(A) >= 1/2} over every subset A."""
    pts = list(p)
    best = 1.0
    for A in _nonempty_subsets(pts):
        if sum(p[x] for x in A) >= 0.5 - 1e-12:
            fat = [y for y in pts if any(dist(x, y) <= t + 1e-12 for x in A)]
            best = min(best, sum(p[y] for y in fat))
    return 1.0 - best


def medians(p, fd):
    """All support values m with P(f <= m) >= 1/2 and P(f >= m) >= 1/2."""
    vals = sorted({fd[x] for x, v in p.items() if v > 0})
    out = []
    for m in vals:
        lo = sum(v for x, v in p.items() if fd[x] <= m)
        hi = sum(v for x, v in p.items() if fd[x] >= m)
        if lo >= 0.5 - 1e-12 and hi >= 0.5 - 1e-12:
            out.append(m)
    return out


def row_sum_norm(M):
    return max(sum(abs(v) for v in row) for row in M)


def gaussian_tail_integral(c, k):
    """int_0^inf c exp(-k r^2) dr."""
    return c * 0.5 * math.sqrt(math.pi / k)
