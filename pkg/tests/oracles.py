"""Brute-force reference implementations used to check the production code.

Each oracle follows the literal definition and shares no code with the
package beyond the data types it reads.
"""
from __future__ import annotations

import itertools
import math


def edit_script_min_cost(a, b, sub_cost, indel_cost):
    """Cheapest edit script turning *a* into *b*, by enumerating every script.

    A script walks both sequences left to right, at each step deleting a[i],
    inserting b[j], or substituting a[i] -> b[j].  No memoization: all
    Delannoy-many scripts are visited.  Costs accumulate left to right.
    """
    best = [math.inf]

    def walk(i, j, acc):
        if i == len(a) and j == len(b):
            if acc < best[0]:
                best[0] = acc
            return
        if i < len(a):
            walk(i + 1, j, acc + indel_cost)
        if j < len(b):
            walk(i, j + 1, acc + indel_cost)
        if i < len(a) and j < len(b):
            walk(i + 1, j + 1, acc + sub_cost(a[i], b[j]))

    walk(0, 0, 0.0)
    return best[0]


def textbook_edit_distance(s, t):
    """Classic unit-cost edit distance by memoized recursion."""
    from functools import lru_cache

    @lru_cache(maxsize=None)
    def d(i, j):
        if i == 0:
            return j
        if j == 0:
            return i
        return min(d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (s[i - 1] != t[j - 1]))

    return d(len(s), len(t))


def _sign(x):
    return (x > 0) - (x < 0)


def kc_triples(x, y):
    """Average of sign((X_ij - X_ik)(Y_ij - Y_ik)) over i and unordered {j, k}, all distinct."""
    n = len(x)
    total = 0
    count = 0
    for i in range(n):
        for j in range(n):
            for k in range(j + 1, n):
                if i in (j, k):
                    continue
                total += _sign((x[i][j] - x[i][k]) * (y[i][j] - y[i][k]))
                count += 1
    return total / count


def pearson_upper(x, y):
    """Pearson correlation over the strict upper triangle, via math.fsum."""
    n = len(x)
    xs = [x[i][j] for i in range(n) for j in range(i + 1, n)]
    ys = [y[i][j] for i in range(n) for j in range(i + 1, n)]
    mx = math.fsum(xs) / len(xs)
    my = math.fsum(ys) / len(ys)
    sxy = math.fsum((a - mx) * (b - my) for a, b in zip(xs, ys))
    sxx = math.fsum((a - mx) ** 2 for a in xs)
    syy = math.fsum((b - my) ** 2 for b in ys)
    return sxy / math.sqrt(sxx * syy)


def medoid_pairs_bruteforce(ids, d):
    """Exhaustive two-medoid search on a plain list-of-lists matrix.

    *ids* must already be in lexicographic order; returns (groups, medoids,
    objective) with ties resolved the same way the contract specifies.
    """
    n = len(ids)
    best = None
    for a, b in itertools.combinations(range(n), 2):
        total = 0.0
        for k in range(n):
            total += min(d[k][a], d[k][b])
        objective = total / n
        if best is None or objective < best[0]:
            best = (objective, a, b)
    objective, a, b = best
    ga, gb = [], []
    for k in range(n):
        if k == a or (k != b and d[k][a] <= d[k][b]):
            ga.append(ids[k])
        else:
            gb.append(ids[k])
    return (tuple(ga), tuple(gb)), (ids[a], ids[b]), objective


def average_linkage_direct(d, g1, g2):
    vals = [d[i][j] for i in g1 for j in g2]
    return math.fsum(vals) / len(vals)
