"""Brute-force oracles kept independent of the code they check."""
from itertools import combinations
from math import lcm

import numpy as np


def adjacency(r):
    M = np.zeros((r.n, r.n), dtype=bool)
    for i, j in r.edges:
        M[i, j] = True
    return M


def _walk_exists(r, a, x, length, forward):
    """Depth-first search for a walk of the given length inside ``a`` from (or to) ``x``."""
    nbrs = {i: set() for i in range(r.n)}
    for i, j in r.edges:
        if forward:
            nbrs[i].add(j)
        else:
            nbrs[j].add(i)
    stack = [(x, 0)]
    seen = set()
    while stack:
        s, k = stack.pop()
        if k == length:
            return True
        for t in nbrs[s]:
            if t in a and (t, k + 1) not in seen:
                seen.add((t, k + 1))
                stack.append((t, k + 1))
    return False


def bi_infinite_states(r, a):
    """States of ``a`` lying on a bi-infinite path inside ``a``.

    A walk of length |a| inside ``a`` repeats a state, so it extends forever.
    """
    a = set(a)
    L = max(len(a), 1)
    return frozenset(x for x in a if _walk_exists(r, a, x, L, True) and _walk_exists(r, a, x, L, False))


def subsets(n):
    for k in range(n + 1):
        for c in combinations(range(n), k):
            yield frozenset(c)


def weakly_invariant_subsets(r):
    return {s for s in subsets(r.n) if bi_infinite_states(r, s) == s}


def reach_by_matrix(r, e, n):
    """Relation powers as boolean matrix powers restricted to the bi-infinite states."""
    core = bi_infinite_states(r, range(r.n))
    M = adjacency(r)
    mask = np.zeros(r.n, dtype=bool)
    mask[list(core)] = True
    M = M & mask[:, None] & mask[None, :]
    if n < 0:
        M = M.T
    v = np.zeros(r.n, dtype=bool)
    v[[s for s in e if s in core]] = True
    for _ in range(abs(n)):
        v = (v.astype(int) @ M.astype(int)) > 0
    return frozenset(int(i) for i in np.flatnonzero(v))


def omega_by_matrix(r, x):
    """States reached at infinitely many times: beyond the Boolean index bound, over one lcm period."""
    n = r.n
    start = (n - 1) ** 2 + 1
    period = lcm(*range(1, n + 1))
    out = set()
    v = set(reach_by_matrix(r, {x}, start))
    core = bi_infinite_states(r, range(r.n))
    M = adjacency(r)
    for _ in range(period):
        out |= v
        v = {j for i in v for j in range(n) if M[i, j] and j in core}
    return frozenset(out)
