"""Exact set-valued dynamics on a finite state set.

A :class:`Relation` on ``n`` states plays the role of the time-one map: the
solution space is the set of bi-infinite paths of the relation, and the
multivalued semigroup is relational composition restricted to states lying
on such paths (the *viable core*).  Everything here is computed exactly with
integer bitmasks, so the results serve as a tolerance-free oracle for the
grid-scale code in :mod:`ydyn.semigroup` and :mod:`ydyn.limits`.

State sets are accepted as any iterable of state indices and returned as
``frozenset``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import CapacityError, ConvergenceError, DomainError, EmptySolutionError
from .phase_space import DiscreteMeasure, Grid

ENUMERATION_CAP = 20
EXACT_SOLVE_MAX = 50
POWER_TOL = 1e-12
POWER_MAX_ITER = 1_000_000


@dataclass(frozen=True)
class Relation:
    n: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a relation needs at least one state")
        edges = frozenset((int(i), int(j)) for i, j in self.edges)
        for i, j in edges:
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise DomainError(f"edge {i} -> {j} references a state outside 0..{self.n - 1}")
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Relation":
        edges = [(int(i), int(j)) for i, j in edges]
        if len(set(edges)) != len(edges):
            raise DomainError("duplicate edge")
        return cls(n, frozenset(edges))

    @cached_property
    def succ(self) -> tuple[int, ...]:
        out = [0] * self.n
        for i, j in self.edges:
            out[i] |= 1 << j
        return tuple(out)

    @cached_property
    def pred(self) -> tuple[int, ...]:
        out = [0] * self.n
        for i, j in self.edges:
            out[j] |= 1 << i
        return tuple(out)

    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    @cached_property
    def core_mask(self) -> int:
        return _core(self, self.full_mask)

    def core(self) -> frozenset:
        return _states(self.core_mask)


def _mask(states: Iterable[int]) -> int:
    m = 0
    for s in states:
        m |= 1 << int(s)
    return m


def _states(mask: int) -> frozenset:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return frozenset(out)


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _image(table: tuple[int, ...], mask: int) -> int:
    out = 0
    for i in _bits(mask):
        out |= table[i]
    return out


def _core(r: Relation, mask: int) -> int:
    cur = mask
    while True:
        keep = 0
        for i in _bits(cur):
            if r.succ[i] & cur and r.pred[i] & cur:
                keep |= 1 << i
        if keep == cur:
            return cur
        cur = keep


def viable_core(r: Relation, a: Iterable[int]) -> frozenset:
    """Largest subset of ``a`` in which every state has a successor and a predecessor."""
    return _states(_core(r, _mask(a) & r.full_mask))


def is_weakly_invariant(r: Relation, a: Iterable[int]) -> bool:
    m = _mask(a)
    return _core(r, m) == m


def is_strongly_invariant(r: Relation, a: Iterable[int]) -> bool:
    """True iff every complete path meeting ``a`` stays in ``a``.

    States of ``a`` must themselves lie on complete paths, so strong
    invariance implies weak invariance.
    """
    m = _mask(a)
    core = r.core_mask
    if m & ~core:
        return False
    out = (_image(r.succ, m) | _image(r.pred, m)) & core
    return out & ~m == 0


def _reach_mask(r: Relation, m: int, n: int) -> int:
    core = r.core_mask
    table = r.succ if n >= 0 else r.pred
    cur = m & core
    for _ in range(abs(n)):
        cur = _image(table, cur) & core
    return cur


def reach(r: Relation, e: Iterable[int], n: int) -> frozenset:
    """``n``-step successors (``n < 0``: predecessors) of ``e`` along complete paths."""
    return _states(_reach_mask(r, _mask(e), int(n)))


def enumerate_weakly_invariant(r: Relation, cap: int = ENUMERATION_CAP) -> list[frozenset]:
    if r.n > cap:
        raise CapacityError(f"{r.n} states exceed the enumeration cap of {cap}")
    return [_states(m) for m in range(1 << r.n) if _core(r, m) == m]


def _limit_mask(r: Relation, x: int, forward: bool) -> tuple[int, int, int]:
    if not (r.core_mask >> x) & 1:
        raise EmptySolutionError(f"state {x} lies on no complete trajectory")
    table = r.succ if forward else r.pred
    core = r.core_mask
    seen: dict[int, int] = {}
    seq: list[int] = []
    cur = 1 << x
    while cur not in seen:
        seen[cur] = len(seq)
        seq.append(cur)
        cur = _image(table, cur) & core
    start = seen[cur]
    union = 0
    for m in seq[start:]:
        union |= m
    return union, start, len(seq) - start


def omega_limit(r: Relation, x: int) -> frozenset:
    """Union over one period of the eventually periodic sequence ``reach(r, {x}, n)``."""
    return _states(_limit_mask(r, int(x), True)[0])


def alpha_limit(r: Relation, x: int) -> frozenset:
    return _states(_limit_mask(r, int(x), False)[0])


def recurrent_states(r: Relation) -> frozenset:
    out = 0
    for x in _bits(r.core_mask):
        if (_limit_mask(r, x, True)[0] >> x) & 1:
            out |= 1 << x
    return _states(out)


def markov_measure(r: Relation, weights: Mapping[tuple[int, int], float]) -> DiscreteMeasure:
    """State marginal of a stationary Markov chain carried by the edges of ``r``.

    ``weights`` gives a nonnegative weight per edge; rows are normalized into a
    stochastic matrix over the states with outgoing weight.
    """
    core = r.core_mask
    positive: dict[tuple[int, int], float] = {}
    for (i, j), w in weights.items():
        i, j, w = int(i), int(j), float(w)
        if (i, j) not in r.edges:
            raise DomainError(f"weight on {i} -> {j}, which is not an edge")
        if w < 0 or not math.isfinite(w):
            raise DomainError(f"edge {i} -> {j} has invalid weight {w!r}")
        if w == 0:
            continue
        if not ((core >> i) & 1 and (core >> j) & 1):
            raise DomainError(f"edge {i} -> {j} leaves the viable core")
        positive[(i, j)] = w
    if not positive:
        raise DomainError("no positive edge weight")
    charged = sorted({i for i, _ in positive})
    pos = {s: k for k, s in enumerate(charged)}
    for _, j in positive:
        if j not in pos:
            raise DomainError(f"state {j} receives weight but has no outgoing weight")
    m = len(charged)
    P = np.zeros((m, m))
    for (i, j), w in positive.items():
        P[pos[i], pos[j]] += w
    P /= P.sum(axis=1, keepdims=True)
    pi = _stationary(P)
    full = np.zeros(r.n)
    full[charged] = pi
    return DiscreteMeasure(Grid.finite(r.n), full, normalize=True)


def _stationary(P: np.ndarray) -> np.ndarray:
    """Cesàro limit of the chain started from the uniform distribution.

    Each closed communicating class carries its own stationary vector; the
    classes are weighted by the probability of ending up in them.  Transient
    states get exactly zero mass.
    """
    m = P.shape[0]
    n_cls, label = connected_components(P > 0, directed=True, connection="strong")
    closed = []
    for c in range(n_cls):
        members = np.flatnonzero(label == c)
        if not (P[members][:, label != c] > 0).any():
            closed.append(members)
    transient = np.flatnonzero(~np.isin(label, [label[c[0]] for c in closed]))
    pi = np.zeros(m)
    if transient.size:
        Q = P[np.ix_(transient, transient)]
        # expected visits to each transient state, one walker per transient start
        visits = np.linalg.solve((np.eye(transient.size) - Q).T, np.ones(transient.size))
    for members in closed:
        share = members.size
        if transient.size:
            share += float(visits @ P[np.ix_(transient, members)].sum(axis=1))
        pi[members] = share / m * _class_stationary(P[np.ix_(members, members)])
    return pi


def _class_stationary(P: np.ndarray) -> np.ndarray:
    m = P.shape[0]
    if m <= EXACT_SOLVE_MAX:
        A = np.vstack([P.T - np.eye(m), np.ones((1, m))])
        b = np.zeros(m + 1)
        b[-1] = 1.0
        pi, *_ = np.linalg.lstsq(A, b, rcond=None)
        if np.abs(A @ pi - b).max() > 1e-10:
            raise ConvergenceError("linear solve left a residual above 1e-10")
        if pi.min() < -1e-12:
            raise ConvergenceError("stationary solve produced negative mass")
        return np.maximum(pi, 0.0)
    pi = np.full(m, 1.0 / m)
    for _ in range(POWER_MAX_ITER):
        nxt = pi @ P
        if np.abs(nxt - pi).sum() <= POWER_TOL:
            return nxt
        pi = nxt
    raise ConvergenceError(f"power iteration did not settle within {POWER_MAX_ITER} steps")


def random_relation(rng: np.random.Generator, n: int, density: float | None = None) -> Relation:
    """Random relation on ``n`` states; each ordered pair is an edge with the given probability."""
    if density is None:
        density = float(rng.uniform(0.15, 0.5))
    mask = rng.random((n, n)) < density
    return Relation(n, frozenset((int(i), int(j)) for i, j in zip(*np.nonzero(mask))))


def format_relation(r: Relation) -> str:
    lines = [f"states {r.n}"]
    lines += [f"{i} -> {j}" for i, j in sorted(r.edges)]
    return "\n".join(lines) + "\n"


def parse_relation(text: str) -> Relation:
    n = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if n is None:
            head = line.split()
            if len(head) != 2 or head[0] != "states":
                raise DomainError(f"line {lineno}: expected 'states N', got {raw!r}")
            n = int(head[1])
            continue
        parts = line.split("->")
        if len(parts) != 2:
            raise DomainError(f"line {lineno}: expected 'i -> j', got {raw!r}")
        edges.append((int(parts[0]), int(parts[1])))
    if n is None:
        raise DomainError("missing 'states N' header")
    return Relation.from_edges(n, edges)


def read_relation(path) -> Relation:
    return parse_relation(Path(path).read_text())


def write_relation(r: Relation, path) -> None:
    Path(path).write_text(format_relation(r))
