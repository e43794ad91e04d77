"""Recover the capture order of a view sequence.

Two families of solvers: traveling-salesman tours over a DistanceMatrix
(exact Held-Karp for small scenes, nearest neighbor plus 2-opt otherwise)
and greedy chaining of the best-matching image pairs.
"""

from dataclasses import dataclass
import logging
import math

import numpy as np
from scipy.cluster.hierarchy import DisjointSet

from .config import TSP_EXACT_MAX, TSP_MAX_STARTS
from .err import Infeasible, SfmRegkitError, TooLarge
from .matches import MatchTable
from .metrics import DistanceMatrix, match_count_weight

__all__ = [
    "Tour",
    "tour_cost",
    "canonical_cycle",
    "canonical_path",
    "tsp_exact",
    "tsp_heuristic",
    "two_opt",
    "chain_order",
]

logger = logging.getLogger(__name__)

# Smallest cost decrease accepted as a 2-opt improvement.
IMPROVEMENT_EPS = 1e-12


@dataclass(frozen=True)
class Tour:
    """A visiting order, closed into a cycle when ``cyclic``."""

    order: tuple
    cyclic: bool
    cost: float

    def __post_init__(self):
        order = tuple(int(i) for i in self.order)
        if sorted(order) != list(range(len(order))):
            msg = 'the tour order {} is not a permutation.'.format(order)
            raise SfmRegkitError(msg)
        object.__setattr__(self, 'order', order)
        object.__setattr__(self, 'cost', float(self.cost))

    def __len__(self):
        return len(self.order)

    def edges(self):
        """set -- undirected edges as ``(min, max)`` index pairs."""
        n = len(self.order)
        stop = n if self.cyclic and n > 2 else n - 1
        return {tuple(sorted((self.order[k], self.order[(k + 1) % n])))
                for k in range(stop)}


def _weights(d):
    if isinstance(d, DistanceMatrix):
        return np.asarray(d.weights)
    return np.asarray(d, dtype=np.float64)


def tour_cost(d, order, cyclic=True):
    """Sum of consecutive edge weights, with the closing edge if cyclic."""
    w = _weights(d)
    n = len(order)
    if n < 2:
        return 0.0
    total = math.fsum(w[order[k], order[k + 1]] for k in range(n - 1))
    if cyclic:
        total += w[order[-1], order[0]]
    return float(total)


def canonical_cycle(order):
    """Rotate a cycle to start at 0, heading to its smaller neighbor."""
    order = list(order)
    if not order:
        return ()
    k = order.index(0)
    order = order[k:] + order[:k]
    if len(order) > 2 and order[-1] < order[1]:
        order = [order[0]] + order[:0:-1]
    return tuple(order)


def canonical_path(order):
    """Orient an open path so it starts at its smaller end."""
    order = tuple(order)
    if len(order) > 1 and order[0] > order[-1]:
        order = order[::-1]
    return order


def _with_virtual_node(w):
    """Append a node joined to every city at zero cost."""
    n = len(w)
    out = np.zeros((n + 1, n + 1))
    out[:n, :n] = w
    return out


def _cut_at_virtual_node(cycle, virtual):
    k = cycle.index(virtual)
    return tuple(cycle[k + 1:] + cycle[:k])


def _held_karp(w):
    """Minimum Hamiltonian cycle through 0, as ``(cost, order)``.

    The order is None when every cycle uses an absent edge.
    """
    m = len(w)
    rest = m - 1
    full = (1 << rest) - 1
    sub = w[1:, 1:]

    dp = np.full((1 << rest, rest), np.inf)
    parent = np.full((1 << rest, rest), -1, dtype=np.intp)
    for j in range(rest):
        dp[1 << j, j] = w[0, j + 1]

    bits = 1 << np.arange(rest)
    columns = np.arange(rest)
    for mask in range(1, full):
        inside = (mask & bits) != 0
        # cost of ending at i then moving to k
        vals = np.where(inside[:, None], dp[mask][:, None] + sub, np.inf)
        best_i = np.argmin(vals, axis=0)
        best = vals[best_i, columns]
        for k in np.flatnonzero(~inside):
            target = mask | (1 << k)
            dp[target, k] = best[k]
            parent[target, k] = best_i[k]

    closing = dp[full] + w[1:, 0]
    last = int(np.argmin(closing))
    cost = float(closing[last])
    if math.isinf(cost):
        # parents are unset along infinite entries
        return cost, None

    order = []
    mask, node = full, last
    while node >= 0:
        order.append(node + 1)
        prev = parent[mask, node]
        mask ^= 1 << node
        node = int(prev)
    order.append(0)
    return cost, order[::-1]


def tsp_exact(d, path=False):
    """Optimal tour by dynamic programming over subsets (Held-Karp).

    For example::

    >>> tsp_exact(DistanceMatrix(('a', 'b', 'c'),
    ...                          [[0, 1, 2], [1, 0, 3], [2, 3, 0]])).order
    (0, 1, 2)

    Arguments:
        d {DistanceMatrix} -- at most 13 cities.

    Keyword Arguments:
        path {bool} -- solve the open-path variant. (default: False)

    Returns:
        Tour -- canonical optimal tour.

    """
    w = _weights(d)
    n = len(w)
    if n < 1:
        msg = 'the distance matrix is empty.'
        raise SfmRegkitError(msg)
    if n > TSP_EXACT_MAX:
        msg = '{} cities exceed the exact solver '.format(n)
        msg += 'limit of {}.'.format(TSP_EXACT_MAX)
        raise TooLarge(msg, n=n)

    if n == 1:
        return Tour((0,), not path, 0.0)

    if path:
        _, cycle = _held_karp(_with_virtual_node(w))
        order = None if cycle is None else \
            canonical_path(_cut_at_virtual_node(cycle, n))
    elif n == 2:
        order = (0, 1)
    else:
        _, cycle = _held_karp(w)
        order = None if cycle is None else canonical_cycle(cycle)

    cost = math.inf if order is None else \
        tour_cost(w, order, cyclic=not path)
    if math.isinf(cost):
        msg = 'no {} with finite cost exists.'.format(
            'path' if path else 'cycle')
        raise Infeasible(msg)

    logger.debug('exact tour over %d cities, cost %.6g', n, cost)
    return Tour(order, not path, cost)


def _nearest_neighbor(w, start):
    m = len(w)
    visited = np.zeros(m, dtype=bool)
    order = [start]
    visited[start] = True
    current = start
    for _ in range(m - 1):
        candidates = np.where(visited, np.inf, w[current])
        nxt = int(np.argmin(candidates))
        if visited[nxt]:
            # only absent edges left
            nxt = int(np.flatnonzero(~visited)[0])
        order.append(nxt)
        visited[nxt] = True
        current = nxt
    return order


def two_opt(w, order):
    """Improve a cycle with 2-opt moves until none lowers its cost.

    Arguments:
        w {ndarray} -- symmetric weights.
        order {list} -- initial cycle.

    Returns:
        list -- 2-opt locally optimal cycle.

    """
    w = _weights(w).tolist()
    order = list(order)
    m = len(order)
    improved = m > 3
    while improved:
        improved = False
        for i in range(m - 1):
            a, b = order[i], order[i + 1]
            for j in range(i + 2, m):
                if i == 0 and j == m - 1:
                    continue
                c, e = order[j], order[(j + 1) % m]
                before = w[a][b] + w[c][e]
                after = w[a][c] + w[b][e]
                if after < before - IMPROVEMENT_EPS:
                    order[i + 1:j + 1] = order[i + 1:j + 1][::-1]
                    a, b = order[i], order[i + 1]
                    improved = True
    return order


def tsp_heuristic(d, seed=0, path=False):
    """Nearest-neighbor tours improved by 2-opt.

    Every city is tried as a start, or a seeded sample of 64 starts when
    there are more than 64 cities. The cheapest locally optimal cycle wins,
    earlier starts winning ties. When that tour uses an absent edge and
    there are at most 13 cities, the exact solver decides.

    Arguments:
        d {DistanceMatrix} -- cities.

    Keyword Arguments:
        seed {int} -- seed of the start sample. (default: 0)
        path {bool} -- solve the open-path variant. (default: False)

    Returns:
        Tour -- canonical tour.

    """
    w = _weights(d)
    n = len(w)
    if n < 1:
        msg = 'the distance matrix is empty.'
        raise SfmRegkitError(msg)
    if n == 1:
        return Tour((0,), not path, 0.0)

    work = _with_virtual_node(w) if path else w
    m = len(work)
    if m > TSP_MAX_STARTS:
        rng = np.random.default_rng(seed)
        starts = sorted(int(s) for s in
                        rng.choice(m, TSP_MAX_STARTS, replace=False))
    else:
        starts = range(m)

    best_cost, best_order = math.inf, None
    for start in starts:
        order = two_opt(work, _nearest_neighbor(work, start))
        cost = tour_cost(work, order, cyclic=True)
        if best_order is None or cost < best_cost:
            best_cost, best_order = cost, order

    if path:
        order = canonical_path(_cut_at_virtual_node(best_order, n))
    else:
        order = canonical_cycle(best_order)

    cost = tour_cost(w, order, cyclic=not path)
    if math.isinf(cost) and n <= TSP_EXACT_MAX:
        logger.debug('heuristic tour over %d cities uses an absent edge, '
                     'solving exactly', n)
        return tsp_exact(w, path=path)
    if math.isinf(cost):
        msg = 'no {} with finite cost was found.'.format(
            'path' if path else 'cycle')
        raise Infeasible(msg)

    logger.debug('heuristic tour over %d cities from %d starts, '
                 'cost %.6g', n, len(starts), cost)
    return Tour(order, not path, cost)


def chain_order(table, labels=None):
    """Chain images through their best-matching pairs.

    Pairs are taken by decreasing count (ties by index pair) when both
    images still have fewer than two chain neighbors and the pair closes
    no cycle. Chains left apart are joined in order of their smallest
    image index.

    Arguments:
        table {MatchTable} -- match counts.

    Keyword Arguments:
        labels {list} -- image ids defining the indices, the table's own
            label order by default.

    Returns:
        Tour -- open path, its cost sums the ``1 / count`` weights.

    """
    if not isinstance(table, MatchTable):
        msg = 'the "table" is not a `MatchTable`.'
        raise SfmRegkitError(msg)
    labels = tuple(table.labels if labels is None else labels)
    n = len(labels)
    if n < 1:
        msg = 'there is no image to order.'
        raise SfmRegkitError(msg)
    index = {image_id: k for k, image_id in enumerate(labels)}

    edges = []
    for a, b, count in table.records():
        if count > 0 and a in index and b in index:
            i, j = sorted((index[a], index[b]))
            edges.append((-count, i, j))
    edges.sort()

    components = DisjointSet(range(n))
    degree = [0] * n
    neighbors = [[] for _ in range(n)]
    placed = 0
    for _, i, j in edges:
        if placed == n - 1:
            break
        if degree[i] < 2 and degree[j] < 2 and \
                not components.connected(i, j):
            components.merge(i, j)
            degree[i] += 1
            degree[j] += 1
            neighbors[i].append(j)
            neighbors[j].append(i)
            placed += 1

    if placed < n - 1:
        logger.warning('match pairs exhausted after %d of %d chain links',
                       placed, n - 1)

    order = []
    visited = [False] * n
    for k in range(n):
        if visited[k]:
            continue
        start = min(v for v in components.subset(k) if degree[v] < 2)
        prev, node = -1, start
        while node >= 0:
            order.append(node)
            visited[node] = True
            nxt = [v for v in neighbors[node] if v != prev]
            prev, node = node, (nxt[0] if nxt else -1)

    cost = math.fsum(match_count_weight(table.count(labels[a], labels[b]))
                     for a, b in zip(order, order[1:]))
    return Tour(tuple(order), False, cost)
