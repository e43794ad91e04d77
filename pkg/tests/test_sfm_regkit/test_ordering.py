from itertools import permutations
from unittest import mock
import math

import numpy as np

from tests.test_sfm_regkit import PyTest


def random_matrix(rng, n):
    points = rng.random((n, 2))
    return np.linalg.norm(points[:, None] - points[None], axis=2)


def circle_matrix(n, order=None):
    angles = 2 * np.pi * np.arange(n) / n
    points = np.stack((np.cos(angles), np.sin(angles)), axis=1)
    if order is not None:
        points = points[order]
    return np.linalg.norm(points[:, None] - points[None], axis=2)


def brute_force_cycle(w):
    n = len(w)
    best = math.inf
    for rest in permutations(range(1, n)):
        order = (0,) + rest
        cost = sum(w[order[k], order[(k + 1) % n]] for k in range(n))
        best = min(best, cost)
    return best


def brute_force_path(w):
    n = len(w)
    return min(sum(w[order[k], order[k + 1]] for k in range(n - 1))
               for order in permutations(range(n)))


def cycle_edges(order):
    n = len(order)
    return {tuple(sorted((order[k], order[(k + 1) % n]))) for k in range(n)}


def turntable_table(sfm_regkit, n=8):
    """Match counts decreasing with the circular gap between views."""
    counts = {}
    for i in range(n):
        for j in range(i + 1, n):
            gap = min(j - i, n - (j - i))
            counts[('v{}'.format(i), 'v{}'.format(j))] = 100 - 10 * gap
    return sfm_regkit.MatchTable(counts)


class TestOrdering:
    """Test view ordering solvers."""

    def _matrix(self, w):
        labels = tuple('v{}'.format(k) for k in range(len(w)))
        return self.sfm_regkit.DistanceMatrix(labels, w)

    def test_tour(self):
        """Test tours and their cost."""
        Tour = self.sfm_regkit.Tour
        tour = Tour((0, 2, 1), True, 3)
        self.assertTrue(len(tour) == 3)
        self.assertTrue(tour.edges() == {(0, 2), (1, 2), (0, 1)})
        self.assertRaises(self.SfmRegkitError, Tour, (0, 0, 1), True, 0)

        w = np.array([[0, 1, 2], [1, 0, 3], [2, 3, 0]], dtype=float)
        self.assertTrue(self.sfm_regkit.tour_cost(w, (0, 1, 2)) == 6)
        self.assertTrue(self.sfm_regkit.tour_cost(w, (0, 1, 2), False) == 4)
        self.assertTrue(self.sfm_regkit.tour_cost(w, (1,)) == 0)

    def test_exact_small(self):
        """Test trivial sizes."""
        exact = self.sfm_regkit.tsp_exact
        tour = exact(self._matrix(np.zeros((1, 1))))
        self.assertTrue(tour.order == (0,) and tour.cost == 0)

        tour = exact(self._matrix([[0, 3], [3, 0]]))
        self.assertTrue(tour.order == (0, 1) and tour.cost == 6)

        tour = exact(self._matrix([[0, 3], [3, 0]]), path=True)
        self.assertTrue(tour.order == (0, 1) and tour.cost == 3)
        self.assertFalse(tour.cyclic)

        tour = exact(self._matrix([[0, 1, 2], [1, 0, 3], [2, 3, 0]]))
        self.assertTrue(tour.order == (0, 1, 2) and tour.cost == 6)

    def test_exact_brute_force(self):
        """Test the exact solver against permutations."""
        rng = np.random.default_rng(10)
        for _ in range(40):
            n = int(rng.integers(3, 9))
            w = random_matrix(rng, n)
            tour = self.sfm_regkit.tsp_exact(self._matrix(w))
            self.assertTrue(abs(tour.cost - brute_force_cycle(w)) <= 1e-9)
            self.assertTrue(abs(tour.cost - self.sfm_regkit.tour_cost(
                w, tour.order)) <= 1e-9)
            self.assertTrue(tour.order[0] == 0)
            self.assertTrue(tour.order[1] < tour.order[-1])

        for _ in range(20):
            n = int(rng.integers(2, 8))
            w = random_matrix(rng, n)
            tour = self.sfm_regkit.tsp_exact(self._matrix(w), path=True)
            self.assertTrue(abs(tour.cost - brute_force_path(w)) <= 1e-9)
            self.assertTrue(tour.order[0] < tour.order[-1])

    def test_heuristic_bound(self):
        """Test the heuristic never beats the exact solver."""
        rng = np.random.default_rng(11)
        for _ in range(200):
            n = int(rng.integers(1, 11))
            d = self._matrix(random_matrix(rng, n))
            exact = self.sfm_regkit.tsp_exact(d)
            heuristic = self.sfm_regkit.tsp_heuristic(d)
            self.assertTrue(heuristic.cost >= exact.cost - 1e-9)
            self.assertTrue(sorted(heuristic.order) == list(range(n)))

    def test_heuristic_two_opt_optimal(self):
        """Test no 2-opt move improves a heuristic tour."""
        rng = np.random.default_rng(12)
        for _ in range(20):
            n = int(rng.integers(5, 30))
            w = random_matrix(rng, n)
            order = self.sfm_regkit.tsp_heuristic(self._matrix(w)).order
            for i in range(n - 1):
                for j in range(i + 2, n):
                    if i == 0 and j == n - 1:
                        continue
                    a, b = order[i], order[i + 1]
                    c, e = order[j], order[(j + 1) % n]
                    self.assertTrue(w[a, c] + w[b, e] >=
                                    w[a, b] + w[c, e] - 1e-9)

    def test_heuristic_deterministic(self):
        """Test seeded start sampling on large instances."""
        rng = np.random.default_rng(13)
        d = self._matrix(random_matrix(rng, 66))
        a = self.sfm_regkit.tsp_heuristic(d, seed=5)
        b = self.sfm_regkit.tsp_heuristic(d, seed=5)
        self.assertTrue(a == b)
        self.assertTrue(sorted(a.order) == list(range(66)))

    def test_circle(self):
        """Test circular layouts are recovered by both solvers."""
        for n in (5, 8, 12):
            d = self._matrix(circle_matrix(n))
            self.assertTrue(self.sfm_regkit.tsp_exact(d).order ==
                            tuple(range(n)))
            self.assertTrue(self.sfm_regkit.tsp_heuristic(d).order ==
                            tuple(range(n)))

        rng = np.random.default_rng(14)
        n = 9
        perm = rng.permutation(n)
        d = self._matrix(circle_matrix(n, perm))
        # index k holds circle position perm[k]
        inverse = np.argsort(perm)
        expected = cycle_edges(tuple(int(k) for k in inverse))
        for solve in (self.sfm_regkit.tsp_exact,
                      self.sfm_regkit.tsp_heuristic):
            self.assertTrue(cycle_edges(solve(d).order) == expected)

    def test_exact_errors(self):
        """Test solver failures."""
        rng = np.random.default_rng(15)
        d = self._matrix(random_matrix(rng, 14))
        self.assertRaises(self.sfm_regkit.TooLarge,
                          self.sfm_regkit.tsp_exact, d)
        self.assertRaises(self.SolverError, self.sfm_regkit.tsp_exact, d)

        # view 3 only connects to view 0
        w = np.ones((4, 4)) - np.eye(4)
        w[3, 1] = w[1, 3] = w[3, 2] = w[2, 3] = np.inf
        self.assertRaises(self.sfm_regkit.Infeasible,
                          self.sfm_regkit.tsp_exact, self._matrix(w))
        self.assertRaises(self.sfm_regkit.Infeasible,
                          self.sfm_regkit.tsp_heuristic, self._matrix(w))

        # an open path exists
        tour = self.sfm_regkit.tsp_exact(self._matrix(w), path=True)
        self.assertTrue(tour.cost == 3)
        self.assertTrue(tour.order[-1] == 3 or tour.order[0] == 3)

    def test_heuristic_sparse(self):
        """Test the heuristic finds a finite tour whenever one exists."""
        rng = np.random.default_rng(31)
        feasible = 0
        for _ in range(120):
            n = int(rng.integers(5, 9))
            w = random_matrix(rng, n)
            absent = np.triu(rng.random((n, n)) < 0.45, 1)
            w[absent | absent.T] = np.inf
            d = self._matrix(w)
            for path in (False, True):
                try:
                    exact = self.sfm_regkit.tsp_exact(d, path=path)
                except self.sfm_regkit.Infeasible:
                    self.assertRaises(self.sfm_regkit.Infeasible,
                                      self.sfm_regkit.tsp_heuristic, d,
                                      path=path)
                    continue
                feasible += 1
                tour = self.sfm_regkit.tsp_heuristic(d, path=path)
                self.assertTrue(math.isfinite(tour.cost))
                self.assertTrue(tour.cost >= exact.cost - 1e-9)
        self.assertTrue(feasible > 0)

    def test_heuristic_exact_fallback(self):
        """Test a heuristic tour stuck on an absent edge is solved exactly."""
        w = np.ones((4, 4)) - np.eye(4)
        w[0, 2] = w[2, 0] = w[1, 3] = w[3, 1] = np.inf
        stuck = mock.patch('sfm_regkit.ordering._nearest_neighbor',
                           side_effect=lambda work, start: [0, 2, 1, 3])
        kept = mock.patch('sfm_regkit.ordering.two_opt',
                          side_effect=lambda work, order: list(order))
        with stuck, kept:
            tour = self.sfm_regkit.tsp_heuristic(self._matrix(w))
        self.assertTrue(tour.order == (0, 1, 2, 3))
        self.assertTrue(tour.cost == 4)

    def test_chain_turntable(self):
        """Test chaining a turntable sequence."""
        table = turntable_table(self.sfm_regkit)
        tour = self.sfm_regkit.chain_order(table)
        self.assertTrue(tour.order == (6, 5, 4, 3, 2, 1, 0, 7))
        self.assertFalse(tour.cyclic)
        self.assertTrue(math.isclose(tour.cost, 7 / 90))
        circular = cycle_edges(tuple(range(8)))
        self.assertTrue(tour.edges() < circular)
        self.assertTrue(len(tour.edges()) == 7)

    def test_tsp_turntable(self):
        """Test a tour over match weights recovers the turntable."""
        table = turntable_table(self.sfm_regkit)
        d = self.sfm_regkit.match_matrix(table)
        circular = cycle_edges(tuple(range(8)))
        self.assertTrue(self.sfm_regkit.tsp_exact(d).edges() == circular)
        self.assertTrue(self.sfm_regkit.tsp_heuristic(d).edges() ==
                        circular)

    def test_chain_fragments(self):
        """Test chains left apart are concatenated."""
        table = self.sfm_regkit.MatchTable(
            {('a', 'b'): 5, ('c', 'd'): 3, ('e', 'c'): 0})
        tour = self.sfm_regkit.chain_order(table)
        self.assertTrue(table.labels == ('a', 'b', 'c', 'd', 'e'))
        self.assertTrue(tour.order == (0, 1, 2, 3, 4))
        self.assertTrue(tour.cost == math.inf)

        tour = self.sfm_regkit.chain_order(
            table, labels=('e', 'd', 'c', 'b', 'a'))
        self.assertTrue(tour.order == (0, 1, 2, 3, 4))

        one = self.sfm_regkit.MatchTable({}, labels=('x',))
        self.assertTrue(self.sfm_regkit.chain_order(one).order == (0,))

        self.assertRaises(self.SfmRegkitError, self.sfm_regkit.chain_order,
                          self.sfm_regkit.MatchTable({}))


class TestPyTestOrdering(TestOrdering, PyTest):
    pass
