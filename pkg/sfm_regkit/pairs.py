"""Image pair selection from global descriptors and match tables."""

from dataclasses import dataclass
from itertools import combinations
import logging
import math

import numpy as np
from scipy.cluster.hierarchy import DisjointSet

from .err import SfmRegkitError, ZeroVector
from .metrics import build_distance_matrix

__all__ = [
    "DescriptorSet",
    "SimilarityGraph",
    "SpanningForest",
    "cosine_similarity",
    "build_similarity_graph",
    "propose_pairs",
    "mst",
    "exhaustive_pairs",
    "match_matrix",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DescriptorSet:
    """One global descriptor per image, rows of ``vectors`` in ``ids`` order."""

    ids: tuple
    vectors: np.ndarray

    def __post_init__(self):
        ids = tuple(self.ids)
        vectors = np.array(self.vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(ids):
            msg = 'expected one vector per image id, got shape '
            msg += '{} for {} ids.'.format(vectors.shape, len(ids))
            raise SfmRegkitError(msg)
        if len(set(ids)) != len(ids):
            msg = 'descriptor image ids are not unique.'
            raise SfmRegkitError(msg)
        for image_id, v in zip(ids, vectors):
            if not np.all(np.isfinite(v)):
                msg = 'the descriptor of "{}" is not finite.'.format(image_id)
                raise SfmRegkitError(msg, image_id=image_id)
            if not np.any(v):
                msg = 'the descriptor of "{}" is zero.'.format(image_id)
                raise ZeroVector(msg, image_id=image_id)
        vectors.setflags(write=False)
        object.__setattr__(self, 'ids', ids)
        object.__setattr__(self, 'vectors', vectors)

    def __len__(self):
        return len(self.ids)

    @property
    def dim(self):
        return self.vectors.shape[1]


@dataclass(frozen=True)
class SimilarityGraph:
    """Weighted image graph, edges ``(i, j, similarity)`` with ``i < j``."""

    labels: tuple
    edges: tuple = ()

    def __post_init__(self):
        labels = tuple(self.labels)
        n = len(labels)
        edges = []
        seen = set()
        for i, j, sim in self.edges:
            i, j, sim = int(i), int(j), float(sim)
            if not 0 <= i < j < n:
                msg = 'edge ({}, {}) is not an ordered pair '.format(i, j)
                msg += 'of the {} images.'.format(n)
                raise SfmRegkitError(msg)
            if (i, j) in seen:
                msg = 'edge ({}, {}) is given twice.'.format(i, j)
                raise SfmRegkitError(msg)
            if not -1.0 <= sim <= 1.0:
                msg = 'similarity {} of edge ({}, {}) '.format(sim, i, j)
                msg += 'is outside [-1, 1].'
                raise SfmRegkitError(msg)
            seen.add((i, j))
            edges.append((i, j, sim))
        object.__setattr__(self, 'labels', labels)
        object.__setattr__(self, 'edges', tuple(edges))

    @property
    def n(self):
        return len(self.labels)


@dataclass(frozen=True)
class SpanningForest:
    """Minimum spanning tree, or forest when the graph is disconnected."""

    edges: tuple
    is_forest: bool
    total_weight: float


def cosine_similarity(u, v):
    """Return ``u.v / (|u| |v|)`` clipped to [-1, 1].

    For example::

    >>> cosine_similarity([1, 0], [-1, 0])
    -1.0

    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        msg = 'vectors of shapes {} and {} '.format(u.shape, v.shape)
        msg += 'can not be compared.'
        raise SfmRegkitError(msg)
    uu = float(np.dot(u, u))
    vv = float(np.dot(v, v))
    if uu == 0.0 or vv == 0.0:
        msg = 'cosine similarity of a zero vector is undefined.'
        raise ZeroVector(msg)
    sim = float(np.dot(u, v)) / math.sqrt(uu * vv)
    return min(1.0, max(-1.0, sim))


def build_similarity_graph(d):
    """Return the complete cosine-similarity graph of a descriptor set.

    Arguments:
        d {DescriptorSet} -- at least one descriptor.

    Returns:
        SimilarityGraph -- every unordered pair, lexicographic order.

    """
    if not isinstance(d, DescriptorSet):
        msg = 'the input is not a `DescriptorSet`.'
        raise SfmRegkitError(msg)
    if len(d) < 1:
        msg = 'at least one descriptor is needed.'
        raise SfmRegkitError(msg)

    v = d.vectors
    gram = v @ v.T
    sq = np.diag(gram).copy()
    zero = np.flatnonzero(sq == 0.0)
    if zero.size:
        image_id = d.ids[zero[0]]
        msg = 'the descriptor of "{}" is zero.'.format(image_id)
        raise ZeroVector(msg, image_id=image_id)
    sims = np.clip(gram / np.sqrt(np.outer(sq, sq)), -1.0, 1.0)

    n = len(d)
    edges = tuple((i, j, float(sims[i, j]))
                  for i, j in combinations(range(n), 2))
    logger.debug('similarity graph over %d images, %d edges', n, len(edges))
    return SimilarityGraph(d.ids, edges)


def _by_similarity(edge):
    i, j, sim = edge
    return -sim, i, j


def propose_pairs(g, threshold, min_per_image=0):
    """Select the image pairs at least ``threshold`` similar.

    Images left with fewer than ``min_per_image`` pairs then receive their
    most similar missing pairs, images taken in index order, until the
    quota is met or their pairs run out.

    Arguments:
        g {SimilarityGraph} -- candidate pairs.
        threshold {float} -- similarity threshold in [-1, 1].

    Keyword Arguments:
        min_per_image {int} -- pairs guaranteed per image. (default: 0)

    Returns:
        list -- ``(i, j, similarity)`` by descending similarity, ties in
            lexicographic pair order.

    """
    if not -1.0 <= threshold <= 1.0:
        msg = 'the threshold {} is outside [-1, 1].'.format(threshold)
        raise SfmRegkitError(msg)
    if not isinstance(min_per_image, int) or min_per_image < 0:
        msg = 'the "min_per_image" is not a non-negative `int`.'
        raise SfmRegkitError(msg)

    selected = {(i, j): sim for i, j, sim in g.edges if sim >= threshold}

    if min_per_image > 0:
        incident = [[] for _ in range(g.n)]
        for edge in g.edges:
            incident[edge[0]].append(edge)
            incident[edge[1]].append(edge)
        degree = [0] * g.n
        for i, j in selected:
            degree[i] += 1
            degree[j] += 1
        for k in range(g.n):
            if degree[k] >= min_per_image:
                continue
            missing = sorted((e for e in incident[k]
                              if (e[0], e[1]) not in selected),
                             key=_by_similarity)
            for i, j, sim in missing[:min_per_image - degree[k]]:
                selected[(i, j)] = sim
                degree[i] += 1
                degree[j] += 1

    pairs = sorted(((i, j, sim) for (i, j), sim in selected.items()),
                   key=_by_similarity)
    logger.debug('%d of %d pairs proposed at threshold %g',
                 len(pairs), len(g.edges), threshold)
    return pairs


def mst(g):
    """Minimum spanning tree under the weight ``1 - similarity`` (Kruskal).

    Equal weights are taken in lexicographic pair order. A disconnected
    graph yields a minimum spanning forest flagged as such.

    Arguments:
        g {SimilarityGraph} -- at least one image.

    Returns:
        SpanningForest -- edges ``(i, j, similarity)`` in selection order.

    """
    if g.n < 1:
        msg = 'the graph has no image.'
        raise SfmRegkitError(msg)

    weighted = sorted((1.0 - sim, i, j, sim) for i, j, sim in g.edges)
    components = DisjointSet(range(g.n))
    edges = []
    for _, i, j, sim in weighted:
        if len(edges) == g.n - 1:
            break
        if components.merge(i, j):
            edges.append((i, j, sim))

    is_forest = len(edges) < g.n - 1
    if is_forest:
        logger.warning('similarity graph is disconnected, spanning forest '
                       'has %d components', g.n - len(edges))
    total = math.fsum(1.0 - sim for _, _, sim in edges)
    return SpanningForest(tuple(edges), is_forest, total)


def exhaustive_pairs(n):
    """list -- all ``n (n - 1) / 2`` index pairs in lexicographic order."""
    if not isinstance(n, int) or n < 0:
        msg = '"{}" is not a non-negative `int`.'.format(n)
        raise SfmRegkitError(msg)
    return list(combinations(range(n), 2))


def match_matrix(table, labels=None):
    """Return the ``1 / count`` DistanceMatrix of a MatchTable.

    Missing pairs weigh ``inf``.
    """
    return build_distance_matrix(table, 'matches', labels)
