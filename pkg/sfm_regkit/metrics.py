"""Pairwise image distances for view ordering.

Four weights compare two views: the mean absolute luminance difference,
``1 - SSIM``, the spread of block-matching flow magnitudes and the inverse
match count. Images are resampled to a common square working size first.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
import logging
import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

from .config import (FLOW_BLOCK, FLOW_RADIUS, SSIM_K1, SSIM_K2, SSIM_STRIDE,
                     SSIM_WINDOW, WORKING_SIZE)
from .err import (EmptyImage, ImageTooSmall, SfmRegkitError, TooFewImages)
from .matches import MatchTable
from .numeric import readonly

__all__ = [
    "GrayImage",
    "FlowField",
    "DistanceMatrix",
    "resample",
    "pixel_diff_weight",
    "ssim",
    "ssim_weight",
    "block_flow",
    "flow_std_weight",
    "match_count_weight",
    "build_distance_matrix",
    "classify_transparency",
    "shared_dimensions",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GrayImage:
    """Luminance image, values in [0, 1], indexed ``pixels[row, column]``."""

    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.array(self.pixels, dtype=np.float64)
        if pixels.ndim != 2:
            msg = 'a gray image must be 2-dimensional, got shape '
            msg += '{}.'.format(pixels.shape)
            raise SfmRegkitError(msg)
        if pixels.size and (not np.all(np.isfinite(pixels)) or
                            pixels.min() < 0 or pixels.max() > 1):
            msg = 'gray image values must lie in [0, 1].'
            raise SfmRegkitError(msg)
        object.__setattr__(self, 'pixels', readonly(pixels))

    @classmethod
    def from_values(cls, width, height, data):
        """Build an image from row-major values."""
        data = np.asarray(data, dtype=np.float64)
        if data.size != width * height:
            msg = 'expected {} values for a '.format(width * height)
            msg += '{}x{} image, got {}.'.format(width, height, data.size)
            raise SfmRegkitError(msg)
        return cls(data.reshape(height, width))

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def size(self):
        """tuple -- (width, height)."""
        return self.width, self.height


@dataclass(frozen=True)
class FlowField:
    """Per-block displacements ``vectors[by, bx] = (dx, dy)`` in pixels."""

    vectors: np.ndarray
    block: int

    @property
    def magnitudes(self):
        return np.hypot(self.vectors[..., 0], self.vectors[..., 1])


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric nonnegative weights, ``inf`` marks an absent edge."""

    labels: tuple
    weights: np.ndarray

    def __post_init__(self):
        labels = tuple(self.labels)
        w = np.array(self.weights, dtype=np.float64)
        n = len(labels)
        if len(set(labels)) != n:
            msg = 'distance matrix labels are not unique.'
            raise SfmRegkitError(msg)
        if w.shape != (n, n):
            msg = 'weights of shape {} do not match '.format(w.shape)
            msg += '{} labels.'.format(n)
            raise SfmRegkitError(msg)
        if np.any(np.isnan(w)) or np.any(w < 0):
            msg = 'weights must be nonnegative numbers.'
            raise SfmRegkitError(msg)
        if not np.array_equal(w, w.T):
            msg = 'the distance matrix is not symmetric.'
            raise SfmRegkitError(msg)
        if np.any(np.diag(w) != 0):
            msg = 'the distance matrix diagonal is not zero.'
            raise SfmRegkitError(msg)
        object.__setattr__(self, 'labels', labels)
        object.__setattr__(self, 'weights', readonly(w))

    @property
    def n(self):
        return len(self.labels)

    def __eq__(self, other):
        if not isinstance(other, DistanceMatrix):
            return NotImplemented
        return self.labels == other.labels and \
            bool(np.array_equal(self.weights, other.weights))

    __hash__ = None


def _check_not_empty(*images):
    for image in images:
        if image.pixels.size == 0:
            msg = 'the image has no pixels.'
            raise EmptyImage(msg)


def resample(image, size=WORKING_SIZE):
    """Resample an image to ``size`` x ``size`` pixels.

    Downscaling by 2x or more first averages integer blocks, then a
    bilinear interpolation on a corner-aligned grid gives the final size.

    Arguments:
        image {GrayImage} -- input image.
        size {int} -- output side length. (default: 256)

    Returns:
        ndarray -- (size, size) float64 array.

    """
    _check_not_empty(image)
    pixels = image.pixels
    h, w = pixels.shape
    if (h, w) == (size, size):
        return pixels

    fy, fx = max(h // size, 1), max(w // size, 1)
    if fy >= 2 or fx >= 2:
        h2, w2 = (h // fy) * fy, (w // fx) * fx
        pixels = pixels[:h2, :w2].reshape(
            h2 // fy, fy, w2 // fx, fx).mean(axis=(1, 3))
        h, w = pixels.shape

    rows = np.linspace(0.0, h - 1.0, size)
    cols = np.linspace(0.0, w - 1.0, size)
    grid = np.meshgrid(rows, cols, indexing='ij')
    out = ndimage.map_coordinates(pixels, grid, order=1, mode='nearest')
    return np.clip(out, 0.0, 1.0)


def _pixel_diff(a, b):
    return float(np.mean(np.abs(a - b)))


def pixel_diff_weight(a, b, size=WORKING_SIZE):
    """Mean absolute luminance difference, in [0, 1].

    Arguments:
        a {GrayImage} -- first image.
        b {GrayImage} -- second image, its size may differ.

    Returns:
        float -- weight.

    """
    _check_not_empty(a, b)
    return _pixel_diff(resample(a, size), resample(b, size))


def ssim(a, b, window=SSIM_WINDOW, stride=SSIM_STRIDE, dynamic_range=1.0):
    """Mean structural similarity over uniform sliding windows.

    Arguments:
        a {ndarray} -- first image.
        b {ndarray} -- second image, same shape.

    Returns:
        float -- SSIM index in [-1, 1].

    """
    if min(a.shape) < window:
        msg = 'a {}x{} image is smaller than '.format(*a.shape[::-1])
        msg += 'the {}x{} SSIM window.'.format(window, window)
        raise ImageTooSmall(msg)

    c1 = (SSIM_K1 * dynamic_range) ** 2
    c2 = (SSIM_K2 * dynamic_range) ** 2

    wa = sliding_window_view(a, (window, window))[::stride, ::stride]
    wb = sliding_window_view(b, (window, window))[::stride, ::stride]

    mu_a = wa.mean(axis=(2, 3))
    mu_b = wb.mean(axis=(2, 3))
    # variance and covariance share one expression so ssim(a, a) is 1
    var_a = (wa * wa).mean(axis=(2, 3)) - mu_a * mu_a
    var_b = (wb * wb).mean(axis=(2, 3)) - mu_b * mu_b
    cov = (wa * wb).mean(axis=(2, 3)) - mu_a * mu_b

    ssim_map = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / \
        ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2))
    return float(np.mean(ssim_map))


def _ssim_weight(a, b):
    return float(np.clip(1.0 - ssim(a, b), 0.0, 2.0))


def ssim_weight(a, b, size=WORKING_SIZE):
    """Return ``1 - SSIM(a, b)``, in [0, 2]."""
    _check_not_empty(a, b)
    if size < SSIM_WINDOW:
        msg = 'working size {} is smaller than the '.format(size)
        msg += 'SSIM window {}.'.format(SSIM_WINDOW)
        raise ImageTooSmall(msg)
    return _ssim_weight(resample(a, size), resample(b, size))


def _displacements(radius):
    moves = [(dx, dy) for dy in range(-radius, radius + 1)
             for dx in range(-radius, radius + 1)]
    # on equal SAD the shortest move wins
    return sorted(moves, key=lambda m: (m[0] * m[0] + m[1] * m[1],
                                        m[1], m[0]))


def block_flow(a, b, block=FLOW_BLOCK, radius=FLOW_RADIUS):
    """Block-matching flow from ``a`` to ``b``.

    Every ``block`` x ``block`` block of ``a`` is compared with ``b``
    shifted by all displacements within ``radius`` (wrapping around the
    borders), the sum of absolute differences picks the displacement.

    Arguments:
        a {ndarray} -- source image.
        b {ndarray} -- destination image, same shape.

    Returns:
        FlowField -- ceil(h / block) x ceil(w / block) displacements.

    """
    h, w = a.shape
    if h < block or w < block:
        msg = 'a {}x{} image is smaller than '.format(w, h)
        msg += 'one {}x{} block.'.format(block, block)
        raise ImageTooSmall(msg)

    gy, gx = -(-h // block), -(-w // block)
    padded = np.pad(b, radius, mode='wrap')

    best = np.full((gy, gx), np.inf)
    vectors = np.zeros((gy, gx, 2))
    for dx, dy in _displacements(radius):
        shifted = padded[radius + dy:radius + dy + h,
                         radius + dx:radius + dx + w]
        sad = np.zeros((gy * block, gx * block))
        sad[:h, :w] = np.abs(a - shifted)
        sad = sad.reshape(gy, block, gx, block).sum(axis=(1, 3))
        better = sad < best
        best[better] = sad[better]
        vectors[better] = (dx, dy)

    return FlowField(readonly(vectors), block)


def _flow_std(a, b):
    return float(np.std(block_flow(a, b).magnitudes))


def flow_std_weight(a, b, size=WORKING_SIZE):
    """Population standard deviation of block flow magnitudes."""
    _check_not_empty(a, b)
    if size < FLOW_BLOCK:
        msg = 'working size {} is smaller than one '.format(size)
        msg += 'flow block of {} pixels.'.format(FLOW_BLOCK)
        raise ImageTooSmall(msg)
    return _flow_std(resample(a, size), resample(b, size))


def match_count_weight(num_matches):
    """Return ``1 / num_matches``, ``inf`` when there are no matches.

    Arguments:
        num_matches {int} -- nonnegative match count.

    Returns:
        float -- weight.

    """
    if num_matches < 0:
        msg = 'the match count "{}" is negative.'.format(num_matches)
        raise SfmRegkitError(msg)
    if num_matches == 0:
        return math.inf
    return 1.0 / num_matches


_PAIR_WEIGHTS = {
    'pixel': _pixel_diff,
    'ssim': _ssim_weight,
    'flow': lambda a, b: 0.5 * (_flow_std(a, b) + _flow_std(b, a)),
}


def build_distance_matrix(source, metric, labels=None, size=WORKING_SIZE,
                          workers=1):
    """Evaluate a pairwise weight over all unordered pairs.

    Arguments:
        source {MatchTable or sequence} -- a match table for the
            "matches" metric, otherwise ``(image_id, GrayImage)`` pairs
            (or a dict) in scene order.
        metric {string} -- "pixel", "ssim", "flow" or "matches".

    Keyword Arguments:
        labels {list} -- image ids of a match table matrix, its own label
            order by default.
        size {int} -- working size of the image metrics. (default: 256)
        workers {int} -- threads evaluating pairs. (default: 1)

    Returns:
        DistanceMatrix -- symmetric weights with zero diagonal.

    """
    if metric == 'matches':
        if not isinstance(source, MatchTable):
            msg = 'the "matches" metric needs a `MatchTable`.'
            raise SfmRegkitError(msg)
        labels = tuple(source.labels if labels is None else labels)
        n = len(labels)
        w = np.zeros((n, n))
        for i, j in combinations(range(n), 2):
            w[i, j] = w[j, i] = match_count_weight(
                source.count(labels[i], labels[j]))
        return DistanceMatrix(labels, w)

    if metric not in _PAIR_WEIGHTS:
        msg = 'unknown metric "{}".'.format(metric)
        raise SfmRegkitError(msg)
    if isinstance(source, MatchTable):
        msg = 'the "{}" metric needs images.'.format(metric)
        raise SfmRegkitError(msg)

    items = list(source.items()) if isinstance(source, dict) else \
        list(source)
    if not items:
        msg = 'at least one image is needed.'
        raise TooFewImages(msg)
    labels = tuple(image_id for image_id, _ in items)

    working = []
    for image_id, image in items:
        try:
            working.append(resample(image, size))
        except SfmRegkitError as e:
            raise type(e)(e.msg + ' (image "{}")'.format(image_id),
                          image_id=image_id)

    weight = _PAIR_WEIGHTS[metric]
    pairs = list(combinations(range(len(items)), 2))

    def run(pair):
        i, j = pair
        try:
            return weight(working[i], working[j])
        except SfmRegkitError as e:
            raise type(e)(e.msg + ' (pair "{}","{}")'.format(
                labels[i], labels[j]), pair=(labels[i], labels[j]))

    if workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            values = list(executor.map(run, pairs))
    else:
        values = [run(pair) for pair in pairs]

    n = len(items)
    w = np.zeros((n, n))
    for (i, j), value in zip(pairs, values):
        w[i, j] = w[j, i] = value

    logger.debug('built %dx%d %s distance matrix', n, n, metric)
    return DistanceMatrix(labels, w)


def classify_transparency(d, threshold):
    """Flag scenes whose views barely differ.

    Arguments:
        d {DistanceMatrix} -- pixel-difference distances.
        threshold {float} -- decision threshold.

    Returns:
        bool -- true if the mean off-diagonal weight is below
            ``threshold``.

    """
    if d.n < 2:
        msg = 'transparency needs at least 2 images, '
        msg += 'got {}.'.format(d.n)
        raise TooFewImages(msg)
    off = d.weights[~np.eye(d.n, dtype=bool)]
    mean = float(np.mean(off))
    logger.debug('mean pairwise difference %.6f, threshold %.6f',
                 mean, threshold)
    return mean < threshold


def shared_dimensions(sizes):
    """Check all images share one size.

    Arguments:
        sizes {list} -- ``(width, height)`` tuples or GrayImage objects.

    Returns:
        bool -- true if every size is equal.

    """
    sizes = [s.size if isinstance(s, GrayImage) else tuple(s) for s in sizes]
    if not sizes:
        msg = 'at least one image size is needed.'
        raise TooFewImages(msg)
    return all(s == sizes[0] for s in sizes)
