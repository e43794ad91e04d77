"""Closed-form similarity alignment of corresponding 3D point sets.

The rotation comes from the SVD of the cross-covariance of the centered
point sets with the reflection correction of Kabsch and Umeyama, and the
scale is the ratio of RMS deviations about the centroids, as in Horn's
symmetric formulation. On noiseless data generated by a similarity
transform both recover it exactly.
"""

from dataclasses import dataclass
import logging

import numpy as np

from .config import ROTATION_REJECT_TOLERANCE, ROTATION_TOLERANCE
from .err import DegenerateConfiguration, SfmRegkitError
from .geometry import camera_center, pose_from_center, rotation_error
from .numeric import as_array, as_points, is_finite, readonly

__all__ = [
    "SimilarityTransform",
    "Correspondences",
    "IDENTITY",
    "apply",
    "fit_similarity",
    "fit_similarity_batch",
    "residuals",
    "transform_pose",
]

logger = logging.getLogger(__name__)

# Source points whose second singular value falls below this fraction of
# the first are collinear.
COLLINEAR_RATIO = 1e-9


@dataclass(frozen=True)
class SimilarityTransform:
    """``x -> scale * rotation @ x + translation``."""

    scale: float
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        scale = float(self.scale)
        if not np.isfinite(scale) or scale <= 0:
            msg = 'the scale "{}" is not a positive number.'.format(scale)
            raise SfmRegkitError(msg)
        rotation = as_array(self.rotation, (3, 3), 'rotation')
        if rotation_error(rotation) > ROTATION_TOLERANCE:
            msg = 'the similarity rotation is not a proper rotation.'
            raise SfmRegkitError(msg)
        object.__setattr__(self, 'scale', scale)
        object.__setattr__(self, 'rotation', rotation)
        object.__setattr__(self, 'translation',
                           as_array(self.translation, (3,), 'translation'))

    def __eq__(self, other):
        if not isinstance(other, SimilarityTransform):
            return NotImplemented
        return bool(self.scale == other.scale and
                    np.array_equal(self.rotation, other.rotation) and
                    np.array_equal(self.translation, other.translation))

    __hash__ = None


IDENTITY = SimilarityTransform(1.0, np.eye(3), np.zeros(3))


@dataclass(frozen=True)
class Correspondences:
    """Source points and the target points they should map onto."""

    source: np.ndarray
    target: np.ndarray

    def __post_init__(self):
        source = as_points(self.source, 'source')
        target = as_points(self.target, 'target')
        if source.shape != target.shape:
            msg = 'source has {} points '.format(len(source))
            msg += 'while target has {}.'.format(len(target))
            raise SfmRegkitError(msg)
        if not is_finite(source) or not is_finite(target):
            msg = 'correspondences must be finite.'
            raise SfmRegkitError(msg)
        object.__setattr__(self, 'source', source)
        object.__setattr__(self, 'target', target)

    def __len__(self):
        return len(self.source)


def apply(t, p):
    """Apply a similarity transform to one point or an (n, 3) array.

    Arguments:
        t {SimilarityTransform} -- transform.
        p {array_like} -- 3-vector or (n, 3) points.

    Returns:
        ndarray -- transformed point(s), same shape as ``p``.

    """
    p = np.asarray(p, dtype=np.float64)
    return t.scale * (p @ t.rotation.T) + t.translation


def fit_similarity_batch(source, target):
    """Fit one similarity transform per point set.

    Arguments:
        source {ndarray} -- (B, k, 3) source point sets.
        target {ndarray} -- (B, k, 3) target point sets.

    Returns:
        tuple -- scales (B,), rotations (B, 3, 3), translations (B, 3)
            and a (B,) boolean mask of degenerate sets. Entries of
            degenerate sets are undefined.

    """
    source = np.asarray(source, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    n_sets, k = source.shape[:2]

    if k < 3:
        degenerate = np.ones(n_sets, dtype=bool)
        return (np.ones(n_sets), np.tile(np.eye(3), (n_sets, 1, 1)),
                np.zeros((n_sets, 3)), degenerate)

    mu_s = source.mean(axis=1)
    mu_t = target.mean(axis=1)
    xs = source - mu_s[:, None, :]
    xt = target - mu_t[:, None, :]

    sv = np.linalg.svd(xs, compute_uv=False)
    var_s = np.sum(xs ** 2, axis=(1, 2))
    var_t = np.sum(xt ** 2, axis=(1, 2))
    degenerate = ((sv[:, 0] <= 0) | (sv[:, 1] < COLLINEAR_RATIO * sv[:, 0]) |
                  (var_t <= 0))

    # cross-covariance sum_i t_i s_i^T
    h = np.einsum('bki,bkj->bij', xt, xs)
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(u) * np.linalg.det(vt))
    d[d == 0] = 1.0
    u = u.copy()
    u[:, :, 2] *= d[:, None]
    rotations = u @ vt

    with np.errstate(divide='ignore', invalid='ignore'):
        scales = np.sqrt(var_t / var_s)
    translations = mu_t - scales[:, None] * np.einsum(
        'bij,bj->bi', rotations, mu_s)

    return scales, rotations, translations, degenerate


def fit_similarity(c):
    """Fit the least-squares similarity mapping ``c.source`` onto ``c.target``.

    Arguments:
        c {Correspondences} -- at least 3 non-collinear source points.

    Returns:
        SimilarityTransform -- fitted transform, always a proper rotation.

    """
    if len(c) < 3:
        logger.debug('similarity fit skipped, %d correspondences', len(c))
        msg = '{} correspondences can not '.format(len(c))
        msg += 'determine a similarity transform, at least 3 are needed.'
        raise DegenerateConfiguration(msg)

    scales, rotations, translations, degenerate = fit_similarity_batch(
        c.source[None], c.target[None])

    if degenerate[0]:
        logger.debug('degenerate similarity fit over %d correspondences',
                     len(c))
        msg = 'the source points are collinear or coincident, or the '
        msg += 'target points are coincident.'
        raise DegenerateConfiguration(msg)

    return SimilarityTransform(scales[0], rotations[0], translations[0])


def residuals(t, c):
    """Return ``||target_i - apply(t, source_i)||`` for every pair.

    Arguments:
        t {SimilarityTransform} -- transform.
        c {Correspondences} -- point pairs.

    Returns:
        ndarray -- (n,) nonnegative distances.

    """
    return readonly(np.linalg.norm(c.target - apply(t, c.source), axis=1))


def transform_pose(t, pose):
    """Express a camera in the frame reached through ``t``.

    The center moves with ``t`` and the world-to-camera rotation becomes
    ``R Q^T`` where ``Q`` is the rotation of ``t``.

    Arguments:
        t {SimilarityTransform} -- frame change.
        pose {Pose} -- camera in the source frame.

    Returns:
        Pose -- the same camera in the target frame.

    """
    center = apply(t, camera_center(pose, tol=ROTATION_REJECT_TOLERANCE))
    return pose_from_center(pose.rotation @ t.rotation.T, center)
