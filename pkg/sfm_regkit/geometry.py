"""Camera geometry.

Cameras are parameterized by a world-to-camera rotation ``R`` and a
translation ``T``, a world point ``X`` maps to ``R X + T`` in camera
coordinates and the camera center is ``C = -R^T T``.
"""

from dataclasses import dataclass
import logging
import math

import numpy as np
from scipy.spatial.transform import Rotation

from .config import ROTATION_TOLERANCE
from .err import InvalidRotation, SfmRegkitError
from .numeric import as_array, is_finite, readonly

__all__ = [
    "Pose",
    "SceneImage",
    "Scene",
    "validate_rotation",
    "rotation_error",
    "camera_center",
    "pose_from_center",
    "normalize_centers",
    "look_at_rotation",
    "synthesize_scene",
]

logger = logging.getLogger(__name__)

LAYOUTS = ('circle', 'random')


def rotation_error(m):
    """Return the larger of ``||m^T m - I||_inf`` and ``|det(m) - 1|``.

    Arguments:
        m {ndarray} -- 3x3 matrix.

    Returns:
        float -- deviation from a proper rotation, ``inf`` for matrices
            with the wrong shape or non-finite entries.

    """
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (3, 3) or not is_finite(m):
        return math.inf
    ortho = np.max(np.abs(m.T @ m - np.eye(3)))
    det = abs(np.linalg.det(m) - 1.0)
    return float(max(ortho, det))


def validate_rotation(m, tol=ROTATION_TOLERANCE):
    """Check ``m`` is a proper rotation within ``tol``.

    Arguments:
        m {array_like} -- 3x3 matrix.
        tol {float} -- absolute tolerance. (default: 1e-9)

    Returns:
        bool -- true if orthonormal with determinant +1.

    """
    return rotation_error(m) <= tol


@dataclass(frozen=True)
class Pose:
    """Extrinsics of one camera."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'rotation',
                           as_array(self.rotation, (3, 3), 'rotation'))
        object.__setattr__(self, 'translation',
                           as_array(self.translation, (3,), 'translation'))
        if not is_finite(self.rotation) or not is_finite(self.translation):
            msg = 'pose components must be finite.'
            raise SfmRegkitError(msg)

    def __eq__(self, other):
        if not isinstance(other, Pose):
            return NotImplemented
        return bool(np.array_equal(self.rotation, other.rotation) and
                    np.array_equal(self.translation, other.translation))

    __hash__ = None


def camera_center(pose, tol=ROTATION_TOLERANCE):
    """Return the camera center ``C = -R^T T``.

    For example::

    >>> camera_center(Pose(np.eye(3), [1, 2, 3]))
    array([-1., -2., -3.])

    Arguments:
        pose {Pose} -- camera pose.
        tol {float} -- rotation tolerance. (default: 1e-9)

    Returns:
        ndarray -- 3-vector.

    """
    err = rotation_error(pose.rotation)
    if err > tol:
        msg = 'the pose rotation deviates from a proper rotation by '
        msg += '{:g} (tolerance {:g}).'.format(err, tol)
        raise InvalidRotation(msg, deviation=err)
    return readonly(-pose.rotation.T @ pose.translation)


def pose_from_center(rotation, center):
    """Return the pose with the given rotation whose center is ``center``."""
    rotation = as_array(rotation, (3, 3), 'rotation')
    center = as_array(center, (3,), 'center')
    return Pose(rotation, -rotation @ center)


def normalize_centers(centers):
    """Center a point set and scale it to unit RMS distance.

    Arguments:
        centers {ndarray} -- (n, 3) points.

    Returns:
        tuple -- normalized points, the removed centroid and the applied
            scale factor. Coincident points are only shifted.

    """
    centers = np.asarray(centers, dtype=np.float64)
    centroid = centers.mean(axis=0)
    shifted = centers - centroid
    rms = math.sqrt(float(np.mean(np.sum(shifted ** 2, axis=1))))
    scale = 1.0 / rms if rms > 0 else 1.0
    return shifted * scale, centroid, scale


@dataclass(frozen=True)
class SceneImage:
    """One named image of a scene, possibly posed."""

    image_id: str
    pose: Pose = None

    def with_pose(self, pose):
        """Return the same image carrying ``pose``."""
        return SceneImage(self.image_id, pose)


@dataclass(frozen=True)
class Scene:
    """Ordered images of one scene.

    Images keep their file order; every index used downstream refers to
    this order.
    """

    images: tuple = ()
    scene_id: str = ''
    dataset_id: str = ''

    def __post_init__(self):
        images = tuple(self.images)
        seen = set()
        for image in images:
            if image.image_id in seen:
                msg = 'image id "{}" '.format(image.image_id)
                msg += 'repeats in scene "{}".'.format(self.scene_id)
                raise SfmRegkitError(msg)
            seen.add(image.image_id)
        object.__setattr__(self, 'images', images)

    def __len__(self):
        return len(self.images)

    @property
    def ids(self):
        """list -- image ids in scene order."""
        return [image.image_id for image in self.images]

    @property
    def posed_ids(self):
        """list -- ids of the images carrying a pose."""
        return [image.image_id for image in self.images
                if image.pose is not None]

    def pose(self, image_id):
        """Return the pose of ``image_id`` or ``None``."""
        for image in self.images:
            if image.image_id == image_id:
                return image.pose
        return None

    def poses(self):
        """dict -- image id to pose, posed images only."""
        return {image.image_id: image.pose for image in self.images
                if image.pose is not None}

    def with_images(self, images):
        """Return a scene with the same names holding ``images``."""
        return Scene(tuple(images), self.scene_id, self.dataset_id)

    def subset(self, image_ids):
        """Return the scene restricted to ``image_ids``, order kept."""
        keep = set(image_ids)
        return self.with_images(
            image for image in self.images if image.image_id in keep)


def look_at_rotation(center, target=(0.0, 0.0, 0.0), up=(0.0, 0.0, 1.0)):
    """Return the rotation of a camera at ``center`` looking at ``target``.

    The camera z axis points at the target and the image y axis points
    along ``-up``.
    """
    center = np.asarray(center, dtype=np.float64)
    z = np.asarray(target, dtype=np.float64) - center
    z /= np.linalg.norm(z)
    y = -np.asarray(up, dtype=np.float64)
    y = y - np.dot(y, z) * z
    y /= np.linalg.norm(y)
    x = np.cross(y, z)
    return np.vstack((x, y, z))


def synthesize_scene(n, layout='circle', seed=0, scene_id='synthetic',
                     dataset_id='synthetic'):
    """Generate a posed scene for tests and examples.

    The circle layout puts ``n`` cameras evenly on the unit circle of the
    z=0 plane, camera ``k`` at angle ``2 pi k / n``, all looking at the
    origin. The random layout draws centers from a unit normal and
    rotations uniformly.

    Arguments:
        n {int} -- number of cameras, at least 1.
        layout {string} -- "circle" or "random". (default: "circle")
        seed {int} -- random seed. (default: 0)

    Returns:
        Scene -- images named ``img_000``, ``img_001``, ...

    """
    if not isinstance(n, int) or n < 1:
        msg = 'the number of cameras "{}" is not a positive `int`.'.format(n)
        raise SfmRegkitError(msg)

    if layout not in LAYOUTS:
        msg = 'unknown layout "{}", '.format(layout)
        msg += 'expected one of {}.'.format(LAYOUTS)
        raise SfmRegkitError(msg)

    rng = np.random.default_rng(seed)

    images = []
    if layout == 'circle':
        for k in range(n):
            angle = 2.0 * math.pi * k / n
            center = np.array([math.cos(angle), math.sin(angle), 0.0])
            pose = pose_from_center(look_at_rotation(center), center)
            images.append(SceneImage('img_{:03d}'.format(k), pose))
    else:
        centers = rng.standard_normal((n, 3))
        rotations = Rotation.random(n, random_state=rng).as_matrix()
        for k in range(n):
            pose = pose_from_center(rotations[k], centers[k])
            images.append(SceneImage('img_{:03d}'.format(k), pose))

    logger.debug('synthesized %s scene with %d cameras', layout, n)
    return Scene(tuple(images), scene_id, dataset_id)
