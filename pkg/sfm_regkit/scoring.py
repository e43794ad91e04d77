"""Camera registration and mean Average Accuracy (mAA) scoring.

A predicted camera is registered at threshold ``t`` when its center,
mapped by the similarity transform ``T``, lies closer than ``t`` to the
ground-truth center. ``T`` is searched exhaustively: every triplet of
corresponding centers gives a candidate ``T'``, which is refined once into
``T''`` by refitting on the cameras ``T'`` registers together with the
triplet. The winner registers the most cameras; ties go to the smaller
residual sum and then to the lexicographically first triplet.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
import logging
import math

import numpy as np

from .config import ROTATION_REJECT_TOLERANCE, check_thresholds
from .err import NoFeasibleTriplet, SfmRegkitError, TooFewCameras
from .geometry import camera_center, normalize_centers
from .horn import SimilarityTransform, fit_similarity_batch, transform_pose

__all__ = [
    "RegistrationResult",
    "ThresholdAccuracy",
    "MaaReport",
    "SceneScore",
    "best_registration",
    "maa",
    "register_reconstructions",
    "apply_registration",
    "merge_reconstructions",
    "score_scenes",
]

logger = logging.getLogger(__name__)

# Triplets fitted per batched solver call.
CHUNK_SIZE = 2048


@dataclass(frozen=True)
class RegistrationResult:
    """Best similarity registration at one threshold."""

    transform: SimilarityTransform
    registered_ids: frozenset
    residual_sum: float
    threshold: float
    triplet: tuple = ()
    n_cameras: int = 0

    @property
    def registered_count(self):
        """int -- number of registered cameras."""
        return len(self.registered_ids)


@dataclass(frozen=True)
class ThresholdAccuracy:
    threshold: float
    registered_count: int
    accuracy: float


@dataclass(frozen=True)
class MaaReport:
    """Accuracy of one scene over a threshold schedule."""

    per_threshold: tuple
    maa: float
    n_cameras: int
    registrations: tuple = field(default=(), compare=False, repr=False)
    dataset_id: str = ''
    scene_id: str = ''


@dataclass(frozen=True)
class SceneScore:
    """Score of one scene of a submission, ``report`` is None on failure."""

    dataset_id: str
    scene_id: str
    maa: float
    report: MaaReport = None
    error: str = None


def _centers(scene, image_ids):
    return np.array([camera_center(scene.pose(i), tol=ROTATION_REJECT_TOLERANCE)
                     for i in image_ids])


def _common_posed_ids(first, second):
    """Ids posed in both scenes, in the order of ``first``."""
    other = set(second.posed_ids)
    return [i for i in first.posed_ids if i in other]


def _fit_one(source, target, mask):
    scales, rotations, translations, degenerate = fit_similarity_batch(
        source[mask][None], target[mask][None])
    if degenerate[0]:
        return None
    return scales[0], rotations[0], translations[0]


def _errors(model, source, target):
    scale, rotation, translation = model
    mapped = scale * (source @ rotation.T) + translation
    return np.linalg.norm(mapped - target, axis=1)


def _register_chunk(source, target, triplets, start, thresholds):
    """Best candidate per threshold over ``triplets[start:start + len]``.

    Returns a list holding, per threshold, ``None`` or a tuple
    ``(key, model, registered_mask)`` with ``key`` the sort key of the
    deterministic tie-break.
    """
    n = len(source)
    scales, rotations, translations, degenerate = fit_similarity_batch(
        source[triplets], target[triplets])

    mapped = (scales[:, None, None] *
              np.einsum('bij,nj->bni', rotations, source) +
              translations[:, None, :])
    with np.errstate(invalid='ignore'):
        errors = np.linalg.norm(mapped - target[None], axis=2)

    refits = {}
    best = [None] * len(thresholds)

    for b in range(len(triplets)):
        if degenerate[b]:
            continue
        in_triplet = np.zeros(n, dtype=bool)
        in_triplet[triplets[b]] = True
        initial = (scales[b], rotations[b], translations[b])

        for k, threshold in enumerate(thresholds):
            mask = (errors[b] < threshold) | in_triplet
            cache_key = mask.tobytes()
            if cache_key not in refits:
                model = _fit_one(source, target, mask)
                refits[cache_key] = None if model is None else (
                    model, _errors(model, source, target))

            refined = refits[cache_key]
            if refined is None:
                # keep T' when the refit is degenerate
                model, err = initial, errors[b]
            else:
                model, err = refined

            registered = err < threshold
            key = (-int(np.count_nonzero(registered)),
                   float(np.sum(err[registered])),
                   start + b)
            if best[k] is None or key < best[k][0]:
                best[k] = (key, model, registered)

    return best


def _register(source, target, thresholds, workers=1):
    """Run the exhaustive triplet search for every threshold."""
    n = len(source)
    triplets = np.array(list(combinations(range(n), 3)), dtype=np.intp)
    starts = list(range(0, len(triplets), CHUNK_SIZE))

    def run(start):
        return _register_chunk(source, target,
                               triplets[start:start + CHUNK_SIZE],
                               start, thresholds)

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            chunks = list(executor.map(run, starts))
    else:
        chunks = [run(start) for start in starts]

    winners = []
    for k in range(len(thresholds)):
        candidates = [c[k] for c in chunks if c[k] is not None]
        if not candidates:
            msg = 'all {} camera triplets are '.format(len(triplets))
            msg += 'collinear or coincident.'
            raise NoFeasibleTriplet(msg)
        winners.append(min(candidates, key=lambda c: c[0]))

    logger.debug('searched %d triplets over %d thresholds',
                 len(triplets), len(thresholds))
    return winners, triplets


def _to_result(winner, triplets, ids, threshold, n_cameras):
    key, (scale, rotation, translation), registered = winner
    return RegistrationResult(
        transform=SimilarityTransform(scale, rotation, translation),
        registered_ids=frozenset(
            i for i, r in zip(ids, registered) if r),
        residual_sum=key[1],
        threshold=float(threshold),
        triplet=tuple(ids[j] for j in triplets[key[2]]),
        n_cameras=n_cameras)


def _prepare(pred, gt, normalize):
    ids = _common_posed_ids(gt, pred)
    if len(ids) < 3:
        msg = '{} cameras are posed in both '.format(len(ids))
        msg += 'scenes, at least 3 are needed.'
        raise TooFewCameras(msg, n_common=len(ids))

    source = _centers(pred, ids)
    target = _centers(gt, ids)
    if normalize:
        all_gt = _centers(gt, gt.posed_ids)
        _, centroid, scale = normalize_centers(all_gt)
        target = (target - centroid) * scale
    return ids, source, target


def best_registration(pred, gt, threshold, workers=1):
    """Find the similarity registering the most predicted cameras.

    Arguments:
        pred {Scene} -- predicted poses.
        gt {Scene} -- ground-truth poses.
        threshold {float} -- registration distance.

    Keyword Arguments:
        workers {int} -- threads searching the triplets. (default: 1)

    Returns:
        RegistrationResult -- best registration.

    """
    (threshold,) = check_thresholds([threshold])
    ids, source, target = _prepare(pred, gt, False)
    winners, triplets = _register(source, target, (threshold,), workers)
    return _to_result(winners[0], triplets, ids, threshold, len(gt))


def maa(pred, gt, thresholds, normalize=False, minimal_cameras=0,
        workers=1):
    """Mean Average Accuracy of the registered camera centers.

    For example::

    >>> gt = synthesize_scene(5)
    >>> maa(gt, gt, [0.01, 0.02, 0.05]).maa
    1.0

    Arguments:
        pred {Scene} -- predicted poses.
        gt {Scene} -- ground-truth poses. Every ground-truth image counts
            in the denominator, posed on both sides or not.
        thresholds {list} -- strictly ascending positive thresholds.

    Keyword Arguments:
        normalize {bool} -- measure thresholds in ground-truth units
            normalized to unit RMS distance from the centroid.
            (default: False)
        minimal_cameras {int} -- cameras discounted for the minimal model,
            accuracy is ``max(0, count - m) / (N - m)``. A scene with
            at most ``m`` cameras raises TooFewCameras. (default: 0)
        workers {int} -- threads searching the triplets. (default: 1)

    Returns:
        MaaReport -- per-threshold accuracy and their mean.

    """
    thresholds = check_thresholds(thresholds)
    n_cameras = len(gt)
    if not isinstance(minimal_cameras, int) or minimal_cameras < 0:
        msg = 'the "minimal_cameras" must be a non-negative `int`.'
        raise SfmRegkitError(msg)
    if minimal_cameras >= n_cameras:
        msg = 'the {} cameras of the scene leave '.format(n_cameras)
        msg += 'none past the {} of the minimal model.'.format(
            minimal_cameras)
        raise TooFewCameras(msg, n_cameras=n_cameras)

    ids, source, target = _prepare(pred, gt, normalize)
    winners, triplets = _register(source, target, thresholds, workers)

    rows = []
    results = []
    for threshold, winner in zip(thresholds, winners):
        result = _to_result(winner, triplets, ids, threshold, n_cameras)
        count = result.registered_count
        accuracy = max(0, count - minimal_cameras) / \
            (n_cameras - minimal_cameras)
        rows.append(ThresholdAccuracy(threshold, count, accuracy))
        results.append(result)

    value = math.fsum(r.accuracy for r in rows) / len(rows)
    logger.debug('scene %s/%s: mAA %.6f over %d cameras',
                 gt.dataset_id, gt.scene_id, value, n_cameras)
    return MaaReport(tuple(rows), value, n_cameras, tuple(results),
                     gt.dataset_id, gt.scene_id)


def register_reconstructions(base, other, threshold, workers=1):
    """Best registration of ``other``'s shared centers onto ``base``."""
    (threshold,) = check_thresholds([threshold])
    ids, source, target = _prepare(other, base, False)
    winners, triplets = _register(source, target, (threshold,), workers)
    return _to_result(winners[0], triplets, ids, threshold, len(ids))


def apply_registration(base, other, registration):
    """Add the cameras only ``other`` poses to ``base``.

    Images unposed in ``base`` get their pose in place, images missing
    from ``base`` are appended in the order of ``other``. Poses already in
    ``base`` are kept as they are.
    """
    covered = set(base.posed_ids)
    known = set(base.ids)
    added = {}
    for image in other.images:
        if image.pose is not None and image.image_id not in covered:
            added[image.image_id] = image.with_pose(
                transform_pose(registration.transform, image.pose))

    images = [added.get(image.image_id, image) for image in base.images]
    images.extend(image for image_id, image in added.items()
                  if image_id not in known)
    logger.debug('merged %d new cameras into %s/%s', len(added),
                 base.dataset_id, base.scene_id)
    return base.with_images(images)


def merge_reconstructions(base, other, threshold, workers=1):
    """Merge two reconstructions of one scene into the frame of ``base``.

    Arguments:
        base {Scene} -- reference reconstruction, left untouched.
        other {Scene} -- reconstruction sharing at least 3 posed images
            with ``base``.
        threshold {float} -- registration distance in ``base`` units.

    Returns:
        Scene -- ``base`` augmented with the cameras only ``other`` poses.

    """
    registration = register_reconstructions(base, other, threshold, workers)
    return apply_registration(base, other, registration)


def score_scenes(pred_scenes, gt_scenes, schedule, normalize=False,
                 minimal_cameras=0, workers=1):
    """Score every ground-truth scene of a submission.

    Arguments:
        pred_scenes {dict} -- (dataset, scene) to predicted Scene.
        gt_scenes {dict} -- (dataset, scene) to ground-truth Scene.
        schedule {ThresholdSchedule} -- thresholds per scene.

    Returns:
        list -- SceneScore per ground-truth scene sorted by
            (dataset, scene). Scenes that can not be registered score 0
            and carry the error message.

    """
    keys = sorted(gt_scenes)

    def run(key):
        gt = gt_scenes[key]
        pred = pred_scenes.get(key)
        if pred is None:
            pred = gt.with_images(())
        try:
            report = maa(pred, gt, schedule.lookup(*key), normalize,
                         minimal_cameras)
        except (TooFewCameras, NoFeasibleTriplet) as e:
            logger.warning('scene %s/%s scored 0: %s', key[0], key[1],
                           e.msg.strip())
            return SceneScore(key[0], key[1], 0.0, None, e.msg.strip())
        logger.info('scene %s/%s: mAA %.6f', key[0], key[1], report.maa)
        return SceneScore(key[0], key[1], report.maa, report)

    if workers > 1 and len(keys) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(run, keys))
    return [run(key) for key in keys]
