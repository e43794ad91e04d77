"""Dump module."""

from collections import defaultdict
import json
import math

from .err import SfmRegkitError
from .scoring import SceneScore

__all__ = [
    "dataset_means",
    "scores_to_dict",
    "dump_scores_text",
    "dump_scores_json",
]


def _check_scores(scores):
    scores = list(scores)
    for score in scores:
        if not isinstance(score, SceneScore):
            msg = 'there is no scene score to dump, got '
            msg += '`{}`.'.format(type(score).__name__)
            raise SfmRegkitError(msg)
    return scores


def dataset_means(scores):
    """Return the mean scene mAA per dataset, datasets sorted by name.

    Arguments:
        scores {list} -- SceneScore objects.

    Returns:
        dict -- dataset id to mean mAA.

    """
    grouped = defaultdict(list)
    for score in _check_scores(scores):
        grouped[score.dataset_id].append(score.maa)
    return {dataset: math.fsum(values) / len(values)
            for dataset, values in sorted(grouped.items())}


def scores_to_dict(scores):
    """Convert scene scores to plain JSON-ready objects.

    Arguments:
        scores {list} -- SceneScore objects in output order.

    Returns:
        dict -- ``scenes``, ``datasets`` and the overall ``maa``.

    """
    scores = _check_scores(scores)
    scenes = []
    for score in scores:
        entry = {
            'dataset': score.dataset_id,
            'scene': score.scene_id,
            'maa': score.maa,
        }
        if score.report is not None:
            entry['n_cameras'] = score.report.n_cameras
            entry['thresholds'] = [
                {
                    'threshold': row.threshold,
                    'registered': row.registered_count,
                    'accuracy': row.accuracy,
                }
                for row in score.report.per_threshold
            ]
        if score.error is not None:
            entry['error'] = score.error
        scenes.append(entry)

    datasets = dataset_means(scores)
    overall = math.fsum(datasets.values()) / len(datasets) if datasets \
        else 0.0
    return {'scenes': scenes, 'datasets': datasets, 'maa': overall}


def dump_scores_text(scores):
    """Render scene scores for reading.

    Arguments:
        scores {list} -- SceneScore objects.

    Returns:
        string -- one block per scene, then the dataset means.

    """
    obj = scores_to_dict(scores)
    lines = []
    for scene in obj['scenes']:
        lines.append('{}/{}: mAA {:.6f}'.format(
            scene['dataset'], scene['scene'], scene['maa']))
        for row in scene.get('thresholds', ()):
            lines.append('    t={:<10g} registered {:>4d}/{:<4d} '
                         'accuracy {:.6f}'.format(
                             row['threshold'], row['registered'],
                             scene['n_cameras'], row['accuracy']))
        if 'error' in scene:
            lines.append('    failed: {}'.format(
                scene['error'].replace('\n', ' ')))
    for dataset, value in obj['datasets'].items():
        lines.append('dataset {}: mAA {:.6f}'.format(dataset, value))
    lines.append('mAA {:.6f}'.format(obj['maa']))
    return '\n'.join(lines) + '\n'


def dump_scores_json(scores, fp=None, indent=2):
    """Serialize scene scores as JSON.

    Arguments:
        scores {list} -- SceneScore objects.

    Keyword Arguments:
        fp {a ``.write()``-supporting file-like object or a name string to
            open a file} -- destination, the text is only returned when
            None. (default: None)
        indent {int} -- pretty-print indent level. (default: 2)

    Returns:
        string -- the JSON text.

    """
    text = json.dumps(scores_to_dict(scores), indent=indent) + '\n'
    if fp is None:
        return text
    if isinstance(fp, str):
        with open(fp, 'w', encoding='utf-8', newline='\n') as fh:
            fh.write(text)
    else:
        fp.write(text)
    return text
