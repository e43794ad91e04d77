"""Configuration and tunable constants."""

from dataclasses import dataclass, field
import logging
import os

import kim_edn
import numpy as np

from .err import UsageError

__all__ = [
    "ROTATION_TOLERANCE",
    "ROTATION_WARN_TOLERANCE",
    "ROTATION_REJECT_TOLERANCE",
    "DEFAULT_THRESHOLDS",
    "WORKING_SIZE",
    "SSIM_WINDOW",
    "SSIM_STRIDE",
    "SSIM_K1",
    "SSIM_K2",
    "FLOW_BLOCK",
    "FLOW_RADIUS",
    "TSP_EXACT_MAX",
    "TSP_MAX_STARTS",
    "THREADS_ENV",
    "RunConfig",
    "ThresholdSchedule",
    "check_thresholds",
    "parse_thresholds",
    "load_threshold_schedule",
    "get_thread_count",
    "configure_logging",
]

logger = logging.getLogger(__name__)

# Absolute tolerance on ||R^T R - I||_inf and |det(R) - 1| for rotations
# produced in double precision.
ROTATION_TOLERANCE = 1e-9

# Rotations read from text pass silently below the warn tier, are logged
# between the two tiers and rejected above the reject tier.
ROTATION_WARN_TOLERANCE = 1e-6
ROTATION_REJECT_TOLERANCE = 1e-3

# Registration thresholds in normalized scene units.
DEFAULT_THRESHOLDS = tuple(float(t) for t in np.geomspace(0.002, 0.2, 10))

# Side of the square images the pixel, SSIM and flow metrics work on.
WORKING_SIZE = 256

SSIM_WINDOW = 8
SSIM_STRIDE = 4
SSIM_K1 = 0.01
SSIM_K2 = 0.03

FLOW_BLOCK = 16
FLOW_RADIUS = 8

# Held-Karp keeps a 2**n * n table.
TSP_EXACT_MAX = 13

# Above this size the heuristic solver samples its start cities.
TSP_MAX_STARTS = 64

THREADS_ENV = 'SFM_REGKIT_THREADS'

SOLVERS = ('exact', 'heuristic', 'chain')
METRICS = ('pixel', 'ssim', 'flow', 'matches')
PAIR_MODES = ('threshold', 'mst', 'exhaustive')


def check_thresholds(thresholds):
    """Check the thresholds are positive, finite and strictly ascending.

    Arguments:
        thresholds {list} -- registration thresholds.

    Returns:
        tuple -- thresholds as floats.

    """
    values = tuple(float(t) for t in thresholds)
    if not values:
        msg = 'at least one threshold is required.'
        raise UsageError(msg)
    for t in values:
        if not np.isfinite(t) or t <= 0:
            msg = 'threshold "{}" is not a positive number.'.format(t)
            raise UsageError(msg)
    for a, b in zip(values, values[1:]):
        if not a < b:
            msg = 'thresholds must be strictly ascending, '
            msg += 'got {} before {}.'.format(a, b)
            raise UsageError(msg)
    return values


def parse_thresholds(text):
    """Parse a comma separated threshold list such as ``0.01,0.02,0.05``."""
    try:
        values = [float(t) for t in text.split(',')]
    except ValueError:
        msg = 'can not parse thresholds "{}".'.format(text)
        raise UsageError(msg)
    return check_thresholds(values)


@dataclass(frozen=True)
class ThresholdSchedule:
    """Registration thresholds, optionally specialized per scene.

    Keys of ``per_scene`` are either ``"dataset/scene"`` or ``"dataset"``.
    """

    default: tuple = DEFAULT_THRESHOLDS
    per_scene: dict = field(default_factory=dict)

    def lookup(self, dataset, scene):
        """Return the thresholds used for one scene."""
        key = '{}/{}'.format(dataset, scene)
        if key in self.per_scene:
            return self.per_scene[key]
        if dataset in self.per_scene:
            return self.per_scene[dataset]
        return self.default


def load_threshold_schedule(fp, default=DEFAULT_THRESHOLDS):
    """Load per-scene thresholds from a KIM-EDN map.

    For example::

        {
            "transp_obj_glass_cup" [0.0025 0.005 0.01 0.02 0.05 0.1]
            "church/church"        [0.025 0.05 0.1 0.2 0.5 1.0]
        }

    Arguments:
        fp {string or a ``.read()``-supporting object} -- EDN source.

    Keyword Arguments:
        default {tuple} -- thresholds used for scenes missing from the map.

    Returns:
        ThresholdSchedule -- the loaded schedule.

    """
    try:
        obj = kim_edn.load(fp)
    except Exception as e:
        msg = 'can not load the threshold file:\n{}'.format(e)
        raise UsageError(msg)

    if not isinstance(obj, dict):
        msg = 'the threshold file must contain a map from scene '
        msg += 'names to threshold vectors.'
        raise UsageError(msg)

    per_scene = {}
    for key, values in obj.items():
        if not isinstance(values, (list, tuple)):
            msg = 'thresholds of "{}" are not a vector.'.format(key)
            raise UsageError(msg)
        per_scene[str(key)] = check_thresholds(values)

    logger.debug('loaded thresholds for %d scene keys', len(per_scene))
    return ThresholdSchedule(default=check_thresholds(default),
                             per_scene=per_scene)


def get_thread_count(environ=None):
    """Return the worker count allowed by ``SFM_REGKIT_THREADS``.

    0 or an unset variable means one worker per CPU.
    """
    environ = os.environ if environ is None else environ
    text = environ.get(THREADS_ENV, '').strip()
    if not text:
        count = 0
    else:
        try:
            count = int(text)
        except ValueError:
            count = -1
        if count < 0:
            msg = '{}="{}" is not a '.format(THREADS_ENV, text)
            msg += 'non-negative integer.'
            raise UsageError(msg)
    if count == 0:
        count = os.cpu_count() or 1
    return count


@dataclass(frozen=True)
class RunConfig:
    """Options of one command-line run."""

    subcommand: str
    inputs: tuple = ()
    thresholds: tuple = None
    metric: str = None
    solver: str = None
    seed: int = 0
    normalize: bool = False
    output: str = None

    def __post_init__(self):
        if self.thresholds is not None:
            object.__setattr__(self, 'thresholds',
                               check_thresholds(self.thresholds))
        if self.metric is not None and self.metric not in METRICS:
            msg = 'unknown metric "{}".'.format(self.metric)
            raise UsageError(msg)
        if self.solver is not None and self.solver not in SOLVERS:
            msg = 'unknown solver "{}".'.format(self.solver)
            raise UsageError(msg)
        if not isinstance(self.seed, int):
            msg = 'the "seed" is not an `int`.'
            raise UsageError(msg)


def configure_logging(verbosity=0):
    """Install the command-line log handler.

    Arguments:
        verbosity {int} -- -1 quiet, 0 normal, 1 or more verbose.

    """
    if verbosity < 0:
        level = logging.WARNING
    elif verbosity == 0:
        level = logging.INFO
    else:
        level = logging.DEBUG
    logging.basicConfig(
        level=level,
        format='%(levelname)s %(name)s: %(message)s')
    logging.getLogger('sfm_regkit').setLevel(level)
