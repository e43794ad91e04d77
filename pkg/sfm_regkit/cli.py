"""Command-line front end.

Subcommands::

    sfm-regkit score PRED GT [--thresholds a,b,c] [--thresholds-file F]
    sfm-regkit order (--images DIR | --matches CSV) [--metric M] [--solver S]
    sfm-regkit pairs (--descriptors F | --count N) [--mode M] [--threshold x]
    sfm-regkit align SCENE_A SCENE_B [--threshold x] [--out F]
    sfm-regkit metrics (--images DIR | --matches CSV) [--metric M]

The options ``-v``, ``-q``, ``--seed`` and ``--out`` go before or after the
subcommand. Given on both sides, the one after the subcommand wins.

Exit codes: 0 success, 2 unreadable or malformed input, 3 geometric
infeasibility, 4 solver failure, 64 usage error.
"""

import argparse
import glob
import logging
import os
import sys

from .config import (DEFAULT_THRESHOLDS, METRICS, PAIR_MODES, SOLVERS,
                     TSP_EXACT_MAX, RunConfig, ThresholdSchedule,
                     configure_logging, get_thread_count,
                     load_threshold_schedule, parse_thresholds)
from .dump import dump_scores_json, dump_scores_text
from .err import (FormatError, SfmRegkitError, TooFewCameras, TooFewImages,
                  UsageError)
from .formats import (read_descriptors, read_match_table, read_pgm,
                      read_submission, rows_to_scenes, scene_to_rows,
                      write_distance_matrix, write_submission)
from .metrics import build_distance_matrix
from .numeric import format_float
from .ordering import chain_order, tsp_exact, tsp_heuristic
from .pairs import (build_similarity_graph, exhaustive_pairs, mst,
                    propose_pairs)
from .scoring import (apply_registration, register_reconstructions,
                      score_scenes)

__all__ = [
    "build_parser",
    "main",
]

logger = logging.getLogger(__name__)

EXIT_USAGE = 64

DEFAULT_ALIGN_THRESHOLD = 0.05


class _Parser(argparse.ArgumentParser):
    """Argument parser exiting with the usage error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, '{}: error: {}\n'.format(self.prog, message))


def _common(parser, suppress=False):
    """Add the options accepted before and after the subcommand.

    Subcommand copies default to SUPPRESS so a value given before the
    subcommand survives the subparser.
    """
    def default(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument('-v', '--verbose', action='count', default=default(0),
                        help='log debug messages')
    parser.add_argument('-q', '--quiet', action='count', default=default(0),
                        help='log warnings and errors only')
    parser.add_argument('--seed', type=int, default=default(0),
                        help='random seed (default: 0)')
    parser.add_argument('--out', default=default(None),
                        help='output file (default: standard output)')
    return parser


def _add_image_sources(parser):
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument('--images', metavar='DIR',
                        help='directory of binary PGM images')
    source.add_argument('--matches', metavar='CSV',
                        help='match table image_a,image_b,num_matches')
    parser.add_argument('--metric', choices=METRICS, default=None,
                        help='pairwise weight (default: ssim for images, '
                        'matches for a match table)')


def build_parser():
    """Return the ``sfm-regkit`` argument parser."""
    parser = _Parser(
        prog='sfm-regkit',
        description='Camera registration scoring, view ordering and pair '
        'selection for structure-from-motion submissions.')
    _common(parser)
    parent = _common(argparse.ArgumentParser(add_help=False), suppress=True)
    sub = parser.add_subparsers(dest='subcommand', metavar='SUBCOMMAND')
    sub.required = True

    score = sub.add_parser('score', parents=[parent],
                           help='mAA of a submission against ground truth')
    score.add_argument('pred', help='submission CSV')
    score.add_argument('gt', help='ground-truth CSV')
    score.add_argument('--thresholds', default=None,
                       help='comma separated registration thresholds')
    score.add_argument('--thresholds-file', default=None,
                       help='EDN map of per-scene thresholds')
    score.add_argument('--normalize', action='store_true',
                       help='scale ground truth to unit RMS radius')
    score.add_argument('--minimal-cameras', type=int, default=0,
                       help='cameras discounted for the minimal model')
    score.add_argument('--json', default=None,
                       help='JSON report path (default: OUT.json)')

    order = sub.add_parser('order', parents=[parent],
                           help='recover the capture order of the views')
    _add_image_sources(order)
    order.add_argument('--solver', choices=SOLVERS, default=None,
                       help='tour solver (default: exact up to '
                       '{} images, heuristic above)'.format(TSP_EXACT_MAX))
    order.add_argument('--path', action='store_true',
                       help='open path instead of a closed tour')

    pairs = sub.add_parser('pairs', parents=[parent],
                           help='propose image pairs to match')
    source = pairs.add_mutually_exclusive_group(required=True)
    source.add_argument('--descriptors',
                        help='descriptor file, text or .npz')
    source.add_argument('--count', type=int,
                        help='number of images (exhaustive mode only)')
    pairs.add_argument('--mode', choices=PAIR_MODES, default='threshold',
                       help='selection strategy (default: threshold)')
    pairs.add_argument('--threshold', type=float, default=None,
                       help='minimum cosine similarity')
    pairs.add_argument('--min-per-image', type=int, default=0,
                       help='pairs guaranteed per image (default: 0)')

    align = sub.add_parser('align', parents=[parent],
                           help='register scene B onto scene A and merge')
    align.add_argument('scene_a', help='reference submission CSV')
    align.add_argument('scene_b', help='submission CSV to register')
    align.add_argument('--threshold', type=float,
                       default=DEFAULT_ALIGN_THRESHOLD,
                       help='registration threshold in A units '
                       '(default: {})'.format(DEFAULT_ALIGN_THRESHOLD))

    metrics = sub.add_parser('metrics', parents=[parent],
                             help='pairwise distance matrix CSV')
    _add_image_sources(metrics)

    return parser


def _read(path, binary=False):
    try:
        if binary:
            with open(path, 'rb') as fh:
                return fh.read()
        with open(path, 'r', encoding='utf-8') as fh:
            return fh.read()
    except OSError as e:
        msg = 'can not read "{}": {}'.format(path, e.strerror or e)
        raise FormatError(msg, path=path)


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, 'w', encoding='utf-8', newline='\n') as fh:
        fh.write(text)


def _load_images(directory):
    if not os.path.isdir(directory):
        msg = '"{}" is not a directory.'.format(directory)
        raise FormatError(msg, path=directory)
    paths = sorted(glob.glob(os.path.join(directory, '*.pgm')))
    if not paths:
        msg = 'no .pgm image in "{}".'.format(directory)
        raise TooFewImages(msg)
    images = []
    for path in paths:
        try:
            image = read_pgm(_read(path, binary=True))
        except FormatError as e:
            raise type(e)(e.msg + ' (file "{}")'.format(path), path=path)
        images.append((os.path.basename(path), image))
    logger.debug('loaded %d images from %s', len(images), directory)
    return images


def _distance_source(config, args):
    """Return the metric name and its input."""
    metric = config.metric
    if args.matches is not None:
        metric = metric or 'matches'
        if metric != 'matches':
            msg = 'the "{}" metric needs --images.'.format(metric)
            raise UsageError(msg)
        return metric, read_match_table(_read(args.matches))
    metric = metric or 'ssim'
    if metric == 'matches':
        msg = 'the "matches" metric needs --matches.'
        raise UsageError(msg)
    return metric, _load_images(args.images)


def _join(values):
    return ';'.join(format_float(v) for v in values)


def cmd_score(config, args):
    """Score a submission, print the text report and write the JSON one."""
    if args.minimal_cameras < 0:
        msg = 'the "--minimal-cameras" {} is negative.'.format(
            args.minimal_cameras)
        raise UsageError(msg)
    pred_path, gt_path = config.inputs
    pred = rows_to_scenes(read_submission(_read(pred_path)))
    gt = rows_to_scenes(read_submission(_read(gt_path)))

    default = config.thresholds or DEFAULT_THRESHOLDS
    if args.thresholds_file is not None:
        schedule = load_threshold_schedule(args.thresholds_file, default)
    else:
        schedule = ThresholdSchedule(default=default)

    for key in sorted(set(pred) - set(gt)):
        logger.warning('scene %s/%s has no ground truth', *key)

    scores = score_scenes(pred, gt, schedule, config.normalize,
                          args.minimal_cameras, get_thread_count())

    _emit(dump_scores_text(scores), config.output)
    json_path = args.json
    if json_path is None and config.output is not None:
        json_path = config.output + '.json'
    if json_path is not None:
        dump_scores_json(scores, json_path)

    if scores and all(score.report is None for score in scores):
        msg = 'no scene could be registered.'
        raise TooFewCameras(msg)
    return 0


def cmd_order(config, args):
    """Write the recovered view order, one image id per line."""
    if config.solver == 'chain':
        if args.matches is None:
            msg = 'the chain solver needs --matches.'
            raise UsageError(msg)
        if config.metric not in (None, 'matches'):
            msg = 'the chain solver orders by match counts only.'
            raise UsageError(msg)
        table = read_match_table(_read(args.matches))
        tour = chain_order(table)
        labels = table.labels
    else:
        metric, source = _distance_source(config, args)
        d = build_distance_matrix(source, metric,
                                  workers=get_thread_count())
        solver = config.solver
        if solver is None:
            solver = 'exact' if d.n <= TSP_EXACT_MAX else 'heuristic'
        if solver == 'exact':
            tour = tsp_exact(d, path=args.path)
        else:
            tour = tsp_heuristic(d, seed=config.seed, path=args.path)
        labels = d.labels

    lines = ['# {}, cost {}'.format(
        'cyclic tour' if tour.cyclic else 'open path',
        format_float(tour.cost))]
    lines.extend(labels[k] for k in tour.order)
    _emit('\n'.join(lines) + '\n', config.output)
    return 0


def cmd_pairs(config, args):
    """Write proposed pairs as ``image_a,image_b[,similarity]`` lines."""
    mode = args.mode
    if args.count is not None:
        if mode != 'exhaustive':
            msg = '--count only works with --mode exhaustive.'
            raise UsageError(msg)
        if args.count < 0:
            msg = '--count must be non-negative.'
            raise UsageError(msg)
        lines = ['image_a,image_b']
        lines.extend('{},{}'.format(i, j)
                     for i, j in exhaustive_pairs(args.count))
        _emit('\n'.join(lines) + '\n', config.output)
        return 0

    descriptors = read_descriptors(_read(args.descriptors, binary=True))
    labels = descriptors.ids

    if mode == 'exhaustive':
        lines = ['image_a,image_b']
        lines.extend('{},{}'.format(labels[i], labels[j])
                     for i, j in exhaustive_pairs(len(labels)))
        _emit('\n'.join(lines) + '\n', config.output)
        return 0

    graph = build_similarity_graph(descriptors)
    if mode == 'mst':
        edges = mst(graph).edges
    else:
        if args.threshold is None:
            msg = 'the threshold mode needs --threshold.'
            raise UsageError(msg)
        if not -1.0 <= args.threshold <= 1.0:
            msg = '--threshold must lie in [-1, 1].'
            raise UsageError(msg)
        if args.min_per_image < 0:
            msg = '--min-per-image must be non-negative.'
            raise UsageError(msg)
        edges = propose_pairs(graph, args.threshold, args.min_per_image)

    lines = ['image_a,image_b,similarity']
    lines.extend('{},{},{}'.format(labels[i], labels[j], format_float(sim))
                 for i, j, sim in edges)
    _emit('\n'.join(lines) + '\n', config.output)
    return 0


def cmd_align(config, args):
    """Register scene B onto scene A, print the transforms, write the merge."""
    if not args.threshold > 0:
        msg = '--threshold must be positive.'
        raise UsageError(msg)
    path_a, path_b = config.inputs
    scenes_a = rows_to_scenes(read_submission(_read(path_a)))
    scenes_b = rows_to_scenes(read_submission(_read(path_b)))

    shared = sorted(set(scenes_a) & set(scenes_b))
    if not shared:
        msg = 'the two files share no scene.'
        raise TooFewCameras(msg)

    report = []
    merged = dict(scenes_a)
    for key in shared:
        registration = register_reconstructions(
            scenes_a[key], scenes_b[key], args.threshold,
            workers=get_thread_count())
        t = registration.transform
        report.append('{}/{}'.format(*key))
        report.append('s {}'.format(format_float(t.scale)))
        report.append('R {}'.format(_join(t.rotation.ravel())))
        report.append('t {}'.format(_join(t.translation)))
        report.append('registered {}/{}'.format(
            registration.registered_count, registration.n_cameras))
        merged[key] = apply_registration(scenes_a[key], scenes_b[key],
                                         registration)
    for key in scenes_b:
        merged.setdefault(key, scenes_b[key])

    sys.stdout.write('\n'.join(report) + '\n')
    if config.output is not None:
        rows = []
        for key in sorted(merged):
            rows.extend(scene_to_rows(merged[key]))
        _emit(write_submission(rows), config.output)
    return 0


def cmd_metrics(config, args):
    """Write the pairwise distance matrix CSV."""
    metric, source = _distance_source(config, args)
    d = build_distance_matrix(source, metric, workers=get_thread_count())
    _emit(write_distance_matrix(d), config.output)
    return 0


_COMMANDS = {
    'score': cmd_score,
    'order': cmd_order,
    'pairs': cmd_pairs,
    'align': cmd_align,
    'metrics': cmd_metrics,
}


def _run_config(args):
    thresholds = None
    if getattr(args, 'thresholds', None) is not None:
        thresholds = parse_thresholds(args.thresholds)
    if args.subcommand == 'score':
        inputs = (args.pred, args.gt)
    elif args.subcommand == 'align':
        inputs = (args.scene_a, args.scene_b)
    else:
        inputs = tuple(p for p in (getattr(args, 'images', None),
                                   getattr(args, 'matches', None),
                                   getattr(args, 'descriptors', None))
                       if p is not None)
    return RunConfig(
        subcommand=args.subcommand,
        inputs=inputs,
        thresholds=thresholds,
        metric=getattr(args, 'metric', None),
        solver=getattr(args, 'solver', None),
        seed=args.seed,
        normalize=getattr(args, 'normalize', False),
        output=args.out)


def main(argv=None):
    """Run ``sfm-regkit`` and return its exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose - args.quiet)
    try:
        config = _run_config(args)
        return _COMMANDS[config.subcommand](config, args)
    except SfmRegkitError as e:
        sys.stderr.write(str(e).strip() + '\n')
        return e.exit_code
