"""Readers and writers of the external artifacts.

Text artifacts are UTF-8 CSV with LF line endings and ``.`` as decimal
separator. Floats are written in the shortest form that reads back to the
same value, so every writer/reader pair round-trips exactly.

Readers reject malformed input with a ``FormatError`` subclass naming the
offending line (1-based, the header being line 1) and, where relevant, the
column or image id.
"""

from dataclasses import dataclass
import io
import logging
import re

import numpy as np
import pandas as pd

from .config import ROTATION_REJECT_TOLERANCE, ROTATION_WARN_TOLERANCE
from .err import (BadDimensions, BadFieldCount, BadHeader, BadMagic,
                  BadNumber, BadRotation, DimMismatch, DuplicatePair,
                  FormatError, InvalidRow, NonFinite, SelfPair, SfmRegkitError,
                  TruncatedData)
from .geometry import Pose, Scene, SceneImage, rotation_error
from .matches import MatchTable, pair_key
from .metrics import DistanceMatrix, GrayImage
from .numeric import format_float, parse_float
from .pairs import DescriptorSet

__all__ = [
    "SUBMISSION_HEADER",
    "MATCH_HEADER",
    "SubmissionRow",
    "write_submission",
    "read_submission",
    "rows_to_scenes",
    "scene_to_rows",
    "write_match_table",
    "read_match_table",
    "write_descriptors",
    "read_descriptors",
    "write_pgm",
    "read_pgm",
    "write_distance_matrix",
    "read_distance_matrix",
]

logger = logging.getLogger(__name__)

SUBMISSION_HEADER = ('image_path', 'dataset', 'scene', 'rotation_matrix',
                     'translation_vector')

MATCH_HEADER = ('image_a', 'image_b', 'num_matches')

DISTANCE_CORNER = 'image_id'

DESCRIPTOR_TAG = 'dim'

_COUNT = re.compile(r'^[0-9]+$')

_PARSER_LINE = re.compile(r'line (\d+)')


@dataclass(frozen=True)
class SubmissionRow:
    """One posed image of a submission or ground-truth file."""

    image_path: str
    dataset: str
    scene: str
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rotation = np.array(self.rotation, dtype=np.float64)
        translation = np.array(self.translation, dtype=np.float64)
        if rotation.size == 9:
            rotation = rotation.reshape(3, 3)
        if rotation.shape != (3, 3) or translation.shape != (3,):
            msg = 'a row needs a 3x3 rotation and a 3-vector translation.'
            raise SfmRegkitError(msg)
        rotation.setflags(write=False)
        translation.setflags(write=False)
        object.__setattr__(self, 'rotation', rotation)
        object.__setattr__(self, 'translation', translation)

    def __eq__(self, other):
        if not isinstance(other, SubmissionRow):
            return NotImplemented
        return (self.image_path, self.dataset, self.scene) == \
            (other.image_path, other.dataset, other.scene) and \
            bool(np.array_equal(self.rotation, other.rotation)) and \
            bool(np.array_equal(self.translation, other.translation))

    __hash__ = None

    @property
    def pose(self):
        return Pose(self.rotation, self.translation)


def _join(values):
    return ';'.join(format_float(v) for v in np.ravel(values))


def _to_csv(frame):
    return frame.to_csv(index=False, lineterminator='\n')


def _check_header(text, expected):
    first = text.split('\n', 1)[0]
    header = tuple(first.split(','))
    if header != tuple(expected):
        msg = 'expected the header "{}", '.format(','.join(expected))
        msg += 'got "{}".'.format(first)
        raise BadHeader(msg, line=1)


def _read_csv(text, n_fields):
    """Parse CSV text as strings, rejecting rows of the wrong width."""
    try:
        frame = pd.read_csv(io.StringIO(text), dtype=str,
                            keep_default_na=False, skip_blank_lines=False)
    except pd.errors.ParserError as e:
        found = _PARSER_LINE.search(str(e))
        line = int(found.group(1)) if found else None
        msg = 'wrong number of fields on line {}.'.format(line)
        raise BadFieldCount(msg, line=line)
    if frame.shape[1] != n_fields:
        msg = 'expected {} columns, got {}.'.format(n_fields, frame.shape[1])
        raise BadFieldCount(msg, line=1)
    for index, record in enumerate(frame.itertuples(index=False)):
        if not all(isinstance(value, str) for value in record):
            line = index + 2
            msg = 'wrong number of fields on line {}.'.format(line)
            raise BadFieldCount(msg, line=line)
    return frame


def write_submission(rows):
    """Serialize submission rows.

    For example::

    >>> write_submission([SubmissionRow('img.png', 'd', 's', np.eye(3),
    ...                                 np.zeros(3))])
    'image_path,dataset,scene,rotation_matrix,translation_vector\\nimg.png,d,s,1;0;0;0;1;0;0;0;1,0;0;0\\n'

    Arguments:
        rows {list} -- SubmissionRow objects, written in order.

    Returns:
        string -- CSV text.

    """
    records = []
    for index, row in enumerate(rows):
        if not isinstance(row, SubmissionRow):
            msg = 'row {} is not a `SubmissionRow`.'.format(index)
            raise InvalidRow(msg, index=index)
        for name in ('image_path', 'dataset', 'scene'):
            value = getattr(row, name)
            if not isinstance(value, str) or \
                    any(c in value for c in ',;"\n\r'):
                msg = 'the {} of row {} is not a '.format(name, index)
                msg += 'plain string.'
                raise InvalidRow(msg, index=index)
        if not np.all(np.isfinite(row.rotation)) or \
                not np.all(np.isfinite(row.translation)):
            msg = 'row {} holds non-finite values.'.format(index)
            raise InvalidRow(msg, index=index)
        if rotation_error(row.rotation) > ROTATION_REJECT_TOLERANCE:
            msg = 'the rotation of row {} is not a rotation.'.format(index)
            raise InvalidRow(msg, index=index)
        records.append((row.image_path, row.dataset, row.scene,
                        _join(row.rotation), _join(row.translation)))
    frame = pd.DataFrame(records, columns=list(SUBMISSION_HEADER))
    return _to_csv(frame)


def _parse_values(text, count, line, column):
    fields = text.split(';')
    if len(fields) != count:
        msg = 'expected {} values in "{}" on line '.format(count, column)
        msg += '{}, got {}.'.format(line, len(fields))
        raise BadFieldCount(msg, line=line, column=column)
    values = []
    for field in fields:
        value = parse_float(field)
        if value is None or not np.isfinite(value):
            msg = 'can not parse "{}" in "{}" '.format(field, column)
            msg += 'on line {}.'.format(line)
            raise BadNumber(msg, line=line, column=column)
        values.append(value)
    return np.array(values)


def read_submission(text):
    """Parse a submission or ground-truth file.

    Rotations off by more than 1e-6 are accepted with a warning, beyond
    1e-3 the row is rejected.

    Arguments:
        text {string} -- CSV text.

    Returns:
        list -- SubmissionRow objects in file order.

    """
    _check_header(text, SUBMISSION_HEADER)
    frame = _read_csv(text, len(SUBMISSION_HEADER))

    rows = []
    for index, record in enumerate(frame.itertuples(index=False)):
        line = index + 2
        image_path, dataset, scene, rotation, translation = record
        rotation = _parse_values(rotation, 9, line, 'rotation_matrix')
        translation = _parse_values(translation, 3, line,
                                    'translation_vector')
        rotation = rotation.reshape(3, 3)
        err = rotation_error(rotation)
        if err > ROTATION_REJECT_TOLERANCE:
            msg = 'the rotation on line {} deviates from a '.format(line)
            msg += 'rotation by {:g}.'.format(err)
            raise BadRotation(msg, line=line)
        if err > ROTATION_WARN_TOLERANCE:
            logger.warning('rotation on line %d deviates by %.3g', line, err)
        rows.append(SubmissionRow(image_path, dataset, scene, rotation,
                                  translation))

    logger.debug('read %d submission rows', len(rows))
    return rows


def rows_to_scenes(rows):
    """Group rows into posed scenes keyed by ``(dataset, scene)``.

    Returns:
        dict -- Scene objects, images in row order.

    """
    grouped = {}
    for index, row in enumerate(rows):
        images = grouped.setdefault((row.dataset, row.scene), {})
        if row.image_path in images:
            msg = 'image "{}" repeats in scene '.format(row.image_path)
            msg += '"{}/{}".'.format(row.dataset, row.scene)
            raise InvalidRow(msg, index=index)
        images[row.image_path] = SceneImage(row.image_path, row.pose)
    return {key: Scene(tuple(images.values()), key[1], key[0])
            for key, images in grouped.items()}


def scene_to_rows(scene):
    """list -- SubmissionRow objects of the posed images of ``scene``."""
    return [SubmissionRow(image.image_id, scene.dataset_id, scene.scene_id,
                          image.pose.rotation, image.pose.translation)
            for image in scene.images if image.pose is not None]


def write_match_table(table):
    """Serialize a MatchTable, pairs in insertion order."""
    frame = pd.DataFrame(list(table.records()), columns=list(MATCH_HEADER))
    return _to_csv(frame)


def read_match_table(text):
    """Parse ``image_a,image_b,num_matches`` rows.

    Arguments:
        text {string} -- CSV text.

    Returns:
        MatchTable -- counts keyed by unordered pair.

    """
    _check_header(text, MATCH_HEADER)
    frame = _read_csv(text, len(MATCH_HEADER))

    counts = {}
    for index, (a, b, n) in enumerate(frame.itertuples(index=False)):
        line = index + 2
        if a == b:
            msg = 'image "{}" is paired with itself '.format(a)
            msg += 'on line {}.'.format(line)
            raise SelfPair(msg, line=line)
        if not _COUNT.match(n):
            msg = 'the count "{}" on line {} is not a '.format(n, line)
            msg += 'non-negative integer.'
            raise BadNumber(msg, line=line, column='num_matches')
        if pair_key(a, b) in counts:
            msg = 'the pair "{}","{}" on line {} '.format(a, b, line)
            msg += 'is already listed.'
            raise DuplicatePair(msg, line=line)
        counts[pair_key(a, b)] = (a, b, int(n))

    return MatchTable({(a, b): n for a, b, n in counts.values()})


def write_descriptors(d, binary=False):
    """Serialize a DescriptorSet.

    Keyword Arguments:
        binary {bool} -- write ``.npz`` bytes with arrays ``ids`` and
            ``vectors`` instead of text. (default: False)

    Returns:
        string or bytes -- the artifact.

    """
    if binary:
        buf = io.BytesIO()
        np.savez(buf, ids=np.array(d.ids, dtype=str),
                 vectors=np.asarray(d.vectors))
        return buf.getvalue()

    lines = ['{},{}'.format(DESCRIPTOR_TAG, d.dim)]
    for image_id, vector in zip(d.ids, d.vectors):
        lines.append(','.join([image_id] +
                              [format_float(v) for v in vector]))
    return '\n'.join(lines) + '\n'


def _read_npz(data):
    try:
        with np.load(io.BytesIO(data), allow_pickle=False) as archive:
            ids = [str(i) for i in archive['ids']]
            vectors = np.array(archive['vectors'], dtype=np.float64)
    except (KeyError, ValueError, OSError) as e:
        msg = 'can not read the descriptor archive:\n{}'.format(e)
        raise FormatError(msg)
    if vectors.ndim != 2 or vectors.shape[0] != len(ids):
        msg = 'descriptor archive holds {} ids '.format(len(ids))
        msg += 'and vectors of shape {}.'.format(vectors.shape)
        raise DimMismatch(msg)
    for image_id, vector in zip(ids, vectors):
        if not np.all(np.isfinite(vector)):
            msg = 'the descriptor of "{}" is not finite.'.format(image_id)
            raise NonFinite(msg, image_id=image_id)
    return ids, vectors


def _read_descriptor_text(text):
    lines = text.split('\n')
    header = lines[0].split(',')
    dim = None
    if len(header) == 2 and header[0] == DESCRIPTOR_TAG and \
            _COUNT.match(header[1]):
        dim = int(header[1])
    if not dim:
        msg = 'expected a "dim,<D>" header, got "{}".'.format(lines[0])
        raise BadHeader(msg, line=1)

    if lines[-1] == '':
        lines.pop()

    ids, vectors = [], []
    for line, record in enumerate(lines[1:], start=2):
        fields = record.split(',')
        image_id = fields[0]
        if len(fields) - 1 != dim:
            msg = 'the descriptor of "{}" on line {} '.format(image_id, line)
            msg += 'has {} values, expected {}.'.format(len(fields) - 1, dim)
            raise DimMismatch(msg, line=line, image_id=image_id)
        vector = []
        for column, field in enumerate(fields[1:], start=1):
            value = parse_float(field)
            if value is None:
                msg = 'can not parse "{}" on line {}.'.format(field, line)
                raise BadNumber(msg, line=line, column=column)
            if not np.isfinite(value):
                msg = 'the descriptor of "{}" on line '.format(image_id)
                msg += '{} is not finite.'.format(line)
                raise NonFinite(msg, line=line, image_id=image_id)
            vector.append(value)
        if image_id in ids:
            msg = 'image "{}" on line {} is already '.format(image_id, line)
            msg += 'listed.'
            raise FormatError(msg, line=line, image_id=image_id)
        ids.append(image_id)
        vectors.append(vector)
    return ids, np.array(vectors, dtype=np.float64).reshape(len(ids), dim)


def read_descriptors(data):
    """Parse a descriptor artifact, text or ``.npz``.

    Arguments:
        data {string or bytes} -- artifact content.

    Returns:
        DescriptorSet -- vectors in file order.

    """
    if isinstance(data, bytes):
        if data.startswith(b'PK'):
            ids, vectors = _read_npz(data)
            return DescriptorSet(ids, vectors)
        data = data.decode('utf-8')
    ids, vectors = _read_descriptor_text(data)
    return DescriptorSet(ids, vectors)


def write_pgm(image, maxval=255):
    """Encode a GrayImage as binary PGM (``P5``).

    Keyword Arguments:
        maxval {int} -- 255 for 8-bit, up to 65535 for 16-bit samples.

    Returns:
        bytes -- the PGM file.

    """
    if not isinstance(maxval, int) or not 0 < maxval <= 65535:
        msg = 'maxval {} is outside 1..65535.'.format(maxval)
        raise BadDimensions(msg)
    dtype = np.dtype('u1') if maxval < 256 else np.dtype('>u2')
    samples = np.rint(np.asarray(image.pixels) * maxval).astype(dtype)
    header = 'P5\n{} {}\n{}\n'.format(image.width, image.height, maxval)
    return header.encode('ascii') + samples.tobytes()


def _header_tokens(data, count, pos):
    """Read ``count`` whitespace separated header tokens after ``pos``."""
    tokens = []
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b'#':
            while pos < n and data[pos:pos + 1] not in (b'\n', b'\r'):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and \
                data[pos:pos + 1] != b'#':
            pos += 1
        if start == pos:
            msg = 'the PGM header ends early.'
            raise TruncatedData(msg)
        tokens.append(data[start:pos])
    return tokens, pos


def read_pgm(data):
    """Decode a binary PGM image.

    For example::

    >>> read_pgm(b'P5\\n2 1\\n255\\n\\x00\\xff').pixels
    array([[0., 1.]])

    Arguments:
        data {bytes} -- the PGM file, 8 or 16 bits per sample.

    Returns:
        GrayImage -- samples divided by maxval.

    """
    if data[:2] != b'P5':
        msg = 'expected the binary PGM magic "P5", '
        msg += 'got {!r}.'.format(data[:2])
        raise BadMagic(msg)

    tokens, pos = _header_tokens(data, 3, 2)
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        msg = 'can not parse the PGM header {}.'.format(tokens)
        raise BadDimensions(msg)
    if width <= 0 or height <= 0 or not 0 < maxval <= 65535:
        msg = 'invalid PGM size {}x{} '.format(width, height)
        msg += 'or maxval {}.'.format(maxval)
        raise BadDimensions(msg)

    # a single whitespace byte separates the header from the raster
    pos += 1
    dtype = np.dtype('u1') if maxval < 256 else np.dtype('>u2')
    expected = width * height * dtype.itemsize
    raster = data[pos:pos + expected]
    if len(raster) < expected:
        msg = 'expected {} bytes of pixel data, '.format(expected)
        msg += 'got {}.'.format(len(raster))
        raise TruncatedData(msg)

    samples = np.frombuffer(raster, dtype=dtype).reshape(height, width)
    if samples.max() > maxval:
        msg = 'pixel values exceed maxval {}.'.format(maxval)
        raise BadDimensions(msg)
    return GrayImage(samples.astype(np.float64) / maxval)


def write_distance_matrix(d):
    """Serialize a DistanceMatrix, ``inf`` for missing weights."""
    frame = pd.DataFrame(
        [[label] + [format_float(w) for w in row]
         for label, row in zip(d.labels, d.weights)],
        columns=[DISTANCE_CORNER] + list(d.labels))
    return _to_csv(frame)


def read_distance_matrix(text):
    """Parse a DistanceMatrix CSV.

    Returns:
        DistanceMatrix -- labels from the header row.

    """
    header = text.split('\n', 1)[0].split(',')
    if header[0] != DISTANCE_CORNER:
        msg = 'the header must start with "{}".'.format(DISTANCE_CORNER)
        raise BadHeader(msg, line=1)
    labels = tuple(header[1:])
    if len(set(labels)) != len(labels):
        msg = 'the header repeats image ids.'
        raise BadHeader(msg, line=1)

    frame = _read_csv(text, len(header))
    if tuple(frame.iloc[:, 0]) != labels:
        msg = 'row labels do not match the header.'
        raise BadHeader(msg, line=1)

    n = len(labels)
    w = np.zeros((n, n))
    for i, record in enumerate(frame.itertuples(index=False)):
        for j, field in enumerate(record[1:]):
            value = parse_float(field)
            if value is None or np.isnan(value):
                msg = 'can not parse "{}" on line {}.'.format(field, i + 2)
                raise BadNumber(msg, line=i + 2, column=labels[j])
            w[i, j] = value

    try:
        return DistanceMatrix(labels, w)
    except SfmRegkitError as e:
        msg = 'not a distance matrix:{}'.format(e.msg)
        raise FormatError(msg)
