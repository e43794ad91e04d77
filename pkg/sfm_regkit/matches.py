"""Match tables: correspondence counts per unordered image pair."""

from dataclasses import dataclass

from .err import SfmRegkitError

__all__ = [
    "pair_key",
    "MatchTable",
]


def pair_key(a, b):
    """Return the canonical key of the unordered pair ``{a, b}``."""
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class MatchTable:
    """Symmetric correspondence counts.

    ``labels`` keeps the image ids in order of first appearance and
    defines the default index order of matrices and orderings built from
    the table. Pairs missing from ``counts`` have count 0.
    """

    counts: dict
    labels: tuple = ()

    def __post_init__(self):
        counts = {}
        labels = list(self.labels)
        seen = set(labels)
        for (a, b), n in self.counts.items():
            if a == b:
                msg = 'the pair "{}","{}" matches an image '.format(a, b)
                msg += 'with itself.'
                raise SfmRegkitError(msg)
            if not isinstance(n, int) or isinstance(n, bool) or n < 0:
                msg = 'the count of "{}","{}" is not a '.format(a, b)
                msg += 'non-negative `int`.'
                raise SfmRegkitError(msg)
            key = pair_key(a, b)
            if key in counts:
                msg = 'the pair "{}","{}" is given twice.'.format(a, b)
                raise SfmRegkitError(msg)
            counts[key] = n
            for image_id in (a, b):
                if image_id not in seen:
                    seen.add(image_id)
                    labels.append(image_id)
        if len(set(labels)) != len(labels):
            msg = 'the labels are not unique.'
            raise SfmRegkitError(msg)
        object.__setattr__(self, 'counts', counts)
        object.__setattr__(self, 'labels', tuple(labels))

    def __len__(self):
        return len(self.counts)

    def count(self, a, b):
        """int -- matches between ``a`` and ``b``, 0 when unknown."""
        return self.counts.get(pair_key(a, b), 0)

    def records(self):
        """Yield ``(image_a, image_b, count)`` in insertion order."""
        for (a, b), n in self.counts.items():
            yield a, b, n
