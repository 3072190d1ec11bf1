"""Temporal grouping of a (2N+1)-frame window into N three-frame groups.

Indices are 0-based; the reference is the middle frame ``N``.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..errors import InvalidInputError


@dataclass(frozen=True)
class GroupingPlan:
    groups: tuple      # N triples (former, middle, latter)
    dilations: tuple   # one positive int per group
    reference: int

    def __len__(self):
        return len(self.groups)

    def one_based(self):
        return [tuple(i + 1 for i in g) for g in self.groups]


def _length(seq):
    if isinstance(seq, int):
        return seq
    return len(seq)


def _dilation(triple):
    span = max(triple) - min(triple)
    return max(1, (span + 1) // 2)


def temporal_grouping(seq, strategy="frame_rate"):
    """Split a window (or its length) into groups.

    ``frame_rate``      (t-n, t, t+n) for n = 1..N, dilation n
    ``contiguous``      consecutive triples (0,1,2), (2,3,4), ...
    ``reference_each``  (t-1, t, t+1), then the remaining frames paired in order,
                        each pair joined by the reference
    """
    n_frames = _length(seq)
    if n_frames < 3 or n_frames % 2 == 0:
        raise InvalidInputError(f"window length must be odd and >= 3, got {n_frames}")
    n = n_frames // 2
    ref = n
    if strategy == "frame_rate":
        groups = [(ref - k, ref, ref + k) for k in range(1, n + 1)]
    elif strategy == "contiguous":
        groups = [(2 * k, 2 * k + 1, 2 * k + 2) for k in range(n)]
    elif strategy == "reference_each":
        rest = [i for i in range(n_frames) if abs(i - ref) > 1]
        groups = [(ref - 1, ref, ref + 1)]
        groups += [(rest[k], ref, rest[k + 1]) for k in range(0, len(rest), 2)]
    else:
        raise InvalidInputError(f"unknown grouping strategy {strategy!r}")
    groups = tuple(tuple(g) for g in groups)
    return GroupingPlan(groups, tuple(_dilation(g) for g in groups), ref)
