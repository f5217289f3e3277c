"""Segmented sequences and the layered key/value cache.

The prompt fed to the decoder is three contiguous blocks in fixed order:
system, visual, instruction. Entries appended during generation are
tagged ``generated``. Cache layers are stored sequence-major so rows can
be removed with a single boolean slice.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import ShapeMismatchError


class Segment(IntEnum):
    SYSTEM = 0
    VISUAL = 1
    INSTRUCTION = 2
    GENERATED = 3


SEGMENT_NAMES = {seg: seg.name.lower() for seg in Segment}


@dataclass(frozen=True)
class SegmentedSequence:
    """Lengths of the three prompt blocks; spans are derived, so the
    disjoint/contiguous/ordered invariant holds by construction."""

    system_len: int
    visual_len: int
    instruction_len: int

    def __post_init__(self):
        if min(self.system_len, self.visual_len, self.instruction_len) < 0:
            raise ValueError("segment lengths must be >= 0")
        if self.total_len < 1:
            raise ValueError("sequence must contain at least one token")

    @property
    def total_len(self) -> int:
        return self.system_len + self.visual_len + self.instruction_len

    @property
    def system_span(self) -> tuple[int, int]:
        return (0, self.system_len)

    @property
    def visual_span(self) -> tuple[int, int]:
        return (self.system_len, self.system_len + self.visual_len)

    @property
    def instruction_span(self) -> tuple[int, int]:
        return (self.system_len + self.visual_len, self.total_len)

    def tags(self) -> np.ndarray:
        """Per-position segment tags, shape (total_len,) uint8."""
        out = np.empty(self.total_len, dtype=np.uint8)
        out[slice(*self.system_span)] = Segment.SYSTEM
        out[slice(*self.visual_span)] = Segment.VISUAL
        out[slice(*self.instruction_span)] = Segment.INSTRUCTION
        return out


@dataclass
class KVCacheLayer:
    """One decoder layer's cache: (seq, heads, head_dim) keys/values plus
    per-entry position ids and segment tags.

    ``active`` is an optional attendability mask used by verification
    paths that mask entries instead of removing them; None means every
    entry is attendable.
    """

    keys: np.ndarray
    values: np.ndarray
    position_ids: np.ndarray  # (seq,) int64
    segment_tags: np.ndarray  # (seq,) uint8
    active: np.ndarray | None = None

    def __len__(self) -> int:
        return self.keys.shape[0]

    def active_count(self) -> int:
        if self.active is None:
            return len(self)
        return int(self.active.sum())

    def next_position(self) -> int:
        """Position id a freshly appended entry should carry."""
        return self.active_count()

    def append(self, key: np.ndarray, value: np.ndarray, tag: Segment, position: int) -> None:
        self.keys = np.concatenate([self.keys, key[None]], axis=0)
        self.values = np.concatenate([self.values, value[None]], axis=0)
        self.position_ids = np.concatenate(
            [self.position_ids, np.array([position], dtype=np.int64)]
        )
        self.segment_tags = np.concatenate(
            [self.segment_tags, np.array([int(tag)], dtype=np.uint8)]
        )
        if self.active is not None:
            self.active = np.concatenate([self.active, np.array([True])])

    def nbytes(self) -> int:
        """Key/value payload bytes (bookkeeping arrays excluded)."""
        return self.keys.nbytes + self.values.nbytes

    def segment_counts(self) -> dict[str, int]:
        return {
            SEGMENT_NAMES[seg]: int(np.count_nonzero(self.segment_tags == seg))
            for seg in Segment
        }

    def validate(self) -> None:
        seq = len(self)
        if not (
            self.values.shape[0] == seq
            and self.position_ids.shape == (seq,)
            and self.segment_tags.shape == (seq,)
        ):
            raise ShapeMismatchError("cache layer arrays disagree on sequence length")
        if self.active is None and seq > 1 and not (np.diff(self.position_ids) > 0).all():
            raise ValueError("position ids must be strictly increasing")


@dataclass
class LayeredKVCache:
    layers: list[KVCacheLayer] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.layers)

    def total_entries(self) -> int:
        return sum(len(layer) for layer in self.layers)

    def total_bytes(self) -> int:
        return sum(layer.nbytes() for layer in self.layers)

    def per_layer_segment_counts(self) -> list[dict[str, int]]:
        return [layer.segment_counts() for layer in self.layers]
