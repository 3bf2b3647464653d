"""Gesture vocabulary and transcript segments shared across the toolchain.

Suturing uses 10 of the 11 JIGSAWS gesture classes (G7 never occurs).
Class indices 0-9 are fixed by the order of ``GESTURES`` and double as the
action classification head's logit indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

GESTURES: tuple[str, ...] = (
    "G1", "G2", "G3", "G4", "G5", "G6", "G8", "G9", "G10", "G11",
)

GESTURE_TO_INDEX: dict[str, int] = {g: i for i, g in enumerate(GESTURES)}
INDEX_TO_GESTURE: dict[int, str] = {i: g for i, g in enumerate(GESTURES)}

N_GESTURES = len(GESTURES)

#: Sentinel class index for frames outside any transcript segment.
UNLABELED = -1


class TranscriptError(ValueError):
    """A transcript violates the segment contract (overlap, bad label...)."""


def gesture_index(token: str) -> int:
    """Map a gesture token such as ``"G5"`` to its class index 0-9."""
    try:
        return GESTURE_TO_INDEX[token]
    except KeyError:
        raise TranscriptError(f"inadmissible gesture label {token!r}") from None


@dataclass(frozen=True)
class Segment:
    """One transcript entry: frames ``start..end`` (inclusive) share a gesture."""

    start: int
    end: int
    gesture: str

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise TranscriptError(
                f"segment start {self.start} exceeds end {self.end}"
            )
        if self.gesture not in GESTURE_TO_INDEX:
            raise TranscriptError(f"inadmissible gesture label {self.gesture!r}")

    @property
    def length(self) -> int:
        return self.end - self.start + 1


def validate_transcript(segments: Sequence[Segment]) -> list[Segment]:
    """Sort segments by start frame and check they do not overlap."""
    ordered = sorted(segments, key=lambda s: s.start)
    for prev, cur in zip(ordered, ordered[1:]):
        if cur.start <= prev.end:
            raise TranscriptError(
                f"segments overlap: [{prev.start},{prev.end}] and "
                f"[{cur.start},{cur.end}]"
            )
    return ordered


def merge_adjacent(segments: Iterable[Segment]) -> list[Segment]:
    """Fuse touching segments that carry the same gesture label."""
    merged: list[Segment] = []
    for seg in segments:
        if (
            merged
            and merged[-1].gesture == seg.gesture
            and merged[-1].end + 1 == seg.start
        ):
            merged[-1] = Segment(merged[-1].start, seg.end, seg.gesture)
        else:
            merged.append(seg)
    return merged
