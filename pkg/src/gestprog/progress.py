"""Progress-stage synthesis from gesture transcripts.

A complete suture throw advances through five stages (0-4), each anchored
by essential gestures: reaching for the needle (G1, with G5 returning to
the workspace center), positioning the tip (G2), pushing the needle
through (G3), pulling/tightening the suture (G6, G9, G10) and dropping it
(G11). G4 and G8 are adjustment gestures that prepare the next essential
gesture, so they inherit the stage of the essential gesture they precede.
A trailing adjustment run with nothing to prepare keeps the stage already
reached (stage 0 when the trial opens with adjustments).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .gestures import Segment

#: Stage value for frames outside any transcript segment.
UNLABELED_STAGE = -1

N_STAGES = 5

ESSENTIAL_STAGES: dict[str, int] = {
    "G1": 0,
    "G5": 0,
    "G2": 1,
    "G3": 2,
    "G6": 3,
    "G9": 3,
    "G10": 3,
    "G11": 4,
}

ADJUSTMENT_GESTURES = frozenset({"G4", "G8"})


@dataclass
class ProgressTrack:
    """Per-frame progress stages aligned with a demonstration's frames."""

    stages: np.ndarray  # (T,) int16, UNLABELED_STAGE in gaps
    mask: np.ndarray  # (T,) bool

    def __post_init__(self) -> None:
        if len(self.stages) != len(self.mask):
            raise ValueError("stage and mask lengths differ")


def essential_stage(gesture: str) -> int | None:
    """Stage anchored by the gesture, or None for G4/G8 (context decides)."""
    if gesture in ADJUSTMENT_GESTURES:
        return None
    try:
        return ESSENTIAL_STAGES[gesture]
    except KeyError:
        raise ValueError(f"inadmissible gesture label {gesture!r}") from None


def segment_stages(transcript: Sequence[Segment]) -> list[int]:
    """Resolve one stage per segment.

    Essential segments keep their own stage. An adjustment segment takes
    the stage of the next essential segment after its run; a trailing run
    falls back to the last stage reached, or 0 at the start of a trial.
    """
    own = [essential_stage(seg.gesture) for seg in transcript]

    # Stage of the next essential segment at or after each position.
    n = len(transcript)
    next_stage: list[int | None] = [None] * n
    upcoming: int | None = None
    for i in range(n - 1, -1, -1):
        if own[i] is not None:
            upcoming = own[i]
        next_stage[i] = upcoming

    resolved: list[int] = []
    previous: int | None = None
    for i in range(n):
        if own[i] is not None:
            stage = own[i]
        elif next_stage[i] is not None:
            stage = next_stage[i]
        elif previous is not None:
            stage = previous
        else:
            stage = 0
        resolved.append(stage)
        previous = stage
    return resolved


def label_progress(
    transcript: Sequence[Segment],
    n_frames: int | None = None,
) -> ProgressTrack:
    """Expand per-segment stages to a per-frame track.

    ``n_frames`` defaults to the last segment's end + 1; frames outside
    every segment get ``UNLABELED_STAGE`` and a False mask bit.
    """
    if n_frames is None:
        n_frames = transcript[-1].end + 1 if transcript else 0
    stages = np.full(n_frames, UNLABELED_STAGE, dtype=np.int16)
    for seg, stage in zip(transcript, segment_stages(transcript)):
        stages[seg.start : min(seg.end, n_frames - 1) + 1] = stage
    return ProgressTrack(stages=stages, mask=stages != UNLABELED_STAGE)


def progress_to_regression_target(track: ProgressTrack) -> np.ndarray:
    """Cast stages to reals for the regression loss; gaps stay excluded
    through the track's mask."""
    target = track.stages.astype(np.float64)
    target[~track.mask] = 0.0
    return target
