"""JIGSAWS-format ingestion and the kinematic preprocessing chain.

A raw suturing trial is a ``T0 x 76`` matrix sampled at 30 Hz plus a
gesture transcript. Preprocessing selects the 14 patient-side signals
(position, linear velocity, gripper angle per manipulator), smooths them
with a zero-phase low-pass filter, standardizes each column per trial and
decimates 30 Hz -> 5 Hz. Annotation amendments are applied to transcripts
at native 30 Hz indexing before any resampling.

Pipeline order is fixed: select -> filter -> normalize -> decimate.
Filtering precedes decimation so the low-pass acts as the anti-alias
stage; normalization precedes decimation so the statistics use every
native frame.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.signal import butter, filtfilt

from .gestures import (
    GESTURE_TO_INDEX,
    INDEX_TO_GESTURE,
    Segment,
    TranscriptError,
    UNLABELED,
    merge_adjacent,
    validate_transcript,
)

NATIVE_RATE_HZ = 30.0
TARGET_RATE_HZ = 5.0
DECIMATION_FACTOR = 6
CUTOFF_HZ = 1.5
FILTER_ORDER = 2
N_RAW_COLUMNS = 76
N_FEATURES = 14
MIN_TRIAL_FRAMES = 13
VARIANCE_FLOOR = 1e-8

# 0-indexed columns of the standard 76-column JIGSAWS layout.
# Per PSM block: xyz position, xyz linear velocity, gripper angle.
PSM1_COLUMNS = (38, 39, 40, 50, 51, 52, 56)
PSM2_COLUMNS = (57, 58, 59, 69, 70, 71, 75)
FEATURE_COLUMNS = PSM1_COLUMNS + PSM2_COLUMNS

#: Environment variable consulted for the dataset root when no path is given.
DATA_ROOT_ENV = "GESTPROG_DATA"


class ParseError(ValueError):
    """A kinematics or transcript file does not match the on-disk format."""


class AmendmentError(ValueError):
    """An annotation amendment cannot be applied to the trial."""


@dataclass(frozen=True)
class Amendment:
    trial_id: str
    start: int
    end: int
    gesture: str


# Annotation corrections applied on top of the original JIGSAWS suturing
# transcripts, at native 30 Hz frame indexing.
AMENDMENTS: tuple[Amendment, ...] = (
    Amendment("Suturing_B004", 2650, 2860, "G3"),
    Amendment("Suturing_C002", 1596, 1685, "G4"),
    Amendment("Suturing_D003", 1013, 1250, "G9"),
    Amendment("Suturing_D003", 1251, 1339, "G4"),
    Amendment("Suturing_D004", 99, 166, "G5"),
    Amendment("Suturing_D004", 167, 275, "G8"),
    Amendment("Suturing_D004", 956, 1020, "G4"),
    Amendment("Suturing_E003", 1095, 1267, "G4"),
    Amendment("Suturing_F001", 2401, 2498, "G6"),
    Amendment("Suturing_G001", 1132, 1353, "G6"),
    Amendment("Suturing_G001", 7628, 8181, "G8"),
    Amendment("Suturing_I003", 800, 1250, "G3"),
)


@dataclass
class RawTrial:
    """One trial as read from disk: native-rate kinematics plus transcript."""

    trial_id: str
    subject: str
    frames: np.ndarray  # (T0, 76) float64
    transcript: list[Segment]


@dataclass
class Demonstration:
    """Preprocessed trial: 5 Hz features with aligned per-frame labels."""

    trial_id: str
    subject: str
    features: np.ndarray  # (T, D) float64
    gesture_idx: np.ndarray  # (T,) int16, UNLABELED where no transcript covers
    mask: np.ndarray  # (T,) bool, True where a gesture label exists

    def __post_init__(self) -> None:
        if not (len(self.features) == len(self.gesture_idx) == len(self.mask)):
            raise ValueError("features, labels and mask lengths differ")

    @property
    def n_frames(self) -> int:
        return len(self.features)

    def gesture_tokens(self) -> list[str]:
        return [
            INDEX_TO_GESTURE[i] if i != UNLABELED else "-"
            for i in self.gesture_idx
        ]


def subject_of(trial_id: str) -> str:
    """Extract the subject letter from a trial id like ``Suturing_B001``."""
    stem = trial_id.rsplit("_", 1)[-1]
    if not stem or not stem[0].isalpha():
        raise ValueError(f"cannot infer subject from trial id {trial_id!r}")
    return stem[0].upper()


def parse_kinematics(path: str | Path) -> np.ndarray:
    """Read a whitespace-separated kinematics file into a (T0, 76) matrix.

    Blank lines are ignored; any other malformed line raises ``ParseError``
    naming its 1-based line number.
    """
    rows: list[list[float]] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            if len(tokens) != N_RAW_COLUMNS:
                raise ParseError(
                    f"expected {N_RAW_COLUMNS} columns at line {lineno}"
                )
            try:
                rows.append([float(t) for t in tokens])
            except ValueError:
                raise ParseError(
                    f"non-numeric value at line {lineno}"
                ) from None
    matrix = np.asarray(rows, dtype=np.float64).reshape(-1, N_RAW_COLUMNS)
    if not np.isfinite(matrix).all():
        raise ParseError("kinematics file contains non-finite values")
    return matrix


def parse_transcript(path: str | Path) -> list[Segment]:
    """Read transcript lines ``start end Gk`` into a sorted segment list."""
    segments: list[Segment] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            if len(tokens) != 3:
                raise ParseError(
                    f"expected 'start end label' at line {lineno}"
                )
            try:
                start, end = int(tokens[0]), int(tokens[1])
            except ValueError:
                raise ParseError(
                    f"non-integer frame index at line {lineno}"
                ) from None
            try:
                segments.append(Segment(start, end, tokens[2]))
            except TranscriptError as exc:
                raise TranscriptError(f"line {lineno}: {exc}") from None
    return validate_transcript(segments)


def apply_amendments(
    transcript: Sequence[Segment],
    table: Sequence[Amendment],
    trial_id: str,
    n_frames: int | None = None,
) -> list[Segment]:
    """Overwrite transcript labels with the amendment rows for one trial.

    Amendment ranges are inclusive at native 30 Hz indexing. Segments
    overlapping a range are split around it; touching segments that end up
    with equal labels are merged.
    """
    segments = list(transcript)
    for row in table:
        if row.trial_id != trial_id:
            continue
        if row.start > row.end or row.start < 0:
            raise AmendmentError(
                f"bad amendment range [{row.start},{row.end}] for {trial_id}"
            )
        if n_frames is not None and row.end >= n_frames:
            raise AmendmentError(
                f"amendment range [{row.start},{row.end}] outside "
                f"{trial_id} length {n_frames}"
            )
        retained: list[Segment] = []
        for seg in segments:
            if seg.end < row.start or seg.start > row.end:
                retained.append(seg)
                continue
            if seg.start < row.start:
                retained.append(Segment(seg.start, row.start - 1, seg.gesture))
            if seg.end > row.end:
                retained.append(Segment(row.end + 1, seg.end, seg.gesture))
        retained.append(Segment(row.start, row.end, row.gesture))
        segments = merge_adjacent(validate_transcript(retained))
    return segments


def amend(raw: RawTrial, table: Sequence[Amendment] = AMENDMENTS) -> RawTrial:
    """Return a copy of the trial with amended transcript."""
    fixed = apply_amendments(
        raw.transcript, table, raw.trial_id, n_frames=len(raw.frames)
    )
    return RawTrial(raw.trial_id, raw.subject, raw.frames, fixed)


def frame_labels(
    transcript: Sequence[Segment], n_frames: int
) -> np.ndarray:
    """Expand a segment list to per-frame class indices (UNLABELED in gaps)."""
    labels = np.full(n_frames, UNLABELED, dtype=np.int16)
    for seg in transcript:
        labels[seg.start : min(seg.end, n_frames - 1) + 1] = GESTURE_TO_INDEX[
            seg.gesture
        ]
    return labels


def count_label_changes(
    before: Sequence[Segment],
    after: Sequence[Segment],
    n_frames: int,
) -> int:
    """Number of native-rate frames whose label differs between transcripts."""
    return int(
        np.sum(frame_labels(before, n_frames) != frame_labels(after, n_frames))
    )


def select_features(raw: np.ndarray) -> np.ndarray:
    """Pick the 14 PSM signal columns from the 76-column layout."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 2 or raw.shape[1] != N_RAW_COLUMNS:
        raise ValueError(
            f"expected (T, {N_RAW_COLUMNS}) kinematics, got {raw.shape}"
        )
    return raw[:, FEATURE_COLUMNS]


def lowpass_filter(
    signal: np.ndarray,
    fs: float = NATIVE_RATE_HZ,
    fc: float = CUTOFF_HZ,
) -> np.ndarray:
    """Zero-phase 2nd-order Butterworth low-pass, column by column.

    Forward-backward application squares the magnitude response and
    cancels the phase, so labels stay aligned with the motion.
    """
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim == 1:
        signal = signal[:, None]
    if len(signal) < MIN_TRIAL_FRAMES:
        raise ValueError(
            f"trial too short to filter: {len(signal)} < {MIN_TRIAL_FRAMES}"
        )
    b, a = butter(FILTER_ORDER, fc, btype="low", fs=fs)
    return filtfilt(b, a, signal, axis=0)


def zscore(signal: np.ndarray) -> np.ndarray:
    """Standardize each column to zero mean, unit population variance.

    Columns whose variance falls below ``VARIANCE_FLOOR`` are scaled by the
    floor instead, which maps constant columns to all zeros.
    """
    signal = np.asarray(signal, dtype=np.float64)
    mean = signal.mean(axis=0)
    var = signal.var(axis=0)
    scale = np.sqrt(np.maximum(var, VARIANCE_FLOOR))
    return (signal - mean) / scale


def decimate(
    signal: np.ndarray,
    *arrays: np.ndarray,
    factor: int = DECIMATION_FACTOR,
) -> tuple[np.ndarray, ...]:
    """Keep every ``factor``-th row of the signal and of any aligned arrays."""
    picked = tuple(np.asarray(a)[::factor] for a in (signal, *arrays))
    return picked if arrays else picked[0]


def preprocess(
    raw: RawTrial,
    normalize: bool = True,
) -> Demonstration:
    """Run the full select/filter/normalize/decimate chain on one trial.

    ``normalize=False`` skips the per-trial z-score so a caller can apply
    training-fold statistics instead.
    """
    features = select_features(raw.frames)
    features = lowpass_filter(features)
    if normalize:
        features = zscore(features)
    labels = frame_labels(raw.transcript, len(raw.frames))
    features, labels = decimate(features, labels)
    return Demonstration(
        trial_id=raw.trial_id,
        subject=raw.subject,
        features=features,
        gesture_idx=labels,
        mask=labels != UNLABELED,
    )


# --------------------------------------------------------------------------
# On-disk layout


def resolve_data_root(root: str | Path | None) -> Path:
    if root is None:
        root = os.environ.get(DATA_ROOT_ENV)
    if root is None:
        raise FileNotFoundError(
            f"no dataset root given and ${DATA_ROOT_ENV} is unset"
        )
    root = Path(root)
    if (root / "Suturing").is_dir():
        root = root / "Suturing"
    return root


def list_trials(root: str | Path | None = None) -> list[str]:
    """Trial ids found under ``<root>/transcriptions``."""
    root = resolve_data_root(root)
    tdir = root / "transcriptions"
    if not tdir.is_dir():
        raise FileNotFoundError(f"no transcriptions directory under {root}")
    return sorted(p.stem for p in tdir.glob("*.txt"))


def load_trial(trial_id: str, root: str | Path | None = None) -> RawTrial:
    root = resolve_data_root(root)
    frames = parse_kinematics(
        root / "kinematics" / "AllGestures" / f"{trial_id}.txt"
    )
    transcript = parse_transcript(root / "transcriptions" / f"{trial_id}.txt")
    return RawTrial(trial_id, subject_of(trial_id), frames, transcript)


def parse_amendment_file(path: str | Path) -> list[Amendment]:
    """Read override amendments from ``trial start end label`` rows."""
    rows: list[Amendment] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens or tokens[0].startswith("#"):
                continue
            if len(tokens) != 4:
                raise ParseError(
                    f"expected 'trial start end label' at line {lineno}"
                )
            rows.append(
                Amendment(tokens[0], int(tokens[1]), int(tokens[2]), tokens[3])
            )
    return rows


def save_demonstration(demo: Demonstration, path: str | Path) -> None:
    """Write the documented columnar text format.

    Header line: ``# demo v1 trial=<id> subject=<letter> frames=<T> dims=<D>``
    then one line per frame with D feature values (shortest round-trip
    float representation), the gesture token or ``-``, and the mask bit.
    """
    t, d = demo.features.shape
    tokens = demo.gesture_tokens()
    with open(path, "w") as fh:
        fh.write(
            f"# demo v1 trial={demo.trial_id} subject={demo.subject} "
            f"frames={t} dims={d}\n"
        )
        for i in range(t):
            values = " ".join(repr(v) for v in demo.features[i])
            fh.write(f"{values} {tokens[i]} {int(demo.mask[i])}\n")


def load_demonstration(path: str | Path) -> Demonstration:
    with open(path) as fh:
        header = fh.readline().split()
        if header[:3] != ["#", "demo", "v1"]:
            raise ParseError(f"not a demonstration file: {path}")
        meta = dict(kv.split("=", 1) for kv in header[3:])
        t, d = int(meta["frames"]), int(meta["dims"])
        features = np.empty((t, d), dtype=np.float64)
        gesture = np.full(t, UNLABELED, dtype=np.int16)
        mask = np.zeros(t, dtype=bool)
        for i in range(t):
            tokens = fh.readline().split()
            if len(tokens) != d + 2:
                raise ParseError(f"bad demonstration row {i} in {path}")
            features[i] = [float(x) for x in tokens[:d]]
            if tokens[d] != "-":
                gesture[i] = GESTURE_TO_INDEX[tokens[d]]
            mask[i] = tokens[d + 1] == "1"
    return Demonstration(meta["trial"], meta["subject"], features, gesture, mask)
