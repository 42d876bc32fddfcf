"""Trial data model, binary dataset ingestion, labeling schemes, splits, synthesis.

Datasets live on disk as a JSON manifest plus raw little-endian float32
arrays: one data file per subject indexed trial-major then channel-major,
and one labels file with four ratings per trial (valence, arousal,
dominance, liking on the 1-9 scale). The synthetic generator produces the
same layout at desk scale with class-coded band content, so the full
pipeline can be exercised without any licensed recordings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from .errors import ConfigError, DataError
from .features import DEFAULT_BAND_TABLE

__all__ = [
    "Ratings",
    "Trial",
    "SchemeKind",
    "LabelScheme",
    "label_trial",
    "LabeledDataset",
    "label_dataset",
    "SubjectRecord",
    "Dataset",
    "load_dataset",
    "save_dataset",
    "split_train_test",
    "split_indices",
    "SyntheticSpec",
    "generate_synthetic",
    "to_dataset",
]

RATING_MIN = 1.0
RATING_MAX = 9.0

# Table of the eight (valence, arousal, dominance) octants; key bits are
# (high_valence, high_arousal, high_dominance).
EIGHT_STATE_NAMES = {
    (True, False, False): "protected",
    (True, False, True): "satisfied",
    (True, True, False): "surprised",
    (True, True, True): "happy",
    (False, False, False): "sad",
    (False, False, True): "unconcerned",
    (False, True, False): "frightened",
    (False, True, True): "angry",
}
EIGHT_STATE_ORDER = (
    "protected", "satisfied", "surprised", "happy",
    "sad", "unconcerned", "frightened", "angry",
)


class Ratings(NamedTuple):
    valence: float
    arousal: float
    dominance: float
    liking: float


@dataclass
class Trial:
    """One recording unit: (channels, samples) signals plus its ratings."""

    signals: np.ndarray
    ratings: Ratings

    def __post_init__(self):
        self.signals = np.asarray(self.signals, dtype=np.float32)
        if self.signals.ndim != 2:
            raise DataError(f"trial signals must be 2-D, got shape {self.signals.shape}")
        for name, value in zip(Ratings._fields, self.ratings):
            if not (RATING_MIN <= value <= RATING_MAX):
                raise DataError(
                    f"{name} rating {value} outside [{RATING_MIN}, {RATING_MAX}]"
                )

    @property
    def channels(self) -> int:
        return self.signals.shape[0]

    @property
    def samples(self) -> int:
        return self.signals.shape[1]


class SchemeKind(str, Enum):
    LAHA = "laha"
    LVHV = "lvhv"
    STRESS_CALM = "stress_calm"
    EIGHT_STATES = "eight_states"


@dataclass(frozen=True)
class LabelScheme:
    """One of the four labeling schemes plus its low/high threshold.

    A rating below the threshold counts as Low, at or above as High. The
    stress/calm scheme ignores the threshold and uses its fixed criteria;
    trials matching neither criterion get no label.
    """

    kind: SchemeKind
    threshold: float = 5.0

    def __post_init__(self):
        if not RATING_MIN < self.threshold < RATING_MAX:
            raise ConfigError(
                f"threshold must lie strictly inside ({RATING_MIN}, {RATING_MAX}), "
                f"got {self.threshold}"
            )

    @property
    def class_names(self) -> tuple[str, ...]:
        if self.kind == SchemeKind.LAHA:
            return ("low_arousal", "high_arousal")
        if self.kind == SchemeKind.LVHV:
            return ("low_valence", "high_valence")
        if self.kind == SchemeKind.STRESS_CALM:
            return ("stress", "calm")
        return EIGHT_STATE_ORDER


def label_trial(ratings: Ratings, scheme: LabelScheme) -> Optional[int]:
    """Class index of a rating tuple under a scheme, or None when excluded.

    Stress requires valence <= 3 and arousal >= 5; calm requires
    4 <= valence <= 6 and arousal < 4. These regions are disjoint, and
    anything else is unlabeled. The other schemes label every trial.
    """
    v, a, d = ratings.valence, ratings.arousal, ratings.dominance
    t = scheme.threshold
    if scheme.kind == SchemeKind.LAHA:
        return int(a >= t)
    if scheme.kind == SchemeKind.LVHV:
        return int(v >= t)
    if scheme.kind == SchemeKind.STRESS_CALM:
        if v <= 3.0 and a >= 5.0:
            return 0
        if 4.0 <= v <= 6.0 and a < 4.0:
            return 1
        return None
    name = EIGHT_STATE_NAMES[(v >= t, a >= t, d >= t)]
    return EIGHT_STATE_ORDER.index(name)


@dataclass
class LabeledDataset:
    """Trials paired with class indices under one scheme."""

    trials: list[Trial]
    labels: np.ndarray
    class_names: tuple[str, ...]
    scheme: LabelScheme
    sample_rate_hz: float

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=int)
        if len(self.trials) != self.labels.size:
            raise ConfigError(
                f"{len(self.trials)} trials vs {self.labels.size} labels"
            )
        if self.labels.size and (
            self.labels.min() < 0 or self.labels.max() >= len(self.class_names)
        ):
            raise ConfigError("label index outside the class-name range")

    def __len__(self) -> int:
        return len(self.trials)

    def subset(self, indices) -> "LabeledDataset":
        indices = np.asarray(indices, dtype=int)
        return LabeledDataset(
            trials=[self.trials[i] for i in indices],
            labels=self.labels[indices],
            class_names=self.class_names,
            scheme=self.scheme,
            sample_rate_hz=self.sample_rate_hz,
        )

    @property
    def channels(self) -> int:
        if not self.trials:
            raise DataError("dataset holds no trials")
        return self.trials[0].channels


def label_dataset(trials, scheme: LabelScheme, sample_rate_hz: float) -> LabeledDataset:
    """Apply a scheme to trials, dropping trials the scheme excludes."""
    kept, labels = [], []
    for trial in trials:
        label = label_trial(trial.ratings, scheme)
        if label is not None:
            kept.append(trial)
            labels.append(label)
    return LabeledDataset(
        trials=kept,
        labels=np.asarray(labels, dtype=int),
        class_names=scheme.class_names,
        scheme=scheme,
        sample_rate_hz=sample_rate_hz,
    )


@dataclass
class SubjectRecord:
    subject_id: str
    trials: list[Trial]


@dataclass
class Dataset:
    """Everything a manifest describes, materialized in memory."""

    subjects: list[SubjectRecord]
    channels: int
    sample_rate_hz: float
    samples_per_trial: int
    trials_per_subject: int

    def all_trials(self) -> list[Trial]:
        return [t for s in self.subjects for t in s.trials]


_MANIFEST_KEYS = {
    "subjects", "channels", "sample_rate_hz", "samples_per_trial", "trials_per_subject",
}
_SUBJECT_KEYS = {"id", "data_file", "labels_file"}


def _read_exact(path: Path, expected_bytes: int, what: str) -> np.ndarray:
    if not path.exists():
        raise DataError(f"{what} file not found: {path}")
    actual = path.stat().st_size
    if actual != expected_bytes:
        raise DataError(
            f"{what} file {path} has {actual} bytes, expected {expected_bytes}"
        )
    return np.fromfile(path, dtype="<f4")


def load_dataset(manifest_path) -> Dataset:
    """Load every subject a manifest declares, validating sizes and ratings.

    File sizes must match the declared shape exactly
    (trials x channels x samples x 4 bytes for data, trials x 4 x 4 bytes
    for labels); any mismatch or out-of-range rating is rejected with the
    offending file and offset in the message.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise DataError(f"manifest not found: {manifest_path}")
    try:
        raw = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"manifest {manifest_path} is not valid JSON: {exc}") from exc
    unknown = set(raw) - _MANIFEST_KEYS
    if unknown:
        raise DataError(f"manifest {manifest_path} has unknown keys: {sorted(unknown)}")
    missing = _MANIFEST_KEYS - set(raw)
    if missing:
        raise DataError(f"manifest {manifest_path} is missing keys: {sorted(missing)}")
    channels = int(raw["channels"])
    samples = int(raw["samples_per_trial"])
    trials_per_subject = int(raw["trials_per_subject"])
    if min(channels, samples, trials_per_subject) < 1:
        raise DataError("manifest declares a nonpositive shape")
    base = manifest_path.parent
    subjects = []
    for entry in raw["subjects"]:
        unknown = set(entry) - _SUBJECT_KEYS
        if unknown:
            raise DataError(f"subject entry has unknown keys: {sorted(unknown)}")
        data = _read_exact(
            base / entry["data_file"],
            trials_per_subject * channels * samples * 4,
            "data",
        ).reshape(trials_per_subject, channels, samples)
        ratings = _read_exact(
            base / entry["labels_file"], trials_per_subject * 4 * 4, "labels"
        ).reshape(trials_per_subject, 4)
        bad = np.where((ratings < RATING_MIN) | (ratings > RATING_MAX))
        if bad[0].size:
            trial_i, field_i = int(bad[0][0]), int(bad[1][0])
            raise DataError(
                f"labels file {base / entry['labels_file']}: rating "
                f"{ratings[trial_i, field_i]} at trial {trial_i} field {field_i} "
                f"outside [{RATING_MIN}, {RATING_MAX}]"
            )
        trials = [
            Trial(signals=data[k], ratings=Ratings(*map(float, ratings[k])))
            for k in range(trials_per_subject)
        ]
        subjects.append(SubjectRecord(subject_id=str(entry["id"]), trials=trials))
    return Dataset(
        subjects=subjects,
        channels=channels,
        sample_rate_hz=float(raw["sample_rate_hz"]),
        samples_per_trial=samples,
        trials_per_subject=trials_per_subject,
    )


def save_dataset(dataset: Dataset, out_dir) -> Path:
    """Write a dataset in manifest-plus-binary form; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for subject in dataset.subjects:
        if len(subject.trials) != dataset.trials_per_subject:
            raise DataError(
                f"subject {subject.subject_id} has {len(subject.trials)} trials, "
                f"manifest declares {dataset.trials_per_subject}"
            )
        data = np.stack([t.signals for t in subject.trials]).astype("<f4")
        ratings = np.array([list(t.ratings) for t in subject.trials], dtype="<f4")
        data_file = f"{subject.subject_id}_data.dat"
        labels_file = f"{subject.subject_id}_labels.dat"
        data.tofile(out_dir / data_file)
        ratings.tofile(out_dir / labels_file)
        entries.append({"id": subject.subject_id, "data_file": data_file,
                        "labels_file": labels_file})
    manifest = {
        "subjects": entries,
        "channels": dataset.channels,
        "sample_rate_hz": dataset.sample_rate_hz,
        "samples_per_trial": dataset.samples_per_trial,
        "trials_per_subject": dataset.trials_per_subject,
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path


def split_indices(labels: np.ndarray, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Stratified, seeded train/test index split. Returns sorted index arrays."""
    if not 0.0 < fraction < 1.0:
        raise ConfigError(f"train fraction must lie in (0, 1), got {fraction}")
    labels = np.asarray(labels, dtype=int)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        if idx.size < 2:
            raise ConfigError(
                f"class {cls} has {idx.size} trial(s); stratified splitting needs >= 2"
            )
        rng.shuffle(idx)
        n_train = int(np.floor(fraction * idx.size + 0.5))
        n_train = min(max(n_train, 1), idx.size - 1)
        train.extend(idx[:n_train])
        test.extend(idx[n_train:])
    return np.sort(np.asarray(train, dtype=int)), np.sort(np.asarray(test, dtype=int))


def split_train_test(
    dataset: LabeledDataset, fraction: float, seed: int
) -> tuple[LabeledDataset, LabeledDataset]:
    """Stratified train/test partition: seeded shuffle per class, then cut.

    Trials from all subjects are pooled before splitting; no trial appears
    in both partitions.
    """
    train_idx, test_idx = split_indices(dataset.labels, fraction, seed)
    return dataset.subset(train_idx), dataset.subset(test_idx)


# Class index -> band name for the band-coded generator; the first two
# classes land mid-spectrum where a 128 Hz ladder separates them cleanly.
SYNTHETIC_CLASS_BANDS = ("alpha", "beta", "gamma", "theta")


@dataclass(frozen=True)
class SyntheticSpec:
    """Desk-scale stand-in dataset: class k's channels carry band k's tone."""

    classes: int = 2
    trials_per_class: int = 60
    channels: int = 8
    samples: int = 1024
    sample_rate_hz: float = 128.0
    snr: float = 20.0
    seed: int = 0
    scheme: LabelScheme = field(default_factory=lambda: LabelScheme(SchemeKind.LVHV))

    def __post_init__(self):
        if min(self.classes, self.trials_per_class, self.channels, self.samples) < 1:
            raise ConfigError("all synthetic counts must be positive")
        if self.sample_rate_hz <= 0:
            raise ConfigError(f"sample rate must be positive, got {self.sample_rate_hz}")
        if self.snr < 0:
            raise ConfigError(f"snr must be nonnegative, got {self.snr}")
        if self.classes > len(SYNTHETIC_CLASS_BANDS):
            raise ConfigError(
                f"band-coded generator supports at most {len(SYNTHETIC_CLASS_BANDS)} "
                f"classes, got {self.classes}"
            )
        if self.scheme.kind != SchemeKind.EIGHT_STATES and self.classes > 2:
            raise ConfigError(
                f"scheme {self.scheme.kind.value} has 2 classes, got {self.classes}"
            )


def _ratings_for_class(cls: int, scheme: LabelScheme, rng: np.random.Generator) -> Ratings:
    """Draw a rating tuple that the scheme maps back to the requested class."""
    t = scheme.threshold
    margin = 0.25

    def low():
        return float(rng.uniform(RATING_MIN, t - margin))

    def high():
        return float(rng.uniform(t + margin, RATING_MAX))

    def anywhere():
        return float(rng.uniform(RATING_MIN, RATING_MAX))

    if scheme.kind == SchemeKind.LAHA:
        return Ratings(anywhere(), high() if cls else low(), anywhere(), anywhere())
    if scheme.kind == SchemeKind.LVHV:
        return Ratings(high() if cls else low(), anywhere(), anywhere(), anywhere())
    if scheme.kind == SchemeKind.STRESS_CALM:
        if cls == 0:  # stress: valence <= 3, arousal >= 5
            return Ratings(float(rng.uniform(1.0, 3.0)), float(rng.uniform(5.0, 9.0)),
                           anywhere(), anywhere())
        return Ratings(float(rng.uniform(4.0, 6.0)), float(rng.uniform(1.0, 3.75)),
                       anywhere(), anywhere())
    name = EIGHT_STATE_ORDER[cls]
    bits = next(k for k, v in EIGHT_STATE_NAMES.items() if v == name)
    vad = [high() if bit else low() for bit in bits]
    return Ratings(vad[0], vad[1], vad[2], anywhere())


def to_dataset(labeled: LabeledDataset, subject_id: str = "synthetic") -> Dataset:
    """Wrap a labeled dataset as a single-subject on-disk dataset."""
    if not labeled.trials:
        raise DataError("cannot materialize an empty dataset")
    return Dataset(
        subjects=[SubjectRecord(subject_id=subject_id, trials=labeled.trials)],
        channels=labeled.trials[0].channels,
        sample_rate_hz=labeled.sample_rate_hz,
        samples_per_trial=labeled.trials[0].samples,
        trials_per_subject=len(labeled.trials),
    )


def generate_synthetic(spec: SyntheticSpec) -> LabeledDataset:
    """Band-coded synthetic trials with ratings consistent with the scheme.

    Every channel of a class-k trial carries a sinusoid at band k's center
    frequency with a random phase, plus white noise; signal and noise power
    sum to 1 with ratio ``snr`` (snr = 0 means pure noise). Deterministic
    given the spec seed.
    """
    rng = np.random.default_rng(spec.seed)
    band_by_name = {b.name: b for b in DEFAULT_BAND_TABLE}
    t_axis = np.arange(spec.samples) / spec.sample_rate_hz
    p_signal = spec.snr / (1.0 + spec.snr)
    p_noise = 1.0 / (1.0 + spec.snr)
    trials, labels = [], []
    for cls in range(spec.classes):
        freq = band_by_name[SYNTHETIC_CLASS_BANDS[cls]].center_hz
        for _ in range(spec.trials_per_class):
            phase = rng.uniform(0.0, 2.0 * np.pi, size=(spec.channels, 1))
            tone = np.sqrt(2.0 * p_signal) * np.sin(
                2.0 * np.pi * freq * t_axis[None, :] + phase
            )
            noise = rng.normal(0.0, np.sqrt(p_noise), size=(spec.channels, spec.samples))
            ratings = _ratings_for_class(cls, spec.scheme, rng)
            trials.append(Trial(signals=(tone + noise).astype(np.float32), ratings=ratings))
            labels.append(cls)
    return LabeledDataset(
        trials=trials,
        labels=np.asarray(labels, dtype=int),
        class_names=spec.scheme.class_names,
        scheme=spec.scheme,
        sample_rate_hz=spec.sample_rate_hz,
    )
