"""Specimen table ingestion, labeling, scaling and splitting."""

from __future__ import annotations

import csv
import io
import json
import math
import re
import warnings
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

FEATURE_NAMES = ("infill_pct", "layer_height_mm", "print_speed_mm_s", "extrusion_temp_c")
TARGET_NAME = "uts_mpa"
COLUMNS = FEATURE_NAMES + (TARGET_NAME,)

# Normalized header text -> canonical column name.
_ALIASES = {
    "infill_pct": "infill_pct",
    "infill": "infill_pct",
    "infill percentage": "infill_pct",
    "infill percentage (%)": "infill_pct",
    "infill density": "infill_pct",
    "layer_height_mm": "layer_height_mm",
    "layer_height": "layer_height_mm",
    "layer height": "layer_height_mm",
    "layer height (mm)": "layer_height_mm",
    "print_speed_mm_s": "print_speed_mm_s",
    "print_speed": "print_speed_mm_s",
    "print speed": "print_speed_mm_s",
    "print speed (mm/sec)": "print_speed_mm_s",
    "print speed (mm/s)": "print_speed_mm_s",
    "extrusion_temp_c": "extrusion_temp_c",
    "extrusion_temp": "extrusion_temp_c",
    "extrusion temp": "extrusion_temp_c",
    "extrusion temp (°c)": "extrusion_temp_c",
    "extrusion temperature": "extrusion_temp_c",
    "extrusion temperature (°c)": "extrusion_temp_c",
    "uts_mpa": "uts_mpa",
    "uts": "uts_mpa",
    "ultimate tensile strength": "uts_mpa",
    "ultimate tensile strength (mpa)": "uts_mpa",
    "uts (mpa)": "uts_mpa",
}


class DatasetError(ValueError):
    """Base class for dataset problems."""


class EmptyFile(DatasetError):
    pass


class MissingColumn(DatasetError):
    def __init__(self, column: str):
        super().__init__(f"missing column: {column}")
        self.column = column


class MalformedRow(DatasetError):
    def __init__(self, row_index: int, reason: str):
        super().__init__(f"row {row_index}: {reason}")
        self.row_index = row_index
        self.reason = reason


class OutlierError(DatasetError):
    pass


class AllRecordsDropped(DatasetError):
    pass


class ConstantFeature(DatasetError):
    def __init__(self, column: int):
        super().__init__(f"feature column {column} is constant")
        self.column = column


class SingleClassStratify(DatasetError):
    pass


@dataclass(frozen=True)
class SpecimenRecord:
    infill_pct: float
    layer_height: float
    print_speed: float
    extrusion_temp: float
    uts: float

    def __post_init__(self):
        for name in ("infill_pct", "layer_height", "print_speed", "extrusion_temp", "uts"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not 0 < self.infill_pct <= 100:
            raise ValueError(f"infill_pct out of (0, 100]: {self.infill_pct}")
        for name in ("layer_height", "print_speed", "extrusion_temp", "uts"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")

    @property
    def features(self) -> tuple[float, float, float, float]:
        return (self.infill_pct, self.layer_height, self.print_speed, self.extrusion_temp)


def _normalize_header(name: str) -> str:
    return re.sub(r"\s+", " ", name.strip().lower())


def _header_map(header: list[str], required=COLUMNS) -> dict[str, int]:
    positions = {}
    for i, raw in enumerate(header):
        canonical = _ALIASES.get(_normalize_header(raw))
        if canonical is not None and canonical not in positions:
            positions[canonical] = i
    for column in required:
        if column not in positions:
            raise MissingColumn(column)
    return positions


def _rows(text: str):
    if text.startswith("\ufeff"):
        text = text[1:]
    reader = csv.reader(io.StringIO(text))
    return [row for row in reader if any(cell.strip() for cell in row)]


def _parse_table(text: str, columns) -> np.ndarray:
    rows = _rows(text)
    if not rows:
        raise EmptyFile("no header row")
    positions = _header_map(rows[0], columns)
    width = len(rows[0])
    values = []
    for index, row in enumerate(rows[1:]):
        if len(row) != width:
            raise MalformedRow(index, f"expected {width} fields, got {len(row)}")
        parsed = []
        for column in columns:
            cell = row[positions[column]].strip()
            try:
                number = float(cell)
            except ValueError:
                raise MalformedRow(index, f"{column} is not numeric: {cell!r}") from None
            if not math.isfinite(number):
                raise MalformedRow(index, f"{column} is not finite: {cell!r}")
            parsed.append(number)
        values.append(parsed)
    return np.asarray(values, dtype=float).reshape(-1, len(columns))


def parse_csv(text: str) -> list[SpecimenRecord]:
    """Parse specimen rows from CSV text with a header row.

    Headers are matched case-insensitively against the canonical names and
    the verbose captions of the bundled table; column order is free.
    """
    table = _parse_table(text, COLUMNS)
    records = []
    for index, row in enumerate(table):
        try:
            records.append(SpecimenRecord(*row))
        except ValueError as exc:
            raise MalformedRow(index, str(exc)) from None
    return records


def parse_features_csv(text: str) -> np.ndarray:
    """Parse the four process parameters only (a UTS column is ignored)."""
    return _parse_table(text, FEATURE_NAMES)


def format_number(value: float) -> str:
    """Shortest round-trip text, without a trailing ``.0`` on integers."""
    text = repr(float(value))
    return text[:-2] if text.endswith(".0") else text


def to_csv(records) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in records:
        writer.writerow([format_number(v) for v in (*r.features, r.uts)])
    return out.getvalue()


def load_table1() -> list[SpecimenRecord]:
    """The bundled 31-specimen experimental table."""
    return parse_csv(table1_text())


def table1_text() -> str:
    return resources.files("fdm_uts").joinpath("data/table1.csv").read_text(encoding="utf-8")


# -- validation ------------------------------------------------------------

POLICIES = ("keep", "drop", "error")


@dataclass(frozen=True)
class ValidationWarning:
    row_index: int
    field: str
    value: float
    reason: str


@dataclass(frozen=True)
class ValidationReport:
    warnings: tuple[ValidationWarning, ...]
    records: tuple[SpecimenRecord, ...]
    policy: str
    dropped: tuple[int, ...] = ()

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps(
                {"row_index": w.row_index, "field": w.field, "value": w.value, "reason": w.reason}
            )
            + "\n"
            for w in self.warnings
        )


def validate(records, policy: str = "drop", uts_ceiling: float = 100.0) -> ValidationReport:
    """Flag implausible UTS readings and apply the outlier policy.

    ``drop`` removes flagged rows (the flags stay in the report as warnings),
    ``keep`` leaves them in and ``error`` raises :class:`OutlierError`.
    """
    records = list(records)
    if not records:
        raise ValueError("validate() needs at least one record")
    if policy not in POLICIES:
        raise ValueError(f"unknown outlier policy {policy!r}")

    flagged = [
        ValidationWarning(i, TARGET_NAME, r.uts, f"UTS exceeds plausibility ceiling {uts_ceiling:g} MPa")
        for i, r in enumerate(records)
        if r.uts > uts_ceiling
    ]
    if flagged and policy == "error":
        raise OutlierError(f"{len(flagged)} outlier row(s): {[w.row_index for w in flagged]}")

    dropped: tuple[int, ...] = ()
    kept = records
    if policy == "drop" and flagged:
        dropped = tuple(w.row_index for w in flagged)
        drop_set = set(dropped)
        kept = [r for i, r in enumerate(records) if i not in drop_set]
        if not kept:
            raise AllRecordsDropped("every record was flagged as an outlier")
        for w in flagged:
            warnings.warn(f"dropping row {w.row_index}: {w.reason}", stacklevel=2)
    return ValidationReport(tuple(flagged), tuple(kept), policy, dropped)


# -- labeling --------------------------------------------------------------


@dataclass(frozen=True)
class LabelingRule:
    base_uts: float = 60.0
    fraction: float = 0.8
    boundary_label: int = 1

    def __post_init__(self):
        if not self.base_uts > 0:
            raise ValueError("base_uts must be positive")
        if not 0 < self.fraction < 1:
            raise ValueError("fraction must lie in (0, 1)")
        if self.boundary_label not in (0, 1):
            raise ValueError("boundary_label must be 0 or 1")

    @property
    def threshold(self) -> float:
        return self.fraction * self.base_uts

    def apply(self, uts: float) -> int:
        threshold = self.threshold
        if uts > threshold:
            return 1
        if uts < threshold:
            return 0
        return self.boundary_label


@dataclass(frozen=True)
class StandardScaler:
    means: np.ndarray
    std_devs: np.ndarray

    def transform(self, features) -> np.ndarray:
        return (np.asarray(features, dtype=float) - self.means) / self.std_devs

    def inverse_transform(self, features) -> np.ndarray:
        return np.asarray(features, dtype=float) * self.std_devs + self.means

    def to_dict(self) -> dict:
        return {"means": [float(v) for v in self.means], "std_devs": [float(v) for v in self.std_devs]}

    @classmethod
    def from_dict(cls, data: dict) -> StandardScaler:
        return cls(np.asarray(data["means"], dtype=float), np.asarray(data["std_devs"], dtype=float))


def fit_scaler(features) -> StandardScaler:
    """Per-column mean and population standard deviation of training rows."""
    x = np.asarray(features, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("fit_scaler needs a 2-D array with at least 2 rows")
    means = x.mean(axis=0)
    std_devs = x.std(axis=0)
    for j in range(x.shape[1]):
        if np.all(x[:, j] == x[0, j]) or std_devs[j] == 0:
            raise ConstantFeature(j)
    return StandardScaler(means, std_devs)


def apply_scaler(scaler: StandardScaler, features) -> np.ndarray:
    return scaler.transform(features)


@dataclass(frozen=True)
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray
    rule: LabelingRule | None = None
    scaler: StandardScaler | None = None
    uts: np.ndarray | None = None
    indices: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        labels = np.asarray(self.labels)
        if features.shape[0] != labels.shape[0]:
            raise ValueError("features and labels differ in length")
        if labels.size and not np.all((labels == 0) | (labels == 1)):
            raise ValueError("labels must be 0 or 1")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels.astype(int))
        if self.indices is None:
            object.__setattr__(self, "indices", np.arange(labels.shape[0]))

    @property
    def standardized(self) -> bool:
        return self.scaler is not None

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def class_counts(self) -> tuple[int, int]:
        n1 = int(self.labels.sum())
        return len(self) - n1, n1

    def subset(self, rows) -> LabeledDataset:
        rows = np.asarray(rows, dtype=int)
        return replace(
            self,
            features=self.features[rows],
            labels=self.labels[rows],
            uts=None if self.uts is None else self.uts[rows],
            indices=self.indices[rows],
        )

    def with_scaler(self, scaler: StandardScaler) -> LabeledDataset:
        if self.scaler is not None:
            raise ValueError("dataset is already standardized")
        return replace(self, features=scaler.transform(self.features), scaler=scaler)

    def to_csv(self) -> str:
        """Feature columns (as stored), UTS if known, then ``label``."""
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        header = list(FEATURE_NAMES) + ([TARGET_NAME] if self.uts is not None else []) + ["label"]
        writer.writerow(header)
        for i in range(len(self)):
            row = [format_number(v) for v in self.features[i]]
            if self.uts is not None:
                row.append(format_number(self.uts[i]))
            row.append(str(int(self.labels[i])))
            writer.writerow(row)
        return out.getvalue()


def label(records, rule: LabelingRule = LabelingRule()) -> LabeledDataset:
    """Binary labels from UTS against ``fraction * base_uts`` (raw features)."""
    records = list(records)
    features = np.array([r.features for r in records], dtype=float).reshape(-1, len(FEATURE_NAMES))
    uts = np.array([r.uts for r in records], dtype=float)
    labels = np.array([rule.apply(u) for u in uts], dtype=int)
    return LabeledDataset(features, labels, rule=rule, uts=uts)


# -- splitting -------------------------------------------------------------


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.25
    seed: int = 42
    stratified: bool = True

    def __post_init__(self):
        if not 0 < self.test_fraction < 1:
            raise ValueError("test_fraction must lie in (0, 1)")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def _round_half_up(x: float) -> int:
    # 9 decimals absorbs binary error in e.g. 5 * 0.3 without moving true non-halves
    return int(math.floor(round(x, 9) + 0.5))


def _test_count(count: int, fraction: float) -> int:
    n = _round_half_up(count * fraction)
    if count >= 2:
        n = min(max(n, 1), count - 1)
    else:
        n = 0
    return n


def split_indices(labels, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Sorted (train, test) row indices; a pure function of labels and spec."""
    labels = np.asarray(labels, dtype=int)
    rng = np.random.default_rng(spec.seed)
    if spec.stratified:
        if len(np.unique(labels)) < 2:
            raise SingleClassStratify("stratified split needs both classes")
        groups = [np.flatnonzero(labels == c) for c in (0, 1)]
    else:
        groups = [np.arange(labels.shape[0])]

    test = []
    for members in groups:
        shuffled = rng.permutation(members)
        test.extend(shuffled[: _test_count(len(members), spec.test_fraction)])
    test_idx = np.sort(np.asarray(test, dtype=int))
    train_idx = np.setdiff1d(np.arange(labels.shape[0]), test_idx)
    if test_idx.size == 0 or train_idx.size == 0:
        raise ValueError("split leaves an empty train or test set")
    return train_idx, test_idx


def stratified_split(dataset: LabeledDataset, spec: SplitSpec = SplitSpec()):
    train_idx, test_idx = split_indices(dataset.labels, spec)
    return dataset.subset(train_idx), dataset.subset(test_idx)


def standardize_split(train: LabeledDataset, test: LabeledDataset):
    """Fit the scaler on ``train`` and apply it to both sides."""
    scaler = fit_scaler(train.features)
    return train.with_scaler(scaler), test.with_scaler(scaler), scaler
