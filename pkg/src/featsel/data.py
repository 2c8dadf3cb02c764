"""Tabular dataset core: load, validate, scale, label, split, synthesize.

Every other module reads the immutable ``Dataset`` built here. Construction
validates shape and finiteness; arrays are frozen (read-only) afterwards, so
datasets are safe to share across threads.
"""

import csv
import math
import hashlib
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .rng import derive_rng

CONTINUOUS = "continuous"
BINARY = "binary"


def _frozen(arr, dtype=float):
    out = np.ascontiguousarray(arr, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class FeatureMatrix:
    """N x p matrix of sample rows with unique, order-stable column names."""

    values: np.ndarray
    names: tuple

    def __post_init__(self):
        values = _frozen(self.values)
        names = tuple(str(n) for n in self.names)
        if values.ndim != 2:
            raise DataError("feature matrix must be 2-dimensional")
        n, p = values.shape
        if n < 2:
            raise DataError(f"need at least 2 samples, got {n}")
        if p < 1:
            raise DataError("need at least 1 feature")
        if len(names) != p:
            raise DataError(f"{p} columns but {len(names)} names")
        if len(set(names)) != len(names):
            dupes = sorted({x for x in names if names.count(x) > 1})
            raise DataError(f"duplicate feature names: {dupes}")
        if not np.all(np.isfinite(values)):
            i, j = np.argwhere(~np.isfinite(values))[0]
            raise DataError(f"non-finite value in feature {names[j]!r}, sample {i}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", names)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]

    def column(self, name):
        return self.values[:, self.names.index(name)]


@dataclass(frozen=True)
class TargetVector:
    """Length-N target; ``kind`` is "continuous" or "binary" ({0,1} values)."""

    kind: str
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in (CONTINUOUS, BINARY):
            raise DataError(f"unknown target kind {self.kind!r}")
        values = _frozen(self.values)
        if values.ndim != 1:
            raise DataError("target must be 1-dimensional")
        if not np.all(np.isfinite(values)):
            raise DataError("non-finite value in target")
        if self.kind == BINARY and not np.all((values == 0.0) | (values == 1.0)):
            raise DataError("binary target must contain only 0 and 1")
        object.__setattr__(self, "values", values)

    @property
    def n(self):
        return self.values.shape[0]

    def both_labels_present(self):
        return self.kind == BINARY and 0.0 in self.values and 1.0 in self.values


@dataclass(frozen=True)
class Dataset:
    features: FeatureMatrix
    target: TargetVector
    scaled: bool = False

    def __post_init__(self):
        if self.features.n != self.target.n:
            raise DataError(
                f"{self.features.n} feature rows but {self.target.n} target values"
            )

    @property
    def n(self):
        return self.features.n

    @property
    def p(self):
        return self.features.p

    @property
    def names(self):
        return self.features.names

    @property
    def x(self):
        return self.features.values

    @property
    def y(self):
        return self.target.values

    def select_rows(self, indices):
        """New Dataset restricted to the given sample indices."""
        idx = np.asarray(indices, dtype=int)
        return Dataset(
            FeatureMatrix(self.x[idx], self.names),
            TargetVector(self.target.kind, self.y[idx]),
            scaled=self.scaled,
        )

    def select_columns(self, names):
        """New Dataset keeping only the named features, in the given order."""
        cols = [self.names.index(n) for n in names]
        return Dataset(
            FeatureMatrix(self.x[:, cols], tuple(names)),
            self.target,
            scaled=self.scaled,
        )

    def with_target(self, target):
        return Dataset(self.features, target, scaled=self.scaled)

    def with_feature_names(self, names):
        return Dataset(FeatureMatrix(self.x, tuple(names)), self.target, self.scaled)


@dataclass(frozen=True)
class SplitIndices:
    """Disjoint train/validation index sets covering 0..N-1."""

    train: np.ndarray
    validation: np.ndarray

    def __post_init__(self):
        train = _frozen(self.train, dtype=np.int64)
        validation = _frozen(self.validation, dtype=np.int64)
        if train.size == 0 or validation.size == 0:
            raise DataError("both split sides must be non-empty")
        merged = np.concatenate([train, validation])
        n = merged.size
        if not np.array_equal(np.sort(merged), np.arange(n)):
            raise DataError("split sides must be disjoint and cover 0..N-1")
        object.__setattr__(self, "train", train)
        object.__setattr__(self, "validation", validation)


def load_csv(path, target_column):
    """Parse a UTF-8 CSV with one header row into a Dataset.

    The target column is extracted; all remaining columns become features in
    header order. Cells must be numeric and finite. Errors name the file line
    and column of the first offending cell. The target is typed binary when
    its values all lie in {0, 1}, continuous otherwise.
    """
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except FileNotFoundError:
        raise DataError(f"no such file: {path}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if any(not h for h in header):
            raise DataError(f"{path}: empty header name in row 1")
        if len(set(header)) != len(header):
            dupes = sorted({h for h in header if header.count(h) > 1})
            raise DataError(f"{path}: duplicate header names: {dupes}")
        if target_column not in header:
            raise DataError(f"{path}: target column {target_column!r} not in header")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}: row at line {lineno} has {len(row)} cells, "
                    f"expected {len(header)}"
                )
            parsed = np.empty(len(row))
            for j, cell in enumerate(row):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: non-numeric cell {cell!r} at line {lineno}, "
                        f"column {header[j]!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(
                        f"{path}: non-finite cell {cell!r} at line {lineno}, "
                        f"column {header[j]!r}"
                    )
                parsed[j] = v
            rows.append(parsed)
    if len(rows) < 2:
        raise DataError(f"{path}: need at least 2 data rows, got {len(rows)}")
    table = np.vstack(rows)
    t = header.index(target_column)
    y = table[:, t]
    x = np.delete(table, t, axis=1)
    names = tuple(h for h in header if h != target_column)
    kind = BINARY if np.all((y == 0.0) | (y == 1.0)) else CONTINUOUS
    return Dataset(FeatureMatrix(x, names), TargetVector(kind, y), scaled=False)


def minmax_scale(d):
    """Map every feature column through (x - min) / (max - min).

    Constant columns map to all-zeros. The target is untouched. Scaling an
    already-scaled Dataset is an error (the flag records it).
    """
    if d.scaled:
        raise DataError("dataset is already min-max scaled")
    x = d.x
    lo = x.min(axis=0)
    hi = x.max(axis=0)
    span = hi - lo
    constant = span == 0.0
    safe_span = np.where(constant, 1.0, span)
    scaled = (x - lo) / safe_span
    scaled[:, constant] = 0.0
    out = Dataset(FeatureMatrix(scaled, d.names), d.target, scaled=True)
    check = out.x
    bad = ~constant & (
        (np.abs(check.min(axis=0)) > 1e-12) | (np.abs(check.max(axis=0) - 1) > 1e-12)
    )
    if np.any(bad):
        raise DataError(f"scaling failed for column {d.names[int(np.argmax(bad))]!r}")
    return out


def label_hotspots(stress, percentile=90.0):
    """Binarize a continuous target at a percentile threshold.

    The threshold is the linear-interpolation percentile of the values; label
    1 marks values strictly above it. All-equal inputs produce zero positives
    and a warning rather than an error.
    """
    if stress.kind != CONTINUOUS:
        raise DataError("hotspot labeling needs a continuous target")
    if not 0.0 < percentile < 100.0:
        raise DataError("percentile must be strictly between 0 and 100")
    values = stress.values
    threshold = float(np.percentile(values, percentile))
    labels = (values > threshold).astype(float)
    if not labels.any():
        warnings.warn(
            "hotspot labeling produced zero positives (degenerate stress values)",
            stacklevel=2,
        )
    return TargetVector(BINARY, labels)


def _stratified_counts(n_val, sizes):
    """Largest-remainder allocation of n_val slots across class sizes.

    Keeps every class with >= 2 members present on both sides whenever the
    totals allow it.
    """
    n = sum(sizes)
    quotas = [n_val * s / n for s in sizes]
    counts = [int(math.floor(q)) for q in quotas]
    leftover = n_val - sum(counts)
    order = sorted(range(len(sizes)), key=lambda c: (-(quotas[c] - counts[c]), c))
    for c in order[:leftover]:
        counts[c] += 1
    for c, s in enumerate(sizes):
        if s >= 2 and counts[c] == 0:
            donors = [d for d in range(len(sizes)) if counts[d] >= 2]
            if donors:
                counts[donors[0]] -= 1
                counts[c] += 1
        if s >= 2 and counts[c] == s:
            takers = [d for d in range(len(sizes)) if counts[d] <= sizes[d] - 2]
            if takers:
                counts[c] -= 1
                counts[takers[0]] += 1
    return counts


def split(d, validation_fraction, seed):
    """Deterministic train/validation split, stratified on binary targets."""
    if not 0.0 < validation_fraction < 1.0:
        raise DataError("validation fraction must be strictly between 0 and 1")
    n = d.n
    n_val = int(math.floor(validation_fraction * n + 0.5))
    if n_val == 0 or n_val == n:
        raise DataError(
            f"validation fraction {validation_fraction} leaves an empty side at N={n}"
        )
    rng = derive_rng(seed, "split")
    if d.target.kind == BINARY:
        val_parts = []
        class_indices = [np.flatnonzero(d.y == 0.0), np.flatnonzero(d.y == 1.0)]
        counts = _stratified_counts(n_val, [idx.size for idx in class_indices])
        for idx, take in zip(class_indices, counts):
            perm = rng.permutation(idx)
            val_parts.append(perm[:take])
        validation = np.sort(np.concatenate(val_parts))
    else:
        perm = rng.permutation(n)
        validation = np.sort(perm[:n_val])
    mask = np.ones(n, dtype=bool)
    mask[validation] = False
    return SplitIndices(train=np.flatnonzero(mask), validation=validation)


@dataclass(frozen=True)
class SynthSpec:
    n_samples: int
    n_relevant: int = 5
    n_redundant: int = 10
    n_noise: int = 19
    noise_sd: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 2:
            raise DataError("synthesis needs at least 2 samples")
        if self.n_relevant < 1:
            raise DataError("synthesis needs at least 1 relevant feature")
        if self.n_redundant < 0 or self.n_noise < 0:
            raise DataError("feature counts must be non-negative")
        if self.noise_sd < 0:
            raise DataError("noise_sd must be non-negative")


@dataclass(frozen=True)
class ColumnRole:
    name: str
    role: str  # relevant | redundant | noise
    parent: str = ""


@dataclass(frozen=True)
class SynthResult:
    dataset: Dataset
    roles: tuple
    coefficients: np.ndarray = field(repr=False, default=None)

    def names_with_role(self, role):
        return tuple(r.name for r in self.roles if r.role == role)


def _relevant_coefficients(k):
    # Magnitudes ramp from 5 to 10 with alternating sign: every relevant
    # column keeps |rho| to the target above 0.2 while covariances stay
    # large enough that strong L1 penalties still admit a non-empty model.
    if k == 1:
        mags = np.array([7.5])
    else:
        mags = 5.0 + 5.0 * np.arange(k) / (k - 1)
    signs = np.where(np.arange(k) % 2 == 0, 1.0, -1.0)
    return mags * signs


def synthesize(spec):
    """Generate a Dataset with known-role columns and a continuous target.

    Relevant columns are independent uniforms; the target is a fixed linear
    combination of them plus Gaussian noise (sd = noise_sd). Redundant
    columns are noisy affine copies of randomly chosen relevant columns;
    noise columns are independent of the target. Ground-truth roles ride
    along in the result.
    """
    rng = derive_rng(spec.seed, "synth")
    n, k = spec.n_samples, spec.n_relevant
    relevant = rng.uniform(size=(n, k))
    coefs = _relevant_coefficients(k)
    target = relevant @ coefs
    if spec.noise_sd > 0:
        target = target + rng.normal(0.0, spec.noise_sd, size=n)
    blocks = [relevant]
    names = [f"rel_{j}" for j in range(k)]
    roles = [ColumnRole(f"rel_{j}", "relevant") for j in range(k)]
    if spec.n_redundant:
        red = np.empty((n, spec.n_redundant))
        for j in range(spec.n_redundant):
            parent = int(rng.integers(0, k))
            a = float(rng.uniform(0.5, 1.5)) * (1.0 if rng.uniform() < 0.5 else -1.0)
            b = float(rng.uniform(0.0, 1.0))
            col = a * relevant[:, parent] + b
            if spec.noise_sd > 0:
                col = col + rng.normal(0.0, spec.noise_sd, size=n)
            red[:, j] = col
            roles.append(ColumnRole(f"red_{j}", "redundant", parent=f"rel_{parent}"))
            names.append(f"red_{j}")
        blocks.append(red)
    if spec.n_noise:
        blocks.append(rng.uniform(size=(n, spec.n_noise)))
        for j in range(spec.n_noise):
            names.append(f"noise_{j}")
            roles.append(ColumnRole(f"noise_{j}", "noise"))
    dataset = Dataset(
        FeatureMatrix(np.hstack(blocks), tuple(names)),
        TargetVector(CONTINUOUS, target),
        scaled=False,
    )
    return SynthResult(dataset=dataset, roles=tuple(roles), coefficients=coefs)


# Column names used by the bundled demo CSV (34 features).
DEMO_FEATURE_NAMES = (
    "cos_phi", "Schmid_1", "EquivalentDiameters", "GBEuc", "Schmid_4",
    "Neighborhoods", "sin_theta", "TJEuc", "sin_phi", "AvgMisorientations",
    "NumNeighbors", "Schmid_3", "Min_mis", "AvgC_Axes_1", "Max_mis",
    "NumCells", "Schmid_2", "KernelAvg", "010_IPF_1", "phi",
    "001_IPF_0", "001_IPF_2", "010_IPF_0", "100_IPF_0", "001_IPF_1",
    "100_IPF_1", "QPEuc", "AvgC_Axes_0", "theta", "FeatureVolumes",
    "010_IPF_2", "AvgC_Axes_2", "100_IPF_2", "cos_theta",
)


def write_dataset_csv(d, path, target_column="stress"):
    """Write a Dataset back to CSV (features in order, target appended)."""
    if target_column in d.names:
        raise DataError(f"target column name {target_column!r} collides with a feature")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(d.names) + [target_column])
        for i in range(d.n):
            w.writerow([repr(float(v)) for v in d.x[i]] + [repr(float(d.y[i]))])


def write_roles_csv(roles, path):
    """Ground-truth sidecar: column name, role, parent column (or empty)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature", "role", "parent"])
        for r in roles:
            w.writerow([r.name, r.role, r.parent])


def dataset_fingerprint(d):
    """Stable sha256 over names, values, target, and flags."""
    h = hashlib.sha256()
    h.update(",".join(d.names).encode())
    h.update(d.target.kind.encode())
    h.update(b"scaled" if d.scaled else b"raw")
    h.update(np.ascontiguousarray(d.x).tobytes())
    h.update(np.ascontiguousarray(d.y).tobytes())
    return h.hexdigest()
