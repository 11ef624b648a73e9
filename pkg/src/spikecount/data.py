"""Dataset ingestion: delimited text tables and the MNIST IDX binary format.

Column roles for the text datasets are declared, never inferred. The four
bundled declarations cover the benchmark files this project trains on:

  iris     150 rows, 4 numeric features, species label in the last column.
  wbc      Wisconsin breast cancer (original): id column dropped, 9 integer
           features, label 2=benign / 4=malignant; rows with a missing
           bare-nuclei value ('?') are dropped, leaving 683 of 699.
  abalone  sex mapped to one of three numeric codes plus 7 measurements
           (8 inputs); the integer ring count is split at the dataset median
           into 2 classes to match the 2-unit output head used for it.
  yeast    whitespace-delimited; sequence-name column dropped, 8 numeric
           features, 10 localization-site labels.
"""

import gzip
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import CorruptionError, DomainError, FormatError, ParseError, SchemaError
from .seeding import STREAM_SHUFFLE, STREAM_SPLIT, derived_rng


@dataclass(frozen=True)
class Dataset:
    """Immutable rows: raw feature matrix (N, D) and integer class labels (N,)."""

    name: str
    features: np.ndarray
    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        if len(self.features) != len(self.labels):
            raise DomainError(f"{len(self.features)} feature rows vs "
                              f"{len(self.labels)} labels")
        if len(self.labels) and (self.labels.min() < 0
                                 or self.labels.max() >= self.n_classes):
            raise DomainError(f"labels outside [0, {self.n_classes})")

    def __len__(self):
        return len(self.labels)

    @property
    def n_features(self):
        return self.features.shape[1]

    def take(self, indices):
        return Dataset(name=self.name, features=self.features[indices],
                       labels=self.labels[indices], n_classes=self.n_classes)


@dataclass(frozen=True)
class CsvSchema:
    """Declared column roles for one delimited text layout."""

    feature_cols: tuple
    label_col: int
    delimiter: str = ","          # None means any-whitespace
    categorical: dict = field(default_factory=dict)   # col -> {token: value}
    label_values: tuple = ()      # fixed label order; empty = sorted unique tokens
    label_bins: int = 0           # >0: numeric label binned by quantile
    missing: str = "?"            # rows containing this token are dropped


SCHEMAS = {
    "iris": CsvSchema(feature_cols=tuple(range(4)), label_col=4,
                      label_values=("Iris-setosa", "Iris-versicolor", "Iris-virginica")),
    "wbc": CsvSchema(feature_cols=tuple(range(1, 10)), label_col=10,
                     label_values=("2", "4")),
    "abalone": CsvSchema(feature_cols=tuple(range(8)), label_col=8,
                         categorical={0: {"M": 0.0, "F": 1.0, "I": 2.0}},
                         label_bins=2),
    "yeast": CsvSchema(feature_cols=tuple(range(1, 9)), label_col=9, delimiter=None),
}


def load_csv(path, schema, name="csv"):
    """Parse a delimited text file under declared column roles."""
    if isinstance(schema, str):
        if schema not in SCHEMAS:
            raise SchemaError(f"unknown schema {schema!r}; have {sorted(SCHEMAS)}")
        name = schema
        schema = SCHEMAS[schema]

    rows, raw_labels = [], []
    needed = max(max(schema.feature_cols), schema.label_col) + 1
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(schema.delimiter) if schema.delimiter else line.split()
            if len(parts) < needed:
                raise ParseError(f"{path}:{lineno}: expected >= {needed} columns, "
                                 f"got {len(parts)}")
            if schema.missing and schema.missing in parts:
                continue
            row = []
            for c in schema.feature_cols:
                tok = parts[c].strip()
                if c in schema.categorical:
                    mapping = schema.categorical[c]
                    if tok not in mapping:
                        raise SchemaError(f"{path}:{lineno}: unknown category {tok!r} "
                                          f"in column {c}")
                    row.append(mapping[tok])
                else:
                    try:
                        row.append(float(tok))
                    except ValueError as exc:
                        raise ParseError(f"{path}:{lineno}: bad number {tok!r} "
                                         f"in column {c}") from exc
            rows.append(row)
            raw_labels.append(parts[schema.label_col].strip())
    if not rows:
        raise ParseError(f"{path}: no data rows")

    features = np.asarray(rows, dtype=np.float64)
    if schema.label_bins:
        values = np.asarray([float(t) for t in raw_labels])
        # bin at quantile boundaries; a value equal to a boundary stays in the lower bin
        qs = np.quantile(values, [i / schema.label_bins
                                  for i in range(1, schema.label_bins)])
        labels = np.searchsorted(qs, values, side="left")
        n_classes = schema.label_bins
    else:
        order = list(schema.label_values) or sorted(set(raw_labels))
        index = {tok: i for i, tok in enumerate(order)}
        unknown = [t for t in raw_labels if t not in index]
        if unknown:
            raise SchemaError(f"{path}: unknown label {unknown[0]!r}")
        labels = np.asarray([index[t] for t in raw_labels])
        n_classes = len(order)
    return Dataset(name=name, features=features,
                   labels=labels.astype(np.int64), n_classes=n_classes)


IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


def _open_maybe_gzip(path):
    with open(path, "rb") as f:
        head = f.read(2)
    if head == b"\x1f\x8b":
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_be32(f, path):
    data = f.read(4)
    if len(data) != 4:
        raise CorruptionError(f"{path}: truncated header")
    return struct.unpack(">I", data)[0]


def load_mnist_idx(images_path, labels_path, name="mnist"):
    """Parse an IDX image/label file pair; pixels scale to [0,1] by /255.

    Image file layout (big endian): u32 magic 0x00000803, u32 count, u32 rows,
    u32 cols, then count*rows*cols u8 pixels row-major. Label file: u32 magic
    0x00000801, u32 count, then count u8 labels. Gzip-compressed files are
    decompressed transparently.
    """
    with _open_maybe_gzip(images_path) as f:
        magic = _read_be32(f, images_path)
        if magic != IDX_IMAGE_MAGIC:
            raise FormatError(f"{images_path}: image magic {magic:#010x} != "
                              f"{IDX_IMAGE_MAGIC:#010x}")
        count = _read_be32(f, images_path)
        rows = _read_be32(f, images_path)
        cols = _read_be32(f, images_path)
        payload = f.read(count * rows * cols)
        if len(payload) != count * rows * cols:
            raise CorruptionError(f"{images_path}: payload holds {len(payload)} bytes, "
                                  f"header promises {count * rows * cols}")
    pixels = np.frombuffer(payload, dtype=np.uint8).astype(np.float64) / 255.0
    features = pixels.reshape(count, rows * cols)

    with _open_maybe_gzip(labels_path) as f:
        magic = _read_be32(f, labels_path)
        if magic != IDX_LABEL_MAGIC:
            raise FormatError(f"{labels_path}: label magic {magic:#010x} != "
                              f"{IDX_LABEL_MAGIC:#010x}")
        lcount = _read_be32(f, labels_path)
        lpayload = f.read(lcount)
        if len(lpayload) != lcount:
            raise CorruptionError(f"{labels_path}: payload holds {len(lpayload)} "
                                  f"labels, header promises {lcount}")
    if lcount != count:
        raise FormatError(f"{images_path} has {count} images but {labels_path} "
                          f"has {lcount} labels")
    labels = np.frombuffer(lpayload, dtype=np.uint8).astype(np.int64)
    return Dataset(name=name, features=features, labels=labels, n_classes=10)


def split(dataset, n_train, seed, stratified=True):
    """Deterministic shuffled train/test partition, stratified by class.

    Per-class training quotas follow the class proportions with largest
    remainders absorbing the rounding, so the training side always has
    exactly n_train rows.
    """
    n = len(dataset)
    if n_train > n:
        raise DomainError(f"n_train {n_train} exceeds dataset size {n}")
    rng = derived_rng(seed, STREAM_SPLIT)
    if not stratified:
        perm = rng.permutation(n)
        return dataset.take(perm[:n_train]), dataset.take(perm[n_train:])

    classes = np.arange(dataset.n_classes)
    exact = np.array([np.sum(dataset.labels == c) for c in classes]) * n_train / n
    quota = np.floor(exact).astype(np.int64)
    remainder = exact - quota
    short = n_train - quota.sum()
    for c in np.argsort(-remainder, kind="stable")[:short]:
        quota[c] += 1

    train_idx, test_idx = [], []
    for c in classes:
        members = np.flatnonzero(dataset.labels == c)
        members = members[rng.permutation(len(members))]
        train_idx.append(members[:quota[c]])
        test_idx.append(members[quota[c]:])
    train_idx = np.concatenate(train_idx)
    test_idx = np.concatenate(test_idx)
    return dataset.take(np.sort(train_idx)), dataset.take(np.sort(test_idx))


def batches(n_rows, batch_size, seed, epoch):
    """Epoch-seeded shuffled index slices; the last batch may run short."""
    if batch_size < 1:
        raise DomainError(f"batch_size must be >= 1, got {batch_size}")
    perm = derived_rng(seed, STREAM_SHUFFLE, epoch).permutation(n_rows)
    return [perm[i:i + batch_size] for i in range(0, n_rows, batch_size)]
