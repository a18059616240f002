"""Dataset ingestion, synthetic blob fixtures, and open-set splits.

Loaders return a LabeledDataset whose labels are always remapped to dense
ids in [0, C): the simplex center of class j is row j, so label ids must
index the center matrix directly.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, field

import numpy as np

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801

# Blob anchors sit on a lattice with this spacing, in units of the spread,
# which keeps the Bayes error of the fixture negligible.
ANCHOR_SEPARATION = 8.0


@dataclass
class LabeledDataset:
    """Feature rows with dense integer labels in [0, C)."""

    samples: np.ndarray
    labels: np.ndarray
    class_names: list[str] | None = None
    label_mapping: dict[int, int] | None = None  # original id -> dense id

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.samples.ndim != 2 or self.samples.shape[0] < 1:
            raise ValueError(f"samples must be a nonempty 2-D matrix, got {self.samples.shape}")
        if self.labels.shape != (self.samples.shape[0],):
            raise ValueError("labels length does not match sample count")

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @classmethod
    def from_raw(cls, samples, raw_labels, class_names=None) -> "LabeledDataset":
        """Build a dataset, remapping arbitrary integer labels to dense ids."""
        raw = np.asarray(raw_labels, dtype=np.int64)
        uniq = np.unique(raw)
        mapping = {int(orig): dense for dense, orig in enumerate(uniq)}
        dense_labels = np.searchsorted(uniq, raw)
        return cls(
            samples=samples,
            labels=dense_labels,
            class_names=class_names,
            label_mapping=mapping,
        )


def blob_anchors(num_classes: int, dim: int, spread: float) -> np.ndarray:
    """Deterministic well-separated anchors: base-k digit lattice points.

    Class c maps to the digits of c in base k (k minimal with k**dim >= C),
    scaled by ANCHOR_SEPARATION * spread, so distinct anchors differ by at
    least that much.  Anchors depend only on (num_classes, dim, spread),
    never on a sampling seed.
    """
    c, d = int(num_classes), int(dim)
    if c < 1:
        raise ValueError("need at least one class")
    if d < 1:
        raise ValueError(f"cannot place separated anchors in dim {dim}")
    if not spread > 0:
        raise ValueError(f"spread must be positive, got {spread}")
    k = 1
    while k**d < c:
        k += 1
    anchors = np.zeros((c, d))
    for cls in range(c):
        rem = cls
        for axis in range(d):
            if rem == 0:
                break
            anchors[cls, axis] = rem % k
            rem //= k
    return ANCHOR_SEPARATION * spread * anchors


def gen_blobs(
    num_classes: int,
    dim: int,
    samples_per_class,
    spread: float,
    seed: int,
    anchors: np.ndarray | None = None,
) -> LabeledDataset:
    """Isotropic Gaussian blobs around deterministic separated anchors.

    samples_per_class may be a single int or one count per class (the
    imbalanced fixtures pass e.g. [500, 5000, 5000]).  The anchors are
    independent of the seed; only the noise is seeded.
    """
    if anchors is None:
        anchors = blob_anchors(num_classes, dim, spread)
    else:
        anchors = np.asarray(anchors, dtype=np.float64)
        if anchors.shape != (num_classes, dim):
            raise ValueError(f"anchors shape {anchors.shape} != ({num_classes}, {dim})")
    if np.isscalar(samples_per_class):
        counts = [int(samples_per_class)] * num_classes
    else:
        counts = [int(v) for v in samples_per_class]
        if len(counts) != num_classes:
            raise ValueError("need one sample count per class")
    if any(v < 1 for v in counts):
        raise ValueError("every class needs at least one sample")

    rng = np.random.default_rng(seed)
    blocks, labels = [], []
    for cls, count in enumerate(counts):
        blocks.append(anchors[cls] + spread * rng.standard_normal((count, dim)))
        labels.append(np.full(count, cls, dtype=np.int64))
    return LabeledDataset(samples=np.concatenate(blocks), labels=np.concatenate(labels))


def gen_background_blobs(
    num_blobs: int, dim: int, samples_per_blob: int, spread: float, seed: int
) -> np.ndarray:
    """Unlabeled blobs on the half-spacing-shifted lattice.

    Shifting every coordinate by half the anchor spacing keeps each
    background anchor at least ANCHOR_SEPARATION/2 * spread away from every
    anchor any gen_blobs call can produce, so the rows are guaranteed
    disjoint from all known classes.
    """
    anchors = blob_anchors(num_blobs, dim, spread) + 0.5 * ANCHOR_SEPARATION * spread
    rng = np.random.default_rng(seed)
    blocks = [
        anchors[b] + spread * rng.standard_normal((int(samples_per_blob), dim))
        for b in range(num_blobs)
    ]
    return np.concatenate(blocks)


def gen_blobs_with_probes(
    num_known: int,
    num_probe: int,
    dim: int,
    samples_per_class: int,
    spread: float,
    seed: int,
    probe_offset: float = 3.0,
) -> tuple[LabeledDataset, list[int]]:
    """Known blobs plus probe blobs planted near designated known blobs.

    Probe class p (dataset label num_known + p) is anchored probe_offset *
    spread away from known class p % num_known, in a direction fixed
    independently of the sampling seed.  Returns (dataset, neighbor_of)
    where neighbor_of[p] is the designated known class.
    """
    known_anchors = blob_anchors(num_known, dim, spread)
    neighbor_of = [p % num_known for p in range(num_probe)]
    dir_rng = np.random.default_rng(987654321)  # directions fixed across seeds
    probe_anchors = np.empty((num_probe, dim))
    for p, nb in enumerate(neighbor_of):
        direction = dir_rng.standard_normal(dim)
        direction /= np.linalg.norm(direction)
        probe_anchors[p] = known_anchors[nb] + probe_offset * spread * direction
    anchors = np.concatenate([known_anchors, probe_anchors])
    dataset = gen_blobs(
        num_known + num_probe, dim, samples_per_class, spread, seed, anchors=anchors
    )
    return dataset, neighbor_of


def _read_exact(fh, count: int, path: str, what: str) -> bytes:
    offset = fh.tell()
    data = fh.read(count)
    if len(data) != count:
        raise ValueError(
            f"{path}: truncated while reading {what} at byte offset {offset} "
            f"(wanted {count} bytes, got {len(data)})"
        )
    return data


def load_idx(images_path: str, labels_path: str) -> LabeledDataset:
    """Load an IDX image/label file pair (big-endian, standard magics).

    Pixels are scaled to [0, 1] and flattened row-major, one image per row.
    """
    with open(images_path, "rb") as fh:
        (magic,) = struct.unpack(">I", _read_exact(fh, 4, images_path, "image magic"))
        if magic != IDX_IMAGE_MAGIC:
            raise ValueError(
                f"{images_path}: bad image magic 0x{magic:08x} at byte offset 0, "
                f"expected 0x{IDX_IMAGE_MAGIC:08x}"
            )
        count, rows, cols = struct.unpack(
            ">III", _read_exact(fh, 12, images_path, "image dimensions")
        )
        raw = _read_exact(fh, count * rows * cols, images_path, "pixel data")
        extra = fh.read(1)
        if extra:
            raise ValueError(f"{images_path}: trailing bytes at offset {fh.tell() - 1}")
    images = np.frombuffer(raw, dtype=np.uint8).reshape(count, rows * cols)

    with open(labels_path, "rb") as fh:
        (magic,) = struct.unpack(">I", _read_exact(fh, 4, labels_path, "label magic"))
        if magic != IDX_LABEL_MAGIC:
            raise ValueError(
                f"{labels_path}: bad label magic 0x{magic:08x} at byte offset 0, "
                f"expected 0x{IDX_LABEL_MAGIC:08x}"
            )
        (label_count,) = struct.unpack(">I", _read_exact(fh, 4, labels_path, "label count"))
        raw_labels = _read_exact(fh, label_count, labels_path, "label data")
        extra = fh.read(1)
        if extra:
            raise ValueError(f"{labels_path}: trailing bytes at offset {fh.tell() - 1}")
    labels = np.frombuffer(raw_labels, dtype=np.uint8)

    if label_count != count:
        raise ValueError(
            f"image count {count} does not match label count {label_count}"
        )
    return LabeledDataset.from_raw(images.astype(np.float64) / 255.0, labels)


def write_idx(images: np.ndarray, labels: np.ndarray, images_path: str, labels_path: str) -> None:
    """Write uint8 images (n, rows, cols) and labels (n,) in IDX format."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    if images.ndim != 3 or labels.shape != (images.shape[0],):
        raise ValueError("images must be (n, rows, cols) with one label per image")
    n, rows, cols = images.shape
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGE_MAGIC, n, rows, cols))
        fh.write(images.tobytes())
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">II", IDX_LABEL_MAGIC, n))
        fh.write(labels.tobytes())


def load_csv(path: str, label_column: int | str = -1) -> LabeledDataset:
    """Load a rectangular numeric CSV with one integer label column.

    An optional header row (any non-numeric cell) names the columns;
    label_column may then be a name.  Labels are remapped to dense ids with
    the mapping recorded on the dataset.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if not rows:
        raise ValueError(f"{path}: empty file")

    def _is_number(cell: str) -> bool:
        try:
            float(cell)
            return True
        except ValueError:
            return False

    header: list[str] | None = None
    if not all(_is_number(cell) for cell in rows[0]):
        header = [cell.strip() for cell in rows[0]]
        rows = rows[1:]
        if not rows:
            raise ValueError(f"{path}: header but no data rows")

    width = len(rows[0])
    if isinstance(label_column, str):
        if header is None or label_column not in header:
            raise ValueError(f"{path}: no column named {label_column!r}")
        label_idx = header.index(label_column)
    else:
        label_idx = label_column % width

    data = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        line_no = i + 1 + (1 if header is not None else 0)
        if len(row) != width:
            raise ValueError(f"{path}: line {line_no}: expected {width} cells, got {len(row)}")
        for j, cell in enumerate(row):
            try:
                data[i, j] = float(cell)
            except ValueError:
                raise ValueError(f"{path}: line {line_no}: non-numeric cell {cell!r}") from None

    raw_labels = data[:, label_idx]
    if np.any(raw_labels != np.round(raw_labels)):
        bad = int(np.argmax(raw_labels != np.round(raw_labels)))
        raise ValueError(f"{path}: line {bad + 1}: non-integer label {raw_labels[bad]}")
    features = np.delete(data, label_idx, axis=1)
    names = None
    if header is not None:
        names = [h for j, h in enumerate(header) if j != label_idx]
    return LabeledDataset.from_raw(features, raw_labels.astype(np.int64), class_names=names)


def load_feature_csv(path: str) -> np.ndarray:
    """Load an all-numeric CSV (optional header) as unlabeled feature rows."""
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise ValueError(f"{path}: empty file")
    start = 0
    try:
        [float(cell) for cell in rows[0]]
    except ValueError:
        start = 1
    if start == len(rows):
        raise ValueError(f"{path}: header but no data rows")
    width = len(rows[start])
    data = np.empty((len(rows) - start, width))
    for i, row in enumerate(rows[start:]):
        line_no = i + start + 1
        if len(row) != width:
            raise ValueError(f"{path}: line {line_no}: expected {width} cells, got {len(row)}")
        for j, cell in enumerate(row):
            try:
                data[i, j] = float(cell)
            except ValueError:
                raise ValueError(f"{path}: line {line_no}: non-numeric cell {cell!r}") from None
    return data


@dataclass
class OpenSetSplit:
    """A known/unknown class partition plus per-sample train/test indices.

    The training indices cover only known-class train samples; the test
    indices mix known-class test samples with the test partition of every
    unknown class.
    """

    known_class_ids: list[int]
    unknown_class_ids: list[int]
    trial_seed: int
    train_indices: np.ndarray
    test_indices: np.ndarray

    def to_json_dict(self) -> dict:
        return {
            "known_class_ids": [int(v) for v in self.known_class_ids],
            "unknown_class_ids": [int(v) for v in self.unknown_class_ids],
            "trial_seed": int(self.trial_seed),
            "train_indices": [int(v) for v in self.train_indices],
            "test_indices": [int(v) for v in self.test_indices],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "OpenSetSplit":
        return cls(
            known_class_ids=list(doc["known_class_ids"]),
            unknown_class_ids=list(doc["unknown_class_ids"]),
            trial_seed=int(doc["trial_seed"]),
            train_indices=np.asarray(doc["train_indices"], dtype=np.int64),
            test_indices=np.asarray(doc["test_indices"], dtype=np.int64),
        )


def make_open_split(
    dataset: LabeledDataset,
    num_known: int,
    trial_seed: int,
    test_fraction: float = 0.25,
) -> OpenSetSplit:
    """Randomly partition classes into known/unknown and samples into train/test.

    Fully determined by (dataset, num_known, trial_seed).  Unknown-class
    train-partition samples are dropped entirely: they appear in neither the
    training set nor the test pool.
    """
    total = dataset.num_classes
    if not 0 < num_known < total:
        raise ValueError(f"num_known must be in (0, {total}), got {num_known}")
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")

    rng = np.random.default_rng(trial_seed)
    known = sorted(int(v) for v in rng.choice(total, size=num_known, replace=False))
    unknown = sorted(set(range(total)) - set(known))

    train_parts, test_parts = [], []
    for cls in range(total):
        idx = np.flatnonzero(dataset.labels == cls)
        perm = rng.permutation(len(idx))
        n_test = int(round(test_fraction * len(idx)))
        n_test = min(max(n_test, 1), len(idx) - 1) if len(idx) > 1 else len(idx)
        test_parts.append(idx[perm[:n_test]])
        if cls in known:
            train_parts.append(idx[perm[n_test:]])

    return OpenSetSplit(
        known_class_ids=known,
        unknown_class_ids=unknown,
        trial_seed=int(trial_seed),
        train_indices=np.sort(np.concatenate(train_parts)),
        test_indices=np.sort(np.concatenate(test_parts)),
    )


@dataclass
class TrialData:
    """Materialized open-set trial: train set plus a mixed test pool.

    Train labels are remapped to [0, num_known) in known_class_ids order;
    test_labels use the same ids with -1 marking unknown-class samples.
    """

    train: LabeledDataset
    test_samples: np.ndarray
    test_labels: np.ndarray
    known_class_ids: list[int] = field(default_factory=list)


def materialize_split(dataset: LabeledDataset, split: OpenSetSplit) -> TrialData:
    to_dense = {orig: j for j, orig in enumerate(split.known_class_ids)}
    train_labels = np.array(
        [to_dense[int(v)] for v in dataset.labels[split.train_indices]], dtype=np.int64
    )
    test_labels = np.array(
        [to_dense.get(int(v), -1) for v in dataset.labels[split.test_indices]], dtype=np.int64
    )
    return TrialData(
        train=LabeledDataset(dataset.samples[split.train_indices], train_labels),
        test_samples=dataset.samples[split.test_indices],
        test_labels=test_labels,
        known_class_ids=list(split.known_class_ids),
    )


def save_split(split: OpenSetSplit, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(split.to_json_dict(), fh)
        fh.write("\n")


def load_split(path: str) -> OpenSetSplit:
    with open(path) as fh:
        return OpenSetSplit.from_json_dict(json.load(fh))


def background_stream(source, batch_size: int, seed: int):
    """Deterministic shuffled cycling iterator of unlabeled feature batches.

    source may be a feature matrix, a LabeledDataset (labels ignored), or a
    callable (count, rng) -> rows for generator-backed streams.  Array
    sources yield batches of batch_size until the cycle is exhausted (last
    batch may be short), then reshuffle and recycle; the whole sequence is
    determined by the seed.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be positive")
    rng = np.random.default_rng(seed)

    if callable(source):
        def _generated():
            while True:
                rows = np.asarray(source(batch_size, rng), dtype=np.float64)
                if rows.shape[0] != batch_size:
                    raise ValueError(
                        f"generator produced {rows.shape[0]} rows, wanted {batch_size}"
                    )
                yield rows
        return _generated()

    if isinstance(source, LabeledDataset):
        rows = source.samples
    else:
        rows = np.asarray(source, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise ValueError("background source must be a nonempty 2-D matrix")

    def _cycled():
        while True:
            order = rng.permutation(rows.shape[0])
            for start in range(0, len(order), batch_size):
                yield rows[order[start : start + batch_size]]
    return _cycled()


def train_test_blobs(
    num_classes: int,
    dim: int,
    samples_per_class,
    test_samples_per_class,
    spread: float,
    seed: int,
) -> tuple[LabeledDataset, LabeledDataset]:
    """Independent train/test draws from the same anchored blob distribution."""
    train = gen_blobs(num_classes, dim, samples_per_class, spread, seed)
    test = gen_blobs(num_classes, dim, test_samples_per_class, spread, seed ^ 0x5EED)
    return train, test
