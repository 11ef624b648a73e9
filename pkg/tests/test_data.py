import gzip
import struct

import numpy as np
import pytest

from spikecount import data
from spikecount.errors import (CorruptionError, DomainError, FormatError,
                               ParseError, SchemaError)

# known per-class totals of the official 10k test labels
MNIST_TEST_HISTOGRAM = [980, 1135, 1032, 1010, 982, 892, 958, 1028, 974, 1009]


class TestLoadCsv:
    def test_iris(self, uci_paths):
        ds = data.load_csv(uci_paths["iris"], "iris")
        assert len(ds) == 150
        assert ds.n_features == 4
        assert ds.n_classes == 3
        assert np.array_equal(np.bincount(ds.labels), [50, 50, 50])

    def test_wbc_drops_missing_rows(self, uci_paths):
        ds = data.load_csv(uci_paths["wbc"], "wbc")
        assert ds.n_features == 9
        assert ds.n_classes == 2
        assert len(ds) == 683  # 699 rows minus 16 with a missing bare-nuclei value

    def test_abalone_sex_coding_and_median_binning(self, uci_paths):
        ds = data.load_csv(uci_paths["abalone"], "abalone")
        assert len(ds) == 4177
        assert ds.n_features == 8
        assert ds.n_classes == 2
        assert set(np.unique(ds.features[:, 0])) == {0.0, 1.0, 2.0}
        counts = np.bincount(ds.labels)
        assert abs(counts[0] - counts[1]) < len(ds) * 0.15  # median split is near-even

    def test_yeast(self, uci_paths):
        ds = data.load_csv(uci_paths["yeast"], "yeast")
        assert len(ds) == 1484
        assert ds.n_features == 8
        assert ds.n_classes == 10

    def test_empty_file(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text("")
        with pytest.raises(ParseError):
            data.load_csv(p, "iris")

    def test_malformed_row_names_line(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("1.0,2.0,3.0,4.0,Iris-setosa\n1.0,oops,3.0,4.0,Iris-setosa\n")
        with pytest.raises(ParseError, match="2"):
            data.load_csv(p, "iris")

    def test_unknown_label(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("1.0,2.0,3.0,4.0,Iris-gigantica\n")
        with pytest.raises(SchemaError):
            data.load_csv(p, "iris")

    def test_unknown_category(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("X,0.4,0.3,0.1,0.5,0.2,0.1,0.1,9\n")
        with pytest.raises(SchemaError, match="'X'"):
            data.load_csv(p, "abalone")

    def test_unknown_schema_name(self, tmp_path):
        with pytest.raises(SchemaError):
            data.load_csv(tmp_path / "x.csv", "nope")

    def test_deterministic(self, uci_paths):
        a = data.load_csv(uci_paths["iris"], "iris")
        b = data.load_csv(uci_paths["iris"], "iris")
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.labels, b.labels)


def write_idx_pair(tmp_path, pixels, labels, gz=False):
    """Hand-pack a 1-image IDX pair per the published layout."""
    n, rows, cols = pixels.shape
    img = struct.pack(">IIII", 0x00000803, n, rows, cols) + pixels.tobytes()
    lab = struct.pack(">II", 0x00000801, n) + bytes(labels)
    opener = gzip.open if gz else open
    suffix = ".gz" if gz else ""
    ip, lp = tmp_path / f"imgs{suffix}", tmp_path / f"labs{suffix}"
    with opener(ip, "wb") as f:
        f.write(img)
    with opener(lp, "wb") as f:
        f.write(lab)
    return ip, lp


class TestLoadMnistIdx:
    def test_synthetic_round_trip(self, tmp_path):
        pixels = np.arange(9, dtype=np.uint8).reshape(1, 3, 3) * 20
        ip, lp = write_idx_pair(tmp_path, pixels, [7])
        ds = data.load_mnist_idx(ip, lp)
        assert len(ds) == 1
        assert ds.labels[0] == 7
        assert np.array_equal(ds.features[0], pixels.reshape(-1) / 255.0)

    def test_synthetic_gzip_round_trip(self, tmp_path):
        pixels = np.full((1, 2, 2), 255, dtype=np.uint8)
        ip, lp = write_idx_pair(tmp_path, pixels, [3], gz=True)
        ds = data.load_mnist_idx(ip, lp)
        assert ds.features[0].max() == 1.0

    def test_image_magic_checked(self, tmp_path):
        ip, lp = write_idx_pair(tmp_path, np.zeros((1, 2, 2), dtype=np.uint8), [0])
        blob = bytearray(ip.read_bytes())
        blob[3] = 0x99
        ip.write_bytes(bytes(blob))
        with pytest.raises(FormatError, match="magic"):
            data.load_mnist_idx(ip, lp)

    def test_label_magic_checked(self, tmp_path):
        ip, lp = write_idx_pair(tmp_path, np.zeros((1, 2, 2), dtype=np.uint8), [0])
        blob = bytearray(lp.read_bytes())
        blob[3] = 0x07
        lp.write_bytes(bytes(blob))
        with pytest.raises(FormatError, match="magic"):
            data.load_mnist_idx(ip, lp)

    def test_truncated_payload(self, tmp_path):
        ip, lp = write_idx_pair(tmp_path, np.zeros((1, 4, 4), dtype=np.uint8), [0])
        ip.write_bytes(ip.read_bytes()[:-3])
        with pytest.raises(CorruptionError, match="payload"):
            data.load_mnist_idx(ip, lp)

    def test_header_only_file(self, tmp_path):
        ip, lp = write_idx_pair(tmp_path, np.zeros((1, 4, 4), dtype=np.uint8), [0])
        ip.write_bytes(ip.read_bytes()[:10])
        with pytest.raises(CorruptionError):
            data.load_mnist_idx(ip, lp)

    def test_count_mismatch_between_files(self, tmp_path):
        other = tmp_path / "other"
        other.mkdir()
        ip, _ = write_idx_pair(tmp_path, np.zeros((1, 2, 2), dtype=np.uint8), [0])
        _, lp = write_idx_pair(other, np.zeros((2, 2, 2), dtype=np.uint8), [0, 1])
        with pytest.raises(FormatError, match="labels"):
            data.load_mnist_idx(ip, lp)

    def test_official_train_counts(self, mnist_paths):
        ds = data.load_mnist_idx(mnist_paths["train_images"],
                                 mnist_paths["train_labels"])
        assert len(ds) == 60_000
        assert ds.n_features == 784
        assert ds.features.min() >= 0.0 and ds.features.max() <= 1.0

    def test_official_test_counts_and_histogram(self, mnist_paths):
        ds = data.load_mnist_idx(mnist_paths["test_images"],
                                 mnist_paths["test_labels"])
        assert len(ds) == 10_000
        # one-pass counting oracle straight over the raw label bytes
        with gzip.open(mnist_paths["test_labels"], "rb") as f:
            raw = f.read()
        oracle = [0] * 10
        for byte in raw[8:]:
            oracle[byte] += 1
        assert np.array_equal(np.bincount(ds.labels, minlength=10), oracle)
        assert oracle == MNIST_TEST_HISTOGRAM


class TestSplit:
    def test_iris_90_60(self, uci_paths):
        ds = data.load_csv(uci_paths["iris"], "iris")
        train, test = data.split(ds, 90, seed=0)
        assert len(train) == 90 and len(test) == 60
        assert np.array_equal(np.bincount(train.labels), [30, 30, 30])

    def test_wbc_455_228(self, uci_paths):
        ds = data.load_csv(uci_paths["wbc"], "wbc")
        train, test = data.split(ds, 455, seed=0)
        assert len(train) == 455 and len(test) == 228

    def test_same_seed_identical(self, uci_paths):
        ds = data.load_csv(uci_paths["iris"], "iris")
        a_train, a_test = data.split(ds, 90, seed=5)
        b_train, b_test = data.split(ds, 90, seed=5)
        assert np.array_equal(a_train.features, b_train.features)
        assert np.array_equal(a_test.labels, b_test.labels)

    def test_partition_property(self):
        rng = np.random.default_rng(0)
        ds = data.Dataset(name="toy", features=rng.normal(size=(57, 3)),
                          labels=rng.integers(0, 4, size=57), n_classes=4)
        for n_train in (1, 20, 56):
            train, test = data.split(ds, n_train, seed=3)
            assert len(train) == n_train and len(test) == 57 - n_train
            joined = np.concatenate([train.features, test.features])
            assert np.array_equal(np.sort(joined.sum(axis=1)),
                                  np.sort(ds.features.sum(axis=1)))

    def test_n_train_too_large(self):
        ds = data.Dataset(name="toy", features=np.zeros((5, 2)),
                          labels=np.zeros(5, dtype=np.int64), n_classes=1)
        with pytest.raises(DomainError):
            data.split(ds, 6, seed=0)


class TestBatches:
    def test_sizes(self):
        sizes = [len(b) for b in data.batches(10, 4, seed=0, epoch=1)]
        assert sizes == [4, 4, 2]

    def test_single_batch_when_large(self):
        assert len(data.batches(10, 100, seed=0, epoch=1)) == 1

    def test_union_is_permutation(self):
        got = np.sort(np.concatenate(data.batches(37, 5, seed=2, epoch=7)))
        assert np.array_equal(got, np.arange(37))

    def test_epoch_changes_order(self):
        a = np.concatenate(data.batches(100, 10, seed=1, epoch=1))
        b = np.concatenate(data.batches(100, 10, seed=1, epoch=2))
        assert not np.array_equal(a, b)

    def test_bad_batch_size(self):
        with pytest.raises(DomainError):
            data.batches(10, 0, seed=0, epoch=0)
