import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

REPO = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DATA = os.path.join(REPO, "data")

UCI_FILES = {
    "iris": os.path.join(DATA, "uci", "iris.data"),
    "wbc": os.path.join(DATA, "uci", "breast-cancer-wisconsin.data"),
    "abalone": os.path.join(DATA, "uci", "abalone.data"),
    "yeast": os.path.join(DATA, "uci", "yeast.data"),
}

MNIST_FILES = {
    "train_images": os.path.join(DATA, "mnist", "train-images-idx3-ubyte.gz"),
    "train_labels": os.path.join(DATA, "mnist", "train-labels-idx1-ubyte.gz"),
    "test_images": os.path.join(DATA, "mnist", "t10k-images-idx3-ubyte.gz"),
    "test_labels": os.path.join(DATA, "mnist", "t10k-labels-idx1-ubyte.gz"),
}


def require(paths):
    missing = [p for p in paths.values() if not os.path.exists(p)]
    if missing:
        pytest.skip(f"dataset files missing (run scripts/fetch_data.py): {missing}")


@pytest.fixture
def uci_paths():
    require(UCI_FILES)
    return UCI_FILES


@pytest.fixture
def mnist_paths():
    require(MNIST_FILES)
    return MNIST_FILES
