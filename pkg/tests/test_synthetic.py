import struct

import numpy as np
import pytest

from diveq.io import DatasetKind, DatasetSpec, export_dataset, generate, generators, import_dataset
from diveq.io.files import DATASET_MAGIC
from diveq.io.synthetic.point_clouds import circle_means
from diveq.utils.checks import CheckpointFormatError, ConfigurationError, ShapeError

pytestmark = pytest.mark.filterwarnings("ignore")


def test_registry_covers_every_kind():
    assert set(generators.get_all()) == {kind.value for kind in DatasetKind}


def test_gaussian_mixture_means():
    spec = DatasetSpec(kind="GAUSSIAN_MIXTURE", size=10000, num_components=8, radius=5.0, std=0.3)
    dataset = generate(spec)
    expected = circle_means(8, 5.0, 2)
    for component in range(8):
        empirical = dataset.data[dataset.labels == component].mean(axis=0)
        np.testing.assert_allclose(empirical, expected[component], atol=0.1)
    np.testing.assert_allclose(np.linalg.norm(expected, axis=1), 5.0)


def test_explicit_means():
    spec = DatasetSpec(kind="GAUSSIAN_MIXTURE", size=100, dims=3, means=[[0, 0, 0], [9, 9, 9]], std=0.0)
    dataset = spec.generate()
    assert set(map(tuple, dataset.data)) <= {(0.0, 0.0, 0.0), (9.0, 9.0, 9.0)}
    with pytest.raises(ConfigurationError):
        DatasetSpec(kind="GAUSSIAN_MIXTURE", dims=3, means=[[0, 0]])


def test_generation_is_deterministic():
    for kind in DatasetKind:
        first = DatasetSpec(kind=kind, size=500, seed=11).generate()
        second = DatasetSpec(kind=kind, size=500, seed=11).generate()
        assert first.data.tobytes() == second.data.tobytes()
        np.testing.assert_array_equal(first.train_indices, second.train_indices)
    other = DatasetSpec(kind="RING", size=500, seed=12).generate()
    assert other.data.tobytes() != DatasetSpec(kind="RING", size=500, seed=11).generate().data.tobytes()


def test_uniform_cube_bounds():
    dataset = DatasetSpec(kind="UNIFORM_CUBE", size=2000, dims=5).generate()
    assert dataset.data.shape == (2000, 5)
    assert np.all((dataset.data >= 0.0) & (dataset.data <= 1.0))
    with pytest.raises(ConfigurationError):
        DatasetSpec(kind="UNIFORM_CUBE", low=1.0, high=1.0)


def test_ring_and_images():
    ring = DatasetSpec(kind="RING", size=1000, radius=5.0, ring_noise=0.1).generate()
    assert np.all(np.abs(np.linalg.norm(ring.data, axis=1) - 5.0) < 1.0)
    assert ring.labels is None

    images = DatasetSpec(kind="GRID_IMAGES", size=300, image_side=6).generate()
    assert images.dim == 36
    assert np.all((images.data >= 0.0) & (images.data <= 1.0))
    assert set(np.unique(images.labels)) <= {0, 1, 2}
    with pytest.raises(ConfigurationError):
        DatasetSpec(kind="GRID_IMAGES", image_side=6, dims=30)


def test_split():
    dataset = DatasetSpec(size=1001, seed=5).generate()
    train, test = set(dataset.train_indices), set(dataset.test_indices)
    assert not train & test
    assert train | test == set(range(1001))
    assert abs(len(test) - 0.2 * 1001) <= 1
    assert dataset.train.shape == (len(train), 2)


def test_spec_validation():
    with pytest.raises(ConfigurationError) as error:
        DatasetSpec(size=5, test_fraction=1.5)
    assert {violation.path for violation in error.value.violations} == {"size", "test_fraction"}
    with pytest.raises(AttributeError):
        DatasetSpec(kind="SPIRAL")
    assert DatasetSpec(kind="ring").to_dict()["kind"] == "RING"


def test_dataset_file_round_trip(tmp_path):
    dataset = DatasetSpec(size=50).generate()
    path = export_dataset(dataset.tensor(), tmp_path / "data.bin")
    assert path.read_bytes()[:8] == DATASET_MAGIC
    assert import_dataset(path).tobytes() == dataset.data.tobytes()


def test_dataset_file_errors(tmp_path):
    path = export_dataset(np.ones((4, 2)), tmp_path / "data.bin")
    payload = path.read_bytes()

    truncated = tmp_path / "truncated.bin"
    truncated.write_bytes(payload[:-1])
    with pytest.raises(CheckpointFormatError, match="truncated"):
        import_dataset(truncated)

    trailing = tmp_path / "trailing.bin"
    trailing.write_bytes(payload + b"\x00")
    with pytest.raises(CheckpointFormatError, match="trailing"):
        import_dataset(trailing)

    empty = tmp_path / "empty.bin"
    empty.write_bytes(DATASET_MAGIC + struct.pack("<QQ", 3, 0))
    with pytest.raises(CheckpointFormatError, match="D=0"):
        import_dataset(empty)

    with pytest.raises(ShapeError):
        export_dataset(np.ones(3), tmp_path / "flat.bin")
