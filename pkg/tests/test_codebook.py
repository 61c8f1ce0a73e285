import struct

import numpy as np
import pytest

from diveq.codebook import (
    CHECKPOINT_MAGIC,
    Codebook,
    DitheredCodebook,
    UsageStats,
    dither,
    load_checkpoint,
    nearest,
    project_onto_curve,
    save_checkpoint,
    usage_stats,
)
from diveq.utils.checks import CheckpointFormatError, ShapeError

pytestmark = pytest.mark.filterwarnings("ignore")

generator = np.random.default_rng(3)


def exhaustive_scan(points, vectors):
    indices, distances = [], []
    for point in points:
        best, best_distance = 0, np.inf
        for position, vector in enumerate(vectors):
            distance = np.sqrt(np.sum((point - vector) ** 2))
            if distance < best_distance:
                best, best_distance = position, distance
        indices.append(best)
        distances.append(best_distance)
    return np.array(indices), np.array(distances)


def test_nearest_examples():
    codebook = Codebook(np.array([[1.0, 0.0], [-1.0, 0.0]]))
    indices, distances = nearest(np.array([[0.9, 0.0]]), codebook)
    assert indices.tolist() == [0]
    assert distances[0] == pytest.approx(0.1)

    indices, distances = nearest(np.array([[-1.0, 0.0]]), codebook)
    assert indices.tolist() == [1]
    assert distances[0] == 0.0

    # Ties go to the lowest index
    indices, _ = nearest(np.array([[0.0, 3.0]]), codebook)
    assert indices.tolist() == [0]


def test_nearest_matches_exhaustive_scan():
    for _ in range(5):
        points = generator.normal(size=(100, 3))
        codebook = Codebook(generator.normal(size=(8, 3)))
        indices, distances = nearest(points, codebook)
        expected_indices, expected_distances = exhaustive_scan(points, codebook.vectors.data)
        np.testing.assert_array_equal(indices, expected_indices)
        np.testing.assert_allclose(distances, expected_distances, rtol=1e-12)


def test_nearest_edge_cases():
    codebook = Codebook(generator.normal(size=(4, 2)))
    indices, distances = nearest(np.empty((0, 2)), codebook)
    assert len(indices) == 0
    assert len(distances) == 0
    with pytest.raises(ShapeError):
        nearest(np.ones((3, 5)), codebook)


def test_project_onto_curve_examples():
    codebook = Codebook(np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 2.0]]))
    points = np.array([[1.0, -1.0], [3.0, 1.0], [-1.0, 0.0], [2.0, 3.0], [1.0, 1.0]])
    segments, lambdas, projected = project_onto_curve(points, codebook)
    assert segments.tolist() == [0, 1, 0, 1, 0]
    np.testing.assert_allclose(lambdas, [0.5, 0.5, 0.0, 1.0, 0.5])
    np.testing.assert_allclose(projected, [[1.0, 0.0], [2.0, 1.0], [0.0, 0.0], [2.0, 2.0], [1.0, 0.0]])

    collapsed = Codebook(np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]))
    segments, lambdas, projected = project_onto_curve(np.array([[0.5, 1.0], [-1.0, 0.0]]), collapsed)
    assert segments.tolist() == [1, 0]
    np.testing.assert_allclose(lambdas, [0.5, 0.0])
    np.testing.assert_allclose(projected, [[0.5, 0.0], [0.0, 0.0]])


def test_curve_is_never_farther_than_the_codewords():
    for _ in range(50):
        codebook = Codebook(generator.normal(size=(6, 3)))
        points = generator.normal(size=(40, 3))
        _, _, projected = project_onto_curve(points, codebook)
        _, distances = nearest(points, codebook)
        assert np.all(np.linalg.norm(points - projected, axis=1) <= distances + 1e-12)


def test_project_onto_curve_errors():
    with pytest.raises(ValueError):
        project_onto_curve(np.ones((3, 2)), Codebook(np.ones((1, 2))))
    with pytest.raises(ShapeError):
        project_onto_curve(np.ones((3, 5)), Codebook(np.ones((4, 2))))
    with pytest.raises(ShapeError):
        project_onto_curve(np.ones(2), Codebook(np.ones((4, 2))))


def test_codebook_invariants():
    with pytest.raises(ShapeError):
        Codebook(np.ones(3))
    with pytest.raises(ValueError):
        Codebook(np.ones((2, 2)), ema_g=np.ones((2, 2)), ema_h=np.array([1.0, -1.0]))
    codebook = Codebook(np.zeros((3, 2)))
    codebook.record_usage(np.array([0, 0, 2]))
    codebook.record_usage(np.array([1]))
    assert codebook.usage_counts.tolist() == [2, 1, 1]
    codebook.reset_usage()
    assert codebook.usage_counts.sum() == 0


def test_dither_examples():
    codebook = Codebook(np.array([[0.0, 0.0], [2.0, 2.0], [4.0, 0.0]]))
    dithered = DitheredCodebook.from_lambdas(codebook, np.array([0.5, 0.0]))
    np.testing.assert_array_equal(dithered.points, [[1.0, 1.0], [2.0, 2.0]])

    first = dither(codebook, np.random.default_rng(11))
    second = dither(codebook, np.random.default_rng(11))
    np.testing.assert_array_equal(first.points, second.points)
    np.testing.assert_array_equal(first.lambdas, second.lambdas)

    with pytest.raises(ValueError):
        dither(Codebook(np.ones((1, 2))), generator)


def test_dithered_points_lie_on_segments():
    codebook = Codebook(generator.normal(size=(16, 4)))
    dithered = dither(codebook, generator)
    vectors = codebook.vectors.data
    assert np.all((dithered.lambdas >= 0) & (dithered.lambdas < 1))
    for segment, point in enumerate(dithered.points):
        start, end = vectors[segment], vectors[segment + 1]
        weight = dithered.lambdas[segment]
        np.testing.assert_allclose(point, (1 - weight) * start + weight * end)
        along = np.dot(point - start, end - start) / np.dot(end - start, end - start)
        assert -1e-12 <= along <= 1 + 1e-12


def test_usage_stats_examples():
    uniform = UsageStats.from_counts(np.full(16, 5))
    assert uniform.perplexity == pytest.approx(16)
    assert uniform.usage_fraction == 1.0

    single = UsageStats.from_counts(np.array([0, 7, 0, 0]))
    assert single.perplexity == 1.0
    assert single.usage_fraction == 0.25

    stats = UsageStats.from_counts(np.array([10, 5, 0]))
    np.testing.assert_allclose(stats.probs, [2 / 3, 1 / 3, 0])
    assert stats.entropy == pytest.approx(np.log(3) - 2 / 3 * np.log(2), abs=1e-12)
    assert stats.entropy == pytest.approx(0.6365, abs=1e-4)
    assert stats.perplexity == pytest.approx(1.8899, abs=1e-4)
    assert stats.probs.sum() == pytest.approx(1.0, abs=1e-9)


def test_usage_stats_without_data():
    codebook = Codebook(np.zeros((4, 2)))
    stats = usage_stats(codebook)
    assert not stats.has_data
    assert stats.entropy == 0.0
    assert stats.perplexity == 1.0
    np.testing.assert_array_equal(stats.probs, np.zeros(4))


def test_checkpoint_round_trip(tmp_path):
    codebook = Codebook(generator.normal(size=(8, 3)), ema=True)
    codebook.record_usage(np.array([0, 3, 3, 7]))
    codebook.ema_h = generator.uniform(0.0, 2.0, size=8)
    path = save_checkpoint(codebook, tmp_path / "codebook.bin")
    loaded = load_checkpoint(path, expected_shape=(8, 3))
    assert loaded.vectors.data.tobytes() == codebook.vectors.data.tobytes()
    np.testing.assert_array_equal(loaded.usage_counts, codebook.usage_counts)
    assert loaded.ema_g.tobytes() == codebook.ema_g.tobytes()
    assert loaded.ema_h.tobytes() == codebook.ema_h.tobytes()

    plain = Codebook(generator.normal(size=(4, 2)))
    loaded = load_checkpoint(save_checkpoint(plain, tmp_path / "plain.bin"))
    assert not loaded.has_ema
    assert loaded.vectors.data.tobytes() == plain.vectors.data.tobytes()


def test_checkpoint_rejects_malformed_files(tmp_path):
    path = save_checkpoint(Codebook(generator.normal(size=(4, 2))), tmp_path / "codebook.bin")
    payload = path.read_bytes()

    truncated = tmp_path / "truncated.bin"
    truncated.write_bytes(payload[:-5])
    with pytest.raises(CheckpointFormatError, match="truncated"):
        load_checkpoint(truncated)

    empty = tmp_path / "empty.bin"
    empty.write_bytes(CHECKPOINT_MAGIC + struct.pack("<QQ", 0, 2) + b"\x00")
    with pytest.raises(CheckpointFormatError, match="K=0"):
        load_checkpoint(empty)

    wrong_magic = tmp_path / "magic.bin"
    wrong_magic.write_bytes(b"NOTACODE" + payload[8:])
    with pytest.raises(CheckpointFormatError, match="magic"):
        load_checkpoint(wrong_magic)

    with pytest.raises(CheckpointFormatError, match="shape mismatch"):
        load_checkpoint(path, expected_shape=(5, 2))

    with pytest.raises(FileNotFoundError):
        load_checkpoint(tmp_path / "missing.bin")
