"""End-to-end checks of the estimators and the training harness

Every test here trains codebooks for thousands of iterations; run them with
``pytest -m slow``.
"""

import numpy as np
import pytest

from diveq.cli.experiments import iterations_to_perplexity
from diveq.codebook import Codebook, dither
from diveq.harness import CodebookTrainer, TrainingSchedule, lloyd
from diveq.io import DatasetSpec
from diveq.quantizers import (
    Method,
    QuantizerConfig,
    quantize_diveq,
    quantize_diveq_detach,
    quantize_hard,
    quantize_rt,
    quantize_sf_diveq,
    quantize_ste,
)
from diveq.replacement import ReplacementKind, ReplacementPolicy

from tests.test_quantizers import DIFFERENTIABLE, _gradient_errors

pytestmark = [pytest.mark.slow, pytest.mark.filterwarnings("ignore")]

generator = np.random.default_rng(41)
mixture = DatasetSpec(kind="GAUSSIAN_MIXTURE", size=10000, seed=0).generate()


def schedule(seed=0, **params):
    defaults = dict(
        epochs=20,
        iterations_per_epoch=100,
        batch_size=128,
        learning_rate=0.01,
        lr_milestones=[10, 15],
        codebook_init="kmeans++",
        sf_warmup=1,
        seed=seed,
    )
    defaults.update(params)
    return TrainingSchedule(**defaults)


def final_distortion(method, num_codewords, seed=0, sigma2=1e-3, num_stages=1, **params):
    trainer = CodebookTrainer(
        QuantizerConfig(method=method, sigma2=sigma2, rng_seed=seed),
        num_codewords=num_codewords,
        schedule=schedule(seed, **params),
        num_stages=num_stages,
    ).fit(mixture.data, test_data=mixture.data)
    return trainer.evaluation["distortion"]


@pytest.mark.parametrize("method", DIFFERENTIABLE, ids=lambda method: method.value)
def test_gradient_fidelity(method):
    for dim in (2, 8):
        for num_codewords in (4, 16):
            for case in range(25):
                rng = np.random.default_rng([41, dim, num_codewords, case])
                points = rng.uniform(-1.0, 1.0, size=(3, dim))
                vectors = rng.uniform(-1.0, 1.0, size=(num_codewords, dim))
                latent_error, codebook_error = _gradient_errors(method, points, vectors, rng)
                assert max(latent_error, codebook_error) < 1e-4


def test_hard_assignment_equivalence():
    for _ in range(1000):
        dim = int(generator.choice([2, 8]))
        num_codewords = int(generator.choice([4, 16]))
        points = generator.normal(size=(10, dim))
        codebook = Codebook(generator.normal(size=(num_codewords, dim)))
        hard = quantize_hard(points, codebook).z_q.data
        for estimator in (quantize_ste, quantize_rt, quantize_diveq_detach):
            np.testing.assert_array_equal(estimator(points, codebook).z_q.data, hard)
        result = quantize_diveq(points, codebook, 1e-12, generator)
        np.testing.assert_allclose(result.z_q.data, hard, atol=1e-5)
        dithered = dither(codebook, generator)
        result = quantize_sf_diveq(points, codebook, 1e-12, generator, dithered=dithered)
        np.testing.assert_allclose(result.z_q.data, dithered.points[result.indices], atol=1e-5)


def test_diveq_matches_lloyd():
    _, oracle = lloyd(mixture.data, 8, np.random.default_rng(0), n_restarts=10)
    assert final_distortion(Method.DIVEQ, 8) <= 1.15 * oracle


def test_sf_diveq_matches_lloyd():
    _, oracle = lloyd(mixture.data, 8, np.random.default_rng(0), n_restarts=10)
    assert final_distortion(Method.SF_DIVEQ, 8) <= 1.15 * oracle


@pytest.mark.parametrize("method", [Method.DIVEQ, Method.SF_DIVEQ], ids=lambda method: method.value)
def test_rate_distortion_decreases(method):
    means = [
        np.mean([final_distortion(method, num_codewords, seed, epochs=5, lr_milestones=[]) for seed in range(3)])
        for num_codewords in (4, 16, 64)
    ]
    assert means[0] > means[1] > means[2]


def test_sf_diveq_uses_every_codeword():
    trainer = CodebookTrainer(
        QuantizerConfig(method=Method.SF_DIVEQ),
        num_codewords=32,
        schedule=schedule(sf_warmup=2, codebook_init="data"),
    ).fit(mixture)
    assert trainer.evaluation["usage_fraction"] == 1.0
    assert trainer.evaluation["perplexity"] >= 0.9 * 32


def test_importance_replacement_wins_the_race():
    wins = 0
    for seed in range(3):
        iterations = {}
        for kind in ReplacementKind:
            trainer = CodebookTrainer(
                QuantizerConfig(method=Method.DIVEQ, rng_seed=seed),
                num_codewords=64,
                schedule=schedule(seed, codebook_init="point"),
                policy=ReplacementPolicy(kind=kind, phase1_end=1000, stop_margin=200),
            ).fit(mixture)
            iterations[kind] = iterations_to_perplexity(trainer.metrics, 0.9 * 64)
        importance = iterations[ReplacementKind.IMPORTANCE]
        uniform = iterations[ReplacementKind.NSVQ_UNIFORM]
        wins += bool(np.isnan(uniform) or importance <= uniform)
    assert wins >= 2


def test_sigma2_ablation():
    results = {
        sigma2: final_distortion(Method.SF_DIVEQ, 8, sigma2=sigma2)
        for sigma2 in (1e-1, 1e-2, 1e-3, 1e-4)
    }
    assert results[1e-1] > results[1e-2]
    assert results[1e-1] > results[1e-3]
    comparable = [results[1e-2], results[1e-3], results[1e-4]]
    assert max(comparable) <= 1.1 * min(comparable)


def test_trained_residual_quantizer_refines():
    assert final_distortion(Method.DIVEQ, 8, num_stages=3) < final_distortion(Method.DIVEQ, 8)
