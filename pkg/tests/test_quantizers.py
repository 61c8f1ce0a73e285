import numpy as np
import pytest

from diveq.autodiff import Tape, Tensor, backward, check_gradient, mul, total
from diveq.codebook import Codebook, DitheredCodebook, dither, nearest
from diveq.harness import fit_residual_codebooks
from diveq.quantizers import (
    Method,
    QuantizerConfig,
    ema_update,
    quantize,
    quantize_curve,
    quantize_diveq,
    quantize_diveq_detach,
    quantize_hard,
    quantize_nsvq,
    quantize_residual,
    quantize_rt,
    quantize_sf_diveq,
    quantize_sf_diveq_detach,
    quantize_ste,
    quantize_stgs,
    rotation_factors,
    sample_gumbels,
)
from diveq.utils.checks import (
    ConfigurationError,
    ShapeError,
    StageError,
    check_positive,
    check_probability,
)

pytestmark = pytest.mark.filterwarnings("ignore")

generator = np.random.default_rng(5)


def instance(num_samples, num_codewords, dim, rng=generator):
    return (
        rng.uniform(-1.0, 1.0, size=(num_samples, dim)),
        rng.uniform(-1.0, 1.0, size=(num_codewords, dim)),
    )


def test_config_validation():
    assert QuantizerConfig(method="diveq").method is Method.DIVEQ
    with pytest.raises(ConfigurationError) as error:
        QuantizerConfig(method="DIVEQ", sigma2=-1.0)
    assert [violation.path for violation in error.value.violations] == ["sigma2"]
    with pytest.raises(ConfigurationError):
        QuantizerConfig(gamma=1.0)
    with pytest.raises(ConfigurationError):
        QuantizerConfig(tau_start=0.05, tau_min=0.1)
    with pytest.raises(AttributeError):
        QuantizerConfig(method="FSQ")
    # sigma2 is only checked where it is used
    QuantizerConfig(method="STE", sigma2=-1.0)


def test_config_rejects_missing_and_textual_values():
    with pytest.raises(ConfigurationError) as error:
        QuantizerConfig(method="DIVEQ", sigma2=None, gamma="0.9", tau_min="low")
    paths = {violation.path for violation in error.value.violations}
    assert {"sigma2", "gamma", "tau_min", "tau_start"} <= paths
    assert check_positive(None, "sigma2")[0].message == "must be a finite positive number, got None"
    assert check_probability("0.5", "gamma")[0].message == "must lie in (0, 1), got '0.5'"
    assert check_probability(True, "gamma") != []
    assert check_positive(float("nan"), "sigma2") != []
    assert check_probability(0.0, "gamma", closed_low=True) == []
    assert check_positive(np.float32(0.5), "sigma2") == []


def test_method_families():
    assert {method.family for method in (Method.HARD, Method.STE, Method.EMA, Method.RT)} == {"ste"}
    assert Method.STGS.family == "gumbel"
    assert {
        method.family
        for method in (
            Method.NSVQ,
            Method.DIVEQ,
            Method.SF_DIVEQ,
            Method.DIVEQ_DETACH,
            Method.SF_DIVEQ_DETACH,
        )
    } == {"noise"}


def test_quantize_hard_examples():
    codebook = Codebook(np.array([[1.0, 0.0], [-1.0, 0.0]]))
    result = quantize_hard(np.array([[0.9, 0.0]]), codebook)
    np.testing.assert_array_equal(result.z_q.data, [[1.0, 0.0]])
    result = quantize_hard(np.array([[-1.0, 0.0]]), codebook)
    assert result.distortion == 0.0

    points, vectors = instance(50, 8, 3)
    codebook = Codebook(vectors)
    result = quantize_hard(points, codebook)
    indices, _ = nearest(points, codebook)
    np.testing.assert_array_equal(result.indices, indices)
    np.testing.assert_array_equal(result.hard_points, vectors[indices])
    with pytest.raises(ShapeError):
        quantize_hard(np.ones((2, 5)), codebook)


def test_ste_contract():
    points, vectors = instance(20, 4, 2)
    codebook = Codebook(vectors)
    z = Tensor(points, requires_grad=True)
    with Tape() as tape:
        result = quantize_ste(z, codebook)
        loss = total(result.z_q)
    np.testing.assert_array_equal(result.z_q.data, quantize_hard(points, codebook).z_q.data)
    gradients = backward(tape, loss)
    np.testing.assert_array_equal(gradients[z], np.ones_like(points))
    np.testing.assert_array_equal(gradients[codebook.vectors], np.zeros_like(vectors))


def test_ema_update_examples():
    codebook = Codebook(
        np.array([[1.0, 0.0], [5.0, 5.0]]),
        ema_g=np.array([[1.0, 0.0], [5.0, 5.0]]),
        ema_h=np.array([1.0, 1.0]),
    )
    updated = ema_update(codebook, np.array([[2.0, 0.0]]), np.array([0]), gamma=0.99)
    assert updated.tolist() == [True, False]
    expected_h = 0.99 * 1.0 + (1.0 - 0.99) * 1.0
    expected_g = np.array([0.99 * 1.0 + (1.0 - 0.99) * 2.0, 0.0])
    assert codebook.ema_h[0] == expected_h
    np.testing.assert_array_equal(codebook.ema_g[0], expected_g)
    np.testing.assert_array_equal(codebook.vectors.data[0], expected_g / expected_h)
    np.testing.assert_allclose(codebook.vectors.data[0], [1.01, 0.0], rtol=1e-12)
    np.testing.assert_array_equal(codebook.vectors.data[1], [5.0, 5.0])

    codebook = Codebook(np.array([[0.0, 0.0], [3.0, 3.0]]), ema=True)
    ema_update(codebook, np.array([[0.5, -0.25]]), np.array([0]), gamma=0.0)
    np.testing.assert_array_equal(codebook.vectors.data[0], [0.5, -0.25])
    np.testing.assert_array_equal(codebook.vectors.data[1], [3.0, 3.0])


def test_rotation_trick_examples():
    codebook = Codebook(np.array([[1.0, 0.0], [-5.0, -5.0]]))
    result = quantize_rt(np.array([[0.0, 1.0]]), codebook)
    np.testing.assert_array_equal(result.z_q.data, [[1.0, 0.0]])

    factors = rotation_factors(np.array([[2.0, 0.0]]), np.array([[4.0, 0.0]]))
    assert factors.rho[0] == 2.0
    np.testing.assert_allclose(np.linalg.norm(factors.r, axis=1), 1.0, atol=1e-9)
    np.testing.assert_allclose(np.linalg.norm(factors.z_bar, axis=1), 1.0, atol=1e-9)

    result = quantize_rt(np.array([[0.0, 0.0]]), codebook)
    assert result.fallback_count == 1
    np.testing.assert_array_equal(result.z_q.data, [[1.0, 0.0]])


def test_rotation_trick_pullback_is_frozen_rotation():
    points, vectors = instance(5, 4, 3)
    codebook = Codebook(vectors)
    z = Tensor(points, requires_grad=True)
    with Tape() as tape:
        result = quantize_rt(z, codebook)
        loss = total(result.z_q)
    factors = result.rotation
    expected = []
    for rho, r, z_bar, c_bar in zip(factors.rho, factors.r, factors.z_bar, factors.c_bar):
        rotation = np.eye(3) - 2 * np.outer(r, r) + 2 * np.outer(c_bar, z_bar)
        expected.append(rho * rotation.T @ np.ones(3))
    np.testing.assert_allclose(backward(tape, loss)[z], np.array(expected), rtol=1e-10)


def test_stgs_examples():
    codebook = Codebook(np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]]))
    points = np.array([[0.1, 0.0], [2.9, 0.1]])
    result = quantize_stgs(points, codebook, tau=1e-4, rng=generator)
    assert np.all(result.gumbel.y.data.max(axis=1) > 0.999)
    np.testing.assert_allclose(result.gumbel.y.data.sum(axis=1), 1.0, atol=1e-9)
    assert np.all(result.gumbel.onehot.sum(axis=1) == 1)

    result = quantize_stgs(points, codebook, tau=1.0, gumbels=np.zeros((2, 3)))
    logits = result.gumbel.logits
    softmax = np.exp(logits - logits.max(axis=1, keepdims=True))
    softmax /= softmax.sum(axis=1, keepdims=True)
    np.testing.assert_allclose(result.gumbel.y.data, softmax, rtol=1e-10)
    np.testing.assert_array_equal(result.z_q.data, codebook.vectors.data[result.indices])

    with pytest.raises(ConfigurationError):
        quantize_stgs(points, codebook, tau=0.0, rng=generator)


def test_gumbel_samples_are_finite():
    gumbels = sample_gumbels(np.random.default_rng(0), (1000, 8))
    assert np.all(np.isfinite(gumbels))
    assert abs(gumbels.mean() - np.euler_gamma) < 0.05


def test_nsvq_examples():
    points, vectors = instance(200, 8, 4)
    codebook = Codebook(vectors)
    result = quantize_nsvq(points, codebook, np.random.default_rng(1))
    np.testing.assert_allclose(
        np.linalg.norm(result.z_q.data - points, axis=1),
        np.linalg.norm(points - result.hard_points, axis=1),
        atol=1e-9,
    )
    on_codeword = quantize_nsvq(vectors[:2], codebook, np.random.default_rng(1))
    np.testing.assert_array_equal(on_codeword.z_q.data, vectors[:2])


def test_diveq_examples():
    points, vectors = instance(200, 8, 4)
    codebook = Codebook(vectors)
    close = quantize_diveq(points, codebook, sigma2=1e-12, rng=np.random.default_rng(2))
    np.testing.assert_allclose(close.z_q.data, close.hard_points, atol=1e-5)
    for sigma2 in (1e-4, 1e-1, 10.0):
        result = quantize_diveq(points, codebook, sigma2=sigma2, rng=np.random.default_rng(2))
        np.testing.assert_allclose(
            np.linalg.norm(result.z_q.data - points, axis=1),
            np.linalg.norm(points - result.hard_points, axis=1),
            atol=1e-9,
        )
    on_codeword = quantize_diveq(vectors[:3], codebook, sigma2=1e-3, rng=generator)
    np.testing.assert_array_equal(on_codeword.z_q.data, vectors[:3])
    with pytest.raises(ConfigurationError):
        quantize_diveq(points, codebook, sigma2=0.0, rng=generator)


def test_diveq_detach_is_exact():
    points, vectors = instance(100, 16, 8)
    codebook = Codebook(vectors)
    result = quantize_diveq_detach(points, codebook)
    np.testing.assert_array_equal(result.z_q.data, quantize_hard(points, codebook).z_q.data)


def test_sf_diveq_examples():
    points, vectors = instance(100, 8, 2)
    codebook = Codebook(vectors)
    frozen = DitheredCodebook.from_lambdas(codebook, np.zeros(7))
    start = quantize_sf_diveq(points, codebook, 1e-3, np.random.default_rng(4), dithered=frozen)
    np.testing.assert_array_equal(start.lambdas, np.zeros(100))
    np.testing.assert_array_equal(vectors[start.indices], start.hard_points)
    # Zero factors reduce to DiVeQ toward the start of the winning segment
    target = start.hard_points
    np.testing.assert_allclose(
        np.linalg.norm(start.z_q.data - points, axis=1),
        np.linalg.norm(target - points, axis=1),
        atol=1e-9,
    )

    dithered = dither(codebook, np.random.default_rng(8))
    result = quantize_sf_diveq(points, codebook, 1e-12, np.random.default_rng(8), dithered=dithered)
    segments, _ = nearest(points, dithered.points)
    np.testing.assert_array_equal(result.indices, segments)
    weights = dithered.lambdas[segments][:, None]
    expected = (1 - weights) * vectors[segments] + weights * vectors[segments + 1]
    np.testing.assert_allclose(result.z_q.data, expected, atol=1e-5)
    assert np.all((result.lambdas >= 0) & (result.lambdas < 1))


def test_sf_diveq_detach_is_exact():
    points, vectors = instance(100, 8, 3)
    codebook = Codebook(vectors)
    dithered = dither(codebook, np.random.default_rng(9))
    result = quantize_sf_diveq_detach(points, codebook, generator, dithered=dithered)
    weights = result.lambdas[:, None]
    expected = (1 - weights) * vectors[result.indices] + weights * vectors[result.indices + 1]
    np.testing.assert_array_equal(result.z_q.data, dithered.points[result.indices])
    np.testing.assert_allclose(result.z_q.data, expected, atol=1e-12)


def test_sf_collapsed_segment_acts_as_diveq():
    codebook = Codebook(np.array([[1.0, 1.0], [1.0, 1.0]]))
    result = quantize_sf_diveq(np.array([[0.0, 0.0]]), codebook, 1e-12, generator)
    assert result.lambdas.tolist() == [0.0]
    np.testing.assert_allclose(result.z_q.data, [[1.0, 1.0]], atol=1e-5)


def test_sf_usage_indices_credit_the_nearer_endpoint():
    codebook = Codebook(np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]))
    dithered = DitheredCodebook.from_lambdas(codebook, np.array([0.25, 0.75]))
    points = np.array([[0.25, 0.0], [1.75, 0.0]])
    result = quantize_sf_diveq_detach(points, codebook, generator, dithered=dithered)
    assert result.indices.tolist() == [0, 1]
    assert result.usage_indices.tolist() == [0, 2]


def test_dispatch_covers_every_method():
    points, vectors = instance(10, 4, 2)
    for method in Method:
        result = quantize(points, Codebook(vectors), QuantizerConfig(method=method, rng_seed=3))
        assert result.method is method
        assert result.z_q.shape == points.shape


def test_forward_equivalence_to_hard_assignment():
    for _ in range(200):
        dim = int(generator.choice([2, 8]))
        points, vectors = instance(50, int(generator.choice([4, 16])), dim)
        codebook = Codebook(vectors)
        hard = quantize_hard(points, codebook).z_q.data
        for estimator in (quantize_ste, quantize_rt, quantize_diveq_detach):
            np.testing.assert_array_equal(estimator(points, codebook).z_q.data, hard)
        result = quantize_diveq(points, codebook, 1e-12, generator)
        np.testing.assert_allclose(result.z_q.data, hard, atol=1e-5)
        dithered = dither(codebook, generator)
        result = quantize_sf_diveq(points, codebook, 1e-12, generator, dithered=dithered)
        np.testing.assert_allclose(result.z_q.data, dithered.points[result.indices], atol=1e-5)


def test_nsvq_overshoot_probability():
    points = generator.normal(size=(100000, 2))
    codebook = Codebook(np.zeros((1, 2)))
    result = quantize_nsvq(points, codebook, np.random.default_rng(12))
    overshoot = np.linalg.norm(result.z_q.data, axis=1) > np.linalg.norm(points, axis=1)
    assert abs(overshoot.mean() - 2 / 3) < 0.01


def _gradient_errors(method, points, vectors, rng):
    weights = rng.normal(size=points.shape)
    seed = int(rng.integers(1 << 30))
    dithered = (
        DitheredCodebook.from_lambdas(
            Codebook(vectors), rng.uniform(0.0, 1.0, size=len(vectors) - 1)
        )
        if method in (Method.SF_DIVEQ, Method.SF_DIVEQ_DETACH)
        else None
    )
    gumbels = rng.gumbel(size=(len(points), len(vectors)))

    def estimate(z, codebook):
        noise_rng = np.random.default_rng(seed)
        if method is Method.STGS:
            return quantize_stgs(z, codebook, tau=1.0, gumbels=gumbels)
        if method is Method.SF_DIVEQ:
            return quantize_sf_diveq(z, codebook, 1e-3, noise_rng, dithered=dithered)
        if method is Method.SF_DIVEQ_DETACH:
            return quantize_sf_diveq_detach(z, codebook, noise_rng, dithered=dithered)
        config = QuantizerConfig(method=method, sigma2=1e-3)
        return quantize(z, codebook, config, rng=noise_rng)

    def in_latents(z):
        return total(mul(estimate(z, Codebook(vectors)).z_q, weights))

    def in_codebook(c):
        return total(mul(estimate(Tensor(points), Codebook(c)).z_q, weights))

    return check_gradient(in_latents, points), check_gradient(in_codebook, vectors)


DIFFERENTIABLE = [
    Method.STE,
    Method.RT,
    Method.STGS,
    Method.NSVQ,
    Method.DIVEQ,
    Method.SF_DIVEQ,
    Method.DIVEQ_DETACH,
    Method.SF_DIVEQ_DETACH,
]


@pytest.mark.parametrize("method", DIFFERENTIABLE, ids=lambda method: method.value)
def test_estimator_gradients_match_finite_differences(method):
    for dim in (2, 8):
        for num_codewords in (4, 16):
            for case in range(4):
                rng = np.random.default_rng([dim, num_codewords, case])
                points, vectors = instance(3, num_codewords, dim, rng)
                latent_error, codebook_error = _gradient_errors(method, points, vectors, rng)
                assert latent_error < 1e-4
                assert codebook_error < 1e-4


@pytest.mark.parametrize("method", [Method.SF_DIVEQ, Method.SF_DIVEQ_DETACH], ids=lambda method: method.value)
def test_segment_selection_is_held_across_finite_differences(method):
    vectors = np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 2.0]])
    dithered = DitheredCodebook.from_lambdas(Codebook(vectors), np.array([0.5, 0.5]))
    # Dithered points (1, 0) and (2, 1) are 1 - 3e-6 and 1 + 4.5e-12 away,
    # a step of 1e-5 along x swaps the winner
    points = np.array([[2.0 - 3e-6, 0.0]])
    segments, _ = nearest(points, dithered.points)
    assert segments.tolist() == [0]
    weights = np.array([[0.7, -1.3]])

    def in_latents(z):
        rng = np.random.default_rng(3)
        if method is Method.SF_DIVEQ:
            result = quantize_sf_diveq(z, Codebook(vectors), 1e-3, rng, dithered=dithered)
        else:
            result = quantize_sf_diveq_detach(z, Codebook(vectors), rng, dithered=dithered)
        return total(mul(result.z_q, weights))

    assert check_gradient(in_latents, points) < 1e-4


def test_curve_quantization():
    codebook = Codebook(np.array([[0.0, 0.0], [2.0, 0.0], [2.0, 2.0]]))
    points = np.array([[0.4, 1.0], [1.5, -1.0], [3.0, 1.9]])
    result = quantize_curve(points, codebook)
    np.testing.assert_allclose(result.hard_points, [[0.4, 0.0], [1.5, 0.0], [2.0, 1.9]])
    np.testing.assert_array_equal(result.z_q.data, result.hard_points)
    assert result.indices.tolist() == [0, 0, 1]
    assert result.usage_indices.tolist() == [0, 1, 2]
    assert result.distortion == pytest.approx(1.0)
    dithered = dither(codebook, generator)
    assert result.distortion <= quantize_hard(points, Codebook(dithered.points)).distortion


def test_residual_examples():
    points, vectors = instance(30, 8, 2)
    single = quantize_residual(points, [Codebook(vectors)], QuantizerConfig(method="HARD"))
    np.testing.assert_array_equal(single.z_hat_total, quantize_hard(points, Codebook(vectors)).z_q.data)

    first = np.array([[0.0, 0.0], [4.0, 0.0]])
    second = np.array([[0.0, 1.0], [0.5, 0.0]])
    points = np.array([[4.0, 1.0], [0.5, 0.0], [4.5, 0.0]])
    result = quantize_residual(
        points, [Codebook(first), Codebook(second)], QuantizerConfig(method="HARD")
    )
    assert result.distortion == 0.0
    for stage, residual in enumerate(result.residuals):
        stage_input = points if stage == 0 else result.residuals[stage - 1].data
        np.testing.assert_array_equal(
            residual.data, stage_input - result.stage_results[stage].hard_points
        )


def test_residual_stage_errors():
    with pytest.raises(ValueError):
        quantize_residual(np.ones((2, 2)), [], QuantizerConfig())
    with pytest.raises(ShapeError):
        quantize_residual(
            np.ones((2, 2)), [Codebook(np.ones((2, 2))), Codebook(np.ones((2, 3)))], QuantizerConfig()
        )
    with pytest.raises(StageError) as error:
        quantize_residual(
            np.ones((2, 2)),
            [Codebook(np.zeros((2, 2))), Codebook(np.ones((1, 2)))],
            QuantizerConfig(method="SF_DIVEQ"),
        )
    assert error.value.stage_index == 1


def test_hard_residual_refines():
    for _ in range(100):
        data = generator.normal(size=(200, 2))
        codebooks = fit_residual_codebooks(data, 4, 3, generator, n_restarts=1)
        config = QuantizerConfig(method="HARD")
        one_stage = quantize_residual(data, codebooks[:1], config).distortion
        three_stages = quantize_residual(data, codebooks, config).distortion
        assert three_stages < one_stage
