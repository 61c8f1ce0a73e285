import numpy as np
import pytest

from diveq.autodiff import Tape, Tensor, backward
from diveq.codebook import Codebook
from diveq.losses import (
    compute_loss,
    kl_to_uniform,
    loss_noise_family,
    loss_ste_family,
    losses,
    reconstruction_error,
)
from diveq.quantizers import Method, QuantizerConfig, quantize, quantize_diveq, quantize_ste
from diveq.utils.checks import ShapeError

pytestmark = pytest.mark.filterwarnings("ignore")

generator = np.random.default_rng(23)


def test_registry_covers_every_family():
    assert set(losses.get_all()) == {"ste", "gumbel", "noise"}


def test_reconstruction_examples():
    x = np.array([[0.0, 0.0], [1.0, 1.0]])
    assert reconstruction_error(x, x).item() == 0.0
    x_r = np.array([[0.0, 0.0], [0.0, 1.0]])
    assert reconstruction_error(x, x_r).item() == 0.25
    assert loss_noise_family(x, x_r).total.item() == 0.25
    with pytest.raises(ShapeError):
        reconstruction_error(x, np.ones((2, 3)))


def test_ste_family_example():
    x = np.ones((1, 3))
    codebook = Codebook(np.array([[0.0, 0.0], [5.0, 5.0]]))
    z = Tensor([[1.0, 0.0]], requires_grad=True)
    with Tape() as tape:
        quantization = quantize_ste(z, codebook)
        breakdown = loss_ste_family(x, x, z, quantization, alpha=1.0, beta=0.25)
    assert breakdown.total.item() == 1.25
    assert breakdown.codebook_term.item() == 1.0
    assert breakdown.commitment_term.item() == 0.25
    assert breakdown.kl_term.item() == 0.0
    gradients = backward(tape, breakdown.total)
    np.testing.assert_allclose(gradients[codebook.vectors], [[-2.0, 0.0], [0.0, 0.0]])
    np.testing.assert_allclose(gradients[z], [[0.5, 0.0]])


def test_ste_family_on_codewords_is_zero():
    x = generator.normal(size=(4, 3))
    vectors = generator.normal(size=(4, 2))
    quantization = quantize_ste(vectors, Codebook(vectors))
    assert loss_ste_family(x, x, vectors, quantization, 1.0, 0.25).total.item() == 0.0


def test_ste_family_gradient_routing():
    x = np.zeros((5, 3))
    codebook = Codebook(generator.normal(size=(4, 2)))
    z = Tensor(generator.normal(size=(5, 2)), requires_grad=True)

    with Tape() as tape:
        breakdown = loss_ste_family(x, x, z, quantize_ste(z, codebook), alpha=0.0, beta=0.25)
    np.testing.assert_array_equal(backward(tape, breakdown.total)[codebook.vectors], np.zeros((4, 2)))

    with Tape() as tape:
        breakdown = loss_ste_family(x, x, z, quantize_ste(z, codebook), alpha=1.0, beta=0.0)
    gradients = backward(tape, breakdown.total)
    np.testing.assert_array_equal(gradients[z], np.zeros((5, 2)))
    unused = np.setdiff1d(np.arange(4), quantize_ste(z.data, codebook).indices)
    np.testing.assert_array_equal(gradients[codebook.vectors][unused], 0.0)

    with pytest.raises(ShapeError):
        loss_ste_family(x, x, np.ones((5, 3)), quantize_ste(z, codebook), 1.0, 0.25)


def test_kl_examples():
    uniform = Tensor(np.full((3, 4), 0.25))
    assert kl_to_uniform(uniform).item() == pytest.approx(0.0, abs=1e-9)
    onehot = Tensor(np.tile([1.0, 0.0, 0.0, 0.0], (3, 1)))
    assert kl_to_uniform(onehot).item() == pytest.approx(np.log(4), abs=1e-9)

    for _ in range(10):
        y = generator.dirichlet(np.ones(6), size=8)
        average = y.mean(axis=0)
        direct = np.sum(average * np.log(average * 6))
        assert kl_to_uniform(Tensor(y)).item() == pytest.approx(direct, abs=1e-9)
        assert kl_to_uniform(Tensor(y)).item() >= 0.0


def test_compute_loss_dispatch():
    x = generator.normal(size=(6, 3))
    x_r = generator.normal(size=(6, 3))
    z = generator.normal(size=(6, 2))
    codebook = Codebook(generator.normal(size=(4, 2)))
    for method in Method:
        config = QuantizerConfig(method=method)
        quantization = quantize(z, codebook, config, rng=np.random.default_rng(0))
        breakdown = compute_loss(x, x_r, z, quantization, config)
        terms = breakdown.values()
        active = terms["recon"] + terms["codebook_term"] + terms["commitment_term"] + terms["kl_term"]
        assert terms["total_loss"] == pytest.approx(active, abs=1e-9)
        if method.family == "noise":
            assert breakdown.auxiliary == 0.0
        if method is Method.EMA:
            assert terms["codebook_term"] == 0.0
            assert terms["commitment_term"] > 0.0
        if method is Method.STGS:
            assert terms["kl_term"] >= 0.0
            assert terms["codebook_term"] == terms["commitment_term"] == 0.0
        else:
            assert terms["kl_term"] == 0.0


def test_noise_family_reaches_the_codebook():
    x = generator.normal(size=(5, 2))
    codebook = Codebook(generator.normal(size=(8, 2)))
    z = Tensor(generator.normal(size=(5, 2)), requires_grad=True)
    with Tape() as tape:
        quantization = quantize_diveq(z, codebook, 1e-3, np.random.default_rng(0))
        breakdown = loss_noise_family(x, quantization.z_q)
    gradients = backward(tape, breakdown.total)
    selected = np.unique(quantization.indices)
    assert np.all(np.abs(gradients[codebook.vectors][selected]).sum(axis=1) > 0)
    unused = np.setdiff1d(np.arange(8), selected)
    np.testing.assert_array_equal(gradients[codebook.vectors][unused], 0.0)
