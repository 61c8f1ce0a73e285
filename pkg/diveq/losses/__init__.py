import catalogue

from diveq.losses.terms import (
    LossBreakdown,
    kl_to_uniform,
    loss_gs,
    loss_noise_family,
    loss_ste_family,
    reconstruction_error,
)
from diveq.quantizers import Method, QuantizationResult, QuantizerConfig

losses = catalogue.create("diveq", "losses")


def _ste(x, x_r, z, quantization, config):
    return loss_ste_family(
        x,
        x_r,
        z,
        quantization,
        alpha=config.alpha,
        beta=config.beta,
        with_codebook_term=config.method is not Method.EMA,
    )


def _gumbel(x, x_r, z, quantization, config):
    return loss_gs(x, x_r, quantization.gumbel, phi=config.phi)


def _noise(x, x_r, z, quantization, config):
    return loss_noise_family(x, x_r)


losses.register("ste", func=_ste)
losses.register("gumbel", func=_gumbel)
losses.register("noise", func=_noise)


def compute_loss(
    x,
    x_r,
    z,
    quantization: QuantizationResult,
    config: QuantizerConfig,
) -> LossBreakdown:
    """Objective of the loss family of ``config.method``"""
    return losses.get(config.method.family)(x, x_r, z, quantization, config)
