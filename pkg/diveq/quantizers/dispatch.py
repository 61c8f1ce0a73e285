import catalogue
import numpy as np

from diveq.codebook import Codebook
from diveq.quantizers.config import Method, QuantizerConfig
from diveq.quantizers.gumbel import quantize_stgs
from diveq.quantizers.noise import quantize_diveq, quantize_diveq_detach, quantize_nsvq
from diveq.quantizers.results import QuantizationResult
from diveq.quantizers.rotation import quantize_rt
from diveq.quantizers.space_filling import quantize_sf_diveq, quantize_sf_diveq_detach
from diveq.quantizers.straight_through import quantize_hard, quantize_ste

quantizers = catalogue.create("diveq", "quantizers")


def _hard(z, codebook, config, rng, tau):
    return quantize_hard(z, codebook)


def _ste(z, codebook, config, rng, tau):
    return quantize_ste(z, codebook)


def _rt(z, codebook, config, rng, tau):
    return quantize_rt(z, codebook)


def _stgs(z, codebook, config, rng, tau):
    return quantize_stgs(z, codebook, tau=config.tau_start if tau is None else tau, rng=rng)


def _nsvq(z, codebook, config, rng, tau):
    return quantize_nsvq(z, codebook, rng=rng)


def _diveq(z, codebook, config, rng, tau):
    return quantize_diveq(z, codebook, sigma2=config.sigma2, rng=rng)


def _sf_diveq(z, codebook, config, rng, tau):
    return quantize_sf_diveq(z, codebook, sigma2=config.sigma2, rng=rng)


def _diveq_detach(z, codebook, config, rng, tau):
    return quantize_diveq_detach(z, codebook)


def _sf_diveq_detach(z, codebook, config, rng, tau):
    return quantize_sf_diveq_detach(z, codebook, rng=rng)


quantizers.register(Method.HARD.value, func=_hard)
quantizers.register(Method.STE.value, func=_ste)
# The EMA estimator shares the straight-through forward; its codebook is
# updated by ema_update instead of gradients.
quantizers.register(Method.EMA.value, func=_ste)
quantizers.register(Method.RT.value, func=_rt)
quantizers.register(Method.STGS.value, func=_stgs)
quantizers.register(Method.NSVQ.value, func=_nsvq)
quantizers.register(Method.DIVEQ.value, func=_diveq)
quantizers.register(Method.SF_DIVEQ.value, func=_sf_diveq)
quantizers.register(Method.DIVEQ_DETACH.value, func=_diveq_detach)
quantizers.register(Method.SF_DIVEQ_DETACH.value, func=_sf_diveq_detach)


def quantize(
    z,
    codebook: Codebook,
    config: QuantizerConfig,
    rng: np.random.Generator = None,
    tau: float = None,
) -> QuantizationResult:
    """Quantizes ``z`` with the estimator named by ``config.method``

    Parameters
    ----------
    z : Tensor
        $N \\times D$ latents.
    codebook : Codebook
        Codebook with matching D.
    config : QuantizerConfig
        Estimator and hyperparameters.
    rng : np.random.Generator, optional
        Noise source, seeded from ``config.rng_seed`` when missing.
    tau : float, optional
        Current Gumbel temperature, ``config.tau_start`` by default.
    """
    rng = np.random.default_rng(config.rng_seed) if rng is None else rng
    result = quantizers.get(config.method.value)(z, codebook, config, rng, tau)
    result.method = config.method
    return result
