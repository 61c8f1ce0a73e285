from diveq.quantizers.config import Method, QuantizerConfig
from diveq.quantizers.dispatch import quantize, quantizers
from diveq.quantizers.gumbel import distance_logits, quantize_stgs, sample_gumbels
from diveq.quantizers.noise import quantize_diveq, quantize_diveq_detach, quantize_nsvq
from diveq.quantizers.residual import quantize_residual
from diveq.quantizers.results import (
    GumbelSample,
    QuantizationResult,
    ResidualStageResult,
    RotationFactors,
)
from diveq.quantizers.rotation import quantize_rt, rotation_factors
from diveq.quantizers.space_filling import (
    quantize_curve,
    quantize_sf_diveq,
    quantize_sf_diveq_detach,
)
from diveq.quantizers.straight_through import ema_update, quantize_hard, quantize_ste
