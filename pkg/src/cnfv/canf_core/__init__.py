"""Generic conditional augmented-coder machinery.

Everything here is agnostic to what the data lane carries (frames or flow
maps); the inter and motion coders instantiate these pieces with their own
channel counts and condition sources.
"""

from cnfv.canf_core.quantizer import QuantizerMode, quantize, round_half_away, lower_bound
from cnfv.canf_core.coupling import CouplingPair
from cnfv.canf_core.hyper import HyperTransform
from cnfv.canf_core.prior import FactorizedPrior
from cnfv.canf_core.rates import factorized_rate_bits, gaussian_rate_bits
from cnfv.canf_core.backbone import CanfCoder, CanfResult

__all__ = [
    "QuantizerMode",
    "quantize",
    "round_half_away",
    "lower_bound",
    "CouplingPair",
    "HyperTransform",
    "FactorizedPrior",
    "factorized_rate_bits",
    "gaussian_rate_bits",
    "CanfCoder",
    "CanfResult",
]
