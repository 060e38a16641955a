from ltbridge.bridge.bridge_batch import BridgeBatch
from ltbridge.bridge.bridge_config import BridgeConfig, BridgeOutcome, default_horizon
from ltbridge.bridge.lt_independence import lt_independence_check
from ltbridge.bridge.mixing_laws import ExponentialLaw, GammaLaw, MixingLaw, PointLaw, UniformLaw
from ltbridge.bridge.sample_bridge import (
    sample_bridge,
    sample_bridge_batch,
    sample_decomposition,
    sample_decomposition_batch,
    sample_randomized_bridge,
    sample_randomized_bridge_batch,
)

__all__ = [
    "BridgeBatch",
    "BridgeConfig",
    "BridgeOutcome",
    "ExponentialLaw",
    "GammaLaw",
    "MixingLaw",
    "PointLaw",
    "UniformLaw",
    "default_horizon",
    "lt_independence_check",
    "sample_bridge",
    "sample_bridge_batch",
    "sample_decomposition",
    "sample_decomposition_batch",
    "sample_randomized_bridge",
    "sample_randomized_bridge_batch",
]
