from ltbridge.transforms.drifts import TransformedSpec, bessel_drift, cond_exit_drift, recurrent_drift
from ltbridge.transforms.entrance_launcher import EntranceLauncher, default_offset, launch_entrance, launch_entrance_batch
from ltbridge.transforms.identity_checks import (
    SemigroupCheck,
    conditioned_exit_sample,
    killed_bm_recurrent_check,
    last_passage_sample,
    semigroup_identity_check,
)
from ltbridge.transforms.survival_estimator import (
    MonteCarloEstimate,
    recurrent_likelihood_ratio,
    survival_by_direct_simulation,
    survival_by_recurrent_transform,
    survival_estimator,
)

__all__ = [
    "EntranceLauncher",
    "MonteCarloEstimate",
    "SemigroupCheck",
    "TransformedSpec",
    "bessel_drift",
    "cond_exit_drift",
    "conditioned_exit_sample",
    "default_offset",
    "killed_bm_recurrent_check",
    "last_passage_sample",
    "launch_entrance",
    "launch_entrance_batch",
    "recurrent_drift",
    "recurrent_likelihood_ratio",
    "semigroup_identity_check",
    "survival_by_direct_simulation",
    "survival_by_recurrent_transform",
    "survival_estimator",
]
