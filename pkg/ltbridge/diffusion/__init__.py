from ltbridge.diffusion.build_scale import ScaleTable, build_scale
from ltbridge.diffusion.classify_boundary import boundary_kinds, classify_boundary
from ltbridge.diffusion.diffusion_spec import DiffusionSpec, bessel3, builtin, custom, killed_bm, ou, sq_bessel
from ltbridge.diffusion.potential import (
    MixedLaw,
    conditional_terminal_lt_law,
    diffusion_local_time,
    exit_conditioned_lt_tail,
    hitting_prob,
    potential_density,
    potential_dx,
    recurrent_scale,
    rho,
    side_scale,
    side_speed_density,
    terminal_lt_rate,
)
from ltbridge.diffusion.speed_measure import speed_density, speed_measure

__all__ = [
    "DiffusionSpec",
    "MixedLaw",
    "ScaleTable",
    "bessel3",
    "boundary_kinds",
    "build_scale",
    "builtin",
    "classify_boundary",
    "conditional_terminal_lt_law",
    "custom",
    "diffusion_local_time",
    "exit_conditioned_lt_tail",
    "hitting_prob",
    "killed_bm",
    "ou",
    "potential_density",
    "potential_dx",
    "recurrent_scale",
    "rho",
    "side_scale",
    "side_speed_density",
    "speed_density",
    "speed_measure",
    "sq_bessel",
    "terminal_lt_rate",
]
