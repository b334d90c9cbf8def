"""Desk-scale laboratory for quantum and classical mean-field dynamics.

Subpackages follow the pipeline: `phasespace` (grids, fields, classical
norms), `quantize` (Weyl/Wigner bridge and quantum gradients), `schatten`
(operator norms and inequality oracles), `dynamics` (transport and
propagators), `estimates` (inequality experiments), `lab` (experiment
harness and reporting).
"""

from .phasespace import Grid1D, PhaseSpaceField, PhaseSpaceGrid, WeightSpec
from .quantize import DensityOperator, wigner_transform, weyl_quantize
from .dynamics import EvolutionConfig, KernelSpec

__all__ = [
    "Grid1D",
    "PhaseSpaceGrid",
    "PhaseSpaceField",
    "WeightSpec",
    "DensityOperator",
    "weyl_quantize",
    "wigner_transform",
    "KernelSpec",
    "EvolutionConfig",
]

__version__ = "0.1.0"
