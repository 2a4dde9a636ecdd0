"""Mask-head technique modules and their composition builder."""
from .boundary import DenseRefineModule, ImprovedBoundaryRefine, OriginalBoundaryRefine
from .builder import ComposedMaskHead, build_mask_head, zero_technique_tails
from .deconv_pyramid import DeconvPyramid
from .fusion import ContextualFusion
from .quasi import AuxMaskBranch, QuasiMultitask

__all__ = [
    "AuxMaskBranch",
    "ComposedMaskHead",
    "ContextualFusion",
    "DeconvPyramid",
    "DenseRefineModule",
    "ImprovedBoundaryRefine",
    "OriginalBoundaryRefine",
    "QuasiMultitask",
    "build_mask_head",
    "zero_technique_tails",
]
