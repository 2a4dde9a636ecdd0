"""maskbench: a desk-scale instance segmentation workbench.

A compact two-stage detector with independently toggleable mask-head
techniques (global-context fusion, an up-then-down deconvolutional pyramid,
boundary refinement, auxiliary multi-scale mask supervision, and a staged
mask-loss multiplier), plus a self-verified COCO-style evaluator and a
deterministic synthetic shapes dataset.
"""

__version__ = "0.1.0"
