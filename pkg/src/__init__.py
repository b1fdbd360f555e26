"""flatcalc - numerical experiments on boundary-flattening pullbacks.

Weighted Sobolev spaces on the half-space, the transformed Laplacian and
its functional calculus, driven from configuration files.
"""

__version__ = "0.1.0"
