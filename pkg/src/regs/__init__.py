"""Local Sobolev regularity estimation from scattered data.

Kernel norm profiles over a smoothness sweep, elbow-based classification,
stencil-shift refinement, accelerated sweeps, band-limited verification,
and regularity-gated RBF-FD differentiation.
"""

__version__ = "0.1.0"
