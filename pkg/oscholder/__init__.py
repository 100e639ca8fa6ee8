"""
oscholder

Oscillation operators, the generalized Hölder seminorm and the nearest-point
approach map on discretized domains, together with a harness that checks the
associated inequalities numerically.
"""

__version__ = "0.1.0"
