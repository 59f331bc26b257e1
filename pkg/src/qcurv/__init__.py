"""Numerical laboratory for constant Q-curvature gluing on Einstein pieces."""

__version__ = "0.1.0"
