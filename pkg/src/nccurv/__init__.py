"""Non-commutative polynomial calculus and curvature signatures of nc varieties."""

__version__ = "0.1.0"
