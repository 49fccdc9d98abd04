"""Numerical verification of moment asymptotics for sums of Hecke eigenvalues at large weight."""

from .numeric import DEFAULT_PREC, Precision

__version__ = "0.1.0"

__all__ = ["Precision", "DEFAULT_PREC", "__version__"]
