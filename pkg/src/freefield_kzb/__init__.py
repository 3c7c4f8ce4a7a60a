"""Wakimoto free-field realization and integral solutions of the elliptic KZB equations."""

from .lie import LieAlgebraData, build_algebra

__all__ = ["LieAlgebraData", "build_algebra", "__version__"]
__version__ = "0.1.0"
