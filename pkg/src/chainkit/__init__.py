"""Majorizing-measure functionals, explicit chaining measures and bound
certificates on finite metric spaces."""

__version__ = "0.1.0"
