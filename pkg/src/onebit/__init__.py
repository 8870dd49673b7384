"""Principal subspace recovery from one-bit energy comparisons."""

__version__ = "0.1.0"
