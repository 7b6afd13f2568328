"""Noise-robust PRACH preamble detection on synthetic correlation features.

Pipeline: ``prach_gen`` -> ``noise`` -> ``transform`` -> ``classifiers`` /
``sampling`` -> ``fusion`` -> ``evaluation``; ``cli`` wires it together.
"""

__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402,F401
