"""
.. include:: ../README.md
"""

from . import circuit, classical, minimize, process, quantum
from ._version import version
from .process import TransducerSpec, actively_perturbed_coin, load_example

__version__ = version
__all__ = [
    "circuit", "classical", "minimize", "process", "quantum",
    "TransducerSpec", "actively_perturbed_coin", "load_example",
]
