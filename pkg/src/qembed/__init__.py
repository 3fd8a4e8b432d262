"""Numerics for random embeddings of quantum states into smaller dimensions.

Submodules: ``linalg`` (validated matrix helpers), ``sampling`` (seeded Haar
samplers), ``channels`` (Kraus channels), ``verifiers`` (Haar-integral
checks), ``games`` (state discrimination), ``experiments`` and ``cli``.
"""

__version__ = "0.1.0"
