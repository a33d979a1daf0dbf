"""Sparse graph auto-encoder toolkit.

Learns which node-attached concept signals best predict the edge structure of
a social network via a graph auto-encoder with group-lasso structured
sparsity, and reports the polarized concepts, their agenda/framing mixture,
and temporal embedding drift.
"""

__version__ = "0.1.0"
