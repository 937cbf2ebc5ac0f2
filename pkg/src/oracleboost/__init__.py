"""Simulation of two-party randomized protocols built from oracle queries.

Subpackages: :mod:`core` (data model), :mod:`protolib` (workload trees),
:mod:`subprotocols` (constant-cost randomized tests), :mod:`noisytree`
(error reduction for Equality trees), :mod:`hdreduction` (k-Hamming-Distance
reduction), :mod:`querysets` (query-matrix structure), :mod:`harness`
(experiments and CLI).
"""

__version__ = "0.1.0"
