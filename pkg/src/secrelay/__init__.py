"""Secure relay beamforming toolkit.

Cooperative-jamming strategies for a two-hop MIMO relay network with an
eavesdropper: matrix factorizations, geometric-program power allocation,
single-stream and multi-stream transmit designs, and a Monte-Carlo
experiment harness.
"""
__version__ = "0.1.0"
