"""Speculative oscillation-guided BP decoding for quantum LDPC codes."""

__version__ = "0.1.0"
