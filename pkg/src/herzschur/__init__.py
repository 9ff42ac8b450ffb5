"""Schur and Herz-Schur multiplier norms, definiteness certificates and radial calculus on free groups."""

__version__ = "0.1.0"
