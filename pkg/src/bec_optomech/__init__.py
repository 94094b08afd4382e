"""Cavity optomechanics with a Bose-Einstein condensate: two-mode and 1D mean-field models."""

__version__ = "0.1.0"
