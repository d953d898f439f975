"""Pseudospectral solver and estimate laboratory for a moderate-amplitude
shallow-water surface equation on a periodic domain."""

__version__ = "0.1.0"
