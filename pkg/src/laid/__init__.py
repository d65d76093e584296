"""Lightweight AI-generated image detection: spatial and spectral detectors,
attack harness, efficiency-based model selection and evaluation protocols."""

__version__ = "0.1.0"
