"""Exact and extended-precision bias analysis of jackknife, bootstrap, and
Taylor-series corrections for estimating f(p) under the binomial model."""

__version__ = "0.1.0"
