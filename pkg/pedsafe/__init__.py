"""Bayesian precision analytics for pediatric safety databases."""

__version__ = "1.0.0"
