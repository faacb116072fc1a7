"""Signaling schemes for Bayesian zero-sum and routing games."""

__version__ = "0.1.0"
