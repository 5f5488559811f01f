"""Hurst-gated momentum / mean-reversion backtests and a tabular Q-learning agent."""

__version__ = "0.1.0"
