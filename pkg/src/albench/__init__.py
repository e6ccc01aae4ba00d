"""albench: pool-based active-learning benchmarking at desk scale."""

__version__ = "0.1.0"
