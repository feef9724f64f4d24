"""Network link reconstruction from aggregated relational data (ARD)."""
__version__ = "0.1.0"
