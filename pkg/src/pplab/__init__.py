"""pplab: penalized first-passage percolation on spatial random graphs."""

__version__ = "0.1.0"
