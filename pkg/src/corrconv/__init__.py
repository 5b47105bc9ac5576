"""Correlation conversion: classical correlations turned into post-selected
entanglement by two channels that cannot carry entanglement on their own."""

__version__ = "0.1.0"
