"""Secret-key rates from correlated sources with public and secure links."""

__version__ = "0.1.0"
