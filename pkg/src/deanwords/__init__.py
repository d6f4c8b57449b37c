"""Square-free reduced words over the two-generator free group."""

__version__ = "0.1.0"
