"""Buffer-aware multi-programming compiler and crosstalk evaluation toolchain."""

__version__ = "0.1.0"
