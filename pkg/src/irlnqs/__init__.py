"""Matrix-free IRL optimization of neural quantum states."""

__version__ = "0.1.0"
