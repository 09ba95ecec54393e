"""okmod: p-adic computer algebra and batch verification at desk scale."""

__version__ = "0.1.0"
