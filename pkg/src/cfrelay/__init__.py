"""Two-way decode-and-forward relaying over cell-free massive MIMO."""

__version__ = "0.1.0"
