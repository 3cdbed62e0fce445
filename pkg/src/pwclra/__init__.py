"""Piece-wise collaborative low-rank channel estimation for RIS-assisted MU-MIMO."""

__version__ = "0.1.0"
