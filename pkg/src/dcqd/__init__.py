"""Selective process tomography and channel discrimination with small stabilizer codes."""

__version__ = "0.1.0"
