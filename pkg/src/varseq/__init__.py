"""Besov and Triebel-Lizorkin sequence spaces with variable exponents."""

__version__ = "0.1.0"
