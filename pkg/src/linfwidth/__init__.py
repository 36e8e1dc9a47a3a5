"""Constructive l-infinity width certificates, separators and foams."""
__version__ = "0.1.0"
