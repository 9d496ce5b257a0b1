"""Attribute-aligned cross-modal person search at desk scale."""

__version__ = "0.1.0"
