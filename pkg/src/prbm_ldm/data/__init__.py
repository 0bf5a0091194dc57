"""Packaged default finger configurations."""
