"""Symbolic dynamics, Diophantine tools and cocycle estimates for Boshernitzan-type conditions."""

__version__ = "0.1.0"
