"""Discrete decision systems, recursion schemes and relation-algebra tooling
over typed metagraphs."""

__version__ = "0.1.0"
