"""Antiferromagnetic Potts model on sparse random graphs: exact, moment, landscape and sampling tools."""

__version__ = "0.1.0"
