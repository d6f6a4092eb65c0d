"""Fano-Anderson model: exact and time-convolutionless (TCL) expanded open-system dynamics."""

__version__ = "0.1.0"
