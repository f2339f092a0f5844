"""Evolved decision-tree induction algorithms and CASH search under a shared budgeted protocol."""

__version__ = "0.1.0"
