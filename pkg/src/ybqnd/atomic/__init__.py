"""Atomic structure: angular momentum algebra, constants, polarizabilities, mixing, emission."""
