"""Exact simulation of polygonal billiards with one-sided (spy) mirrors.

The package enumerates the symbolic language of such tables by exact beam
tracing in dual line space, computes complexity and special-word statistics,
counts generalized and spy diagonals, and checks the combinatorial identities
tying those quantities together.  See README.md for a tour.
"""

from .numbers import Q, IntervalScalar, UndecidableSignError, sgn

__all__ = ["Q", "IntervalScalar", "UndecidableSignError", "sgn"]

__version__ = "0.1.0"
