"""Exact engine for one-turn quantum refereed games.

Modules mirror the layers of the engine: exact dyadic arithmetic, the
circuit IR, the natural (Liouville) representation, gap-function
combinators, game solvers, sparsification experiments and the
trace-power decision predicates.
"""

__version__ = "0.1.0"
