"""Graph colouring: classical construction heuristics, an exact solver, and a
deep Q-learning construction heuristic built on a hand-written GNN."""

from .graph import Graph, count_colours, is_valid_colouring, parse_dimacs, read_dimacs, write_dimacs

__version__ = "0.1.0"

__all__ = ["Graph", "count_colours", "is_valid_colouring", "parse_dimacs", "read_dimacs", "write_dimacs"]
