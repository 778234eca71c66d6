"""Iterated Local Anti-Transitivity graphs: generation, metrics, games and spectra."""

from .generator import GenerationTrace, generate, generate_sequence, ilat_step, seed_graph
from .graph import IlatGraph, from_edge_list, read_binary, write_binary

__all__ = [
    "GenerationTrace",
    "IlatGraph",
    "from_edge_list",
    "generate",
    "generate_sequence",
    "ilat_step",
    "read_binary",
    "seed_graph",
    "write_binary",
]
__version__ = "0.1.0"
