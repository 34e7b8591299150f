"""Contact process on random regular multigraphs and on the regular tree."""
from .engine import ProcessParams, record_reinfections, simulate
from .graph import Multigraph, sample_configuration
from .tree import BudgetExceeded, simulate_tree

__version__ = "0.1.0"

__all__ = [
    "BudgetExceeded",
    "Multigraph",
    "ProcessParams",
    "record_reinfections",
    "sample_configuration",
    "simulate",
    "simulate_tree",
]
