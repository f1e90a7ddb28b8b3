from .core import SimConfig, SimStats
from .mg1 import run_mg1_reference
from .network import (EMPTY_CARRIER, EPON, GPON, REFLECTION, run_epon_tree,
                      run_gpon_tree, run_network)

__all__ = [
    "SimConfig", "SimStats", "run_mg1_reference", "run_network",
    "run_epon_tree", "run_gpon_tree", "EPON", "GPON", "REFLECTION",
    "EMPTY_CARRIER",
]
