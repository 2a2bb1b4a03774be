"""Exact simulation and verification harness for biased voter model interfaces."""

from .engine import Trajectory, coupled_run, derive_seed, run
from .interface import (HEAVISIDE_KEY, InterfaceConfig, apply_flip, boundary_counts,
                        canonical_key, from_bits, heaviside, parse_config, parse_initial)
from .kernel import NEAREST_NEIGHBOR, RANGE_TWO, Kernel, leave_rate, make_kernel, parse_kernel

__version__ = "0.1.0"

__all__ = [
    "HEAVISIDE_KEY", "InterfaceConfig", "Kernel", "NEAREST_NEIGHBOR", "RANGE_TWO", "Trajectory",
    "apply_flip", "boundary_counts", "canonical_key", "coupled_run", "derive_seed", "from_bits",
    "heaviside", "leave_rate", "make_kernel", "parse_config", "parse_initial", "parse_kernel",
    "run",
]
