"""Network interdiction via single-level MILP reduction and multipartite GNNs."""

from netinterdict.instances import (
    GenConfig,
    MfiInstance,
    SpiInstance,
    worked_example_spi,
    generate_mfi,
    generate_spi,
)
from netinterdict.inner import FlowResult, PathResult, max_flow, shortest_path
from netinterdict.reduction import (
    Constraint,
    MilpInstance,
    Variable,
    VarGroup,
    build_mfi_milp,
    dualize_spi,
    fix_interdiction,
)
from netinterdict.milp import (
    LpResult,
    MilpSolution,
    SolverConfig,
    solve_lp,
    solve_milp,
    solve_milp_with_extra,
)
from netinterdict.oracle import OracleResult, brute_force, brute_force_mfi, brute_force_spi, cross_check

__version__ = "0.1.0"

__all__ = [
    "GenConfig",
    "MfiInstance",
    "SpiInstance",
    "worked_example_spi",
    "generate_mfi",
    "generate_spi",
    "FlowResult",
    "PathResult",
    "max_flow",
    "shortest_path",
    "Constraint",
    "MilpInstance",
    "Variable",
    "VarGroup",
    "build_mfi_milp",
    "dualize_spi",
    "fix_interdiction",
    "LpResult",
    "MilpSolution",
    "SolverConfig",
    "solve_lp",
    "solve_milp",
    "solve_milp_with_extra",
    "OracleResult",
    "brute_force",
    "brute_force_mfi",
    "brute_force_spi",
    "cross_check",
]
