"""Sparse intervention allocation for network spreading processes.

Models a linearized contagion/wildfire process, scores nodes by discounted
outbreak impact, and allocates scarce spread-reduction resources by solving
exponential cone programs, with an optional reweighting loop for sparser
allocations.
"""

from .allocate import (
    SolveReport,
    certificate_satisfied,
    minimize_dominant_eigenvalue,
    minimize_investment,
    minimize_investment_reweighted,
    minimize_max_risk,
    minimize_max_risk_with_count,
)
from .coneprog import ClarabelBackend, ConeProgram, ConeProgramBuilder, RetryBackend, ScsBackend
from .impact import (
    RiskSummary,
    SolverError,
    StabilityError,
    StabilityReport,
    check_discount_stability,
    dominant_eigenvalue,
    impact_direct,
    impact_lp,
    outbreak_risk,
    spectral_abscissa,
)
from .network import (
    Edge,
    EdgeParams,
    IntegrationError,
    NodeParams,
    SpreadingNetwork,
    Trajectory,
    build_state_matrix,
    simulate_linear,
    simulate_nonlinear,
)
from .resources import (
    Allocation,
    ResourceModel,
    count_active,
    edge_caps,
    node_caps,
)
from .scenario import Scenario, ScenarioError, load_scenario, run_scenario, scenario_from_dict
from .wildfire import (
    CellType,
    CompileConfig,
    Landscape,
    SpreadRateTable,
    Wind,
    analogue_landscape,
    analogue_network,
    compile_landscape,
    vegetation_factor,
    wind_factor,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
