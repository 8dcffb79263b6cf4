"""Equilibria of routing games whose users partly carry each other's costs.

Each user ships a fixed demand over the paths of a shared network and
minimizes a blend of everyone's delay, weighted by a cooperation matrix.
The package finds the resulting equilibria from many starting points,
verifies them against first-order conditions, sweeps cooperation degrees
and structural parameters, and flags the two counterintuitive effects
that show up along such sweeps: added capacity hurting everyone, and more
cooperation hurting the cooperator.  A separate module treats one
coordinated flow sharing two queues with a crowd of selfish
infinitesimal users, in closed form and with an independent iterative
cross-check.
"""

from .costs import (CooperationProfile, CostReport, LinearCost, MM1Cost,
                    cost_report, link_cost, link_cost_derivative,
                    marginal_cost, operating_cost, path_marginal,
                    selfish_profile, user_cost)
from .errors import (ConfigError, CoopRouteError, InfeasibleError,
                     SolverError)
from .experiments import (Branch, ParadoxReport, ParadoxWitness, Scenario,
                          SweepParameter, SweepRow, SweepTable, alpha_sweep,
                          detect_braess, detect_cooperation_paradox,
                          get_preset, parameter_sweep, preset_names)
from .mixed import (MixedNumericSet, MixedPoint, MixedScenario,
                    MixedSolution, MixedSolutionSet, MixedSolverConfig,
                    mixed_closed_form, mixed_costs, mixed_numeric,
                    verify_mixed, wardrop_split)
from .nash import (DynamicsResult, EquilibriumResult, EquilibriumSet,
                   NashCheck, RoutingGame, SolverConfig, br_dynamics,
                   make_game, multistart_nash, verify_nash)
from .netmodel import (FlowProfile, Link, Network, PathSet, UserSpec,
                       assemble_profile, build_network, build_path_set,
                       check_feasibility, enumerate_paths, saturated_links)

__version__ = "0.1.0"

__all__ = [
    "Branch", "ConfigError", "CooperationProfile", "CoopRouteError",
    "CostReport", "DynamicsResult", "EquilibriumResult", "EquilibriumSet",
    "FlowProfile", "InfeasibleError", "LinearCost", "Link", "MM1Cost",
    "MixedNumericSet", "MixedPoint", "MixedScenario", "MixedSolution",
    "MixedSolutionSet", "MixedSolverConfig", "NashCheck", "Network",
    "ParadoxReport", "ParadoxWitness", "PathSet", "RoutingGame", "Scenario",
    "SolverConfig", "SolverError", "SweepParameter", "SweepRow",
    "SweepTable", "UserSpec", "alpha_sweep", "assemble_profile",
    "br_dynamics", "build_network", "build_path_set", "check_feasibility",
    "cost_report", "detect_braess", "detect_cooperation_paradox",
    "enumerate_paths", "get_preset", "link_cost", "link_cost_derivative",
    "make_game", "marginal_cost", "mixed_closed_form", "mixed_costs",
    "mixed_numeric", "multistart_nash", "operating_cost",
    "parameter_sweep", "path_marginal", "preset_names", "saturated_links",
    "selfish_profile", "user_cost", "verify_mixed", "verify_nash",
    "wardrop_split",
]
