"""Numerical engine and operator console for agent-population economies."""

from .allocator import Allocation, brute_force_inner, factor_intensity, solve_inner, welfare_at
from .dynamics import (PopulationState, Trajectory, fixed_point_iterate,
                       integrate, lyapunov_check, marginal_value, project_budget)
from .equilibrium import EquilibriumRecord, find_all, solve_from
from .model import (HiveConfig, ValidationReport, get_param, parse_config,
                    serialize_config, validate, with_param)
from .regime import RegimeCell, RegimeGrid, classify_cell, sweep
from .spectral import (CycleInfo, HopfResult, StabilityClass, classify_eigenvalues,
                       detect_limit_cycle, hopf_scan, jacobian_eigen,
                       sufficient_stability)
from .statics import ElasticityMatrix, discrete_shock, implicit_rb, rybczynski, stolper_samuelson

__version__ = "0.1.0"
