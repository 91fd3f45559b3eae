"""Goal-based contribution planning via a Morse-potential spectral solver.

Computes, for a contribution policy (initial rate u0, growth rate xi), the
probability that terminal portfolio wealth falls short of a target; builds
that probability as a surface over the whole control plane; and extracts
constant-probability frontier curves, each point of which is an equally
valid satisficing plan.
"""

from .model import (
    ControlPoint,
    DerivedParams,
    MarketParams,
    PlanSpec,
    control_point,
    derive_params,
)
from .mc_oracle import SimConfig, TailEstimate, simulate_tail, simulate_tail_verhulst
from .spectral import (
    HamiltonianMatrix,
    QuasiNumberBasis,
    SpectralDecomposition,
    WeightVector,
    backward_initial_weights,
    basis_values,
    bke_tail_probability,
    build_hamiltonian,
    eigendecompose,
    evolve,
    forward_initial_weights,
    fpe_density,
)
from .surface import (
    BicubicInterpolant,
    ControlGrid,
    FrontierSet,
    ProbabilitySurface,
    SolverConfig,
    build_surface,
    extract_frontiers,
    fit_spline,
    solve_u0,
)

__version__ = "0.1.0"
