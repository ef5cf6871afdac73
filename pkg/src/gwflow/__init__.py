"""gwflow: Gates-Westcott growth dynamics, oracles and limit solvers."""

__version__ = "0.1.0"

from .domain import DomainError, Torus, Window
from .heightfield import (Box, HeightField, Row, StepType, ValidationReport,
                          eval_height, gradient_stats, linear_field, validate)
from .profiles import (AffineProfile, AffineSinusoidProfile, DiscretizationError,
                       GenericProfile, PiecewiseLinearProfile, discretize)
from .dynamics import (CreationSet, SimulationError, Trajectory, evolve,
                       fields_equal, height_at, periodize, replica_seed,
                       run_markov_split, sample_creations)
from .polymer import (LightRectangle, chain_tail_bound, corollary_bound,
                      estimate_chain_probability, light_rectangle,
                      longest_chain_bruteforce, longest_light_chain,
                      row_oracle_inputs, variational_height)
from .equilibrium import (GrowthReport, KernelParams, Slope, burn_in_stationary,
                          dispersion, kernel, kink_count_variance, measure_growth,
                          speed, speed_grad, stationary_ensemble,
                          structure_function)
from .hjsolver import (GridSolution, SchemeParams, hopf_lax_1d,
                       numerical_hamiltonian, solve, vhat)
from .hydro import (ConvergenceReport, PropertyReport, RescaledField, axiom_suite,
                    convergence_experiment, locality_probe, rescale)
from .config import ConfigError, ExperimentConfig, parse_config, serialize
from .fieldio import dump_events, dump_field, load_field, write_csv
