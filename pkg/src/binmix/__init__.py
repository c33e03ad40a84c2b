"""Linear, second-order, energy-stable finite differences for binary compressible fluids."""
from .analysis import (DiagnosticsRecord, DispersionSetup, component_masses, discrete_energy,
                       dispersion_roots, growth_rate_fit, max_growth)
from .config import ConfigError, RunConfig, load_config, parse_config, serialize_config
from .energy import (DomainError, DoubleWell, EntropyMatrix, EQShiftError, FloryHuggins,
                     PengRobinson, RepulsionSingularityError)
from .grid import GridSpec
from .nondim import CharacteristicScales, nondimensionalize
from .presets import make_initial, preset_config
from .scheme import ModelParams, PositivityError, State, bootstrap, step
from .solver import LinearSolver, NonConvergenceError, SolverConfig

__version__ = "0.1.0"
