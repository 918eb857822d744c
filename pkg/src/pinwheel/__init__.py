"""Least-energy pinwheel solutions of competitive Schrödinger systems.

Only the first component is stored; the others are exact angular index
rotations of it.
"""
from .errors import ConfigurationError, ConvergenceError, NonpositiveDenominator, OverlapError
from .functional import (EnergyBreakdown, PinwheelEnergy, component_energy, energy_J,
                         gradient_J, nehari_residual, nehari_scalar, overlap)
from .grid import (ComponentField, PolarGrid, RadialGrid, build_grid, inner_product_V,
                   integrate, laplacian)
from .partition import (PartitionResult, extract_partition, interface_diagnostics,
                        segregation_trace, sign_changing)
from .potential import RadialPotential, evaluate, validate
from .scalar import (GroundState, build_test_tuple, decay_fit, ground_state_Gn,
                     ground_state_radial, truncate)
from .solver import (SolveReport, continuation, initial_guess, minimize, minimize_multistart,
                     radiality_score, splitting_monitor)
from .symmetry import (PinwheelConfig, check_equivariance, component_shift, orbit_points,
                       shift_field)

__version__ = "0.1.0"
