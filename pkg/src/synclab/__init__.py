"""Synchronisation and stability of delay-coupled pulse oscillator networks."""

__version__ = "0.1.0"

from .network import (DirectedNetwork, NetworkError, all_to_all, diameter, generate_random,
                      is_strongly_connected, load_network, ring, save_network)
from .potential import (CallablePotential, IFPotential, PotentialDomainError, PotentialFunction,
                        sync_alpha, sync_period, transfer)
from .simulator import (SimulationError, SimulatorState, Spikes, run, step, perturb,
                        random_state, synchronous_state)
from .stability import (StabilityError, StabilityOperator, build_operator, exact_map,
                        gershgorin_check, linear_map, perron_simplicity_check, spectrum)

__all__ = [
    "__version__", "DirectedNetwork", "NetworkError", "all_to_all", "diameter",
    "generate_random", "is_strongly_connected", "load_network", "ring", "save_network",
    "CallablePotential", "IFPotential", "PotentialDomainError", "PotentialFunction",
    "sync_alpha", "sync_period", "transfer", "SimulationError", "SimulatorState", "Spikes",
    "run", "step", "perturb", "random_state", "synchronous_state", "StabilityError",
    "StabilityOperator", "build_operator", "exact_map", "gershgorin_check", "linear_map",
    "perron_simplicity_check", "spectrum",
]
