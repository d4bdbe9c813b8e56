"""Boolean automata networks under block-sequential schedules and their general iteration graphs."""

from giglab.network import (
    Network,
    StateSpaceGuard,
    complement,
    config_from_str,
    config_to_str,
    load_network,
    validate_network,
)
from giglab.schedules import (
    UpdateSchedule,
    enumerate_attractors,
    find_attractor,
    macro_step,
    validate_schedule,
)
from giglab.gig import build_gig, set_metrics, scc_decomposition
from giglab.circuits import CircuitDescriptor, make_circuit, verify_lemmas

__version__ = "0.1.0"

__all__ = [
    "CircuitDescriptor",
    "Network",
    "StateSpaceGuard",
    "UpdateSchedule",
    "build_gig",
    "complement",
    "config_from_str",
    "config_to_str",
    "enumerate_attractors",
    "find_attractor",
    "load_network",
    "macro_step",
    "make_circuit",
    "scc_decomposition",
    "set_metrics",
    "validate_network",
    "validate_schedule",
    "verify_lemmas",
]
