"""Exact simulation and closed-form analytics of Fock-space delocalization
in the self-dual kicked Ising chain."""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    BoundaryGeneric,
    BoundaryKick,
    CircuitSpec,
    DualUnitary,
    GateU2,
    MidSingleSite,
    MidTwoSite,
    RandomBrickwork,
    ising_phase,
    kick_gate,
    validate,
)
from .statevector import StateVector, amplitude, evolve, floquet_step, init_zero  # noqa: E402
from .fockspace import (  # noqa: E402
    ipr,
    ipr_du_analytic,
    ipr_perturbed_analytic,
    ks_statistic,
    moment_of_density,
    s_q_du_analytic,
)
from .dual import build_dual_set, ipr_via_m, overlap_via_dual  # noqa: E402
