"""Gate-scheduled one-dimensional quantum walks.

Simulates a two-level walker on a line whose per-site coin alternates
between Hadamard and sigma-x under a compiled gate schedule, enabling
dispersionless confinement ("corralling") and transport of Gaussian wave
packets, with fidelity reporting, an exact momentum-space cross-check, and
coin-noise robustness sweeps.
"""

__version__ = "0.1.0"

from .analysis import (BlochGrid, FidelityReport, average_fidelity,
                       displacement, fidelity, fidelity_scan, packet_center,
                       probability_distribution, rl_phase_flip,
                       sub_packet_centers)
from .coins import (CoinParams, HADAMARD, HADAMARD_PARAMS, SIGMA_X,
                    SIGMA_X_PARAMS, make_coin)
from .disorder import (DisorderSpec, SweepReport, disorder_sweep,
                       disordered_fidelity, perturb_coins)
from .engine import CoinField, RecordPolicy, Trajectory, evolve, step
from .errors import (CorralwalkError, EdgeOverflowError, OracleDomainError,
                     ParameterError, PlanError, PlanParseError, ShapeError,
                     SizingError)
from .kspace import (KMode, analytic_split_state, fft_evolve,
                     free_walk_lattice, mk_eigensystem)
from .schedule import (CompiledProtocol, CorralPlan, GateEvent, Schedule,
                       Station, auto_lattice, compile_plan, corral_schedule,
                       estimate_revival_time, multistation_plan,
                       refine_measurement_time, single_shot_plan)
from .state import (BlochSpin, GaussianSpec, Lattice, SpinorField,
                    delta_state, gaussian_state)

__all__ = [name for name in dir() if not name.startswith("_")]
