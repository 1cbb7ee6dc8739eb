"""Floquet-Lindblad interconversion of GHZ and W states of three Rydberg atoms.

Modules:

* :mod:`flsim.operators`: Lindblad superoperators, matrix exp/log, spectra.
* :mod:`flsim.atoms`: basis, named states, effective and full Hamiltonians.
* :mod:`flsim.dissipation`: engineered decay channels and closed-form laws.
* :mod:`flsim.dynamics`: constant and time-dependent propagation.
* :mod:`flsim.pulses`: rectangular and Gaussian pi pulses.
* :mod:`flsim.protocols`: the six-step conversion cycles and their spectra.
* :mod:`flsim.perturbations`: phase noise, distance, timing and detuning errors.
* :mod:`flsim.experiments`, :mod:`flsim.cli`: the ``flsim`` command.
"""

__version__ = "0.1.0"

from .atoms import (  # noqa: E402
    LaserParams,
    PumpVariant,
    VdwParams,
    build_effective_hamiltonian,
    build_full_hamiltonian,
    mhz,
    named_state,
    projector,
    to_mhz,
)
from .dissipation import ChannelKind, DecayParams, decay_duration, effective_channels  # noqa: E402
from .dynamics import Trajectory, propagate_const, propagate_timedep  # noqa: E402
from .errors import (  # noqa: E402
    BranchAmbiguityError,
    ConfigError,
    CoverageError,
    FlsimError,
    InvalidInputError,
    NonUniqueSteadyStateError,
    NumericalError,
    StiffnessError,
)
from .operators import JumpChannel, liouvillian, matrix_exp, matrix_log  # noqa: E402
from .perturbations import ImperfectionSpec, PhaseNoiseSpec, apply_imperfections, phase_noise_trace  # noqa: E402
from .protocols import (  # noqa: E402
    Protocol,
    ProtocolLabel,
    effective_liouvillian,
    make_conversion_I,
    make_conversion_II,
    run_cycles,
    steady_state_analysis,
    sweep_ratio,
)
from .pulses import PulseKind, PulseShape  # noqa: E402
