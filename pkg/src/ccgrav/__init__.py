"""Classical-channel model of Newtonian gravity on a bosonic cutoff lattice.

The package builds the measure-and-feedback circuit that reproduces a
softened 1/r pair interaction without quantum communication, the noise
generator that circuit unavoidably induces, closed-form dephasing and
heating analytics, and the SI-unit experiment bounds those rates place on
the cutoff length.
"""

from .analytics import (
    DEFAULT_CUTOFF_RADIUS,
    DEFAULT_TOLERANCE,
    DephasingEstimate,
    KappaResult,
    MomentumVarianceReport,
    asymptotic_lower_bound,
    dephasing_estimate,
    dephasing_rate,
    heating_rate,
    hopping_damping_rate,
    integral_I,
    kappa_sq,
    min_dephasing_estimate,
    momentum_variance_asymptote,
    optimal_xi,
)
from .bounds import (
    BoundReport,
    HeatingScenario,
    InterferometryScenario,
    bound_for_scenario,
    earth_scenario,
    heating_bound,
    interferometry_bound,
    molecule_scenario,
    recompute,
    rubidium_bec_scenario,
)
from .constants import CODATA, PhysicalConstants
from .dynamics import (
    AncillaOscillator,
    EvolutionConfig,
    NoiseGenerator,
    Trajectory,
    adjoint_coefficient,
    circuit_step,
    circuit_sweep,
    evolve,
    generator_apply,
    generator_residual,
    trace_norm,
)
from .errors import (
    CcgravError,
    LatticeSumError,
    PositivityError,
    QuadratureError,
    StepSizeError,
    TruncationOverflowError,
)
from .fock import (
    FockBasis,
    OperatorMatrix,
    Region,
    hop_op,
    interaction_hamiltonian,
    kinetic_hamiltonian,
    momentum_op,
    momentum_sq_op,
    number_op,
    one_body_op,
    total_number_op,
)
from .lattice import (
    HBAR,
    CouplingKernel,
    LatticeSpec,
    mode_function,
    overlap,
    softened_potential,
)

__version__ = "0.1.0"
