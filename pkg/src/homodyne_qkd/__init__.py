"""Security analysis of four-state coherent-pulse QKD with homodyne detection."""

__version__ = "0.1.0"

from .core_math import ConvergenceError, Interval, QuadratureSpec, erfc, integrate_1d, integrate_2d_region
from .states import (
    CoherentEnsemble,
    CoherentState,
    QuadratureDistribution,
    distribution_distance,
    ensemble_density,
    quadrature_density,
    tail_mass,
)
from .protocol import (
    BitDecision,
    ProtocolParams,
    ber_no_eve,
    decide_bit,
    postselection_efficiency,
    sift,
)
from .attacks import (
    AttackKind,
    AttackModel,
    ResendTriple,
    ber_intermediate,
    ber_simultaneous,
    eve_ber_intercept,
    intermediate_attack_signal,
    resend_probabilities,
    simultaneous_attack_signal,
    wrong_basis_monitor,
)
from .keygain import (
    KeyGainReport,
    Optimum,
    key_gain,
    mutual_information,
    optimize,
    privacy_amplification_bound,
    secure_region,
    tau,
)
from .montecarlo import SimConfig, SimResult, simulate, simulate_eve_bs
