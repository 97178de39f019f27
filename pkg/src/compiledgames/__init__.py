"""Bounds, sum-of-squares certificates and compiled single-prover simulations
for two-player correlation games."""

__version__ = "0.1.0"

from .games import (
    BellFunctional,
    GameFileError,
    GuardExceeded,
    MnxParams,
    bias_to_winprob,
    chsh,
    classical_bias,
    elegant,
    functional_from_game,
    load_game,
    mnx_functional,
    mnx_quantum_bound,
)
from .sdp import NotConverged, SdpSolution, solve_xor_sdp, vector_strategy_oracle
from .sos import SosCertificate, build_sos, ostrev_vectors, verify_sos_identity
from .quantum import QuantumStrategy, StateVector, bias_of_strategy
from .satwap import SatwapGame, satwap_bounds, satwap_optimal_strategy
from .compiled import (
    ClassicalProver,
    HonestProver,
    SecurityConfig,
    exact_compiled_bias,
    ind_cpa_experiment,
    run_compiled,
)
from .pseudo import CryptoMomentMatrix, Degree2Poly, build_moment_matrix, sos_term_check
from .selftest import (
    SelfTestReport,
    anticommutator_residual,
    elegant_selftest,
    jordan_extract,
    mnx_selftest,
    satwap_selftest_residuals,
)
