"""Free energies and large-deviation rate functions of multiplicative Ising
models on Markov-Cayley trees, with exact enumeration oracles."""

from .errors import (
    GrowthConditionViolated,
    KinkAtZero,
    SizeLimitExceeded,
    TreeLDPError,
)
from .free_energy import (
    ClosedFormFreeEnergy,
    FiniteFreeEnergy,
    closed_form_free_energy,
    finite_free_energy,
    free_energy_derivative,
    g_term_finite,
)
from .ising_blocks import ModelSpec
from .ldp_rate import half_parametric, rate_at_derivative, rate_function
from .matrix_tree import GOLDEN_MEAN, TransitionMatrix, full_matrix, growth_rate, validate

__version__ = "0.1.0"
