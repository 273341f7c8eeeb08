"""valsynth: decide value-function membership for zero-sum differential games
with terminal payoff, synthesize a realizing game, and certify it numerically.
"""

from .config import RunConfig, Tolerances
from .expr import (CandidateError, CandidateValue, GameFrame, Position,
                   load_candidate, parse_candidate)
from .piecewise import PiecewiseForm, decompose
from .nonsmooth import (CJClass, classify_cj, clarke, dini_polytope,
                        directional_derivative, limiting_gradients)
from .conditions import full_check, VerdictReport
from .hamiltonian import (HamiltonianModel, build_sample_set,
                          closed_form_hamiltonian, extend_mcshane,
                          verify_regularity)
from .games import (GameDynamics, grid_optimum, synth_isaacs_1d, synth_maxmin,
                    synth_minmax, verify_hamiltonian_identity)
from .pde import (GridSpec, ValueField, minimax_spot_check, solve_dp,
                  solve_monotone_grid)

__version__ = "0.1.0"
