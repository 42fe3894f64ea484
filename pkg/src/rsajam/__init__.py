"""Generalized random sequential adsorption on Erdős–Rényi random graphs.

Threshold, Tetris and SFAP dynamics: exact simulation on explicit graphs,
fast counts-only exploration, and the deterministic fluid limits they
converge to.
"""

from .errors import BracketError, CouplingError, DomainError, ParameterError, StateError
from .fluid import (FluidSolution, drift_sfap, drift_tetris, drift_threshold, integrate, jamming_constant,
                    sfap_closed_form, tetris_crossing, threshold_k1_jamming)
from .graph import GraphInstance, VertexOrder, sample_er_graph, sample_permutation
from .montecarlo import EnsembleResult, deviation_from_fluid, run_ensemble
from .processes import (JammingSummary, Kind, ModelSpec, StateCounts, Trajectory, jamming_summary,
                        run_direct, run_explore_counts, run_explore_coupled)

__version__ = "0.1.0"
