"""Composite-learning backstepping control laboratory.

Simulation and estimation library for strict-feedback uncertain systems:
modular backstepping with jet-propagated partial derivatives, swapping
regression, staged exciting-strength maximization, and a composite
high-order adaptation law, plus a scenario harness with CSV traces,
summary metrics and rendered figures.
"""

from .backstepping import (BackstepOutput, ControlGains, backstep,
                           backstep_jets, closed_loop_matrix)
from .baselines import ControllerKind, make_controller
from .excitation import (ExcitationMemory, detect_active, excitation_predicates,
                         min_singular, staged_update, sub_matrix)
from .jets import Jet, JetSpace, jet_space
from .numerics import (FilterCascade, LtiGenerator, SimulationDiverged,
                       SlidingWindow, gaussian_noise, reference_step, rk4_step)
from .plant import (ControllerFault, DisturbanceSpec, PlantModel,
                    benchmark_msd, benchmark_second_order, disturbance_sample,
                    make_plant, plant_derivative)
from .runner import MetricsRecord, Trace, run_scenario, summarize
from .scenarios import (BUILTINS, ReferenceSpec, ScenarioSpec, builtin_case1,
                        builtin_case2, builtin_case3, case3_damping_sweep,
                        load_scenario, spec_from_text, spec_to_text)
from .swapping import (SwappingState, excitation_integrands, output_p,
                       swapping_derivative)
from .tuner import (compute_z, derivative_chain, epsilon, lyapunov_Vtheta,
                    theta_dot, xi)

__version__ = "0.1.0"
