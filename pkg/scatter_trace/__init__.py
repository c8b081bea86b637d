from .errors import (AccuracyError, BranchError, ConfigError, ConvergenceError, DomainError, ExtrapolationError,
                     FormatError, GridError, IntegrationError, MissedLevelError, PoleError, RangeError,
                     ResolutionError, ScatterTraceError, TailError, TruncationError, UnitarityError,
                     ValidationMismatch)
from .tabulation import Tabulation
from .potentials import DispersionProfile, PotentialKind, PotentialModel, evaluate, model_from_dict
from .scatter1d import (ScatterData1D, TransmissionSingularities, load_scatter1d, save_scatter1d, solve, solve_grid,
                        transmission_singularities)
from .pvmath import SampledFunction, TailModel, euler_constant, gamma_regularized, pv_hilbert, pv_symmetric
from .trace1d import (TraceResult, WeightFunction, casimir_energy_1d, density_of_states, multiple_reflection,
                      trace_direct, trace_reflection)
from .boxsim import BoxSpectrum, box_spectrum, mode_sum, radial_box_spectrum, radial_mode_sum
from .scatter3d import PhaseShiftSpectrum, SOperator, load_soperator, phase_shifts, save_soperator
from .trace3d import DispersionInputs, arg_det_S, casimir_energy_3d, dispersion_inputs, re_tr_f, trace_direct_3d
