"""qreflect: a 1D scattering laboratory for reflection under decoherence.

Three independent routes to the reflected probability of a wave packet
hitting a barrier: grid propagation of the Schrodinger equation, analytic
second-order kernels for environment-coupled dynamics (single particle and
the two-particle massive-target version), and stochastic state-diffusion
trajectories whose ensemble mean reproduces the open-system density operator.
"""

__version__ = "0.1.0"

from .grids import (GridTooNarrowError, PhaseSpaceField, SpatialGrid, WaveFunction,
                    default_grid, gaussian_packet, gaussian_state_from_moments,
                    qsd_steady_packet, to_momentum, to_position, wigner_transform)
from .model1 import (EnvironmentSpec, ReflectedSpectrum, born_delta_coefficient,
                     broadening_factor_integral, propagator_momentum,
                     propagator_position, reflected_density_p, reflected_density_x,
                     reflected_spectrum, sweep_total_p, total_reflected,
                     narrow_sideband_ratio)
from .model2 import (ConstrainedDensity, CutoffReport, EnergyConstraint,
                     JointReflectedResult, Model2Config, clamp_density,
                     conditional_reflected_env,
                     conditional_reflected_noenv, joint_reflected_map,
                     joint_reflected_noenv, marginal_reflected_noenv,
                     reflected_density_env, target_momentum_density,
                     timescale_cutoffs_model2, total_reflected_model2)
from .oscquad import QuadratureError, integrate_oscillatory
from .params import PhysicalParams, PotentialSpec, steady_target_width
from .potentials import potential_momentum, potential_momentum_numeric, potential_position
from .qsd import (EnsembleDensity, FluctuationReport, NoiseStream, TrajectoryMoments,
                  ensemble_density, fluctuation_report, moment_step, quantum_current,
                  run_ensemble, run_moment_trajectory, run_wavefunction_trajectory,
                  steady_moments, step_trajectory, wavefunction_moments)
from .timescales import (RegimeVerdict, TimescaleReport, check_regime,
                         compute_timescales, model2_kinematics,
                         wigner_spreading_check, wigner_spreading_ratio)
from .unitary import (BornResult, BoundaryLeakageError, CFLViolationError,
                      PrematureMeasurementError, PrematureStartError,
                      ProbabilityLedger, SnapshotSeries, born_reflection,
                      mean_energy, propagate, reflection_probability)

__all__ = [name for name in dir() if not name.startswith("_")]
