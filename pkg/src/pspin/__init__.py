"""Classical and quantum dynamics of kicked p-spin models.

A collective spin receives a linear precession about y and a periodic
nonlinear twist about z of strength k and order p (p = 2 is the kicked top).
The package provides the classical stroboscopic map with its symmetry and
stability analysis, chaos diagnostics (Lyapunov exponents, chaotic-sea area,
phase-portrait similarity), the quantum Floquet operator with spectral and
OTOC-based chaos measures, and a deterministic parallel (k, alpha) scan
engine with resumable checkpoints.
"""

__version__ = "0.1.0"

from .params import ModelParams
from .classical import (GreatCircle, Trajectory, inverse_step, involution_t,
                        involution_t_tilde, rotation_x_pi, rotation_y_pi,
                        step, symmetry_curves, tangent_map, trajectory,
                        unit_vector)
from .stability import (FixedPointRecord, LocalMap2D, StabilityClass,
                        StabilityKind, bifurcated_orbit_positions,
                        classify_fixed_point, equator_orbit_eigenvalues,
                        equator_orbit_local_trace, find_fixed_points,
                        onset_of_new_fixed_points, pole_bifurcation_alphas,
                        pole_local_map)
from .chaos import (AnalyticLyapunov, AreaResult, LyapunovResult,
                    SimilarityResult, chaotic_area, fibonacci_sphere,
                    local_lyapunov_field, lyapunov_analytic, lyapunov_qr,
                    max_lyapunov_over_seeds, phase_space_similarity)
from .floquet import (FloquetOperator, ParityBlocks, SpectralData,
                      SpinRepresentation, eigensystem, floquet_operator,
                      heisenberg_evolve, load_floquet, load_spectrum,
                      parity_blocks, parity_operator, save_floquet,
                      save_spectrum, spin_operators)
from .qchaos import (R_COE, R_POISSON, CoeNormalization, OtocSeries,
                     QuantumLyapunovFit, RatioStatistics, coe_normalization,
                     coe_sample, fit_quantum_lyapunov, floquet_delta,
                     floquet_gamma, ipr, localization_delta,
                     mean_adjacent_ratio, normalized_gamma, otoc_series)
from .scan import (ScanSpec, ScanTable, cell_seed, checkpoint, resume,
                   run_scan)
