"""Block-disordered subwavelength resonator chains with imaginary gauge
potentials: spectra, eigenmodes and localisation analysis."""

__version__ = "0.1.0"

from .capacitance import (
    NumericalError,
    SpectralData,
    SymmetrisedSystem,
    TridiagonalMatrix,
    eigenvalues,
    gauge_capacitance,
    gauge_weight,
    material_matrix,
    mode_profile,
    spectrum,
    symmetrise,
)
from .chains import (
    Block,
    BlockLibrary,
    BlockSequence,
    Chain,
    ResonatorParams,
    assemble_chain,
    sample_sequence,
    standard_blocks,
    subseed_rng,
)
from .experiments import (
    ContourSet,
    CriticalGamma,
    DosConvergence,
    EmpiricalCDF,
    Envelope,
    WindingCurve,
    critical_gamma,
    curve_distance,
    decay_per_gamma,
    dos_convergence,
    edge_contour,
    empirical_cdf,
    envelope,
    kolmogorov_distance,
    lyapunov_estimate,
    point_in_winding,
    winding_curve,
)
from .propagation import (
    FixedPoints,
    LyapunovExponents,
    RegionLabel,
    ScaledMatrix,
    SpectralRegion,
    basis_change,
    block_propagation,
    classify,
    count_sign_changes,
    fixed_points,
    lyapunov_grid,
    propagation_matrix,
    residual_grid,
    saxon_hutner,
    spectral_residual,
    symmetrised_propagation,
    symmetrised_transfer,
    total_lyapunov,
    total_propagation,
)
