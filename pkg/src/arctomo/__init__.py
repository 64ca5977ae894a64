"""Source reconstruction from one-sided boundary measurements of 2D
stationary radiative transport with scattering.

The package synthesizes exiting-radiation data on a boundary arc (forward
discrete-ordinates transport) and recovers the interior isotropic source on
the convex hull of the arc through the conjugate-analytic mode machinery:
integrating factors, finite-Hilbert chord systems, Cauchy-type interior
extension, and a ladder of inhomogeneous dbar problems.
"""

from .aanalytic import (
    AugmentedChordSystem,
    ChordSystem,
    ModeTrace,
    analyticity_residual,
    bukhgeim_cauchy,
    bukhgeim_hilbert,
    compute_F,
    finite_hilbert,
    solve_chord_system,
    trace_from_mesh,
)
from .atten import (
    HField,
    IntegratingFactors,
    compute_factors,
    compute_factors_for,
    compute_h,
    divergent_beam,
    hilbert_infinite,
    radon_line,
)
from .config import RunConfig
from .forward import (
    AngularFlux,
    BoundaryMeasurement,
    DirectionQuadrature,
    apply_K,
    apply_T1_inverse,
    extract_measurement,
    solve_forward,
    transport_fixed_point,
)
from .geometry import (
    BoundaryMesh,
    Domain,
    Phantom,
    Region,
    ScalarField,
    SpatialGrid,
    build_boundary_mesh,
    disk_grid,
    eval_phantom,
    eval_phantom_at,
    hull_grid,
    normalize_coordinates,
    paper_phantom,
)
from .kernels import (
    ScatteringKernel,
    coupling_modes,
    henyey_greenstein,
    kernel_eval,
    kernel_modes,
    polynomial_kernel,
    quadratic_kernel,
    truncate_to_polynomial,
    zero_kernel,
)
from .metrics import Metrics, compare_fields, section_values
from .reconstruct import (
    ReconstructionConfig,
    ReconstructionResult,
    assemble_source,
    extend_v_interior,
    measurement_to_mode_trace,
    reconstruct,
    recover_chord_traces,
    recover_low_modes,
    solve_dbar_cauchy,
    u_to_v,
    v_to_u,
)

__version__ = "0.1.0"
