"""heatlab: heat-trace asymptotics of Schrodinger and drifting Laplacians
on exactly solvable compact models (circle, flat tori, round 2-sphere).

Determinism note: results must not depend on thread counts. BLAS reductions
are the one place threading could reorder floating-point sums, so if heatlab
is imported before numpy (true for the CLI entry points) we pin BLAS pools to
a single thread. Parallelism, where it exists, lives in the numba kernels,
which are written so their output is independent of the worker count.
"""

import os
import sys

if "numpy" not in sys.modules:
    for _v in ("OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "OMP_NUM_THREADS",
               "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(_v, "1")
    # The OMP pin above would also shrink numba's worker pool to one; size it
    # by the machine instead. Kernel results are worker-count independent by
    # construction (disjoint writes, sequential per-element reductions), so
    # this affects speed only.
    os.environ.setdefault("NUMBA_NUM_THREADS", str(os.cpu_count() or 1))

__version__ = "0.1.0"

from . import kernels, models, fields, operators, heattrace, asymptotics, weyl
from . import parametrix, isospectral, reports
from .models import build_circle, build_flat_torus, build_sphere, integrate
from .fields import (ScalarField, project, l2_norm_sq, h1_seminorm_sq,
                     witten_potential, dirichlet_norm)
from .operators import (OperatorSpectrum, assemble_schrodinger,
                        assemble_drifting_conjugated, assemble_drifting_galerkin,
                        eigen_decompose, eigen_system, exact_spectrum,
                        schrodinger_spectrum, coupling_matrix)
from .heattrace import (HeatTraceCurve, heat_trace, heat_kernel_diagonal,
                        duhamel_w1, duhamel_w2, duhamel_residual,
                        w2_scaled_limit, default_t_grid)
from .asymptotics import (ExpansionFit, PredictedCoefficients, estimate_dimension,
                          fit_coefficients, predicted_coefficients,
                          remainder_exponent, classify_h1)
from .weyl import (KaramataTestFunction, counting_function, unit_ball_volume,
                   weyl_ratio, karamata_check, eigenvalue_growth,
                   indicator_counting_g, constant_g)
from .parametrix import (RadialProfile, radial_profile, u0, u_next,
                         heat_invariants, weighted_kernel_relation)
from .isospectral import (SpectralInference, compare_spectra, infer_geometry,
                          infer_euler, isospectral_report)
