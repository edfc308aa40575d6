"""Two V-type atoms crossing a single-mode cavity: final-field quasiprobabilities,
photon statistics and squeezing."""

__version__ = "0.1.0"

from .dynamics import (AtomFieldConfig, AtomState, ProtocolTimes, evolve_oracle,  # noqa: E402
                       final_field_density, first_pass, postselect_ground, run_protocol,
                       second_pass)
from .errors import (ClosedFormUnsupportedError, DimensionError, DomainError,  # noqa: E402
                     UndefinedStatisticError, ZeroNormError)
from .fock import (DensityMatrix, FieldOperator, FieldVector, expectation,  # noqa: E402
                   make_annihilation, partial_trace, validate)
from .quasiprob import (PhaseSpaceGrid, closed_form_reference, eval_grid, husimi_q,  # noqa: E402
                        quadrature_integral, wigner)
from .states import (InputFieldSpec, choose_cutoff, coherent_vector,  # noqa: E402
                     thermal_density)
from .statistics import (closed_moment_sums, mandel_q, moments, quadrature_variance,  # noqa: E402
                         squeezing_opt)
