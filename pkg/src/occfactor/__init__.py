"""occfactor: compress exact CI wavefunctions into occupation-product models.

The package covers the whole workflow: build or ingest electron integrals
(`integrals`), solve for exact ground states and density matrices (`fci`),
rotate to the natural-orbital basis (`natorb`), fit the hierarchical
occupation-product model or the baseline regressions (`ansatz`,
`baselines`), and score the result (`metrics`).  The `occfactor` console
script exposes the same pipeline as subcommands.
"""

from .ansatz import (AnsatzModel, FeatureMatrix, FitConfig, build_features,
                     fit_ansatz, fit_magnitudes, fit_phase, load_model,
                     predict, save_model)
from .baselines import BaselineFit, BaselineScheme, fit_baseline
from .fci import (CIVector, ConvergenceError, Determinant, apply_hamiltonian,
                  compute_rdm1, compute_rdm2, energy_from_rdms,
                  enumerate_basis, solve_ground_state)
from .integrals import (FcidumpError, HubbardSpec, IntegralSet, build_hubbard,
                        read_fcidump, write_fcidump)
from .metrics import (FitReport, SweepSpec, evaluate_fit, overlap, r_squared,
                      relative_log_error, sweep, write_csv)
from .natorb import (OrbitalRotation, natural_orbital_basis, no_pipeline,
                     transform_integrals)
from .solvers import (BoundMinProblem, NnlsProblem, minimize_bounded,
                      solve_nnls)

__version__ = "0.1.0"

__all__ = [
    "AnsatzModel", "BaselineFit", "BaselineScheme", "BoundMinProblem",
    "CIVector", "ConvergenceError", "Determinant", "FcidumpError",
    "FeatureMatrix", "FitConfig", "FitReport", "HubbardSpec", "IntegralSet",
    "NnlsProblem", "OrbitalRotation", "SweepSpec", "apply_hamiltonian",
    "build_features", "build_hubbard", "compute_rdm1", "compute_rdm2",
    "energy_from_rdms", "enumerate_basis", "evaluate_fit", "fit_ansatz",
    "fit_baseline", "fit_magnitudes", "fit_phase", "load_model",
    "minimize_bounded", "natural_orbital_basis", "no_pipeline", "overlap",
    "predict", "r_squared", "read_fcidump", "relative_log_error",
    "save_model", "solve_ground_state", "solve_nnls", "sweep",
    "transform_integrals", "write_csv", "write_fcidump",
]
