"""Krein-system tools for half-line Sturm-Liouville spectral analysis.

Submodules
----------
coeffs      sampled coefficient functions, potential families, tail integrals
riccati     ``q = a^2 + a'`` by contraction
systems     Krein, Dirac and Sturm-Liouville integrators
accelerant  resolvent equation route to the Krein coefficient
spectral    spectral densities, Szego-type integrals, Krein-system diagnostics
asympt      eigenfunction asymptotics, embedded-eigenvalue scans, iterated series
cli         scenario runner behind the ``krein`` command
"""

__version__ = "0.1.0"

from .coeffs import (CoefficientBundle, SampledFunction, TailModel, cos_transform_synthesize,
                     make_family, tail_integral, uniform_grid)
from .riccati import RiccatiSolution, kappa_of, potentials_from_a, riccati_grid, solve_contraction
from .systems import (DiracTrajectory, KreinTrajectory, TransferMatrixSample, integrate_dirac,
                      integrate_krein, integrate_Q, sl_solutions, transfer_matrix)
from .accelerant import (AccelerantKernel, ResolventSolution, positivity_min_eig,
                         pp_from_resolvent, solve_resolvent)
from .spectral import (ConditionsDiagnostics, SpectralDensityEstimate, estimate_Pi,
                       rho_from_sigma, secC_lemma_check, weighted_log_integral, weyl_density)
from .asympt import (AsymptoticFit, EmbeddedScan, SeriesEvaluation, SubordinacyDiagnostics,
                     ck_series_Q, embedded_scan, fit_sin, growth_exponent, subordinacy_sandwich)

__all__ = [
    "CoefficientBundle", "SampledFunction", "TailModel", "cos_transform_synthesize",
    "make_family", "tail_integral", "uniform_grid",
    "RiccatiSolution", "kappa_of", "potentials_from_a", "riccati_grid", "solve_contraction",
    "DiracTrajectory", "KreinTrajectory", "TransferMatrixSample", "integrate_dirac",
    "integrate_krein", "integrate_Q", "sl_solutions", "transfer_matrix",
    "AccelerantKernel", "ResolventSolution", "positivity_min_eig", "pp_from_resolvent",
    "solve_resolvent",
    "ConditionsDiagnostics", "SpectralDensityEstimate", "estimate_Pi", "rho_from_sigma",
    "secC_lemma_check", "weighted_log_integral", "weyl_density",
    "AsymptoticFit", "EmbeddedScan", "SeriesEvaluation", "SubordinacyDiagnostics",
    "ck_series_Q", "embedded_scan", "fit_sin", "growth_exponent", "subordinacy_sandwich",
]
