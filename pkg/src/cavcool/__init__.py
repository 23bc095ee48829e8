"""Cavity-mediated laser cooling of a particle trapped along the cavity axis.

Three layers compute the same cooling physics: a closed-form cooling law
(:mod:`cavcool.analytic`), the linear rate equations it is derived from
(:mod:`cavcool.rateeq`), and a full master-equation reference on a
truncated Fock space (:mod:`cavcool.oracle`).  :mod:`cavcool.scan` sweeps
parameters and locates the triplet of cooling resonances.
"""

from .analytic import (
    BlochState,
    CoolingLaw,
    ResonanceCatalogue,
    Status,
    bloch_steady,
    bloch_trajectory,
    cooling_law_closed,
    resonance_catalogue,
    strong_drive_cooling_law,
    weak_drive_mss,
)
from .errors import (
    CavcoolError,
    IntegrationUnstableError,
    NumericalError,
    ParameterError,
    ResonancePoleError,
    SingularSystemError,
    StepTooLargeError,
)
from .params import SystemParams, ValidityReport, gamma_n, load_params, validate, xi_pm

__version__ = "0.1.0"
