"""Numerical certificates for binding-energy positivity of particle-field Hamiltonians.

The toolkit computes the effective one-body ground energy e0 = inf spec(K(p)+V)
on periodic lattices, checks the Bernstein-function inequalities that make the
dispersion bounds work, and cross-validates the energy comparison
E^V <= E^0 + e0 on exactly diagonalizable particle-boson models.
"""

__version__ = "0.1.0"

from .bernstein import BernsteinFunction, exponential_inequality_check, lemma1_check
from .operators import (
    BernsteinKinetic,
    Coulomb,
    GaussianWell,
    GridSpec,
    Harmonic,
    NonRelativistic,
    SemiRelativistic,
    SquareWell,
    Tabulated,
    Yukawa,
    ZeroPotential,
    h3_margin,
    kinetic_on_grid,
    potential_on_grid,
)
from .onebody import (
    BindingCertificate,
    SolveResult,
    binding_certificate,
    converge_study,
    ground_state,
    variational_upper_bound,
)
from .fock import (
    FockTruncation,
    Mode,
    NelsonInstance,
    assemble,
    check_h2,
    check_h3,
    ground_pair,
    theorem_verify,
    trial_state_verify,
)

__all__ = [
    "BernsteinFunction",
    "BernsteinKinetic",
    "BindingCertificate",
    "Coulomb",
    "FockTruncation",
    "GaussianWell",
    "GridSpec",
    "Harmonic",
    "Mode",
    "NelsonInstance",
    "NonRelativistic",
    "SemiRelativistic",
    "SolveResult",
    "SquareWell",
    "Tabulated",
    "Yukawa",
    "ZeroPotential",
    "assemble",
    "binding_certificate",
    "check_h2",
    "check_h3",
    "converge_study",
    "exponential_inequality_check",
    "ground_pair",
    "ground_state",
    "h3_margin",
    "kinetic_on_grid",
    "lemma1_check",
    "potential_on_grid",
    "theorem_verify",
    "trial_state_verify",
    "variational_upper_bound",
]
