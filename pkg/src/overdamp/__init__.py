"""Overdamped limit of mean-field kinetic Langevin dynamics.

Simulates the underdamped N-particle system and its overdamped counterpart
under shared Brownian noise and measures how fast they approach each other as
the friction grows.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    CapacityError,
    ConfigError,
    ConfigParseError,
    DomainError,
    OverdampError,
    SingularityError,
)
from .model import (  # noqa: E402
    ExternalPotential,
    Integrator,
    InteractionKernel,
    KineticEnsemble,
    OverdampedEnsemble,
    SimConfig,
    mean_field_force,
    mean_field_force_all,
)
from .integrate import simulate_coupled  # noqa: E402
from .study import RateStudySpec, run_rate_study  # noqa: E402
