"""Spectra, spectral zeta functions, determinants, Casimir forces and heat-trace
asymptotics for Laplacians on metric graphs with self-adjoint matching conditions."""

from .errors import (
    CutoffError,
    GraphSpecError,
    NumericalError,
    QGError,
    ValidationError,
    ZetaPoleError,
)
from .graph import (
    MatchingConditions,
    MetricGraph,
    QuantumGraph,
    VertexPreset,
    build_preset_graph,
    general_graph,
    interval_graph,
    load_graph,
    piston_graph,
    raw_graph,
    star_graph,
    validate_self_adjoint,
)
from .observables import (
    casimir_force,
    heat_trace_asymptotic,
    heat_trace_direct,
    piston_force,
    piston_sweep,
    spectral_determinant,
    vacuum_energy,
    vacuum_energy_mixed_star,
    verify_new_integral,
)
from .secular import FORMS, make_pair
from .spectrum import Spectrum, equal_star_closed_form, find_spectrum
from .zeta import zeta, zeta_prime_zero, zeta_zero

__version__ = "0.1.0"
