"""crncycles: build and numerically certify reaction networks whose
mass-action dynamics carry arbitrarily many stable limit cycles."""

from .crn import (
    Crn,
    CrnError,
    MergePolicy,
    NotKineticError,
    Reaction,
    Species,
    mass_action_odes,
    max_order,
    ode_to_crn,
    species_list,
)
from .cycles import (
    Annulus,
    CertificationReport,
    CycleReport,
    FluxReport,
    TooShort,
    certify,
    count_cycles,
    detect_cycle,
    dist_to_cycle,
    equilibrium_scan,
    flux_check,
)
from .integration import (
    IntegrationError,
    IntegratorSettings,
    SeedResult,
    StepSizeUnderflow,
    Trajectory,
    batch_integrate,
    integrate,
)
from .odes import KineticCheck, Monomial, PolyOdeSystem, is_kinetic
from .systems import (
    CenterField,
    CenterSet,
    ExactnessLoss,
    Family,
    NonpositiveRateError,
    RateTable,
    SeparationWarning,
    bimolecular_crn,
    check_separation,
    default_centers,
    factored_system,
    fast_slow_extension,
    planar_field,
    quadratized_lift,
    quadratized_system,
    rate_table,
    reciprocal_extension,
    seventh_order_crn,
    slow_manifold_v,
    two_species_system,
    xfactor_planar,
)

__version__ = "0.1.0"
