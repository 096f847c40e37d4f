"""Neutron Pendellosung interferometry toolkit for diamond-structure
crystals: reflection planning, fringe simulation, and extraction of the
temperature factor and the neutron-electron scattering length."""

from .constants import CODATA, PhysicalConstants
from .errors import (
    ConfigError,
    DegenerateAbscissa,
    DegenerateDesign,
    DegenerateGeometry,
    EmptyWindow,
    ForbiddenReflection,
    FormFactorRangeError,
    InsufficientData,
    NoReflection,
    PendellosungError,
    SingularDesign,
)
from .formfactor import BUILTIN_TABLES, FormFactorTable, GERMANIUM_TABLE, SILICON_TABLE
from .fringes import (
    BeamSpectrum,
    BladeGeometry,
    FringeCount,
    FringeProfile,
    bessel_j0,
    fringe_count,
    intensity_profile,
    pendellosung_argument,
)
from .inference import (
    BudgetResult,
    FitResult,
    Measurement,
    MonteCarloResult,
    charge_radius_from_bne,
    debye_waller_correct,
    error_budget,
    extract_bne_single,
    fit_bne,
    fit_temperature_factor,
    joint_fit,
    monte_carlo_validate,
    slope_uncertainty,
    synth_measurements,
)
from .lattice import (
    BUILTIN_CRYSTALS,
    GERMANIUM,
    SILICON,
    CrystalSpec,
    Reflection,
    ReflectionClass,
    ScatteringModel,
    b_from_b_meas,
    b_meas,
    b_of_q,
    classify,
    debye_waller,
    q_over_4pi,
    scattering_model,
    structure_factor_magnitude,
)
from .planner import (
    Contaminant,
    ReflectionPlan,
    SpectrumWindow,
    SurveyResult,
    blade_assignment,
    bragg_angle,
    candidates,
    contamination,
    enumerate_pure,
    plan_reflection,
    reflection_window,
    survey,
)

__version__ = "0.1.0"
