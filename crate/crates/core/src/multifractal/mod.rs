//! Thick points: the counting scheme bounding the dimension of `T(a)` from
//! above and the perfect-thick-point / energy scheme bounding it from below.

pub mod energy;
pub mod lower;
pub mod upper;

pub use energy::{
    cube_self_energy, energy_of_weights, energy_scheme, mu_n_energy, EnergyOptions, EnergyReport, MuNSample,
};
pub use lower::{
    corr_constant, corr_constant_from_times, correlation_inequality_check, event_grid, perfect_probability,
    perfect_thick_trace, strip_probability, CorrelationOptions, CorrelationReport, EventGrid, GridOptions,
    LowerSchemeParams, PerfectThickTrace,
};
pub use upper::{
    box_dimension_estimate, count_high_centers, empty_above_four_check, exact_tail_probability, run_upper_scheme,
    thickness_ratio, DimensionFit, DimensionPoint, EmptyAboveFourReport, LevelCount, ThickPointReport, UpperExperiment,
    UpperSchemeParams,
};
