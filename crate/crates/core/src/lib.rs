//! Random flights with finitely many or Poisson-many changes of direction:
//! sampling, exact densities, large-deviation rate functions and Monte Carlo
//! checks of the decay rates.

pub mod density;
pub mod error;
pub mod family;
pub mod flight;
pub mod format;
pub mod quadrature;
pub mod rate;
pub mod sampling;
pub mod stats;
pub mod verify;

pub use density::{
    density_grid, poisson_mixture_density, write_density_csv, DensityRow, GridLaw,
    IsotropicDensity, StandardLaw,
};
pub use error::{Error, Result};
pub use family::Family;
pub use flight::{simulate, write_jsonl, FlightSpec, Model, Path, PathRecord, PathSummary, Tracer};
pub use format::{fmt12, round12};
pub use rate::{
    compare_rates, crossing_radius_4d, write_rate_csv, Crossing, RateComparison, RateFunction,
};
pub use sampling::{RngStream, StreamRng};
pub use verify::{
    convergence_race, estimate_exit_probability, estimate_tail, fit_decay_rate, run_verification,
    Check, FlightTemplate, RateFit, TailEstimate, VerificationReport, VerifyConfig,
};
