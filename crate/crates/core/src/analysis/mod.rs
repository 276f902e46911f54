//! Scaling fits and the desk-scale experiments built on them.

pub mod continuum;
pub mod fit;
pub mod gaussian;
pub mod moments;
pub mod scaled_range;
pub mod susceptibility;
pub mod triangle;

pub use continuum::{continuum_study, exact_levels, rw_continuum, ContinuumLevel, ContinuumStudy};
pub use gaussian::{fit_rows, gaussian_fit, scaled_samples, FitOptions, ScalingFit, ScalingSample};
pub use moments::{moment_profile, MomentProfile};
pub use scaled_range::{scaled_range_experiment, Backend, ScaledRangeConfig, ScaledRangeReport};
pub use susceptibility::{susceptibility, susceptibility_fit, SusceptibilityFit};
pub use triangle::{triangle_direct, triangle_estimate, TriangleEstimate};
