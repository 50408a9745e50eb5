//! Radial plurisubharmonic functions on balls in `C^n`: exact complex
//! Monge–Ampère measures, their non-pluripolar parts, relative capacities
//! and numerical diagnostics for capacity-decay conditions.

pub mod capacity;
pub mod cli;
pub mod compact;
pub mod convergence;
pub mod measure;
pub mod oracle;
pub mod profile;
pub mod series;

pub use capacity::{capacity, extremal_profile, CapacityError};
pub use compact::RadialCompact;
pub use measure::{ma_measure, np_part, RadialMeasure, RadialTestFunction};
pub use profile::{ConvexProfile, LeftEnd, ProfileError};
pub use series::{DiagnosticSeries, LimitFlag};
