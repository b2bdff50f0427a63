//! Numerical feasibility, maximal alphabet size, the qutrit region map and
//! minimal-entanglement thresholds.

pub mod config;
pub mod feasibility;
pub mod lm;
pub(crate) mod multistart;
pub mod nmax;
pub mod objective;
pub mod region;
pub mod threshold;

pub use config::SearchConfig;
pub use feasibility::{feasible, FeasibilityResult, FeasibilityStatus};
pub use nmax::{n_max, NMaxEvidence, NMaxResult};
pub use region::{region_map, RegionCell, RegionMap};
pub use threshold::{capacity_lower_bound, min_entropy_for_n, min_lambda0};
