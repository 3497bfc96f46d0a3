//! Shared semantic types: time index, regions, visits, cohorts, networks
//! and stress series.

mod cohort;
mod month;
mod network;
mod region;
mod stress;
mod visit;

pub use cohort::{matches, CohortFilter};
pub use month::{parse_month, MonthIndex};
pub use network::FlowNetwork;
pub use region::{RegionId, RegionInfo, StateCode, Zip3};
pub use stress::{AbsorptivityResult, StressProfile};
pub use visit::{normalize_code, AgeBands, AgeGroup, Race, VisitRecord};
