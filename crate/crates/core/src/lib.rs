//! Priority-tier and reserve-system vaccine allocation microsimulation.
//!
//! The pipeline runs in fixed stages over a weighted population:
//!
//! 1. [`population`]: ingest PUMS-shaped CSVs or generate a synthetic
//!    population.
//! 2. [`risk`]: impute a high-risk flag per person from a demographic
//!    probability table.
//! 3. [`adi`]: score each family on the 17-component Area Deprivation Index
//!    and assign weighted national deciles.
//! 4. [`tiers`]: label persons with CDC priority groups and resolve each
//!    person's highest tier.
//! 5. [`allocation`]: compute expected allocations for any supply under plain
//!    priority or an over-and-above reserve.
//! 6. [`metrics`]: death-share benchmarks, share curves and state fair-share
//!    indices.
//!
//! [`pipeline`] ties the stages together and writes the output bundle.

pub mod adi;
pub mod allocation;
pub mod metrics;
pub mod pipeline;
pub mod population;
pub mod risk;
pub mod rng;
pub mod tiers;

pub use allocation::{Eligibility, ReservePolicy, Strata};
pub use population::{PersonRecord, Population};
