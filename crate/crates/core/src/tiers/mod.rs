//! Priority-group labelling and tier resolution.
//!
//! Stages run in a fixed order, each with its own random substream:
//! occupational and demographic groups, infant month classes, the pregnancy
//! cohort, then resolution of each person's highest rank.

mod assign;
mod census;
mod schedule;

use thiserror::Error;

pub use assign::{
    assign_group_membership, resolve_highest_tier, run_tiering, split_infants,
    superset_probability, synthesize_pregnancy_cohort, Diagnostic, GroupReport, InfantClass,
    InfantLabels, Membership, MembershipDraft, SupersetOutcome, TierAssignment, TieringOutcome,
};
pub use census::{tier_census, write_census, CensusRow, CENSUS_COLUMNS};
pub use schedule::{
    AssignmentMode, CompiledGroup, ConditionSpec, FrontlineRule, GroupDefinition, Op,
    PersonContext, Predicate, PredicateSpec, Rank, TierSchedule, DEFAULT_SCHEDULE_TOML,
    RANK_COUNT, TIER1_RANKS,
};

#[derive(Debug, Error)]
pub enum TierError {
    #[error("tier schedule: {0}")]
    Schedule(String),
    #[error("person {0} matches no group and no residual group is configured")]
    Classification(String),
    #[error("{0}")]
    Input(String),
}
