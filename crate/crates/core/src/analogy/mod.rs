//! Structure mapping, two-stage retrieval and analogical generalization.
//!
//! Cases are sets of ground facts ([`CaseFacts`]). Structure mapping aligns
//! facts with identical functor structure under a one-to-one entity
//! correspondence; retrieval filters a pool cheaply by functor content before
//! mapping the survivors; generalization merges sufficiently similar cases,
//! replacing differing entities and numeric values by generalized entities
//! that keep statistics over the values they stand for.
//!
//! [`CaseFacts`]: crate::symbolic::CaseFacts

mod mac;
mod persist;
mod sage;
mod sme;

pub use mac::{content_vector, mac_stage, ContentVector, MAC_CANDIDATES, MAC_RATIO};
pub use persist::{load_gpool, save_gpool};
pub use sage::{
    add_facts, genent_stats, merge_into_generalization, retrieve, sage_add, GenEntStats, Generalization, Gpool,
    Outlier, PoolItemId, SageAction, SageParams,
};
pub use sme::{fact_weight, self_score, sme_map, value_slot_of_fact, with_value_slot, Mapping, ORDER_WEIGHT};

use thiserror::Error;

use crate::symbolic::{ArchiveError, ParseError};

#[derive(Debug, Error)]
pub enum AnalogyError {
    #[error("case labeled {case} added to a {pool} pool")]
    LabelMismatch { case: String, pool: String },
    #[error("generalized entity {0} is unknown or not numeric")]
    UnknownGenEnt(u32),
    #[error("no values recorded")]
    EmptyStats,
    #[error("unknown pool item {0}")]
    UnknownItem(String),
    #[error("malformed pool file {file}: {reason}")]
    Malformed { file: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Archive(#[from] ArchiveError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

pub(crate) fn malformed(file: impl Into<String>, reason: impl Into<String>) -> AnalogyError {
    AnalogyError::Malformed { file: file.into(), reason: reason.into() }
}
