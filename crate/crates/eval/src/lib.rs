//! Evaluation stack: distribution metrics over precomputed feature files,
//! absolute judge scores, and pairwise comparison scheduling and ranking.

pub mod aqs;
pub mod error;
pub mod features;
pub mod metrics;
pub mod rank;
pub mod schedule;
pub mod study;
pub mod trueskill;

pub use aqs::{aggregate_aqs, AqsTable, Dimension, ScoreSheet};
pub use error::EvalError;
pub use features::{load_features, parse_csv, read_mcfv, write_mcfv, FeatureSet};
pub use metrics::{compute_fid, compute_is, compute_kid, kid_kernel};
pub use rank::{rank_methods, rank_methods_with, ComparisonRecord, Leaderboard, LeaderboardRow, Side, RDR_K};
pub use schedule::{schedule_comparisons, ScheduledPair, MIN_COMPARISONS};
pub use study::{Study, StudyConfig};
pub use trueskill::{trueskill_update_pair, Rating, TrueSkill};
