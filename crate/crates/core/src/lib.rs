//! Counterfactual-driven feature compression.
//!
//! A target classifier is probed with exact minimum-cost counterfactual
//! explanations; the coordinates where counterfactuals cross the decision
//! boundary become candidate thresholds, which binarize the data at a
//! granularity controlled by a single quantile parameter. Compact, optimal
//! decision trees are then trained on the binarized data.
//!
//! Pipeline stages map onto modules:
//!
//! | stage | module |
//! |---|---|
//! | ingestion, scaling, folds | [`data`] |
//! | target classifiers | [`models`] |
//! | exact counterfactuals | [`counterfactual`] |
//! | threshold bag and quantile filter | [`thresholds`] |
//! | binarization, compression and inconsistency | [`discretize`] |
//! | CART and optimal surrogate trees | [`surrogate`] |
//! | orchestration, reports, CLI backing | [`pipeline`] |

pub mod counterfactual;
pub mod data;
pub mod discretize;
pub mod error;
pub mod models;
pub mod pipeline;
pub mod surrogate;
pub mod thresholds;

pub use error::{FccaError, Result};
