//! Tactical wireless tree network design: instance generation, radio
//! configuration, an interference-aware throughput model, tabu search, and
//! the nonparametric statistics used to compare configurations.

pub mod geometry;
pub mod instance;
pub mod num;
pub mod radio;
pub mod rng;
pub mod topology;
pub mod design;
pub mod hubselect;
pub mod objective;
pub mod phy;
pub mod search;
pub mod stats;
pub mod experiments;

/// Design evaluated in `f64`.
pub type Evaluation64 = design::Evaluation<f64>;
pub type Evaluator64 = design::Evaluator<f64>;
pub type SearchOutcome64 = search::SearchOutcome<f64>;
pub type LinkMetrics64 = phy::LinkMetrics<f64>;
pub type PhyModel64 = phy::PhyModel<f64>;
pub type ObjectiveBreakdown64 = objective::ObjectiveBreakdown<f64>;
