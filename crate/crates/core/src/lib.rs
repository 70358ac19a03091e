//! Scene-text proposals.
//!
//! Candidate word boxes come from grouping Maximally Stable Extremal Regions
//! into a single-linkage hierarchy; every hierarchy node that looks like text
//! becomes a proposal scored by its grouping quality. Proposals can then be
//! re-ranked with a per-pixel text-probability heatmap:
//!
//! - **BAS** orders by grouping quality,
//! - **MTP** orders by mean heatmap probability inside the box,
//! - **SUP** drops boxes whose mean probability is below a threshold and
//!   orders the rest by grouping quality.
//!
//! [`evaluation`] measures detection rate at N proposals; [`synthgen`]
//! produces deterministic scenes with ground truth and oracle heatmaps.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! crate root fix it to `f64`.

// `!(x >= 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evaluation;
pub mod grouping;
pub mod imaging;
pub mod mser;
pub mod pipeline;
pub mod ranking;
pub mod scalar;
pub mod synthgen;

pub use error::{Error, Result};
pub use imaging::{BoundingBox, ColorImage, GrayImage};
pub use mser::{MserParams, Polarity, Region};
pub use ranking::StrategyKind;
pub use scalar::Scalar;

pub type Heatmap = imaging::Heatmap<f64>;
pub type Heatmap32 = imaging::Heatmap<f32>;
pub type IntegralImage = imaging::IntegralImage<f64>;
pub type IntegralImage32 = imaging::IntegralImage<f32>;
pub type RegionFeatures = grouping::RegionFeatures<f64>;
pub type GroupingParams = grouping::GroupingParams<f64>;
pub type Dendrogram = grouping::Dendrogram<f64>;
pub type Proposal = grouping::Proposal<f64>;
pub type RankedList = ranking::RankedList<f64>;
pub type RankingStrategy = ranking::RankingStrategy<f64>;
pub type RecallCurve = evaluation::RecallCurve<f64>;
pub type ProposalParams = pipeline::ProposalParams<f64>;
pub type ProposalSet = pipeline::ProposalSet<f64>;
