//! Proposal ordering: grouping quality (BAS), mean text probability (MTP), and
//! probability suppression followed by quality order (SUP).

use crate::error::{Error, Result};
use crate::grouping::Proposal;
use crate::imaging::{box_mean, IntegralImage};
use crate::scalar::Scalar;
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyKind {
    Bas,
    Mtp,
    Sup,
}

impl StrategyKind {
    pub fn needs_heatmap(&self) -> bool {
        !matches!(self, StrategyKind::Bas)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrategyKind::Bas => "bas",
            StrategyKind::Mtp => "mtp",
            StrategyKind::Sup => "sup",
        })
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bas" => Ok(StrategyKind::Bas),
            "mtp" => Ok(StrategyKind::Mtp),
            "sup" => Ok(StrategyKind::Sup),
            other => Err(Error::Invalid(format!("unknown strategy {other:?} (bas|mtp|sup)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankingStrategy<T> {
    pub kind: StrategyKind,
    /// Suppression threshold, used by SUP only.
    pub tau: T,
}

impl<T: Scalar> RankingStrategy<T> {
    pub fn new(kind: StrategyKind, tau: T) -> Result<Self> {
        if !(tau >= T::zero() && tau <= T::one()) {
            return Err(Error::Invalid(format!("tau {tau} outside [0, 1]")));
        }
        Ok(Self { kind, tau })
    }
}

/// Proposals best first.
pub type RankedList<T> = Vec<Proposal<T>>;

/// Higher Q, then smaller box area, then lexicographic `(x0, y0, x1, y1)`.
fn tie_break<T: Scalar>(a: &Proposal<T>, b: &Proposal<T>) -> Ordering {
    b.quality
        .partial_cmp(&a.quality)
        .unwrap_or(Ordering::Equal)
        .then(a.bbox.area().cmp(&b.bbox.area()))
        .then(a.bbox.cmp(&b.bbox))
}

fn by_mtp<T: Scalar>(a: &Proposal<T>, b: &Proposal<T>) -> Ordering {
    let (ma, mb) = (a.mtp.unwrap_or(T::zero()), b.mtp.unwrap_or(T::zero()));
    mb.partial_cmp(&ma).unwrap_or(Ordering::Equal).then_with(|| tie_break(a, b))
}

pub fn rank_bas<T: Scalar>(mut props: Vec<Proposal<T>>) -> RankedList<T> {
    props.sort_by(tie_break);
    props
}

/// Fills `mtp` for every proposal with `score`.
pub fn annotate_with<T: Scalar>(
    mut props: Vec<Proposal<T>>,
    score: impl Fn(&Proposal<T>) -> Result<T>,
) -> Result<Vec<Proposal<T>>> {
    for p in props.iter_mut() {
        p.mtp = Some(score(p)?);
    }
    Ok(props)
}

/// Fills `mtp` with the heatmap mean over each bounding box.
pub fn annotate_mtp<T: Scalar>(props: Vec<Proposal<T>>, ii: &IntegralImage<T>) -> Result<Vec<Proposal<T>>> {
    annotate_with(props, |p| box_mean(ii, &p.bbox))
}

/// Orders already-annotated proposals under `strategy`.
pub fn rank_annotated<T: Scalar>(mut props: Vec<Proposal<T>>, strategy: &RankingStrategy<T>) -> RankedList<T> {
    match strategy.kind {
        StrategyKind::Bas => rank_bas(props),
        StrategyKind::Mtp => {
            props.sort_by(by_mtp);
            props
        }
        StrategyKind::Sup => {
            // strict: mtp == tau survives, so tau = 0 removes nothing
            props.retain(|p| p.mtp.is_some_and(|m| m >= strategy.tau));
            rank_bas(props)
        }
    }
}

pub fn rank_mtp<T: Scalar>(props: Vec<Proposal<T>>, ii: &IntegralImage<T>) -> Result<RankedList<T>> {
    let s = RankingStrategy { kind: StrategyKind::Mtp, tau: T::zero() };
    Ok(rank_annotated(annotate_mtp(props, ii)?, &s))
}

pub fn rank_sup<T: Scalar>(props: Vec<Proposal<T>>, ii: &IntegralImage<T>, tau: T) -> Result<RankedList<T>> {
    let s = RankingStrategy::new(StrategyKind::Sup, tau)?;
    Ok(rank_annotated(annotate_mtp(props, ii)?, &s))
}

/// Ranks with box-mean MTP (or none, for BAS without a heatmap).
pub fn rank<T: Scalar>(
    props: Vec<Proposal<T>>,
    strategy: &RankingStrategy<T>,
    ii: Option<&IntegralImage<T>>,
) -> Result<RankedList<T>> {
    let props = match ii {
        Some(ii) => annotate_mtp(props, ii)?,
        None if strategy.kind.needs_heatmap() => {
            return Err(Error::Invalid(format!("strategy {} needs a heatmap", strategy.kind)));
        }
        None => props,
    };
    Ok(rank_annotated(props, strategy))
}
