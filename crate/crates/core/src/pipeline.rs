//! Image to proposals: both MSER sweeps, region cues, dendrogram, hypotheses.

use crate::error::Result;
use crate::grouping::{
    build_dendrogram, cap_regions, compute_all_features, enumerate_hypotheses, node_mask, Dendrogram, GroupingParams,
    Proposal, RegionFeatures,
};
use crate::imaging::{mask_mean, ColorImage, IntegralImage};
use crate::mser::{detect_regions, MserParams, Region};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct ProposalParams<T> {
    pub mser: MserParams,
    pub grouping: GroupingParams<T>,
}

impl<T: Scalar> Default for ProposalParams<T> {
    fn default() -> Self {
        Self { mser: MserParams::default(), grouping: GroupingParams::default() }
    }
}

/// Everything produced for one image; proposals are in dendrogram-node order.
#[derive(Clone, Debug)]
pub struct ProposalSet<T> {
    pub regions: Vec<Region>,
    pub features: Vec<RegionFeatures<T>>,
    pub dendrogram: Dendrogram<T>,
    pub proposals: Vec<Proposal<T>>,
}

impl<T: Scalar> ProposalSet<T> {
    /// Mean heatmap value over the union of the member region masks of `p`.
    pub fn mask_mtp(&self, ii: &IntegralImage<T>, p: &Proposal<T>) -> Result<T> {
        mask_mean(ii, &node_mask(&self.dendrogram, p.source, &self.regions))
    }
}

pub fn propose<T: Scalar>(image: &ColorImage, params: &ProposalParams<T>) -> Result<ProposalSet<T>> {
    params.mser.validate()?;
    params.grouping.validate()?;
    let gray = image.to_gray();
    let regions = cap_regions(detect_regions(&gray, &params.mser), params.grouping.max_regions);
    let features = compute_all_features(&regions, &gray, image);
    let dendrogram = build_dendrogram(&features, image.width(), image.height(), &params.grouping);
    let proposals = enumerate_hypotheses(&dendrogram, &params.grouping);
    Ok(ProposalSet { regions, features, dendrogram, proposals })
}
