//! Flat `key = value` run configuration.
//!
//! ```text
//! # pipeline
//! strategy = sup
//! tau = 0.1            # a list runs SUP once per value
//! iou = 0.5
//! budgets = 10,100,1000
//! mtp_mask = false
//! threads = 4
//! input = data/images, extra/img_7.png
//! heatmaps = data/heatmaps
//! gt = data/gt
//! gt_format = icdar
//! out = results
//!
//! mser.delta = 5
//! mser.min_area = 10
//! mser.max_area_ratio = 0.5
//! mser.max_variation = 0.5
//! mser.min_diversity = 0.2
//!
//! grouping.spatial_scale = 1.0
//! grouping.weights = 1,1,1,1,1,1,1,1
//! grouping.min_fill_ratio = 0.05
//! grouping.min_aspect = 0.1
//! grouping.max_aspect = 30
//! grouping.max_members = 1000
//! grouping.max_regions = 3000
//! ```
//!
//! Command-line flags override file values.

use anyhow::{anyhow, bail, Context, Result};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use textprop::grouping::CUES;
use textprop::{ProposalParams, StrategyKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GtFormat {
    Icdar,
    CocoText,
}

impl FromStr for GtFormat {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "icdar" => Ok(GtFormat::Icdar),
            "cocotext" | "coco-text" | "coco" => Ok(GtFormat::CocoText),
            other => bail!("unknown ground-truth format {other:?} (icdar|cocotext)"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Image files or directories.
    pub inputs: Vec<PathBuf>,
    /// Heatmap directory; defaults to each image's own directory.
    pub heatmaps: Option<PathBuf>,
    pub gt: Option<PathBuf>,
    pub gt_format: GtFormat,
    pub strategies: Vec<StrategyKind>,
    pub taus: Vec<f64>,
    pub iou: f64,
    pub budgets: Vec<usize>,
    pub mtp_mask: bool,
    pub params: ProposalParams,
    pub out: Option<PathBuf>,
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            heatmaps: None,
            gt: None,
            gt_format: GtFormat::Icdar,
            strategies: vec![StrategyKind::Sup],
            taus: vec![0.1],
            iou: 0.5,
            budgets: vec![10, 100, 1000],
            mtp_mask: false,
            params: ProposalParams::default(),
            out: None,
            threads: 0,
        }
    }
}

pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse::<T>().map_err(|e| anyhow!("bad list item {v:?}: {e}")))
        .collect()
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        other => bail!("bad boolean {other:?}"),
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.trim().parse::<T>().map_err(|e| anyhow!("{key}: {e}"))
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key = value", i + 1))?;
        out.insert(k.trim().to_owned(), v.trim().to_owned());
    }
    Ok(out)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg = Self::default();
        cfg.apply_pairs(&parse_pairs(&text)?).with_context(|| format!("in config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn apply_pairs(&mut self, pairs: &BTreeMap<String, String>) -> Result<()> {
        for (k, v) in pairs {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let m = &mut self.params.mser;
        let g = &mut self.params.grouping;
        match key {
            "input" => self.inputs = v.split(',').map(str::trim).filter(|p| !p.is_empty()).map(PathBuf::from).collect(),
            "heatmaps" => self.heatmaps = Some(v.into()),
            "gt" => self.gt = Some(v.into()),
            "gt_format" => self.gt_format = v.parse()?,
            "out" => self.out = Some(v.into()),
            "strategy" => self.strategies = parse_list(v)?,
            "tau" => self.taus = parse_list(v)?,
            "iou" => self.iou = num(key, v)?,
            "budgets" => self.budgets = parse_list(v)?,
            "mtp_mask" => self.mtp_mask = parse_bool(v)?,
            "threads" => self.threads = num(key, v)?,
            "mser.delta" => m.delta = num(key, v)?,
            "mser.min_area" => m.min_area = num(key, v)?,
            "mser.max_area_ratio" => m.max_area_ratio = num(key, v)?,
            "mser.max_variation" => m.max_variation = num(key, v)?,
            "mser.min_diversity" => m.min_diversity = num(key, v)?,
            "grouping.spatial_scale" => g.spatial_scale = num(key, v)?,
            "grouping.weights" => {
                let w: Vec<f64> = parse_list(v)?;
                g.weights = w
                    .try_into()
                    .map_err(|w: Vec<f64>| anyhow!("grouping.weights needs {CUES} values, got {}", w.len()))?;
            }
            "grouping.min_fill_ratio" => g.min_fill_ratio = num(key, v)?,
            "grouping.min_aspect" => g.min_aspect = num(key, v)?,
            "grouping.max_aspect" => g.max_aspect = num(key, v)?,
            "grouping.max_members" => g.max_members = num(key, v)?,
            "grouping.max_regions" => g.max_regions = num(key, v)?,
            other => bail!("unknown config key {other:?}"),
        }
        Ok(())
    }

    /// Checks parameter ranges and normalizes the budget list.
    pub fn validate(&mut self) -> Result<()> {
        self.params.mser.validate()?;
        self.params.grouping.validate()?;
        if self.taus.is_empty() {
            bail!("no tau given");
        }
        if let Some(t) = self.taus.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            bail!("tau {t} outside [0, 1]");
        }
        if !(self.iou > 0.0 && self.iou <= 1.0) {
            bail!("iou threshold {} outside (0, 1]", self.iou);
        }
        if self.strategies.is_empty() {
            bail!("no ranking strategy given");
        }
        self.budgets.sort_unstable();
        self.budgets.dedup();
        Ok(())
    }

    pub fn needs_heatmaps(&self) -> bool {
        self.strategies.iter().any(StrategyKind::needs_heatmap)
    }
}
