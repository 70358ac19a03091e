//! Ground-truth loaders and detection rate at N proposals.

use crate::error::{Error, Result};
use crate::grouping::Proposal;
use crate::imaging::{iou, BoundingBox};
use crate::scalar::Scalar;
use serde_json::Value;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GtBox {
    pub bbox: BoundingBox,
    /// Excluded from the denominator and never matched.
    pub dont_care: bool,
}

/// Annotations keyed by image stem.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GroundTruth {
    pub images: BTreeMap<String, Vec<GtBox>>,
}

impl GroundTruth {
    pub fn get(&self, stem: &str) -> Option<&[GtBox]> {
        self.images.get(stem).map(Vec::as_slice)
    }
}

fn read_text(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|_| Error::Parse {
        path: path.into(),
        line: 0,
        msg: "not valid UTF-8".into(),
    })?;
    Ok(text.strip_prefix('\u{feff}').map(str::to_owned).unwrap_or(text))
}

/// Parses one ICDAR Robust Reading file: `x1,y1,...,x4,y4,transcription` per line.
pub fn parse_icdar_gt(path: &Path) -> Result<Vec<GtBox>> {
    parse_icdar_str(&read_text(path)?, path)
}

pub fn parse_icdar_str(text: &str, path: &Path) -> Result<Vec<GtBox>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { path: path.into(), line: i + 1, msg };
        let fields: Vec<&str> = line.splitn(9, ',').collect();
        if fields.len() < 8 {
            return Err(err(format!("expected 8 coordinates, found {}", fields.len())));
        }
        let mut coords = [0i32; 8];
        for (c, f) in coords.iter_mut().zip(&fields) {
            *c = f.trim().parse::<f64>().map_err(|_| err(format!("bad coordinate {f:?}")))?.round() as i32;
        }
        let xs = [coords[0], coords[2], coords[4], coords[6]];
        let ys = [coords[1], coords[3], coords[5], coords[7]];
        let (x0, x1) = (*xs.iter().min().unwrap(), *xs.iter().max().unwrap());
        let (y0, y1) = (*ys.iter().min().unwrap(), *ys.iter().max().unwrap());
        let bbox = BoundingBox::new(x0, y0, x1.max(x0 + 1), y1.max(y0 + 1)).map_err(|e| err(e.to_string()))?;
        let transcription = fields.get(8).map(|s| s.trim()).unwrap_or("");
        out.push(GtBox { bbox, dont_care: transcription == "###" });
    }
    Ok(out)
}

/// Writes boxes as axis-aligned ICDAR quads.
pub fn format_icdar(boxes: &[GtBox]) -> String {
    boxes
        .iter()
        .map(|g| {
            let b = g.bbox;
            let text = if g.dont_care { "###" } else { "word" };
            format!("{},{},{},{},{},{},{},{},{}\n", b.x0, b.y0, b.x1, b.y0, b.x1, b.y1, b.x0, b.y1, text)
        })
        .collect()
}

/// COCO-Text annotations; keys are file-name stems (or image ids when `imgs` is absent).
/// Images with no legible instance are dropped.
pub fn parse_cocotext_gt(path: &Path) -> Result<GroundTruth> {
    let text = read_text(path)?;
    let root: Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.into(),
        line: e.line(),
        msg: e.to_string(),
    })?;
    parse_cocotext_value(&root).map_err(|msg| Error::Parse { path: path.into(), line: 0, msg })
}

fn entries(v: &Value) -> Vec<&Value> {
    match v {
        Value::Object(m) => m.values().collect(),
        Value::Array(a) => a.iter().collect(),
        _ => Vec::new(),
    }
}

fn id_string(v: &Value) -> Option<String> {
    match v {
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

pub fn parse_cocotext_value(root: &Value) -> std::result::Result<GroundTruth, String> {
    let anns = root.get("anns").ok_or("missing \"anns\"")?;
    let mut names: BTreeMap<String, String> = BTreeMap::new();
    if let Some(imgs) = root.get("imgs") {
        for img in entries(imgs) {
            let (Some(id), Some(file)) =
                (img.get("id").and_then(id_string), img.get("file_name").and_then(Value::as_str))
            else {
                continue;
            };
            let stem = Path::new(file).file_stem().and_then(|s| s.to_str()).unwrap_or(file);
            names.insert(id, stem.to_owned());
        }
    }
    let mut per_image: BTreeMap<String, Vec<GtBox>> = BTreeMap::new();
    for ann in entries(anns) {
        let image = ann.get("image_id").and_then(id_string).ok_or("annotation without image_id")?;
        let bbox = ann.get("bbox").and_then(Value::as_array).ok_or("annotation without bbox")?;
        let nums: Vec<f64> = bbox.iter().filter_map(Value::as_f64).collect();
        if nums.len() != 4 {
            return Err(format!("bbox of image {image} is not [x, y, w, h]"));
        }
        let legibility = ann.get("legibility").and_then(Value::as_str).ok_or("annotation without legibility")?;
        let (x0, y0) = (nums[0].floor() as i32, nums[1].floor() as i32);
        let x1 = ((nums[0] + nums[2]).ceil() as i32).max(x0 + 1);
        let y1 = ((nums[1] + nums[3]).ceil() as i32).max(y0 + 1);
        let key = names.get(&image).cloned().unwrap_or(image);
        per_image
            .entry(key)
            .or_default()
            .push(GtBox { bbox: BoundingBox { x0, y0, x1, y1 }, dont_care: legibility != "legible" });
    }
    per_image.retain(|_, v| v.iter().any(|g| !g.dont_care));
    Ok(GroundTruth { images: per_image })
}

/// For every cared-for GT box, the 0-based rank of the first proposal matching it.
pub fn first_hits<T: Scalar>(ranked: &[Proposal<T>], gt: &[GtBox], iou_thresh: T) -> Vec<Option<usize>> {
    gt.iter()
        .filter(|g| !g.dont_care)
        .map(|g| ranked.iter().position(|p| iou::<T>(&p.bbox, &g.bbox) >= iou_thresh))
        .collect()
}

/// `(matched, total)` over cared-for GT boxes using the top `n` proposals.
pub fn match_counts<T: Scalar>(ranked: &[Proposal<T>], gt: &[GtBox], n: usize, iou_thresh: T) -> (usize, usize) {
    let hits = first_hits(ranked, gt, iou_thresh);
    let matched = hits.iter().filter(|h| h.is_some_and(|r| r < n)).count();
    (matched, hits.len())
}

/// Fraction of cared-for GT boxes hit by one of the top `n` proposals (0 when there are none).
pub fn detection_rate<T: Scalar>(ranked: &[Proposal<T>], gt: &[GtBox], n: usize, iou_thresh: T) -> T {
    let (m, t) = match_counts(ranked, gt, n, iou_thresh);
    if t == 0 {
        T::zero()
    } else {
        T::of_usize(m) / T::of_usize(t)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecallCurve<T> {
    /// `(budget, detection rate)`, ascending in budget.
    pub points: Vec<(usize, T)>,
}

/// Per-budget `(matched, total)` counts for one image.
pub fn budget_counts<T: Scalar>(
    ranked: &[Proposal<T>],
    gt: &[GtBox],
    budgets: &[usize],
    iou_thresh: T,
) -> Vec<(usize, usize)> {
    let hits = first_hits(ranked, gt, iou_thresh);
    budgets.iter().map(|&n| (hits.iter().filter(|h| h.is_some_and(|r| r < n)).count(), hits.len())).collect()
}

/// Micro-averaged curve over a corpus of `(ranked list, GT)` pairs.
pub fn recall_curve<'a, T: Scalar>(
    corpus: impl IntoIterator<Item = (&'a [Proposal<T>], &'a [GtBox])>,
    budgets: &[usize],
    iou_thresh: T,
) -> RecallCurve<T> {
    let mut budgets = budgets.to_vec();
    budgets.sort_unstable();
    let mut matched = vec![0usize; budgets.len()];
    let mut total = 0usize;
    for (ranked, gt) in corpus {
        let counts = budget_counts(ranked, gt, &budgets, iou_thresh);
        for (m, c) in matched.iter_mut().zip(&counts) {
            *m += c.0;
        }
        total += counts.first().map_or(gt.iter().filter(|g| !g.dont_care).count(), |c| c.1);
    }
    RecallCurve {
        points: budgets
            .into_iter()
            .zip(matched)
            .map(|(n, m)| (n, if total == 0 { T::zero() } else { T::of_usize(m) / T::of_usize(total) }))
            .collect(),
    }
}
