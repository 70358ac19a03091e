//! CSV writers. Floats use Rust's shortest round-trip formatting, so the
//! files are exact and byte-stable.
//!
//! * ranked lists: `rank,x0,y0,x1,y1,Q,mtp` (1-based rank; `mtp` empty without a heatmap)
//! * `recall.csv`: `strategy,tau,N,detection_rate` (`tau` empty for bas and mtp)
//! * `recall_per_image.csv`: `image,strategy,tau,N,matched,total`

use crate::{CountCurve, RankRun};
use std::fmt::Write;
use textprop::Proposal;

pub fn ranked_csv(ranked: &[Proposal]) -> String {
    let mut s = String::from("rank,x0,y0,x1,y1,Q,mtp\n");
    for (i, p) in ranked.iter().enumerate() {
        let b = p.bbox;
        let mtp = p.mtp.map(|m| m.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{},{},{},{}", i + 1, b.x0, b.y0, b.x1, b.y1, p.quality, mtp);
    }
    s
}

fn tau_field(run: &RankRun) -> String {
    run.tau.map(|t| t.to_string()).unwrap_or_default()
}

/// Micro-averaged rate; 0 when no GT box is cared for.
pub fn rate(matched: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        matched as f64 / total as f64
    }
}

pub fn recall_csv(curves: &[(RankRun, CountCurve)]) -> String {
    let mut s = String::from("strategy,tau,N,detection_rate\n");
    for (run, pts) in curves {
        for &(n, m, t) in pts {
            let _ = writeln!(s, "{},{},{},{}", run.kind, tau_field(run), n, rate(m, t));
        }
    }
    s
}

pub struct DetailRow {
    pub image: String,
    pub run: RankRun,
    pub n: usize,
    pub matched: usize,
    pub total: usize,
}

pub fn detail_csv(rows: &[DetailRow]) -> String {
    let mut s = String::from("image,strategy,tau,N,matched,total\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{},{}", r.image, r.run.kind, tau_field(&r.run), r.n, r.matched, r.total);
    }
    s
}
