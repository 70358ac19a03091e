//! Deterministic synthetic scenes with word ground truth and an oracle text heatmap.
//!
//! Words are rows of 2-8 glyphs drawn from thick axis-aligned strokes; clutter
//! consists of repeated non-text patterns (dot rows, window grids, stripes) and
//! isolated blobs. The heatmap is the glyph mask, blurred and perturbed with
//! clipped Gaussian noise.

use crate::error::{Error, Result};
use crate::evaluation::GtBox;
use crate::imaging::{BoundingBox, ColorImage, Heatmap};
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use rand_xoshiro::Xoshiro256StarStar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Background {
    Flat,
    Gradient,
    /// Flat plus per-pixel Gaussian noise with this standard deviation (gray levels).
    Noise(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneConfig {
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub n_words: usize,
    /// Inclusive glyph height range in pixels.
    pub glyph_height: (usize, usize),
    pub background: Background,
    /// Standard deviation of the heatmap noise, in probability units.
    pub heatmap_noise: f64,
    /// Gaussian blur sigma of the heatmap, in pixels.
    pub heatmap_blur: f64,
    /// Number of non-text clutter patterns.
    pub n_clutter: usize,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            width: 320,
            height: 240,
            n_words: 6,
            glyph_height: (12, 28),
            background: Background::Noise(3.0),
            heatmap_noise: 0.05,
            heatmap_blur: 2.0,
            n_clutter: 8,
        }
    }
}

impl SceneConfig {
    /// Evaluation corpus scene for one seed: 480x360, eight words, heatmap
    /// noise 0.05 and blur 2, with clutter density cycling through 0, 8, 16
    /// and 24 patterns as the seed advances.
    pub fn corpus(seed: u64) -> Self {
        Self { seed, width: 480, height: 360, n_words: 8, n_clutter: 8 * (seed % 4) as usize, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.glyph_height;
        if lo < 4 || lo > hi {
            return Err(Error::Invalid(format!("glyph height range {lo}..={hi} invalid (min 4)")));
        }
        if self.width < 8 || self.height < 8 || hi + 4 > self.height || hi + 4 > self.width {
            return Err(Error::Invalid("glyphs do not fit in the image".into()));
        }
        if !(self.heatmap_noise >= 0.0) || !(self.heatmap_blur >= 0.0) {
            return Err(Error::Invalid("heatmap noise and blur must be >= 0".into()));
        }
        if let Background::Noise(s) = self.background {
            if !(s >= 0.0) {
                return Err(Error::Invalid("background noise must be >= 0".into()));
            }
        }
        Ok(())
    }
}

/// Generated scene.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub image: ColorImage,
    pub ground_truth: Vec<GtBox>,
    pub heatmap: Heatmap<f64>,
    /// Glyph pixel mask, row-major.
    pub glyph_mask: Vec<bool>,
}

const PLACEMENT_ATTEMPTS: usize = 100;

struct Canvas {
    w: usize,
    h: usize,
    img: ColorImage,
    glyphs: Vec<bool>,
    /// Occupied boxes (words and clutter, with margins).
    taken: Vec<BoundingBox>,
}

impl Canvas {
    fn rect(&mut self, x0: usize, y0: usize, x1: usize, y1: usize, rgb: [u8; 3], glyph: bool) {
        for y in y0..y1.min(self.h) {
            for x in x0..x1.min(self.w) {
                self.img.set(x, y, rgb);
                if glyph {
                    self.glyphs[y * self.w + x] = true;
                }
            }
        }
    }

    fn free(&self, b: &BoundingBox) -> bool {
        b.x0 >= 0
            && b.y0 >= 0
            && b.x1 as usize <= self.w
            && b.y1 as usize <= self.h
            && self.taken.iter().all(|t| t.intersection_area(b) == 0)
    }

    /// Random free spot for a `bw x bh` box with `margin` clearance.
    fn place(&self, rng: &mut Xoshiro256StarStar, bw: usize, bh: usize, margin: usize) -> Option<BoundingBox> {
        if bw + 2 * margin > self.w || bh + 2 * margin > self.h {
            return None;
        }
        for _ in 0..PLACEMENT_ATTEMPTS {
            let x = rng.random_range(margin..=self.w - bw - margin) as i32;
            let y = rng.random_range(margin..=self.h - bh - margin) as i32;
            let m = margin as i32;
            let padded = BoundingBox { x0: x - m, y0: y - m, x1: x + bw as i32 + m, y1: y + bh as i32 + m };
            if self.free(&padded) {
                return Some(BoundingBox { x0: x, y0: y, x1: x + bw as i32, y1: y + bh as i32 });
            }
        }
        None
    }
}

fn contrast_color(rng: &mut Xoshiro256StarStar, bg_luma: f64) -> [u8; 3] {
    let base: i32 = if bg_luma > 127.0 { rng.random_range(0..70) } else { rng.random_range(185..256) };
    let mut c = [0u8; 3];
    for v in c.iter_mut() {
        *v = (base + rng.random_range(-12..=12)).clamp(0, 255) as u8;
    }
    c
}

/// Strokes of one glyph inside a `w x h` cell, as `(x0, y0, x1, y1)` cell rectangles.
fn glyph_strokes(shape: u32, w: usize, h: usize, t: usize) -> Vec<(usize, usize, usize, usize)> {
    let mid = (h - t) / 2;
    match shape {
        0 => vec![(0, 0, w, t), (0, h - t, w, h), (0, 0, t, h), (w - t, 0, w, h)], // O
        1 => vec![(0, 0, t, h), (w - t, 0, w, h), (0, mid, w, mid + t)],           // H
        2 => vec![(0, 0, t, h), (0, 0, w, t), (0, mid, w, mid + t), (0, h - t, w, h)], // E
        3 => vec![(0, 0, t, h), (w - t, 0, w, h), (0, h - t, w, h)],               // U
        4 => vec![(0, 0, t, h), (w - t, 0, w, h), (0, 0, w, t)],                   // n
        _ => vec![(0, 0, w, h)],                                                   // block
    }
}

fn draw_word(canvas: &mut Canvas, rng: &mut Xoshiro256StarStar, cfg: &SceneConfig, bg_luma: f64) -> Option<GtBox> {
    let h = rng.random_range(cfg.glyph_height.0..=cfg.glyph_height.1);
    let n = rng.random_range(2..=8usize);
    let t = ((h as f64 * rng.random_range(0.25..0.35)).round() as usize).max(2);
    let gap = ((h as f64 * rng.random_range(0.10..0.20)).round() as usize).max(1);
    let widths: Vec<usize> =
        (0..n).map(|_| ((h as f64 * rng.random_range(0.55..0.8)).round() as usize).max(2 * t + 1)).collect();
    let total = widths.iter().sum::<usize>() + gap * (n - 1);
    let color = contrast_color(rng, bg_luma);
    let shapes: Vec<u32> = (0..n).map(|_| rng.random_range(0..6)).collect();
    let slot = canvas.place(rng, total, h, (h / 2).max(3))?;

    let (x0, y0) = (slot.x0 as usize, slot.y0 as usize);
    let mut x = x0;
    let mut tight: Option<BoundingBox> = None;
    for (gw, shape) in widths.iter().zip(shapes) {
        for (a, b, c, d) in glyph_strokes(shape, *gw, h, t) {
            canvas.rect(x + a, y0 + b, x + c, y0 + d, color, true);
            let r = BoundingBox { x0: (x + a) as i32, y0: (y0 + b) as i32, x1: (x + c) as i32, y1: (y0 + d) as i32 };
            tight = Some(tight.map_or(r, |u| u.union(&r)));
        }
        x += gw + gap;
    }
    let margin = (h / 2).max(3) as i32;
    canvas.taken.push(BoundingBox {
        x0: slot.x0 - margin,
        y0: slot.y0 - margin,
        x1: slot.x1 + margin,
        y1: slot.y1 + margin,
    });
    tight.map(|bbox| GtBox { bbox, dont_care: false })
}

/// Repeated or blob-like non-text structure.
fn draw_clutter(canvas: &mut Canvas, rng: &mut Xoshiro256StarStar) {
    let color: [u8; 3] = [rng.random(), rng.random(), rng.random()];
    match rng.random_range(0..4u32) {
        0 => {
            // row of dots
            let s = rng.random_range(4..9usize);
            let gap = rng.random_range(s / 2 + 1..=s);
            let n = rng.random_range(5..14usize);
            let Some(b) = canvas.place(rng, n * (s + gap), s, 4) else { return };
            for i in 0..n {
                let x = b.x0 as usize + i * (s + gap);
                canvas.rect(x, b.y0 as usize, x + s, b.y0 as usize + s, color, false);
            }
            canvas.taken.push(b);
        }
        1 => {
            // grid of windows
            let (cw, ch) = (rng.random_range(5..12usize), rng.random_range(6..14usize));
            let gap = rng.random_range(2..5usize);
            let (cols, rows) = (rng.random_range(3..7usize), rng.random_range(2..5usize));
            let Some(b) = canvas.place(rng, cols * (cw + gap), rows * (ch + gap), 4) else { return };
            for r in 0..rows {
                for c in 0..cols {
                    let x = b.x0 as usize + c * (cw + gap);
                    let y = b.y0 as usize + r * (ch + gap);
                    canvas.rect(x, y, x + cw, y + ch, color, false);
                }
            }
            canvas.taken.push(b);
        }
        2 => {
            // vertical stripes
            let (sw, sh) = (rng.random_range(2..5usize), rng.random_range(20..50usize));
            let gap = rng.random_range(3..7usize);
            let n = rng.random_range(4..10usize);
            let Some(b) = canvas.place(rng, n * (sw + gap), sh, 4) else { return };
            for i in 0..n {
                let x = b.x0 as usize + i * (sw + gap);
                canvas.rect(x, b.y0 as usize, x + sw, b.y1 as usize, color, false);
            }
            canvas.taken.push(b);
        }
        _ => {
            // filled ellipse
            let (rw, rh) = (rng.random_range(6..30usize), rng.random_range(6..30usize));
            let Some(b) = canvas.place(rng, 2 * rw, 2 * rh, 4) else { return };
            let (cx, cy) = (b.x0 as f64 + rw as f64, b.y0 as f64 + rh as f64);
            for y in b.y0 as usize..b.y1 as usize {
                for x in b.x0 as usize..b.x1 as usize {
                    let dx = (x as f64 + 0.5 - cx) / rw as f64;
                    let dy = (y as f64 + 0.5 - cy) / rh as f64;
                    if dx * dx + dy * dy <= 1.0 {
                        canvas.img.set(x, y, color);
                    }
                }
            }
            canvas.taken.push(b);
        }
    }
}

/// Separable Gaussian blur with zero padding; kernel truncated at 3 sigma.
pub fn gaussian_blur(data: &[f64], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return data.to_vec();
    }
    let r = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-r..=r).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (j, kv) in k.iter().enumerate() {
                let xx = x as i64 + j as i64 - r;
                if xx >= 0 && (xx as usize) < w {
                    acc += kv * data[y * w + xx as usize];
                }
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (j, kv) in k.iter().enumerate() {
                let yy = y as i64 + j as i64 - r;
                if yy >= 0 && (yy as usize) < h {
                    acc += kv * tmp[yy as usize * w + x];
                }
            }
            out[y * w + x] = acc;
        }
    }
    out
}

pub fn generate_scene(cfg: &SceneConfig) -> Result<Scene> {
    cfg.validate()?;
    let mut rng = Xoshiro256StarStar::seed_from_u64(cfg.seed);
    let (w, h) = (cfg.width, cfg.height);

    let light = rng.random_bool(0.6);
    let base: [f64; 3] = if light {
        [rng.random_range(150.0..235.0), rng.random_range(150.0..235.0), rng.random_range(150.0..235.0)]
    } else {
        [rng.random_range(15.0..90.0), rng.random_range(15.0..90.0), rng.random_range(15.0..90.0)]
    };
    let bg_luma = 0.299 * base[0] + 0.587 * base[1] + 0.114 * base[2];
    let (gx, gy) = match cfg.background {
        Background::Gradient => (rng.random_range(-25.0..25.0), rng.random_range(-25.0..25.0)),
        _ => (0.0, 0.0),
    };
    let mut img = ColorImage::filled(w, h, [0, 0, 0])?;
    for y in 0..h {
        for x in 0..w {
            let shift = gx * x as f64 / w as f64 + gy * y as f64 / h as f64;
            img.set(x, y, base.map(|c| (c + shift).round().clamp(0.0, 255.0) as u8));
        }
    }
    let mut canvas = Canvas { w, h, img, glyphs: vec![false; w * h], taken: Vec::new() };

    let mut gt = Vec::new();
    for _ in 0..cfg.n_words {
        if let Some(g) = draw_word(&mut canvas, &mut rng, cfg, bg_luma) {
            gt.push(g);
        }
    }
    for _ in 0..cfg.n_clutter {
        draw_clutter(&mut canvas, &mut rng);
    }

    if let Background::Noise(sigma) = cfg.background {
        if sigma > 0.0 {
            let normal = Normal::new(0.0, sigma).expect("finite sigma");
            for y in 0..h {
                for x in 0..w {
                    let px = canvas.img.get(x, y);
                    let n: f64 = normal.sample(&mut rng);
                    canvas.img.set(x, y, px.map(|c| (c as f64 + n).round().clamp(0.0, 255.0) as u8));
                }
            }
        }
    }

    let mask: Vec<f64> = canvas.glyphs.iter().map(|&g| if g { 1.0 } else { 0.0 }).collect();
    let mut heat = gaussian_blur(&mask, w, h, cfg.heatmap_blur);
    if cfg.heatmap_noise > 0.0 {
        let normal = Normal::new(0.0, cfg.heatmap_noise).expect("finite sigma");
        for v in heat.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    for v in heat.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }

    Ok(Scene { image: canvas.img, ground_truth: gt, heatmap: Heatmap::new(w, h, heat)?, glyph_mask: canvas.glyphs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{box_mean, build_integral};

    #[test]
    fn same_seed_same_scene() {
        let cfg = SceneConfig::corpus(42);
        assert_eq!(generate_scene(&cfg).unwrap(), generate_scene(&cfg).unwrap());
        let other = generate_scene(&SceneConfig::corpus(43)).unwrap();
        assert_ne!(other.image, generate_scene(&cfg).unwrap().image);
    }

    #[test]
    fn empty_flat_scene() {
        let cfg = SceneConfig {
            n_words: 0,
            n_clutter: 0,
            background: Background::Flat,
            heatmap_noise: 0.0,
            ..SceneConfig::corpus(3)
        };
        let s = generate_scene(&cfg).unwrap();
        assert!(s.ground_truth.is_empty());
        assert!(s.heatmap.data().iter().all(|&v| v == 0.0));
        let first = s.image.get(0, 0);
        assert!((0..cfg.height).all(|y| (0..cfg.width).all(|x| s.image.get(x, y) == first)));
    }

    #[test]
    fn gt_boxes_disjoint_and_inked() {
        for seed in 0..20 {
            let s = generate_scene(&SceneConfig::corpus(seed)).unwrap();
            assert!(!s.ground_truth.is_empty());
            for (i, a) in s.ground_truth.iter().enumerate() {
                let b = a.bbox;
                assert!(b.within(s.image.width(), s.image.height()));
                let inked =
                    (b.y0..b.y1).any(|y| (b.x0..b.x1).any(|x| s.glyph_mask[y as usize * s.image.width() + x as usize]));
                assert!(inked);
                for c in &s.ground_truth[i + 1..] {
                    assert_eq!(b.intersection_area(&c.bbox), 0);
                }
            }
        }
    }

    #[test]
    fn clean_heatmap_mean_is_fill_ratio() {
        let cfg = SceneConfig { heatmap_noise: 0.0, heatmap_blur: 0.0, ..SceneConfig::corpus(9) };
        let s = generate_scene(&cfg).unwrap();
        let ii = build_integral(&s.heatmap);
        for g in &s.ground_truth {
            let b = g.bbox;
            let ink = (b.y0..b.y1)
                .flat_map(|y| (b.x0..b.x1).map(move |x| (x, y)))
                .filter(|&(x, y)| s.glyph_mask[y as usize * cfg.width + x as usize])
                .count();
            assert_eq!(box_mean(&ii, &b).unwrap(), ink as f64 / b.area() as f64);
        }
    }

    #[test]
    fn heatmap_separates_text_from_background() {
        for seed in 0..40 {
            let s = generate_scene(&SceneConfig::corpus(seed)).unwrap();
            let ii = build_integral(&s.heatmap);
            // an 8x8 patch far from every word
            let far = (0..s.image.height() as i32 - 8)
                .step_by(4)
                .flat_map(|y| {
                    (0..s.image.width() as i32 - 8).step_by(4).map(move |x| BoundingBox {
                        x0: x,
                        y0: y,
                        x1: x + 8,
                        y1: y + 8,
                    })
                })
                .find(|b| {
                    s.ground_truth.iter().all(|g| {
                        let grown = BoundingBox {
                            x0: g.bbox.x0 - 10,
                            y0: g.bbox.y0 - 10,
                            x1: g.bbox.x1 + 10,
                            y1: g.bbox.y1 + 10,
                        };
                        grown.intersection_area(b) == 0
                    })
                })
                .unwrap();
            let bg = box_mean(&ii, &far).unwrap();
            for g in &s.ground_truth {
                let inside = box_mean(&ii, &g.bbox).unwrap();
                assert!(inside - bg > 0.5, "seed {seed}: {inside} vs {bg}");
            }
        }
    }

    #[test]
    fn blur_preserves_mass_away_from_edges() {
        let (w, h) = (21, 21);
        let mut d = vec![0.0; w * h];
        d[10 * w + 10] = 1.0;
        let b = gaussian_blur(&d, w, h, 2.0);
        assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(b[10 * w + 10] > b[10 * w + 12]);
    }
}
