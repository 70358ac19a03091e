//! Exhaustive MSER reference: labels the threshold set at every gray level by
//! flood fill, recovers the distinct extremal regions from those labelings, and
//! applies the stability, area and diversity rules without a component tree.

use std::collections::HashMap;
use textprop::imaging::GrayImage;
use textprop::mser::{MserParams, Polarity};

struct Labels {
    label: Vec<u32>,
    size: Vec<u32>,
}

const UNSET: u32 = u32::MAX;

fn label_threshold(levels: &[u8], w: usize, h: usize, t: u8) -> Labels {
    let mut label = vec![UNSET; w * h];
    let mut size = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if levels[start] > t || label[start] != UNSET {
            continue;
        }
        let id = size.len() as u32;
        let mut count = 0;
        label[start] = id;
        stack.push(start);
        while let Some(p) = stack.pop() {
            count += 1;
            let (x, y) = (p % w, p / w);
            let mut visit = |q: usize| {
                if levels[q] <= t && label[q] == UNSET {
                    label[q] = id;
                    stack.push(q);
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < w {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - w);
            }
            if y + 1 < h {
                visit(p + w);
            }
        }
        size.push(count);
    }
    Labels { label, size }
}

struct Extremal {
    pixels: Vec<u32>,
    level: u8,
    top: u8,
}

/// Pixel sets (sorted linear indices) of the regions the rules select.
pub fn oracle_mser(img: &GrayImage, polarity: Polarity, p: &MserParams) -> Vec<Vec<u32>> {
    let (w, h) = (img.width(), img.height());
    let levels: Vec<u8> = match polarity {
        Polarity::Dark => img.data().to_vec(),
        Polarity::Bright => img.data().iter().map(|v| 255 - v).collect(),
    };
    let labels: Vec<Labels> = (0..=255u8).map(|t| label_threshold(&levels, w, h, t)).collect();

    // distinct pixel sets across all thresholds, with their threshold interval
    let mut index: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut regions: Vec<Extremal> = Vec::new();
    for t in 0..=255u8 {
        let lab = &labels[t as usize];
        let mut sets: Vec<Vec<u32>> = vec![Vec::new(); lab.size.len()];
        for (q, &l) in lab.label.iter().enumerate() {
            if l != UNSET {
                sets[l as usize].push(q as u32);
            }
        }
        for set in sets {
            match index.get(&set) {
                Some(&i) => regions[i].top = t,
                None => {
                    index.insert(set.clone(), regions.len());
                    regions.push(Extremal { pixels: set, level: t, top: t });
                }
            }
        }
    }

    let delta = p.delta as i32;
    let variation: Vec<f64> = regions
        .iter()
        .map(|r| {
            let area = r.pixels.len() as f64;
            let rep = r.pixels[0] as usize;
            (r.level..=r.top)
                .map(|t| {
                    let up = (t as i32 + delta).min(255) as usize;
                    let upper = labels[up].size[labels[up].label[rep] as usize];
                    let s = t as i32 - delta;
                    let lower = if s < 0 {
                        0
                    } else {
                        let lab = &labels[s as usize];
                        r.pixels
                            .iter()
                            .filter_map(|&q| {
                                let l = lab.label[q as usize];
                                (l != UNSET).then(|| lab.size[l as usize])
                            })
                            .max()
                            .unwrap_or(0)
                    };
                    (upper - lower) as f64 / area
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect();

    // parent: the region holding the representative one level above the interval
    let parent: Vec<Option<usize>> = regions
        .iter()
        .map(|r| {
            if r.top == 255 {
                return None;
            }
            let lab = &labels[r.top as usize + 1];
            let l = lab.label[r.pixels[0] as usize];
            let set: Vec<u32> = (0..w * h).filter(|&q| lab.label[q] == l).map(|q| q as u32).collect();
            Some(index[&set])
        })
        .collect();

    let total = (w * h) as f64;
    let stable: Vec<bool> = (0..regions.len())
        .map(|i| {
            let area = regions[i].pixels.len();
            let is_root = area == w * h;
            let local_min = parent[i].is_none_or(|q| variation[i] <= variation[q])
                && (0..regions.len()).all(|c| parent[c] != Some(i) || variation[i] <= variation[c]);
            !is_root
                && area >= p.min_area
                && area as f64 <= p.max_area_ratio * total
                && variation[i] <= p.max_variation
                && local_min
        })
        .collect();

    let mut out = Vec::new();
    for i in 0..regions.len() {
        if !stable[i] {
            continue;
        }
        let mut anc = parent[i];
        while let Some(a) = anc {
            if stable[a] {
                break;
            }
            anc = parent[a];
        }
        if let Some(a) = anc {
            let a_area = regions[a].pixels.len() as f64;
            if (a_area - regions[i].pixels.len() as f64) / a_area < p.min_diversity {
                continue;
            }
        }
        out.push(regions[i].pixels.clone());
    }
    out.sort();
    out
}

/// Seeded 32x32 test image: a smooth background, a few flat rectangles and low-amplitude noise.
pub fn random_test_image(seed: u64, w: usize, h: usize) -> GrayImage {
    // SplitMix64: self-contained so the corpus does not depend on library RNG code
    let mut state = seed.wrapping_add(0x1234_5678);
    let mut next = move || {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D1_33EB_2311_14EB);
        z ^ (z >> 31)
    };
    let base = (next() % 256) as i32;
    let gx = (next() % 7) as i32 - 3;
    let gy = (next() % 7) as i32 - 3;
    let mut px: Vec<i32> = (0..w * h).map(|i| base + gx * (i % w) as i32 + gy * (i / w) as i32).collect();
    let rects = 1 + next() % 6;
    for _ in 0..rects {
        let x0 = (next() % w as u64) as usize;
        let y0 = (next() % h as u64) as usize;
        let x1 = (x0 + 2 + (next() % 12) as usize).min(w);
        let y1 = (y0 + 2 + (next() % 12) as usize).min(h);
        let v = (next() % 256) as i32;
        for y in y0..y1 {
            for x in x0..x1 {
                px[y * w + x] = v;
            }
        }
    }
    let amp = (next() % 12) as i32;
    for v in px.iter_mut() {
        if amp > 0 {
            *v += (next() % (2 * amp as u64 + 1)) as i32 - amp;
        }
    }
    GrayImage::new(w, h, px.into_iter().map(|v| v.clamp(0, 255) as u8).collect()).unwrap()
}
