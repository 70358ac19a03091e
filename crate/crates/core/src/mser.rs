//! Maximally Stable Extremal Regions over a union-find component tree.
//!
//! The tree is built by sweeping gray levels upward and merging 4-connected
//! pixels. Every distinct extremal region becomes one node; a node persists
//! over the threshold interval `[level, parent.level)`. Stability is the
//! smallest relative area change `(|R(t+delta)| - |R(t-delta)|) / |R(t)|` over
//! that interval, where `R(t-delta)` is the largest component at threshold
//! `t - delta` inside the node (empty below level 0) and `R(t+delta)` is the
//! enclosing component, with thresholds above 255 clamped to 255.

use crate::error::{Error, Result};
use crate::imaging::{BoundingBox, GrayImage, RowRuns};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    /// Regions darker than their surround.
    Dark,
    /// Regions brighter than their surround (dark regions of the inverted image).
    Bright,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MserParams {
    pub delta: u8,
    pub min_area: usize,
    pub max_area_ratio: f64,
    pub max_variation: f64,
    pub min_diversity: f64,
}

impl Default for MserParams {
    fn default() -> Self {
        Self { delta: 5, min_area: 10, max_area_ratio: 0.5, max_variation: 0.5, min_diversity: 0.2 }
    }
}

impl MserParams {
    pub fn validate(&self) -> Result<()> {
        if self.delta < 1 {
            return Err(Error::Invalid("mser delta must be >= 1".into()));
        }
        if self.min_area == 0 {
            return Err(Error::Invalid("mser min_area must be > 0".into()));
        }
        if !(self.max_area_ratio > 0.0 && self.max_area_ratio <= 1.0) {
            return Err(Error::Invalid("mser max_area_ratio must be in (0, 1]".into()));
        }
        if !(self.max_variation > 0.0) {
            return Err(Error::Invalid("mser max_variation must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.min_diversity) {
            return Err(Error::Invalid("mser min_diversity must be in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentNode {
    /// Threshold (in sweep space) at which the region first appears.
    pub level: u8,
    pub area: u32,
    pub parent: Option<u32>,
    /// Some pixel of the region, as a linear index.
    pub representative: u32,
    pub bbox: BoundingBox,
}

/// Nesting tree of the threshold components for one polarity.
#[derive(Clone, Debug)]
pub struct ComponentTree {
    width: usize,
    height: usize,
    polarity: Polarity,
    nodes: Vec<ComponentNode>,
    child_start: Vec<u32>,
    child_list: Vec<u32>,
    own_start: Vec<u32>,
    own_pixels: Vec<u32>,
}

const NONE: u32 = u32::MAX;

struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    fn find(&mut self, mut i: u32) -> u32 {
        let mut root = i;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        while self.parent[i as usize] != root {
            let next = self.parent[i as usize];
            self.parent[i as usize] = root;
            i = next;
        }
        root
    }

    /// Union by size; ties keep `a` as root.
    fn union(&mut self, a: u32, b: u32) -> u32 {
        let (big, small) = if self.size[a as usize] >= self.size[b as usize] { (a, b) } else { (b, a) };
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
        big
    }
}

pub fn build_component_tree(img: &GrayImage, polarity: Polarity) -> ComponentTree {
    let swept;
    let levels: &[u8] = match polarity {
        Polarity::Dark => img.data(),
        Polarity::Bright => {
            swept = img.inverted();
            swept.data()
        }
    };
    let (w, h) = (img.width(), img.height());
    let n = w * h;

    // counting sort by level, stable in scan order
    let mut hist = [0usize; 257];
    for &v in levels {
        hist[v as usize + 1] += 1;
    }
    for i in 1..257 {
        hist[i] += hist[i - 1];
    }
    let level_start = hist;
    let mut order = vec![0u32; n];
    let mut fill = hist;
    for (i, &v) in levels.iter().enumerate() {
        order[fill[v as usize]] = i as u32;
        fill[v as usize] += 1;
    }

    let mut uf = UnionFind { parent: vec![NONE; n], size: vec![0; n] };
    let mut root_node = vec![NONE; n];
    let mut root_bbox: Vec<BoundingBox> = vec![BoundingBox::pixel(0, 0); n];
    let mut pixel_node = vec![NONE; n];
    let mut nodes: Vec<ComponentNode> = Vec::new();
    let mut orphans: Vec<u32> = Vec::new();

    for level in 0..=255u8 {
        let pixels = &order[level_start[level as usize]..level_start[level as usize + 1]];
        if pixels.is_empty() {
            continue;
        }
        for &p in pixels {
            let (x, y) = ((p as usize % w) as i32, (p as usize / w) as i32);
            uf.parent[p as usize] = p;
            uf.size[p as usize] = 1;
            root_bbox[p as usize] = BoundingBox::pixel(x, y);
            let mut neighbors = [NONE; 4];
            if x > 0 {
                neighbors[0] = p - 1;
            }
            if (x as usize) + 1 < w {
                neighbors[1] = p + 1;
            }
            if y > 0 {
                neighbors[2] = p - w as u32;
            }
            if (y as usize) + 1 < h {
                neighbors[3] = p + w as u32;
            }
            for q in neighbors {
                if q == NONE || uf.parent[q as usize] == NONE {
                    continue;
                }
                let rq = uf.find(q);
                let rp = uf.find(p);
                if rq == rp {
                    continue;
                }
                for r in [rp, rq] {
                    let old = std::mem::replace(&mut root_node[r as usize], NONE);
                    if old != NONE {
                        orphans.push(old);
                    }
                }
                let merged = root_bbox[rp as usize].union(&root_bbox[rq as usize]);
                let r = uf.union(rq, rp);
                root_bbox[r as usize] = merged;
            }
            let r = uf.find(p);
            let old = std::mem::replace(&mut root_node[r as usize], NONE);
            if old != NONE {
                orphans.push(old);
            }
        }
        for &p in pixels {
            let r = uf.find(p);
            if root_node[r as usize] == NONE {
                root_node[r as usize] = nodes.len() as u32;
                nodes.push(ComponentNode {
                    level,
                    area: uf.size[r as usize],
                    parent: None,
                    representative: p,
                    bbox: root_bbox[r as usize],
                });
            }
            pixel_node[p as usize] = root_node[r as usize];
        }
        for o in orphans.drain(..) {
            let r = uf.find(nodes[o as usize].representative);
            nodes[o as usize].parent = Some(root_node[r as usize]);
        }
    }

    let count = nodes.len();
    let mut child_start = vec![0u32; count + 1];
    for node in &nodes {
        if let Some(p) = node.parent {
            child_start[p as usize + 1] += 1;
        }
    }
    for i in 0..count {
        child_start[i + 1] += child_start[i];
    }
    let mut child_list = vec![0u32; child_start[count] as usize];
    let mut cursor = child_start.clone();
    for (i, node) in nodes.iter().enumerate() {
        if let Some(p) = node.parent {
            child_list[cursor[p as usize] as usize] = i as u32;
            cursor[p as usize] += 1;
        }
    }

    let mut own_start = vec![0u32; count + 1];
    for &nd in &pixel_node {
        own_start[nd as usize + 1] += 1;
    }
    for i in 0..count {
        own_start[i + 1] += own_start[i];
    }
    let mut own_pixels = vec![0u32; n];
    let mut cursor = own_start.clone();
    for (p, &nd) in pixel_node.iter().enumerate() {
        own_pixels[cursor[nd as usize] as usize] = p as u32;
        cursor[nd as usize] += 1;
    }

    ComponentTree { width: w, height: h, polarity, nodes, child_start, child_list, own_start, own_pixels }
}

impl ComponentTree {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn polarity(&self) -> Polarity {
        self.polarity
    }

    pub fn nodes(&self) -> &[ComponentNode] {
        &self.nodes
    }

    /// The root is created last: it is the only component at the top level.
    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn children(&self, node: usize) -> &[u32] {
        &self.child_list[self.child_start[node] as usize..self.child_start[node + 1] as usize]
    }

    /// Linear indices of every pixel in the node's region.
    pub fn region_pixels(&self, node: usize) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.nodes[node].area as usize);
        let mut stack = vec![node];
        while let Some(n) = stack.pop() {
            out.extend_from_slice(&self.own_pixels[self.own_start[n] as usize..self.own_start[n + 1] as usize]);
            stack.extend(self.children(n).iter().map(|&c| c as usize));
        }
        out
    }

    /// Highest threshold (inclusive) at which the node is still the component.
    fn top(&self, node: usize) -> u8 {
        match self.nodes[node].parent {
            Some(p) => self.nodes[p as usize].level - 1,
            None => 255,
        }
    }

    /// Area of the component at threshold `t` (clamped to 255) containing `node`.
    fn area_above(&self, node: usize, t: u32) -> u32 {
        let t = t.min(255) as u8;
        let mut n = node;
        while let Some(p) = self.nodes[n].parent {
            if self.nodes[p as usize].level > t {
                break;
            }
            n = p as usize;
        }
        self.nodes[n].area
    }

    /// Largest component at threshold `s < level` inside `node`.
    fn area_below(&self, node: usize, s: i32) -> u32 {
        if s < 0 {
            return 0;
        }
        let mut best = 0;
        let mut stack: Vec<usize> = self.children(node).iter().map(|&c| c as usize).collect();
        while let Some(c) = stack.pop() {
            if self.nodes[c].level as i32 <= s {
                best = best.max(self.nodes[c].area);
            } else {
                stack.extend(self.children(c).iter().map(|&g| g as usize));
            }
        }
        best
    }

    /// Minimum relative area variation over the node's threshold interval.
    pub fn variation(&self, node: usize, delta: u8) -> f64 {
        let nd = &self.nodes[node];
        let level = nd.level as u32;
        let delta = delta as u32;
        // past level + delta the lower component is the node itself and the upper one only grows
        let last = (self.top(node) as u32).min(level + delta);
        let mut best = f64::INFINITY;
        for t in level..=last {
            let lower = if t >= level + delta { nd.area } else { self.area_below(node, t as i32 - delta as i32) };
            let upper = self.area_above(node, t + delta);
            best = best.min((upper - lower) as f64 / nd.area as f64);
        }
        best
    }
}

/// A stable region, with its pixel set in run-length form.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub pixels: RowRuns,
    pub bbox: BoundingBox,
    /// Sweep-space level; see [`Region::gray_level`].
    pub level: u8,
    pub polarity: Polarity,
    pub area: usize,
    pub variation: f64,
}

impl Region {
    /// Extraction threshold in original image intensities.
    pub fn gray_level(&self) -> u8 {
        match self.polarity {
            Polarity::Dark => self.level,
            Polarity::Bright => 255 - self.level,
        }
    }
}

pub fn extract_mser(tree: &ComponentTree, p: &MserParams) -> Vec<Region> {
    let count = tree.nodes.len();
    let max_area = p.max_area_ratio * (tree.width * tree.height) as f64;
    let variation: Vec<f64> = (0..count).map(|i| tree.variation(i, p.delta)).collect();

    let root = tree.root();
    let stable: Vec<bool> = (0..count)
        .map(|i| {
            let nd = &tree.nodes[i];
            i != root
                && nd.area as usize >= p.min_area
                && nd.area as f64 <= max_area
                && variation[i] <= p.max_variation
                && nd.parent.is_none_or(|q| variation[i] <= variation[q as usize])
                && tree.children(i).iter().all(|&c| variation[i] <= variation[c as usize])
        })
        .collect();

    let w = tree.width;
    let mut regions = Vec::new();
    for i in 0..count {
        if !stable[i] {
            continue;
        }
        let nd = &tree.nodes[i];
        let mut anc = nd.parent;
        while let Some(a) = anc {
            if stable[a as usize] {
                break;
            }
            anc = tree.nodes[a as usize].parent;
        }
        if let Some(a) = anc {
            let a_area = tree.nodes[a as usize].area as f64;
            if (a_area - nd.area as f64) / a_area < p.min_diversity {
                continue;
            }
        }
        let pixels =
            tree.region_pixels(i).into_iter().map(|q| ((q as usize % w) as u32, (q as usize / w) as u32)).collect();
        regions.push(Region {
            pixels: RowRuns::from_pixels(pixels),
            bbox: nd.bbox,
            level: nd.level,
            polarity: tree.polarity,
            area: nd.area as usize,
            variation: variation[i],
        });
    }
    regions
}

/// Runs both polarity sweeps (concurrently) and pools dark then bright regions.
pub fn detect_regions(img: &GrayImage, p: &MserParams) -> Vec<Region> {
    let (mut dark, bright) = rayon::join(
        || extract_mser(&build_component_tree(img, Polarity::Dark), p),
        || extract_mser(&build_component_tree(img, Polarity::Bright), p),
    );
    dark.extend(bright);
    dark
}
