//! Region similarity grouping: per-region cues, a single-linkage dendrogram
//! carrying incremental group statistics, and the group quality score.

use crate::error::{Error, Result};
use crate::imaging::{BoundingBox, ColorImage, GrayImage, RowRuns};
use crate::mser::Region;
use crate::scalar::Scalar;
use rayon::prelude::*;
use std::collections::HashMap;

/// Number of cues in the grouping feature vector.
pub const CUES: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct RegionFeatures<T> {
    pub center: (T, T),
    pub intensity_mean: T,
    pub color_mean: [T; 3],
    pub stroke_width: T,
    pub diameter: T,
    pub bbox: BoundingBox,
    pub area: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupingParams<T> {
    pub spatial_scale: T,
    /// Multipliers for `(x, y, intensity, r, g, b, log2 stroke, log2 diameter)`.
    pub weights: [T; CUES],
    pub min_fill_ratio: T,
    pub min_aspect: T,
    pub max_aspect: T,
    pub max_members: usize,
    /// Regions kept (lowest variation first) when detection returns more.
    pub max_regions: usize,
}

impl<T: Scalar> Default for GroupingParams<T> {
    fn default() -> Self {
        Self {
            spatial_scale: T::one(),
            weights: [T::one(); CUES],
            min_fill_ratio: T::of(0.05),
            min_aspect: T::of(0.1),
            max_aspect: T::of(30.0),
            max_members: 1000,
            max_regions: 3000,
        }
    }
}

impl<T: Scalar> GroupingParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.spatial_scale >= T::zero()) || self.weights.iter().any(|w| !(*w >= T::zero())) {
            return Err(Error::Invalid("grouping weights must be non-negative".into()));
        }
        if !(self.min_aspect <= self.max_aspect) {
            return Err(Error::Invalid("grouping min_aspect exceeds max_aspect".into()));
        }
        if self.max_regions == 0 {
            return Err(Error::Invalid("grouping max_regions must be > 0".into()));
        }
        Ok(())
    }
}

/// Exact Euclidean distance transform (squared) of a binary mask: distance from
/// each pixel to the nearest pixel outside the mask. Separable lower-envelope
/// algorithm of Felzenszwalb and Huttenlocher.
pub fn squared_distance_transform(mask: &[bool], width: usize, height: usize) -> Vec<f64> {
    const INF: f64 = 1e20;
    let mut grid: Vec<f64> = mask.iter().map(|&m| if m { INF } else { 0.0 }).collect();
    let mut buf = vec![0.0; width.max(height)];
    let mut out = vec![0.0; width.max(height)];
    for x in 0..width {
        for y in 0..height {
            buf[y] = grid[y * width + x];
        }
        edt_1d(&buf[..height], &mut out[..height]);
        for y in 0..height {
            grid[y * width + x] = out[y];
        }
    }
    for y in 0..height {
        let row = &mut grid[y * width..(y + 1) * width];
        buf[..width].copy_from_slice(row);
        edt_1d(&buf[..width], &mut out[..width]);
        row.copy_from_slice(&out[..width]);
    }
    grid
}

fn edt_1d(f: &[f64], d: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let mut s;
        loop {
            let p = v[k];
            s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            // z[0] is -inf, so this never pops the first parabola
            if s <= z[k] {
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, dq) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dx = q as f64 - p as f64;
        *dq = dx * dx + f[p];
    }
}

/// Stroke width of a pixel mask: twice the mean boundary distance over ridge
/// pixels (8-neighborhood maxima of the distance transform). Boundary distance
/// is the distance to the nearest outside pixel center minus half a pixel.
pub fn stroke_width(mask: &RowRuns) -> f64 {
    let Some(bb) = mask.bounding_box() else {
        return 0.0;
    };
    // one pixel of background padding on every side
    let w = bb.width() as usize + 2;
    let h = bb.height() as usize + 2;
    let mut grid = vec![false; w * h];
    for (x, y) in mask.pixels() {
        let gx = (x as i32 - bb.x0 + 1) as usize;
        let gy = (y as i32 - bb.y0 + 1) as usize;
        grid[gy * w + gx] = true;
    }
    let dt: Vec<f64> = squared_distance_transform(&grid, w, h).into_iter().map(f64::sqrt).collect();
    let mut sum = 0.0;
    let mut count = 0usize;
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let i = y * w + x;
            if !grid[i] {
                continue;
            }
            let ridge = (-1i32..=1).all(|dy| {
                (-1i32..=1).all(|dx| {
                    let j = ((y as i32 + dy) as usize) * w + (x as i32 + dx) as usize;
                    dt[j] <= dt[i]
                })
            });
            if ridge {
                sum += dt[i] - 0.5;
                count += 1;
            }
        }
    }
    2.0 * sum / count as f64
}

pub fn compute_region_features<T: Scalar>(r: &Region, gray: &GrayImage, color: &ColorImage) -> RegionFeatures<T> {
    let n = r.pixels.area() as f64;
    let (mut sx, mut sy, mut si) = (0u64, 0u64, 0u64);
    let mut sc = [0u64; 3];
    for (x, y) in r.pixels.pixels() {
        let (xu, yu) = (x as usize, y as usize);
        sx += x as u64;
        sy += y as u64;
        si += gray.get(xu, yu) as u64;
        let c = color.get(xu, yu);
        for k in 0..3 {
            sc[k] += c[k] as u64;
        }
    }
    RegionFeatures {
        center: (T::of(sx as f64 / n), T::of(sy as f64 / n)),
        intensity_mean: T::of(si as f64 / n),
        color_mean: sc.map(|s| T::of(s as f64 / n)),
        stroke_width: T::of(stroke_width(&r.pixels)),
        diameter: T::of(r.bbox.diagonal()),
        bbox: r.bbox,
        area: r.pixels.area(),
    }
}

/// Features for every region, computed in parallel, in input order.
pub fn compute_all_features<T: Scalar>(
    regions: &[Region],
    gray: &GrayImage,
    color: &ColorImage,
) -> Vec<RegionFeatures<T>> {
    regions.par_iter().map(|r| compute_region_features(r, gray, color)).collect()
}

/// Keeps at most `max` regions, preferring low variation; order is preserved.
pub fn cap_regions(regions: Vec<Region>, max: usize) -> Vec<Region> {
    if regions.len() <= max {
        return regions;
    }
    let mut idx: Vec<usize> = (0..regions.len()).collect();
    idx.sort_by(|&a, &b| regions[a].variation.total_cmp(&regions[b].variation).then(a.cmp(&b)));
    let mut keep = vec![false; regions.len()];
    for &i in &idx[..max] {
        keep[i] = true;
    }
    regions.into_iter().zip(keep).filter_map(|(r, k)| k.then_some(r)).collect()
}

/// Normalized grouping coordinates of a region in a `width x height` image.
pub fn feature_vector<T: Scalar>(
    f: &RegionFeatures<T>,
    width: usize,
    height: usize,
    p: &GroupingParams<T>,
) -> [T; CUES] {
    let c255 = T::of(255.0);
    let raw = [
        f.center.0 / T::of_usize(width) * p.spatial_scale,
        f.center.1 / T::of_usize(height) * p.spatial_scale,
        f.intensity_mean / c255,
        f.color_mean[0] / c255,
        f.color_mean[1] / c255,
        f.color_mean[2] / c255,
        f.stroke_width.log2(),
        f.diameter.log2(),
    ];
    let mut out = raw;
    for k in 0..CUES {
        out[k] = raw[k] * p.weights[k];
    }
    out
}

fn euclidean<T: Scalar>(a: &[T; CUES], b: &[T; CUES]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum::<T>().sqrt()
}

/// One agglomeration step: clusters `left` and `right` (node ids) join at `distance`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Merge<T> {
    pub left: usize,
    pub right: usize,
    pub distance: T,
}

/// Single-linkage merges for `n` items via a minimum spanning tree (Prim, O(n^2)).
///
/// Leaves are node ids `0..n`; the k-th merge creates node `n + k`. Merges are
/// ordered by distance, ties by the smaller leaf index pair of the MST edge.
pub fn single_linkage<T: Scalar>(n: usize, dist: impl Fn(usize, usize) -> T) -> Vec<Merge<T>> {
    if n < 2 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![T::infinity(); n];
    let mut link = vec![0usize; n];
    let mut edges: Vec<(T, usize, usize)> = Vec::with_capacity(n - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next = usize::MAX;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let d = dist(current, j);
            if d < best[j] {
                best[j] = d;
                link[j] = current;
            }
            if next == usize::MAX || best[j] < best[next] {
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push((best[next], link[next].min(next), link[next].max(next)));
        current = next;
    }
    edges.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut uf: Vec<usize> = (0..n).collect();
    let mut cluster: Vec<usize> = (0..n).collect();
    fn find(uf: &mut [usize], mut i: usize) -> usize {
        while uf[i] != i {
            uf[i] = uf[uf[i]];
            i = uf[i];
        }
        i
    }
    edges
        .into_iter()
        .enumerate()
        .map(|(k, (d, a, b))| {
            let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
            let (ca, cb) = (cluster[ra], cluster[rb]);
            uf[rb] = ra;
            cluster[ra] = n + k;
            Merge { left: ca.min(cb), right: ca.max(cb), distance: d }
        })
        .collect()
}

/// Count, mean and sum of squared deviations, mergeable across groups.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunningStats<T> {
    pub count: usize,
    pub mean: T,
    pub m2: T,
}

impl<T: Scalar> RunningStats<T> {
    pub fn empty() -> Self {
        Self { count: 0, mean: T::zero(), m2: T::zero() }
    }

    pub fn single(v: T) -> Self {
        Self { count: 1, mean: v, m2: T::zero() }
    }

    pub fn merge(&self, o: &Self) -> Self {
        if self.count == 0 {
            return *o;
        }
        if o.count == 0 {
            return *self;
        }
        let n = self.count + o.count;
        let (na, nb, nn) = (T::of_usize(self.count), T::of_usize(o.count), T::of_usize(n));
        let d = o.mean - self.mean;
        Self { count: n, mean: self.mean + d * nb / nn, m2: self.m2 + o.m2 + d * d * na * nb / nn }
    }

    /// Population variance.
    pub fn variance(&self) -> T {
        if self.count == 0 {
            T::zero()
        } else {
            self.m2 / T::of_usize(self.count)
        }
    }
}

/// Running first and second moments of 2-D points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointMoments<T> {
    pub count: usize,
    pub mean: (T, T),
    /// Co-moment sums `(sxx, sxy, syy)` about the mean.
    pub co: (T, T, T),
}

impl<T: Scalar> PointMoments<T> {
    pub fn single(x: T, y: T) -> Self {
        Self { count: 1, mean: (x, y), co: (T::zero(), T::zero(), T::zero()) }
    }

    pub fn merge(&self, o: &Self) -> Self {
        let n = self.count + o.count;
        let (na, nb, nn) = (T::of_usize(self.count), T::of_usize(o.count), T::of_usize(n));
        let dx = o.mean.0 - self.mean.0;
        let dy = o.mean.1 - self.mean.1;
        let f = na * nb / nn;
        Self {
            count: n,
            mean: (self.mean.0 + dx * nb / nn, self.mean.1 + dy * nb / nn),
            co: (self.co.0 + o.co.0 + dx * dx * f, self.co.1 + o.co.1 + dx * dy * f, self.co.2 + o.co.2 + dy * dy * f),
        }
    }

    /// RMS distance of the points to their total-least-squares line.
    pub fn line_residual(&self) -> T {
        let n = T::of_usize(self.count);
        let (a, b, c) = (self.co.0 / n, self.co.1 / n, self.co.2 / n);
        let two = T::of(2.0);
        let half_diff = (a - c) / two;
        let lambda_min = (a + c) / two - (half_diff * half_diff + b * b).sqrt();
        lambda_min.max(T::zero()).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DendrogramNode<T> {
    pub children: Option<(usize, usize)>,
    /// Merge distance; zero for leaves.
    pub distance: T,
    pub member_count: usize,
    pub bbox: BoundingBox,
    /// Sum of member region areas.
    pub member_pixels: usize,
    /// Per-cue statistics over members.
    pub cues: [RunningStats<T>; CUES],
    /// Statistics of the merge distances inside the node.
    pub merges: RunningStats<T>,
    pub centers: PointMoments<T>,
}

/// Binary merge tree: `leaves` leaf nodes then `leaves - 1` merge nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Dendrogram<T> {
    pub leaves: usize,
    pub nodes: Vec<DendrogramNode<T>>,
}

impl<T: Scalar> Dendrogram<T> {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        node < self.leaves
    }

    /// Leaf indices under `node`, ascending.
    pub fn members(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(n) = stack.pop() {
            match self.nodes[n].children {
                Some((l, r)) => stack.extend([l, r]),
                None => out.push(n),
            }
        }
        out.sort_unstable();
        out
    }

    pub fn parents(&self) -> Vec<Option<usize>> {
        let mut parent = vec![None; self.nodes.len()];
        for (i, nd) in self.nodes.iter().enumerate() {
            if let Some((l, r)) = nd.children {
                parent[l] = Some(i);
                parent[r] = Some(i);
            }
        }
        parent
    }
}

/// Leaf node carrying the region's own statistics.
fn leaf_node<T: Scalar>(f: &RegionFeatures<T>, v: &[T; CUES]) -> DendrogramNode<T> {
    DendrogramNode {
        children: None,
        distance: T::zero(),
        member_count: 1,
        bbox: f.bbox,
        member_pixels: f.area,
        cues: v.map(RunningStats::single),
        merges: RunningStats::empty(),
        centers: PointMoments::single(f.center.0, f.center.1),
    }
}

fn join<T: Scalar>(a: &DendrogramNode<T>, b: &DendrogramNode<T>, m: &Merge<T>) -> DendrogramNode<T> {
    let cues = std::array::from_fn(|k| a.cues[k].merge(&b.cues[k]));
    DendrogramNode {
        children: Some((m.left, m.right)),
        distance: m.distance,
        member_count: a.member_count + b.member_count,
        bbox: a.bbox.union(&b.bbox),
        member_pixels: a.member_pixels + b.member_pixels,
        cues,
        merges: a.merges.merge(&b.merges).merge(&RunningStats::single(m.distance)),
        centers: a.centers.merge(&b.centers),
    }
}

/// Assembles the dendrogram from leaves and an explicit merge sequence.
pub fn assemble_dendrogram<T: Scalar>(
    feats: &[RegionFeatures<T>],
    vectors: &[[T; CUES]],
    merges: &[Merge<T>],
) -> Dendrogram<T> {
    let mut nodes: Vec<DendrogramNode<T>> = feats.iter().zip(vectors).map(|(f, v)| leaf_node(f, v)).collect();
    for m in merges {
        let node = join(&nodes[m.left], &nodes[m.right], m);
        nodes.push(node);
    }
    Dendrogram { leaves: feats.len(), nodes }
}

/// Single-linkage dendrogram over the normalized feature space of a `width x height` image.
pub fn build_dendrogram<T: Scalar>(
    feats: &[RegionFeatures<T>],
    width: usize,
    height: usize,
    p: &GroupingParams<T>,
) -> Dendrogram<T> {
    let vectors: Vec<[T; CUES]> = feats.iter().map(|f| feature_vector(f, width, height, p)).collect();
    let merges = single_linkage(feats.len(), |i, j| euclidean(&vectors[i], &vectors[j]));
    assemble_dendrogram(feats, &vectors, &merges)
}

/// Group quality: `m / (1 + CV of internal merge distances) * max(0, 1 - line residual / bbox diagonal)`.
pub fn quality_score<T: Scalar>(d: &Dendrogram<T>, node: usize) -> T {
    let nd = &d.nodes[node];
    if nd.children.is_none() {
        return T::zero();
    }
    let m = T::of_usize(nd.member_count);
    let cv = if nd.member_count <= 2 || nd.merges.mean <= T::zero() {
        T::zero()
    } else {
        nd.merges.variance().sqrt() / nd.merges.mean
    };
    let diag = T::of(nd.bbox.diagonal());
    let straight = (T::one() - nd.centers.line_residual() / diag).max(T::zero());
    m / (T::one() + cv) * straight
}

/// A candidate text box.
#[derive(Clone, Debug, PartialEq)]
pub struct Proposal<T> {
    pub bbox: BoundingBox,
    pub quality: T,
    pub mtp: Option<T>,
    /// Dendrogram node the box came from.
    pub source: usize,
    pub member_count: usize,
}

/// Rule-based text-likeness test for a node.
pub fn passes_filter<T: Scalar>(nd: &DendrogramNode<T>, p: &GroupingParams<T>) -> bool {
    let area = T::of(nd.bbox.area() as f64);
    let fill = T::of_usize(nd.member_pixels) / area;
    let aspect = T::of(nd.bbox.width() as f64) / T::of(nd.bbox.height() as f64);
    fill >= p.min_fill_ratio && aspect >= p.min_aspect && aspect <= p.max_aspect && nd.member_count <= p.max_members
}

/// One proposal per surviving node; boxes with identical coordinates keep the highest Q.
pub fn enumerate_hypotheses<T: Scalar>(d: &Dendrogram<T>, p: &GroupingParams<T>) -> Vec<Proposal<T>> {
    let mut out: Vec<Proposal<T>> = Vec::new();
    let mut seen: HashMap<BoundingBox, usize> = HashMap::new();
    for (i, nd) in d.nodes.iter().enumerate() {
        if !passes_filter(nd, p) {
            continue;
        }
        let prop = Proposal {
            bbox: nd.bbox,
            quality: quality_score(d, i),
            mtp: None,
            source: i,
            member_count: nd.member_count,
        };
        match seen.get(&nd.bbox) {
            Some(&k) => {
                if prop.quality > out[k].quality {
                    out[k] = prop;
                }
            }
            None => {
                seen.insert(nd.bbox, out.len());
                out.push(prop);
            }
        }
    }
    out
}

/// Union of the pixel masks of the regions under `node`.
pub fn node_mask<T: Scalar>(d: &Dendrogram<T>, node: usize, regions: &[Region]) -> RowRuns {
    RowRuns::union(d.members(node).into_iter().map(|i| &regions[i].pixels))
}
