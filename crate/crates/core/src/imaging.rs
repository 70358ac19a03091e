//! Raster types, box geometry, heatmap transport and summed-area tables.

use crate::error::{Error, Result};
use crate::scalar::{KahanSum, Scalar};
use std::fmt;
use std::io::Write;
use std::path::Path;

/// 8-bit luminance raster, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height, data.len(), 1)?;
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> u8) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn inverted(&self) -> GrayImage {
        GrayImage { width: self.width, height: self.height, data: self.data.iter().map(|&v| 255 - v).collect() }
    }
}

/// 8-bit RGB raster, row-major interleaved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColorImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl ColorImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height, data.len(), 3)?;
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        let data = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Self::new(width, height, data)
    }

    /// Replicates a gray raster into three channels.
    pub fn from_gray(gray: &GrayImage) -> Self {
        ColorImage { width: gray.width, height: gray.height, data: gray.data.iter().flat_map(|&v| [v, v, v]).collect() }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = 3 * (y * self.width + x);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Rec. 601 luma, rounded to nearest.
    pub fn to_gray(&self) -> GrayImage {
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| {
                let l = (299 * p[0] as u32 + 587 * p[1] as u32 + 114 * p[2] as u32 + 500) / 1000;
                l as u8
            })
            .collect();
        GrayImage { width: self.width, height: self.height, data }
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        image::save_buffer(path, &self.data, self.width as u32, self.height as u32, image::ExtendedColorType::Rgb8)?;
        Ok(())
    }
}

fn check_dims(width: usize, height: usize, len: usize, channels: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Invalid(format!("empty raster {width}x{height}")));
    }
    if len != width * height * channels {
        return Err(Error::Invalid(format!(
            "raster {width}x{height}x{channels} needs {} values, got {len}",
            width * height * channels
        )));
    }
    Ok(())
}

/// Loads a PNG/PGM/PPM (or anything the `image` crate decodes) as RGB.
pub fn load_color_image(path: &Path) -> Result<ColorImage> {
    let img = image::open(path)?.to_rgb8();
    let (w, h) = img.dimensions();
    ColorImage::new(w as usize, h as usize, img.into_raw())
}

/// Axis-aligned box, half-open: `[x0, x1) x [y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoundingBox {
    pub x0: i32,
    pub y0: i32,
    pub x1: i32,
    pub y1: i32,
}

impl BoundingBox {
    pub fn new(x0: i32, y0: i32, x1: i32, y1: i32) -> Result<Self> {
        if x0 >= x1 || y0 >= y1 {
            return Err(Error::Invalid(format!("degenerate box ({x0},{y0},{x1},{y1})")));
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    /// Box covering a single pixel.
    pub fn pixel(x: i32, y: i32) -> Self {
        Self { x0: x, y0: y, x1: x + 1, y1: y + 1 }
    }

    pub fn width(&self) -> i64 {
        (self.x1 - self.x0) as i64
    }

    pub fn height(&self) -> i64 {
        (self.y1 - self.y0) as i64
    }

    pub fn area(&self) -> i64 {
        self.width() * self.height()
    }

    pub fn diagonal(&self) -> f64 {
        ((self.width() * self.width() + self.height() * self.height()) as f64).sqrt()
    }

    pub fn union(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox {
            x0: self.x0.min(other.x0),
            y0: self.y0.min(other.y0),
            x1: self.x1.max(other.x1),
            y1: self.y1.max(other.y1),
        }
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> i64 {
        let w = (self.x1.min(other.x1) - self.x0.max(other.x0)).max(0) as i64;
        let h = (self.y1.min(other.y1) - self.y0.max(other.y0)).max(0) as i64;
        w * h
    }

    pub fn contains(&self, other: &BoundingBox) -> bool {
        self.x0 <= other.x0 && self.y0 <= other.y0 && self.x1 >= other.x1 && self.y1 >= other.y1
    }

    /// Clips to `[0, width) x [0, height)`; `None` if nothing remains.
    pub fn clipped(&self, width: usize, height: usize) -> Option<BoundingBox> {
        BoundingBox::new(self.x0.max(0), self.y0.max(0), self.x1.min(width as i32), self.y1.min(height as i32)).ok()
    }

    pub fn within(&self, width: usize, height: usize) -> bool {
        self.x0 >= 0 && self.y0 >= 0 && self.x1 as i64 <= width as i64 && self.y1 as i64 <= height as i64
    }
}

impl fmt::Display for BoundingBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{})", self.x0, self.y0, self.x1, self.y1)
    }
}

/// Intersection over union with pixel-count semantics.
pub fn iou<T: Scalar>(a: &BoundingBox, b: &BoundingBox) -> T {
    let inter = a.intersection_area(b);
    if inter == 0 {
        return T::zero();
    }
    let union = a.area() + b.area() - inter;
    T::of(inter as f64) / T::of(union as f64)
}

/// Pixel set stored as horizontal runs `[x0, x1)` on row `y`, sorted by `(y, x0)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct RowRuns {
    runs: Vec<Run>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Run {
    pub y: u32,
    pub x0: u32,
    pub x1: u32,
}

impl RowRuns {
    /// Builds runs from arbitrary pixel coordinates (duplicates allowed).
    pub fn from_pixels(mut pixels: Vec<(u32, u32)>) -> Self {
        pixels.sort_unstable_by_key(|&(x, y)| (y, x));
        pixels.dedup();
        let mut runs: Vec<Run> = Vec::new();
        for (x, y) in pixels {
            match runs.last_mut() {
                Some(r) if r.y == y && r.x1 == x => r.x1 += 1,
                _ => runs.push(Run { y, x0: x, x1: x + 1 }),
            }
        }
        Self { runs }
    }

    /// Union of several run sets.
    pub fn union<'a>(sets: impl IntoIterator<Item = &'a RowRuns>) -> RowRuns {
        let mut all: Vec<Run> = sets.into_iter().flat_map(|s| s.runs.iter().copied()).collect();
        all.sort_unstable();
        let mut runs: Vec<Run> = Vec::with_capacity(all.len());
        for r in all {
            match runs.last_mut() {
                Some(last) if last.y == r.y && r.x0 <= last.x1 => last.x1 = last.x1.max(r.x1),
                _ => runs.push(r),
            }
        }
        RowRuns { runs }
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn area(&self) -> usize {
        self.runs.iter().map(|r| (r.x1 - r.x0) as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.runs.iter().flat_map(|r| (r.x0..r.x1).map(move |x| (x, r.y)))
    }

    pub fn bounding_box(&self) -> Option<BoundingBox> {
        let first = self.runs.first()?;
        let last = self.runs.last()?;
        let x0 = self.runs.iter().map(|r| r.x0).min()?;
        let x1 = self.runs.iter().map(|r| r.x1).max()?;
        Some(BoundingBox { x0: x0 as i32, y0: first.y as i32, x1: x1 as i32, y1: last.y as i32 + 1 })
    }
}

/// Per-pixel text probability in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Scalar> Heatmap<T> {
    /// Rejects (does not clamp) values outside `[0, 1]`.
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        check_dims(width, height, data.len(), 1)?;
        if let Some((index, v)) = data.iter().enumerate().find(|(_, v)| !(**v >= T::zero() && **v <= T::one())) {
            return Err(Error::Range { index, value: v.as_f64() });
        }
        Ok(Self { width, height, data })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![T::zero(); width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    /// Multiplies every value by `c` in `[0, 1]`.
    pub fn scaled(&self, c: T) -> Result<Self> {
        Self::new(self.width, self.height, self.data.iter().map(|&v| v * c).collect())
    }
}

const TPHM_MAGIC: &[u8; 4] = b"TPHM";

/// Serializes to TPHM v1: magic, LE u32 width, LE u32 height, LE f32 values.
pub fn encode_heatmap<T: Scalar>(h: &Heatmap<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * h.data.len());
    out.extend_from_slice(TPHM_MAGIC);
    out.extend_from_slice(&(h.width as u32).to_le_bytes());
    out.extend_from_slice(&(h.height as u32).to_le_bytes());
    for v in &h.data {
        out.extend_from_slice(&v.to_f32().unwrap_or(f32::NAN).to_le_bytes());
    }
    out
}

/// Parses TPHM v1 or binary PGM (`P5`, maxval 255, mapped `v / 255`).
pub fn decode_heatmap<T: Scalar>(bytes: &[u8]) -> Result<Heatmap<T>> {
    if bytes.starts_with(TPHM_MAGIC) {
        decode_tphm(bytes)
    } else if bytes.starts_with(b"P5") {
        decode_pgm(bytes)
    } else {
        Err(Error::Format("unknown heatmap magic (expected TPHM or P5)".into()))
    }
}

fn decode_tphm<T: Scalar>(bytes: &[u8]) -> Result<Heatmap<T>> {
    if bytes.len() < 12 {
        return Err(Error::Format("truncated TPHM header".into()));
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = &bytes[12..];
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::Format("TPHM dimensions overflow".into()))?;
    if body.len() != expected {
        return Err(Error::Format(format!(
            "TPHM {width}x{height} needs {expected} payload bytes, found {}",
            body.len()
        )));
    }
    if width == 0 || height == 0 {
        return Err(Error::Format(format!("TPHM has empty extent {width}x{height}")));
    }
    let mut data = Vec::with_capacity(width * height);
    for (index, chunk) in body.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Range { index, value: v as f64 });
        }
        data.push(T::from_f32(v).unwrap());
    }
    Heatmap::new(width, height, data)
}

fn decode_pgm<T: Scalar>(bytes: &[u8]) -> Result<Heatmap<T>> {
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and '#' comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("malformed PGM header".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format("malformed PGM header number".into()))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(Error::Format(format!("PGM maxval {maxval} unsupported (need 255)")));
    }
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(Error::Format("PGM header not terminated by whitespace".into()));
    }
    let body = &bytes[pos + 1..];
    if body.len() != width * height {
        return Err(Error::Format(format!(
            "PGM {width}x{height} needs {} bytes, found {}",
            width * height,
            body.len()
        )));
    }
    let scale = T::of(255.0);
    Heatmap::new(width, height, body.iter().map(|&v| T::of(v as f64) / scale).collect())
}

pub fn load_heatmap<T: Scalar>(path: &Path) -> Result<Heatmap<T>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_heatmap(&bytes)
}

pub fn save_heatmap<T: Scalar>(h: &Heatmap<T>, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_heatmap(h)).map_err(|e| Error::io(path, e))
}

/// Summed-area table with a zero top row and left column.
#[derive(Clone, Debug)]
pub struct IntegralImage<T> {
    width: usize,
    height: usize,
    table: Vec<T>,
}

impl<T: Scalar> IntegralImage<T> {
    /// Row prefix sums are Kahan-compensated; rows are then stacked.
    pub fn new(h: &Heatmap<T>) -> Self {
        let stride = h.width + 1;
        let mut table = vec![T::zero(); stride * (h.height + 1)];
        for y in 0..h.height {
            let mut row = KahanSum::new();
            for x in 0..h.width {
                row.add(h.data[y * h.width + x]);
                table[(y + 1) * stride + x + 1] = table[y * stride + x + 1] + row.value();
            }
        }
        Self { width: h.width, height: h.height, table }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Sum over `[0, x) x [0, y)`.
    #[inline]
    pub fn entry(&self, x: usize, y: usize) -> T {
        self.table[y * (self.width + 1) + x]
    }

    #[inline]
    fn rect_sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> T {
        self.entry(x1, y1) - self.entry(x0, y1) - self.entry(x1, y0) + self.entry(x0, y0)
    }

    pub fn box_sum(&self, b: &BoundingBox) -> Result<T> {
        if !b.within(self.width, self.height) {
            return Err(Error::Bounds { bbox: b.to_string(), width: self.width, height: self.height });
        }
        Ok(self.rect_sum(b.x0 as usize, b.y0 as usize, b.x1 as usize, b.y1 as usize))
    }
}

pub fn build_integral<T: Scalar>(h: &Heatmap<T>) -> IntegralImage<T> {
    IntegralImage::new(h)
}

/// Mean heatmap value inside `b`, in O(1).
pub fn box_mean<T: Scalar>(ii: &IntegralImage<T>, b: &BoundingBox) -> Result<T> {
    let s = ii.box_sum(b)?;
    Ok(clamp_unit(s / T::of(b.area() as f64)))
}

/// Mean heatmap value over a pixel mask, in O(runs).
pub fn mask_mean<T: Scalar>(ii: &IntegralImage<T>, mask: &RowRuns) -> Result<T> {
    if mask.is_empty() {
        return Err(Error::Invalid("empty mask".into()));
    }
    let mut sum = KahanSum::new();
    for r in mask.runs() {
        let (y, x0, x1) = (r.y as usize, r.x0 as usize, r.x1 as usize);
        if y >= ii.height || x1 > ii.width {
            return Err(Error::Bounds { bbox: format!("run y={y} [{x0},{x1})"), width: ii.width, height: ii.height });
        }
        sum.add(ii.rect_sum(x0, y, x1, y + 1));
    }
    Ok(clamp_unit(sum.value() / T::of(mask.area() as f64)))
}

// Cancellation in the four-corner difference can leave values a few ulps outside [0, 1].
fn clamp_unit<T: Scalar>(v: T) -> T {
    v.max(T::zero()).min(T::one())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bb(x0: i32, y0: i32, x1: i32, y1: i32) -> BoundingBox {
        BoundingBox::new(x0, y0, x1, y1).unwrap()
    }

    fn brute_iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
        let (mut inter, mut uni) = (0, 0);
        for y in -10..20 {
            for x in -10..20 {
                let p = BoundingBox::pixel(x, y);
                let ia = a.contains(&p);
                let ib = b.contains(&p);
                inter += (ia && ib) as i32;
                uni += (ia || ib) as i32;
            }
        }
        inter as f64 / uni as f64
    }

    #[test]
    fn iou_examples() {
        let a = bb(0, 0, 2, 2);
        assert_eq!(iou::<f64>(&a, &a), 1.0);
        assert_eq!(iou::<f64>(&a, &bb(5, 5, 6, 6)), 0.0);
        let b = bb(1, 1, 3, 3);
        assert_eq!(brute_iou(&a, &b), 1.0 / 7.0);
        assert!((iou::<f64>(&a, &b) - 1.0 / 7.0).abs() < 1e-15);
        // touching edges share no pixels
        assert_eq!(iou::<f64>(&a, &bb(2, 0, 4, 2)), 0.0);
    }

    #[test]
    fn iou_decreases_with_translation() {
        let a = bb(0, 0, 8, 4);
        let mut prev = 1.0f64;
        for dx in 1..8 {
            let v = iou::<f64>(&a, &bb(dx, 0, 8 + dx, 4));
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn degenerate_box_rejected() {
        assert!(BoundingBox::new(1, 0, 1, 3).is_err());
        assert!(BoundingBox::new(0, 5, 3, 2).is_err());
    }

    #[test]
    fn integral_examples() {
        let h = Heatmap::new(1, 1, vec![0.7f64]).unwrap();
        assert_eq!(build_integral(&h).entry(1, 1), 0.7);

        let h = Heatmap::new(2, 2, vec![0.0f64, 1.0, 1.0, 0.0]).unwrap();
        let ii = build_integral(&h);
        assert_eq!(ii.entry(2, 2), 2.0);
        assert_eq!(ii.entry(0, 2), 0.0);
        assert_eq!(ii.entry(2, 0), 0.0);
        assert_eq!(box_mean(&ii, &bb(0, 0, 2, 2)).unwrap(), 0.5);
        assert_eq!(box_mean(&ii, &bb(1, 0, 2, 1)).unwrap(), 1.0);

        let z = Heatmap::<f64>::zeros(5, 3).unwrap();
        let ii = build_integral(&z);
        for y in 0..=3 {
            for x in 0..=5 {
                assert_eq!(ii.entry(x, y), 0.0);
            }
        }
    }

    #[test]
    fn uniform_box_mean() {
        let h = Heatmap::new(7, 5, vec![0.7f64; 35]).unwrap();
        let ii = build_integral(&h);
        for b in [bb(0, 0, 7, 5), bb(2, 1, 3, 2), bb(1, 1, 6, 4)] {
            assert!((box_mean(&ii, &b).unwrap() - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn box_mean_out_of_bounds() {
        let ii = build_integral(&Heatmap::<f64>::zeros(4, 4).unwrap());
        assert!(matches!(box_mean(&ii, &bb(0, 0, 5, 4)), Err(Error::Bounds { .. })));
        assert!(matches!(box_mean(&ii, &bb(-1, 0, 2, 2)), Err(Error::Bounds { .. })));
    }

    #[test]
    fn mask_mean_matches_pixels() {
        let h = Heatmap::new(3, 2, vec![0.1f64, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
        let ii = build_integral(&h);
        let m = RowRuns::from_pixels(vec![(0, 0), (2, 0), (1, 1), (2, 1)]);
        let expect = (0.1 + 0.3 + 0.5 + 0.6) / 4.0;
        assert!((mask_mean(&ii, &m).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn row_runs_union_merges_overlaps() {
        let a = RowRuns::from_pixels(vec![(0, 0), (1, 0), (2, 0)]);
        let b = RowRuns::from_pixels(vec![(2, 0), (3, 0), (5, 0), (0, 1)]);
        let u = RowRuns::union([&a, &b]);
        assert_eq!(u.area(), 6);
        assert_eq!(u.runs().len(), 3);
        assert_eq!(u.bounding_box(), Some(bb(0, 0, 6, 2)));
    }

    #[test]
    fn tphm_round_trip() {
        let h = Heatmap::new(2, 2, vec![0.0f32, 0.25, 0.5, 1.0]).unwrap();
        let bytes = encode_heatmap(&h);
        assert_eq!(&bytes[..4], b"TPHM");
        assert_eq!(bytes.len(), 12 + 16);
        let back: Heatmap<f32> = decode_heatmap(&bytes).unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn tphm_rejects_out_of_range() {
        let mut bytes = encode_heatmap(&Heatmap::new(2, 1, vec![0.0f32, 0.5]).unwrap());
        bytes[16..20].copy_from_slice(&1.5f32.to_le_bytes());
        assert!(matches!(decode_heatmap::<f64>(&bytes), Err(Error::Range { index: 1, .. })));
        bytes[16..20].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(decode_heatmap::<f64>(&bytes), Err(Error::Range { .. })));
    }

    #[test]
    fn malformed_headers() {
        assert!(matches!(decode_heatmap::<f64>(b"XXXX"), Err(Error::Format(_))));
        assert!(matches!(decode_heatmap::<f64>(b"TPHM\x01\x00"), Err(Error::Format(_))));
        let mut short = encode_heatmap(&Heatmap::new(2, 2, vec![0.5f32; 4]).unwrap());
        short.pop();
        assert!(matches!(decode_heatmap::<f64>(&short), Err(Error::Format(_))));
        assert!(matches!(decode_heatmap::<f64>(b"P5 2 1 65535\n\0\0\0\0"), Err(Error::Format(_))));
        assert!(matches!(decode_heatmap::<f64>(b"P5 2 x 255\n\0\0"), Err(Error::Format(_))));
    }

    #[test]
    fn pgm_mapping() {
        let mut bytes = b"P5\n# heat\n3 1\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 128, 255]);
        let h: Heatmap<f64> = decode_heatmap(&bytes).unwrap();
        assert_eq!(h.get(0, 0), 0.0);
        assert_eq!(h.get(2, 0), 1.0);
        assert!((h.get(1, 0) - 0.50196).abs() < 1e-5);
        assert_eq!(h.get(1, 0), 128.0 / 255.0);
    }

    #[test]
    fn heatmap_new_rejects_instead_of_clamping() {
        assert!(matches!(Heatmap::new(1, 2, vec![0.5f64, -0.01]), Err(Error::Range { index: 1, .. })));
    }

    #[test]
    fn luma_conversion() {
        let c = ColorImage::new(2, 1, vec![255, 255, 255, 255, 0, 0]).unwrap();
        let g = c.to_gray();
        assert_eq!(g.data(), &[255, 76]);
    }
}
