//! Binary masks, their column-major run-length encoding, and the pixel-level
//! algorithms the metrics and click simulation are built on.
//!
//! Pixels outside the image count as background everywhere in this module:
//! a foreground pixel on the image border is a boundary pixel and sits at
//! distance 1 from the background.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Upper bound on `height * width` accepted from untrusted encodings.
pub const MAX_PIXELS: usize = 1 << 28;

/// A row-major binary mask. `true` is foreground.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinaryMask {}x{} (area {})", self.height, self.width, self.area())?;
        if self.height * self.width <= 32 * 32 {
            for r in 0..self.height {
                let row: String = (0..self.width)
                    .map(|c| if self.get(r, c) { '#' } else { '.' })
                    .collect();
                writeln!(f, "  {row}")?;
            }
        }
        Ok(())
    }
}

fn check_dims(height: usize, width: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(Error::InvalidMask(format!(
            "dimensions must be at least 1x1, got {height}x{width}"
        )));
    }
    if height.checked_mul(width).is_none_or(|n| n > MAX_PIXELS) {
        return Err(Error::InvalidMask(format!(
            "{height}x{width} exceeds the {MAX_PIXELS}-pixel limit"
        )));
    }
    Ok(())
}

impl BinaryMask {
    /// An all-background mask.
    pub fn new(height: usize, width: usize) -> Result<Self> {
        check_dims(height, width)?;
        Ok(Self {
            height,
            width,
            bits: vec![false; height * width],
        })
    }

    pub fn full(height: usize, width: usize) -> Result<Self> {
        check_dims(height, width)?;
        Ok(Self {
            height,
            width,
            bits: vec![true; height * width],
        })
    }

    pub fn from_bits(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        check_dims(height, width)?;
        if bits.len() != height * width {
            return Err(Error::InvalidMask(format!(
                "{} bits for a {height}x{width} mask",
                bits.len()
            )));
        }
        Ok(Self { height, width, bits })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        check_dims(height, width)?;
        let mut bits = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                bits.push(f(r, c));
            }
        }
        Ok(Self { height, width, bits })
    }

    /// Parses rows of `#`/`1` (foreground) and `.`/`0` (background). Test helper.
    pub fn from_ascii(rows: &[&str]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        let mut bits = Vec::with_capacity(height * width);
        for row in rows {
            if row.len() != width {
                return Err(Error::InvalidMask("ragged ascii rows".into()));
            }
            for ch in row.chars() {
                bits.push(matches!(ch, '#' | '1'));
            }
        }
        Self::from_bits(height, width, bits)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    pub fn area(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// True when no pixel is foreground.
    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn same_dims(&self, other: &BinaryMask) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                left_h: self.height,
                left_w: self.width,
                right_h: other.height,
                right_w: other.width,
            });
        }
        Ok(())
    }

    fn zip_with(&self, other: &BinaryMask, f: impl Fn(bool, bool) -> bool) -> Result<BinaryMask> {
        self.same_dims(other)?;
        let bits = self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect();
        Ok(BinaryMask {
            height: self.height,
            width: self.width,
            bits,
        })
    }

    pub fn and(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn or(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn xor(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a != b)
    }

    /// Pixels in `self` but not in `other`.
    pub fn and_not(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn not(&self) -> BinaryMask {
        BinaryMask {
            height: self.height,
            width: self.width,
            bits: self.bits.iter().map(|&b| !b).collect(),
        }
    }

    /// Foreground pixel coordinates in row-major order.
    pub fn foreground(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i / w, i % w))
    }

    /// Tight half-open bounding box, or `None` for an empty mask.
    pub fn bbox(&self) -> Option<Box2D> {
        let mut it = self.foreground();
        let (r, c) = it.next()?;
        let (mut r0, mut c0, mut r1, mut c1) = (r, c, r + 1, c + 1);
        for (r, c) in it {
            r0 = r0.min(r);
            c0 = c0.min(c);
            r1 = r1.max(r + 1);
            c1 = c1.max(c + 1);
        }
        Some(Box2D { r0, c0, r1, c1 })
    }

    /// Shifts the mask by `(dy, dx)`; pixels pushed outside the frame are lost.
    pub fn translate(&self, dy: i64, dx: i64) -> BinaryMask {
        let mut out = BinaryMask {
            height: self.height,
            width: self.width,
            bits: vec![false; self.bits.len()],
        };
        let (h, w) = (self.height as i64, self.width as i64);
        for (r, c) in self.foreground() {
            let (nr, nc) = (r as i64 + dy, c as i64 + dx);
            if (0..h).contains(&nr) && (0..w).contains(&nc) {
                out.set(nr as usize, nc as usize, true);
            }
        }
        out
    }

    /// Euclidean disk dilation for positive `radius`, erosion for negative.
    pub fn morph(&self, radius: i64) -> BinaryMask {
        use std::cmp::Ordering;
        let r2 = (radius * radius) as f64;
        let bits = match radius.cmp(&0) {
            Ordering::Equal => return self.clone(),
            Ordering::Greater => {
                let d2 = squared_distance_to_set(self.height, self.width, |i| self.bits[i]);
                d2.into_iter().map(|d| d <= r2).collect()
            }
            Ordering::Less => {
                let d2 = squared_distance_transform(self);
                d2.into_iter().map(|d| d > r2).collect()
            }
        };
        BinaryMask {
            height: self.height,
            width: self.width,
            bits,
        }
    }

    pub fn to_rle(&self) -> RleMask {
        rle_encode(self)
    }
}

impl Serialize for BinaryMask {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        rle_encode(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BinaryMask {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rle = RleMask::deserialize(deserializer)?;
        rle_decode(&rle).map_err(serde::de::Error::custom)
    }
}

/// Half-open pixel box `[r0, r1) x [c0, c1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Box2D {
    pub r0: usize,
    pub c0: usize,
    pub r1: usize,
    pub c1: usize,
}

impl Box2D {
    pub fn new(r0: usize, c0: usize, r1: usize, c1: usize) -> Self {
        Self { r0, c0, r1, c1 }
    }

    pub fn validate(&self, height: usize, width: usize) -> Result<()> {
        if self.r0 < self.r1 && self.r1 <= height && self.c0 < self.c1 && self.c1 <= width {
            Ok(())
        } else {
            Err(Error::InvalidPrompt(format!(
                "box {self:?} is not a valid non-empty box inside {height}x{width}"
            )))
        }
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.r0..self.r1).contains(&row) && (self.c0..self.c1).contains(&col)
    }

    pub fn height(&self) -> usize {
        self.r1 - self.r0
    }

    pub fn width(&self) -> usize {
        self.c1 - self.c0
    }

    pub fn area(&self) -> usize {
        self.height() * self.width()
    }
}

/// Column-major run lengths, starting with a (possibly empty) background run.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RleMask {
    height: usize,
    width: usize,
    counts: Vec<u32>,
}

/// Unvalidated `{"size":[h,w],"counts":[...]}` as it appears on disk.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RleJson {
    pub size: [usize; 2],
    pub counts: Vec<u32>,
}

impl RleJson {
    pub fn validate(self) -> Result<RleMask> {
        RleMask::new(self.size[0], self.size[1], self.counts)
    }
}

impl Serialize for RleMask {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        RleJson {
            size: [self.height, self.width],
            counts: self.counts.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RleMask {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RleJson::deserialize(deserializer)?;
        RleMask::new(raw.size[0], raw.size[1], raw.counts).map_err(serde::de::Error::custom)
    }
}

impl RleMask {
    /// Builds an encoding after checking every invariant.
    pub fn new(height: usize, width: usize, counts: Vec<u32>) -> Result<Self> {
        check_dims(height, width).map_err(|e| Error::MalformedRle(e.to_string()))?;
        if counts.is_empty() {
            return Err(Error::MalformedRle("no runs".into()));
        }
        if let Some(i) = counts.iter().skip(1).position(|&c| c == 0) {
            return Err(Error::MalformedRle(format!("zero-length run at index {}", i + 1)));
        }
        let total: u64 = counts.iter().map(|&c| u64::from(c)).sum();
        let expected = (height * width) as u64;
        if total != expected {
            return Err(Error::MalformedRle(format!(
                "runs sum to {total}, expected {height}x{width} = {expected}"
            )));
        }
        Ok(Self { height, width, counts })
    }

    /// An all-background encoding.
    pub fn empty(height: usize, width: usize) -> Result<Self> {
        check_dims(height, width)?;
        let n = u32::try_from(height * width)
            .map_err(|_| Error::MalformedRle("mask too large".into()))?;
        Ok(Self {
            height,
            width,
            counts: vec![n],
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Foreground pixel count: the sum of the odd-indexed runs.
    pub fn area(&self) -> u64 {
        self.counts.iter().skip(1).step_by(2).map(|&c| u64::from(c)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.area() == 0
    }

    pub fn decode(&self) -> BinaryMask {
        // Invariants were checked on construction.
        rle_decode(self).expect("validated RLE")
    }

    /// Foreground intervals `[start, end)` in column-major pixel index space.
    fn foreground_runs(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        let mut pos = 0u64;
        self.counts.iter().enumerate().filter_map(move |(i, &c)| {
            let start = pos;
            pos += u64::from(c);
            (i % 2 == 1).then_some((start, pos))
        })
    }

    /// Intersection area computed directly on the runs.
    pub fn intersection_area(&self, other: &RleMask) -> Result<u64> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                left_h: self.height,
                left_w: self.width,
                right_h: other.height,
                right_w: other.width,
            });
        }
        let a: Vec<_> = self.foreground_runs().collect();
        let b: Vec<_> = other.foreground_runs().collect();
        let (mut i, mut j, mut total) = (0, 0, 0u64);
        while i < a.len() && j < b.len() {
            let lo = a[i].0.max(b[j].0);
            let hi = a[i].1.min(b[j].1);
            if hi > lo {
                total += hi - lo;
            }
            if a[i].1 < b[j].1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Ok(total)
    }

    /// IoU without decoding; both-empty scores 1.0 like [`iou`].
    pub fn iou(&self, other: &RleMask) -> Result<f64> {
        let inter = self.intersection_area(other)?;
        let union = self.area() + other.area() - inter;
        Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
    }
}

pub fn rle_encode(m: &BinaryMask) -> RleMask {
    let (h, w) = m.dims();
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0u32;
    for c in 0..w {
        for r in 0..h {
            let v = m.get(r, c);
            if v != current {
                counts.push(run);
                run = 0;
                current = v;
            }
            run += 1;
        }
    }
    counts.push(run);
    RleMask {
        height: h,
        width: w,
        counts,
    }
}

pub fn rle_decode(rle: &RleMask) -> Result<BinaryMask> {
    let (h, w) = rle.dims();
    let total: u64 = rle.counts.iter().map(|&c| u64::from(c)).sum();
    if total != (h * w) as u64 {
        return Err(Error::MalformedRle(format!(
            "runs sum to {total}, expected {}",
            h * w
        )));
    }
    let mut mask = BinaryMask::new(h, w)?;
    let mut idx = 0usize;
    for (i, &c) in rle.counts.iter().enumerate() {
        let end = idx + c as usize;
        if i % 2 == 1 {
            for k in idx..end {
                // column-major index k = col * h + row
                mask.set(k % h, k / h, true);
            }
        }
        idx = end;
    }
    Ok(mask)
}

/// Region Jaccard. Two empty masks score 1.0; one empty scores 0.0.
pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    a.same_dims(b)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.bits.iter().zip(&b.bits) {
        inter += usize::from(x && y);
        union += usize::from(x || y);
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// Euclidean distance of each foreground pixel to the nearest background pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceField {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl DistanceField {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    /// Row-major first position of the maximum value.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        (best / self.width, best % self.width)
    }
}

const FAR: f64 = 1e20;

/// One-dimensional lower envelope of parabolas (Felzenszwalb & Huttenlocher).
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    if n == 0 {
        return;
    }
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let fq = f[q] + (q * q) as f64;
        let mut s;
        loop {
            let p = v[k];
            s = (fq - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
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
    for (q, slot) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let d = q as f64 - p as f64;
        *slot = d * d + f[p];
    }
}

/// Exact squared Euclidean distance from every pixel to the nearest seed
/// pixel (`is_seed(row_major_index)`). The image border is not a seed.
/// Pixels with no seed anywhere get a value of at least `1e20`.
pub fn squared_distance_to_set(height: usize, width: usize, is_seed: impl Fn(usize) -> bool) -> Vec<f64> {
    let n = height * width;
    let mut grid: Vec<f64> = (0..n).map(|i| if is_seed(i) { 0.0 } else { FAR }).collect();
    let longest = height.max(width);
    let mut f = vec![0.0; longest];
    let mut out = vec![0.0; longest];
    let mut v = vec![0usize; longest];
    let mut z = vec![0.0; longest + 1];

    // columns
    for c in 0..width {
        for r in 0..height {
            f[r] = grid[r * width + c];
        }
        edt_1d(&f[..height], &mut out[..height], &mut v, &mut z);
        for r in 0..height {
            grid[r * width + c] = out[r];
        }
    }
    // rows
    for r in 0..height {
        let row = &mut grid[r * width..(r + 1) * width];
        f[..width].copy_from_slice(row);
        edt_1d(&f[..width], &mut out[..width], &mut v, &mut z);
        row.copy_from_slice(&out[..width]);
    }
    grid
}

/// Squared distances to the nearest background pixel, with everything
/// outside the image counted as background.
pub fn squared_distance_transform(m: &BinaryMask) -> Vec<f64> {
    let (h, w) = m.dims();
    let (ph, pw) = (h + 2, w + 2);
    let padded = squared_distance_to_set(ph, pw, |i| {
        let (r, c) = (i / pw, i % pw);
        r == 0 || c == 0 || r == ph - 1 || c == pw - 1 || !m.get(r - 1, c - 1)
    });
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        out.extend_from_slice(&padded[(r + 1) * pw + 1..(r + 1) * pw + 1 + w]);
    }
    out
}

pub fn distance_transform(m: &BinaryMask) -> DistanceField {
    DistanceField {
        height: m.height,
        width: m.width,
        values: squared_distance_transform(m).into_iter().map(f64::sqrt).collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(i64, i64)] {
        match self {
            Connectivity::Four => &[(-1, 0), (0, -1), (0, 1), (1, 0)],
            Connectivity::Eight => &[
                (-1, -1),
                (-1, 0),
                (-1, 1),
                (0, -1),
                (0, 1),
                (1, -1),
                (1, 0),
                (1, 1),
            ],
        }
    }
}

/// Component labelling: label 0 is unlabelled, components are numbered from
/// 1 in the row-major order of their first pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Components {
    height: usize,
    width: usize,
    labels: Vec<u32>,
    areas: Vec<usize>,
    first_pixel: Vec<usize>,
    touches_border: Vec<bool>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.areas.len()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label_at(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    /// Area of component `label` (1-based).
    pub fn area(&self, label: u32) -> usize {
        self.areas[label as usize - 1]
    }

    pub fn areas(&self) -> &[usize] {
        &self.areas
    }

    /// Row-major index of the first pixel of component `label`.
    pub fn first_pixel(&self, label: u32) -> usize {
        self.first_pixel[label as usize - 1]
    }

    pub fn touches_border(&self, label: u32) -> bool {
        self.touches_border[label as usize - 1]
    }

    pub fn mask_of(&self, label: u32) -> BinaryMask {
        BinaryMask {
            height: self.height,
            width: self.width,
            bits: self.labels.iter().map(|&l| l == label).collect(),
        }
    }
}

/// Labels the pixels selected by `member` (row-major index predicate).
pub fn label_components(
    height: usize,
    width: usize,
    connectivity: Connectivity,
    member: impl Fn(usize) -> bool,
) -> Components {
    let n = height * width;
    let mut labels = vec![0u32; n];
    let mut areas = Vec::new();
    let mut first_pixel = Vec::new();
    let mut touches_border = Vec::new();
    let mut stack = Vec::new();
    let offsets = connectivity.offsets();
    for start in 0..n {
        if labels[start] != 0 || !member(start) {
            continue;
        }
        let label = areas.len() as u32 + 1;
        labels[start] = label;
        stack.push(start);
        let mut area = 0usize;
        let mut border = false;
        while let Some(i) = stack.pop() {
            area += 1;
            let (r, c) = ((i / width) as i64, (i % width) as i64);
            if r == 0 || c == 0 || r == height as i64 - 1 || c == width as i64 - 1 {
                border = true;
            }
            for &(dr, dc) in offsets {
                let (nr, nc) = (r + dr, c + dc);
                if nr < 0 || nc < 0 || nr >= height as i64 || nc >= width as i64 {
                    continue;
                }
                let j = nr as usize * width + nc as usize;
                if labels[j] == 0 && member(j) {
                    labels[j] = label;
                    stack.push(j);
                }
            }
        }
        areas.push(area);
        first_pixel.push(start);
        touches_border.push(border);
    }
    Components {
        height,
        width,
        labels,
        areas,
        first_pixel,
        touches_border,
    }
}

pub fn connected_components(m: &BinaryMask, connectivity: Connectivity) -> Components {
    label_components(m.height, m.width, connectivity, |i| m.bits[i])
}

/// Clears every 8-connected foreground component with area below `min_area`.
pub fn remove_small_components(m: &BinaryMask, min_area: usize) -> BinaryMask {
    if min_area == 0 {
        return m.clone();
    }
    let comps = connected_components(m, Connectivity::Eight);
    let bits = comps
        .labels
        .iter()
        .map(|&l| l != 0 && comps.area(l) >= min_area)
        .collect();
    BinaryMask {
        height: m.height,
        width: m.width,
        bits,
    }
}

/// Fills 8-connected background components that do not touch the image
/// border and have area below `max_area`.
pub fn fill_small_holes(m: &BinaryMask, max_area: usize) -> BinaryMask {
    if max_area == 0 {
        return m.clone();
    }
    let holes = label_components(m.height, m.width, Connectivity::Eight, |i| !m.bits[i]);
    let bits = m
        .bits
        .iter()
        .zip(&holes.labels)
        .map(|(&b, &l)| b || (l != 0 && !holes.touches_border(l) && holes.area(l) < max_area))
        .collect();
    BinaryMask {
        height: m.height,
        width: m.width,
        bits,
    }
}

/// Foreground pixels with a 4-neighbour that is background or off-image.
pub fn boundary(m: &BinaryMask) -> BinaryMask {
    let (h, w) = m.dims();
    let mut out = BinaryMask {
        height: h,
        width: w,
        bits: vec![false; h * w],
    };
    for (r, c) in m.foreground() {
        let edge = r == 0
            || c == 0
            || r + 1 == h
            || c + 1 == w
            || !m.get(r - 1, c)
            || !m.get(r + 1, c)
            || !m.get(r, c - 1)
            || !m.get(r, c + 1);
        if edge {
            out.set(r, c, true);
        }
    }
    out
}
