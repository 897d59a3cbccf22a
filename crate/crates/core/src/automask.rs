//! Automatic masklet generation: grid-point prompting on the first frame,
//! propagation, small-region cleanup and de-duplication.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::GrayFrame;
use crate::mask::{fill_small_holes, remove_small_components, BinaryMask, RleMask};
use crate::memory::MemoryBank;
use crate::prompt::{Click, Prompt};
use crate::protocols::EvalConfig;
use crate::segmenter::{select_output, FrameView, Segmenter};

/// Components and holes below this many pixels are cleaned up.
pub const MIN_REGION_AREA: usize = 200;
pub const DEFAULT_DEDUP_THRESHOLD: f64 = 0.8;

/// A `crops × crops` layout of overlapping windows, each with a
/// `points × points` grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CropPass {
    pub crops: usize,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// Points per side of the full-frame grid.
    pub full: usize,
    pub passes: Vec<CropPass>,
    /// Linear overlap between neighbouring crops, in `[0, 1)`.
    pub overlap: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            full: 32,
            passes: vec![CropPass { crops: 2, points: 16 }, CropPass { crops: 4, points: 4 }],
            overlap: 0.5,
        }
    }
}

/// One crop window in frame coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Crop {
    pub r0: usize,
    pub c0: usize,
    pub height: usize,
    pub width: usize,
}

/// Window size and evenly spaced origins along one axis.
fn crop_axis(extent: usize, crops: usize, overlap: f64) -> (usize, Vec<usize>) {
    if crops == 1 {
        return (extent, vec![0]);
    }
    let k = crops as f64;
    let size = ((extent as f64 / (k - (k - 1.0) * overlap)).ceil() as usize).min(extent);
    let span = extent - size;
    (size, (0..crops).map(|i| i * span / (crops - 1)).collect())
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.full == 0 || self.passes.iter().any(|p| p.crops == 0 || p.points == 0) {
            return Err(Error::Config("grid sizes must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::Config(format!("crop overlap must be in [0, 1), got {}", self.overlap)));
        }
        Ok(())
    }

    /// Number of grid points before duplicates are removed.
    pub fn total_points(&self) -> usize {
        self.full * self.full + self.passes.iter().map(|p| p.crops * p.crops * p.points * p.points).sum::<usize>()
    }

    pub fn crops(&self, height: usize, width: usize, pass: CropPass) -> Vec<Crop> {
        let (ch, rows) = crop_axis(height, pass.crops, self.overlap);
        let (cw, cols) = crop_axis(width, pass.crops, self.overlap);
        rows.iter()
            .flat_map(|&r0| cols.iter().map(move |&c0| Crop { r0, c0, height: ch, width: cw }))
            .collect()
    }
}

/// Cell centers of an `n × n` grid over a `height × width` window.
fn cell_centers(height: usize, width: usize, n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| {
        let r = (2 * i + 1) * height / (2 * n);
        (0..n).map(move |j| (r, (2 * j + 1) * width / (2 * n)))
    })
}

/// The grid points in generation order, plus the count before exact
/// duplicates were dropped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridPoints {
    pub points: Vec<(usize, usize)>,
    pub generated: usize,
}

pub fn grid_prompts(height: usize, width: usize, spec: &GridSpec) -> Result<GridPoints> {
    spec.validate()?;
    let too_small = |h: usize, w: usize, n: usize| {
        Error::Config(format!("a {h}x{w} region cannot hold a {n}x{n} grid"))
    };
    if height < spec.full || width < spec.full {
        return Err(too_small(height, width, spec.full));
    }
    let mut all: Vec<(usize, usize)> = cell_centers(height, width, spec.full).collect();
    for &pass in &spec.passes {
        for crop in spec.crops(height, width, pass) {
            if crop.height < pass.points || crop.width < pass.points {
                return Err(too_small(crop.height, crop.width, pass.points));
            }
            all.extend(cell_centers(crop.height, crop.width, pass.points).map(|(r, c)| (crop.r0 + r, crop.c0 + c)));
        }
    }
    let generated = all.len();
    let mut seen = BTreeSet::new();
    all.retain(|p| seen.insert(*p));
    Ok(GridPoints { points: all, generated })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateMasklet {
    /// The first-frame click that produced it.
    pub point: (usize, usize),
    pub masks: Vec<RleMask>,
    pub postprocessed: bool,
}

impl CandidateMasklet {
    pub fn total_area(&self) -> u64 {
        self.masks.iter().map(RleMask::area).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.iter().all(RleMask::is_empty)
    }
}

#[derive(Clone, Debug, Default)]
pub struct CandidateSet {
    pub candidates: Vec<CandidateMasklet>,
    pub prompts: usize,
    /// Runs that ended in an error.
    pub failed: usize,
    /// Runs that produced nothing on any frame.
    pub empty: usize,
}

/// Pixels and shape of the video to propagate through.
#[derive(Clone, Copy, Debug)]
pub struct VideoFrames<'a> {
    pub length: usize,
    pub height: usize,
    pub width: usize,
    pub pixels: Option<&'a [GrayFrame]>,
}

fn propagate_click(seg: &mut dyn Segmenter, video: VideoFrames<'_>, click: Click, config: &EvalConfig) -> Result<Vec<RleMask>> {
    seg.reset();
    let mut bank = MemoryBank::new(config.recent_capacity, config.prompted_capacity)?;
    let mut out = Vec::with_capacity(video.length);
    for t in 0..video.length {
        seg.observe_frame(FrameView {
            idx: t,
            pixels: video.pixels.map(|p| &p[t]),
        })?;
        let prompts = if t == 0 { vec![Prompt::click(0, click)] } else { Vec::new() };
        let sel = select_output(&seg.segment(t, &prompts, &bank.context_for(t))?, config.occlusion_threshold)?;
        let (entry, pointer) = seg.commit(t, &sel, &prompts)?;
        if prompts.is_empty() {
            bank.push_unprompted(entry, pointer)?;
        } else {
            bank.push_prompted(entry, pointer)?;
        }
        if sel.mask.dims() != (video.height, video.width) {
            return Err(Error::Segmenter(format!("frame {t}: mask size differs from the video")));
        }
        out.push(sel.mask.to_rle());
    }
    Ok(out)
}

/// One independent run per grid point. Failed and empty runs are counted
/// and dropped.
pub fn generate_candidates(
    make: &(dyn Fn() -> Result<Box<dyn Segmenter>> + Sync),
    video: VideoFrames<'_>,
    spec: &GridSpec,
    config: &EvalConfig,
) -> Result<CandidateSet> {
    if let Some(p) = video.pixels {
        if p.len() != video.length {
            return Err(Error::LengthMismatch(p.len(), video.length));
        }
    }
    let grid = grid_prompts(video.height, video.width, spec)?;
    let runs: Vec<Result<Vec<RleMask>>> = grid
        .points
        .par_iter()
        .map(|&(r, c)| {
            let mut seg = make()?;
            propagate_click(&mut *seg, video, Click::positive(r, c), config)
        })
        .collect();
    let mut set = CandidateSet {
        prompts: grid.points.len(),
        ..Default::default()
    };
    for (&point, run) in grid.points.iter().zip(runs) {
        match run {
            Err(_) => set.failed += 1,
            Ok(masks) if masks.iter().all(RleMask::is_empty) => set.empty += 1,
            Ok(masks) => set.candidates.push(CandidateMasklet {
                point,
                masks,
                postprocessed: false,
            }),
        }
    }
    Ok(set)
}

/// Drops components and fills holes smaller than [`MIN_REGION_AREA`].
pub fn postprocess_mask(m: &BinaryMask) -> BinaryMask {
    fill_small_holes(&remove_small_components(m, MIN_REGION_AREA), MIN_REGION_AREA)
}

pub fn postprocess(masklet: &CandidateMasklet) -> CandidateMasklet {
    CandidateMasklet {
        point: masklet.point,
        masks: masklet.masks.iter().map(|m| postprocess_mask(&m.decode()).to_rle()).collect(),
        postprocessed: true,
    }
}

/// Mean IoU over the frames where at least one masklet is visible;
/// 1.0 if neither ever is.
pub fn masklet_iou(a: &[RleMask], b: &[RleMask]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for (x, y) in a.iter().zip(b) {
        if x.is_empty() && y.is_empty() {
            continue;
        }
        sum += x.iou(y)?;
        n += 1;
    }
    Ok(if n == 0 { 1.0 } else { sum / n as f64 })
}

/// Greedy de-duplication over masklets sorted by total area, largest
/// first. A masklet is dropped when its mean IoU with a kept one reaches
/// `threshold`, so a threshold of 1.0 removes only exact duplicates.
pub fn dedup(masklets: Vec<CandidateMasklet>, threshold: f64) -> Result<Vec<CandidateMasklet>> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Config(format!("dedup threshold must be in (0, 1], got {threshold}")));
    }
    let mut sorted = masklets;
    sorted.sort_by_key(|m| std::cmp::Reverse(m.total_area()));
    let mut kept: Vec<CandidateMasklet> = Vec::new();
    for m in sorted {
        let mut duplicate = false;
        for k in &kept {
            if masklet_iou(&k.masks, &m.masks)? >= threshold {
                duplicate = true;
                break;
            }
        }
        if !duplicate {
            kept.push(m);
        }
    }
    Ok(kept)
}

#[derive(Clone, Debug)]
pub struct AutoMaskOutput {
    pub masklets: Vec<CandidateMasklet>,
    pub prompts: usize,
    pub failed: usize,
    pub empty: usize,
    /// Candidates that were empty after clean-up.
    pub vanished: usize,
}

/// The full pipeline: generate, clean up, de-duplicate.
pub fn auto_masklets(
    make: &(dyn Fn() -> Result<Box<dyn Segmenter>> + Sync),
    video: VideoFrames<'_>,
    spec: &GridSpec,
    config: &EvalConfig,
    dedup_threshold: f64,
) -> Result<AutoMaskOutput> {
    let set = generate_candidates(make, video, spec, config)?;
    let cleaned: Vec<CandidateMasklet> = set.candidates.par_iter().map(postprocess).collect();
    let before = cleaned.len();
    let cleaned: Vec<_> = cleaned.into_iter().filter(|m| !m.is_empty()).collect();
    let vanished = before - cleaned.len();
    Ok(AutoMaskOutput {
        masklets: dedup(cleaned, dedup_threshold)?,
        prompts: set.prompts,
        failed: set.failed,
        empty: set.empty,
        vanished,
    })
}
