//! The contract evaluation protocols drive, and two reference segmenters.
//!
//! A protocol owns the [`MemoryBank`](crate::memory::MemoryBank); per frame
//! it calls [`Segmenter::observe_frame`], asks for candidates with the
//! bank's conditioning set, picks one with [`select_output`], and stores
//! whatever [`Segmenter::commit`] returns.

mod naive;
mod oracle;

pub use naive::{NaiveTracker, TrackerConfig};
pub use oracle::{OracleConfig, OracleSegmenter};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::GrayFrame;
use crate::mask::BinaryMask;
use crate::memory::{ConditioningSet, MemoryEntry, ObjectPointer};
use crate::prompt::{Prompt, PromptPayload};

pub const DEFAULT_OCCLUSION_THRESHOLD: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct MaskCandidate {
    pub mask: BinaryMask,
    pub predicted_iou: f64,
    /// Probability that the object is visible.
    pub occlusion_score: f64,
}

/// The candidate a protocol commits for a frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub index: usize,
    /// Empty when `occluded`.
    pub mask: BinaryMask,
    pub predicted_iou: f64,
    pub occlusion_score: f64,
    pub occluded: bool,
}

/// Picks the highest predicted IoU (first on ties). If the pick's occlusion
/// score is below `occlusion_threshold` the committed mask is empty.
pub fn select_output(candidates: &[MaskCandidate], occlusion_threshold: f64) -> Result<Selection> {
    let mut best = 0;
    for (i, c) in candidates.iter().enumerate() {
        if c.predicted_iou > candidates[best].predicted_iou {
            best = i;
        }
    }
    let chosen = candidates.get(best).ok_or(Error::NoCandidates)?;
    let occluded = chosen.occlusion_score < occlusion_threshold;
    let mask = if occluded {
        BinaryMask::new(chosen.mask.height(), chosen.mask.width())?
    } else {
        chosen.mask.clone()
    };
    Ok(Selection {
        index: best,
        mask,
        predicted_iou: chosen.predicted_iou,
        occlusion_score: chosen.occlusion_score,
        occluded,
    })
}

/// One video frame as handed to a segmenter.
#[derive(Clone, Copy, Debug)]
pub struct FrameView<'a> {
    pub idx: usize,
    pub pixels: Option<&'a GrayFrame>,
}

pub trait Segmenter {
    fn name(&self) -> &str;

    /// Forgets all per-video state.
    fn reset(&mut self);

    fn observe_frame(&mut self, frame: FrameView<'_>) -> Result<()>;

    /// Candidates for `frame_idx`. `prompts` are the prompts on this frame.
    fn segment(
        &mut self,
        frame_idx: usize,
        prompts: &[Prompt],
        context: &ConditioningSet<'_>,
    ) -> Result<Vec<MaskCandidate>>;

    /// Turns the selected output into a memory and an object pointer.
    fn commit(
        &mut self,
        frame_idx: usize,
        selection: &Selection,
        prompts: &[Prompt],
    ) -> Result<(MemoryEntry, Option<ObjectPointer>)>;
}

impl<S: Segmenter + ?Sized> Segmenter for Box<S> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn reset(&mut self) {
        (**self).reset()
    }
    fn observe_frame(&mut self, frame: FrameView<'_>) -> Result<()> {
        (**self).observe_frame(frame)
    }
    fn segment(&mut self, frame_idx: usize, prompts: &[Prompt], context: &ConditioningSet<'_>) -> Result<Vec<MaskCandidate>> {
        (**self).segment(frame_idx, prompts, context)
    }
    fn commit(
        &mut self,
        frame_idx: usize,
        selection: &Selection,
        prompts: &[Prompt],
    ) -> Result<(MemoryEntry, Option<ObjectPointer>)> {
        (**self).commit(frame_idx, selection, prompts)
    }
}

/// Normalized area, centroid, and visibility: a 4-d summary pointer.
pub fn summary_pointer(frame_idx: usize, mask: &BinaryMask) -> ObjectPointer {
    let area = mask.area();
    let (mut sr, mut sc) = (0usize, 0usize);
    for (r, c) in mask.foreground() {
        sr += r;
        sc += c;
    }
    let vector = if area == 0 {
        vec![0.0, 0.0, 0.0, 0.0]
    } else {
        let a = area as f32;
        vec![
            a / mask.len() as f32,
            sr as f32 / a / mask.height() as f32,
            sc as f32 / a / mask.width() as f32,
            1.0,
        ]
    };
    ObjectPointer { frame_idx, vector }
}

pub(crate) fn memory_entry(
    frame_idx: usize,
    selection: &Selection,
    prompts: &[Prompt],
    feature: Option<Vec<f32>>,
) -> MemoryEntry {
    MemoryEntry {
        frame_idx,
        mask: selection.mask.to_rle(),
        feature,
        occluded: selection.occluded,
        is_prompted: !prompts.is_empty(),
        prompts: prompts.to_vec(),
    }
}

/// Applies click polarity pixel-exactly on top of `mask`.
pub(crate) fn force_clicks(mask: &mut BinaryMask, prompts: &[Prompt]) {
    for p in prompts {
        if let PromptPayload::Click(c) = &p.payload {
            if c.row < mask.height() && c.col < mask.width() {
                mask.set(c.row, c.col, c.polarity == crate::prompt::Polarity::Positive);
            }
        }
    }
}

/// Selects a segmenter by CLI name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmenterKind {
    Oracle,
    Naive,
}

impl std::str::FromStr for SegmenterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(SegmenterKind::Oracle),
            "naive" => Ok(SegmenterKind::Naive),
            _ => Err(Error::Config(format!("unknown segmenter `{s}` (oracle|naive)"))),
        }
    }
}

impl std::fmt::Display for SegmenterKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SegmenterKind::Oracle => "oracle",
            SegmenterKind::Naive => "naive",
        })
    }
}
