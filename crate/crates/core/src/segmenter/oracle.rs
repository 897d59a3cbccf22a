use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{force_clicks, memory_entry, summary_pointer, FrameView, MaskCandidate, Segmenter, Selection};
use crate::error::{Error, Result};
use crate::mask::{iou, BinaryMask};
use crate::memory::{ConditioningSet, MemoryEntry, ObjectPointer};
use crate::prompt::{Polarity, Prompt, PromptPayload};

/// Corruption applied by [`OracleSegmenter`] to unprompted frames.
///
/// Radii shrink by `decay` for every prompt received on the video and are
/// truncated to whole pixels, so more prompts never make a frame worse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Disk dilation radius; negative erodes.
    pub dilation_px: i64,
    /// Horizontal shift (positive moves right).
    pub translation_px: i64,
    /// Probability that an unprompted frame is predicted empty.
    pub drop_prob: f64,
    /// Additionally drop every frame whose index is a positive multiple of this.
    pub drop_every: Option<usize>,
    pub decay: f64,
    /// Emit a second, dilated candidate with a lower predicted IoU.
    pub multi_candidate: bool,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            dilation_px: 0,
            translation_px: 0,
            drop_prob: 0.0,
            drop_every: None,
            decay: 1.0,
            multi_candidate: false,
            seed: 0,
        }
    }
}

impl OracleConfig {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::Config(format!("oracle decay must be in (0, 1], got {}", self.decay)));
        }
        if !(0.0..=1.0).contains(&self.drop_prob) {
            return Err(Error::Config(format!("oracle drop_prob must be in [0, 1], got {}", self.drop_prob)));
        }
        if self.drop_every == Some(0) {
            return Err(Error::Config("oracle drop_every must be >= 1".into()));
        }
        Ok(())
    }

    /// `(dilation, translation)` after `prompts` prompts.
    pub fn effective(&self, prompts: usize) -> (i64, i64) {
        let factor = self.decay.powi(prompts.min(i32::MAX as usize) as i32);
        let scale = |px: i64| (px as f64 * factor).trunc() as i64;
        (scale(self.dilation_px), scale(self.translation_px))
    }

    fn dropped(&self, frame_idx: usize) -> bool {
        if let Some(n) = self.drop_every {
            if frame_idx > 0 && frame_idx.is_multiple_of(n) {
                return true;
            }
        }
        if self.drop_prob <= 0.0 {
            return false;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ (frame_idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        rng.gen::<f64>() < self.drop_prob
    }
}

/// A test double that reads the ground truth and degrades it on
/// unprompted frames. Any prompt on a frame yields that frame's exact mask.
///
/// With several candidate objects the target is the first one whose mask
/// contains the first positive click; a click on no object selects nothing
/// and every prediction is empty.
#[derive(Clone, Debug)]
pub struct OracleSegmenter {
    objects: Vec<Vec<BinaryMask>>,
    target: Option<usize>,
    config: OracleConfig,
    prompts_seen: BTreeMap<usize, usize>,
}

impl OracleSegmenter {
    pub fn new(gt: Vec<BinaryMask>, config: OracleConfig) -> Result<Self> {
        let mut s = Self::with_objects(vec![gt], config)?;
        s.target = Some(0);
        Ok(s)
    }

    /// An oracle over several objects that picks its target from the first click.
    pub fn with_objects(objects: Vec<Vec<BinaryMask>>, config: OracleConfig) -> Result<Self> {
        config.validate()?;
        if objects.iter().any(|o| o.is_empty()) {
            return Err(Error::Segmenter("oracle needs at least one frame per object".into()));
        }
        Ok(Self {
            target: (objects.len() == 1).then_some(0),
            objects,
            config,
            prompts_seen: BTreeMap::new(),
        })
    }

    pub fn config(&self) -> &OracleConfig {
        &self.config
    }

    /// Prompts received on the current video.
    pub fn prompt_count(&self) -> usize {
        self.prompts_seen.values().sum()
    }

    fn frame_gt(&self, frame_idx: usize, object: usize) -> Result<&BinaryMask> {
        self.objects[object]
            .get(frame_idx)
            .ok_or_else(|| Error::Segmenter(format!("frame {frame_idx} beyond ground truth")))
    }

    fn dims(&self) -> (usize, usize) {
        self.objects[0][0].dims()
    }

    fn choose_target(&mut self, frame_idx: usize, prompts: &[Prompt]) {
        if self.target.is_some() {
            return;
        }
        let click = prompts.iter().find_map(|p| match &p.payload {
            PromptPayload::Click(c) if c.polarity == Polarity::Positive => Some(*c),
            _ => None,
        });
        if let Some(c) = click {
            self.target = self.objects.iter().position(|o| {
                o.get(frame_idx)
                    .is_some_and(|m| c.row < m.height() && c.col < m.width() && m.get(c.row, c.col))
            });
        }
    }
}

impl Segmenter for OracleSegmenter {
    fn name(&self) -> &str {
        "oracle"
    }

    fn reset(&mut self) {
        self.prompts_seen.clear();
        if self.objects.len() > 1 {
            self.target = None;
        }
    }

    fn observe_frame(&mut self, _frame: FrameView<'_>) -> Result<()> {
        Ok(())
    }

    fn segment(&mut self, frame_idx: usize, prompts: &[Prompt], _context: &ConditioningSet<'_>) -> Result<Vec<MaskCandidate>> {
        let (h, w) = self.dims();
        if !prompts.is_empty() {
            let seen = self.prompts_seen.entry(frame_idx).or_insert(0);
            *seen = (*seen).max(prompts.len());
            self.choose_target(frame_idx, prompts);
        }
        let Some(target) = self.target else {
            return Ok(vec![MaskCandidate {
                mask: BinaryMask::new(h, w)?,
                predicted_iou: 1.0,
                occlusion_score: 0.0,
            }]);
        };
        let gt = self.frame_gt(frame_idx, target)?.clone();
        let visible = if gt.is_empty() { 0.0 } else { 1.0 };

        if !prompts.is_empty() {
            let mut mask = gt;
            force_clicks(&mut mask, prompts);
            let visible = if mask.is_empty() { 0.0 } else { 1.0 };
            return Ok(vec![MaskCandidate { mask, predicted_iou: 1.0, occlusion_score: visible }]);
        }

        if self.config.dropped(frame_idx) {
            return Ok(vec![MaskCandidate {
                mask: BinaryMask::new(h, w)?,
                predicted_iou: 1.0,
                occlusion_score: 0.0,
            }]);
        }

        let (dilation, shift) = self.config.effective(self.prompt_count());
        let mask = gt.morph(dilation).translate(0, shift);
        let main = MaskCandidate {
            predicted_iou: iou(&mask, &gt)?,
            occlusion_score: visible,
            mask,
        };
        if self.config.multi_candidate {
            let alt = MaskCandidate {
                mask: main.mask.morph(2),
                predicted_iou: 0.6 * main.predicted_iou,
                occlusion_score: visible,
            };
            // the better candidate comes second so selection has to look
            return Ok(vec![alt, main]);
        }
        Ok(vec![main])
    }

    fn commit(
        &mut self,
        frame_idx: usize,
        selection: &Selection,
        prompts: &[Prompt],
    ) -> Result<(MemoryEntry, Option<ObjectPointer>)> {
        Ok((
            memory_entry(frame_idx, selection, prompts, None),
            Some(summary_pointer(frame_idx, &selection.mask)),
        ))
    }
}
