use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{force_clicks, memory_entry, summary_pointer, FrameView, MaskCandidate, Segmenter, Selection};
use crate::error::{Error, Result};
use crate::frames::GrayFrame;
use crate::mask::{BinaryMask, Box2D};
use crate::memory::{ConditioningSet, MemoryEntry, ObjectPointer};
use crate::prompt::{Polarity, Prompt, PromptPayload};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    pub search_radius_px: usize,
    /// Mean absolute intensity error (as a fraction of 255) at which the
    /// occlusion score reaches 0.5.
    pub match_error_threshold: f64,
    /// Patch sampling stride for the match error.
    pub stride: usize,
    /// Region growing accepts neighbours within this intensity of the seed.
    pub intensity_tolerance: u8,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            search_radius_px: 16,
            match_error_threshold: 0.2,
            stride: 1,
            intensity_tolerance: 30,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.search_radius_px == 0 {
            return Err(Error::Config("tracker search radius must be >= 1".into()));
        }
        if self.stride == 0 {
            return Err(Error::Config("tracker stride must be >= 1".into()));
        }
        if !(self.match_error_threshold > 0.0 && self.match_error_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "match_error_threshold must be in (0, 1], got {}",
                self.match_error_threshold
            )));
        }
        Ok(())
    }
}

/// Template-matching tracker over grayscale frames.
///
/// Prompted frames are segmented by region growing from clicks and boxes
/// (mask prompts are copied). Unprompted frames shift the most recent
/// visible memory mask by the integer offset whose patch best matches the
/// memorized intensities.
#[derive(Clone, Debug)]
pub struct NaiveTracker {
    config: TrackerConfig,
    frames: BTreeMap<usize, GrayFrame>,
    offsets: Vec<(i64, i64)>,
}

impl NaiveTracker {
    pub fn new(config: TrackerConfig) -> Result<Self> {
        config.validate()?;
        let r = config.search_radius_px as i64;
        let mut offsets: Vec<(i64, i64)> = (-r..=r).flat_map(|dy| (-r..=r).map(move |dx| (dy, dx))).collect();
        // nearest offsets first so exact ties prefer small motion
        offsets.sort_by_key(|&(dy, dx)| (dy * dy + dx * dx, dy, dx));
        Ok(Self {
            config,
            frames: BTreeMap::new(),
            offsets,
        })
    }

    fn frame(&self, idx: usize) -> Result<&GrayFrame> {
        self.frames
            .get(&idx)
            .ok_or_else(|| Error::Segmenter(format!("naive tracker has no pixels for frame {idx}")))
    }

    /// 4-connected region of pixels within the intensity tolerance of the seed.
    fn grow(&self, frame: &GrayFrame, seed: (usize, usize), limit: Option<Box2D>) -> BinaryMask {
        let (h, w) = frame.dims();
        let mut out = BinaryMask::new(h, w).expect("frame dims are valid");
        let base = frame.get(seed.0, seed.1) as i32;
        let tol = self.config.intensity_tolerance as i32;
        let inside = |r: usize, c: usize| limit.is_none_or(|b| b.contains(r, c));
        if !inside(seed.0, seed.1) {
            return out;
        }
        let mut stack = vec![seed];
        out.set(seed.0, seed.1, true);
        while let Some((r, c)) = stack.pop() {
            let mut visit = |nr: usize, nc: usize| {
                if !out.get(nr, nc) && inside(nr, nc) && (frame.get(nr, nc) as i32 - base).abs() <= tol {
                    out.set(nr, nc, true);
                    stack.push((nr, nc));
                }
            };
            if r > 0 {
                visit(r - 1, c);
            }
            if r + 1 < h {
                visit(r + 1, c);
            }
            if c > 0 {
                visit(r, c - 1);
            }
            if c + 1 < w {
                visit(r, c + 1);
            }
        }
        out
    }

    fn segment_prompted(&self, frame: &GrayFrame, prompts: &[Prompt]) -> Result<BinaryMask> {
        let (h, w) = frame.dims();
        for p in prompts {
            p.validate(h, w)?;
        }
        let mask_prompt = prompts.iter().rev().find_map(|p| match &p.payload {
            PromptPayload::Mask(m) => Some(m.clone()),
            _ => None,
        });
        let mut mask = match mask_prompt {
            Some(m) => m,
            None => {
                let mut acc = BinaryMask::new(h, w)?;
                for p in prompts {
                    match &p.payload {
                        PromptPayload::Click(c) if c.polarity == Polarity::Positive => {
                            acc = acc.or(&self.grow(frame, (c.row, c.col), None))?;
                        }
                        PromptPayload::Box(b) => {
                            let center = ((b.r0 + b.r1 - 1) / 2, (b.c0 + b.c1 - 1) / 2);
                            acc = acc.or(&self.grow(frame, center, Some(*b)))?;
                        }
                        _ => {}
                    }
                }
                for p in prompts {
                    if let PromptPayload::Click(c) = &p.payload {
                        if c.polarity == Polarity::Negative {
                            acc = acc.and_not(&self.grow(frame, (c.row, c.col), None))?;
                        }
                    }
                }
                acc
            }
        };
        force_clicks(&mut mask, prompts);
        Ok(mask)
    }

    /// Mean absolute difference between the template and the frame under the
    /// template shifted by `(dy, dx)`. `None` when the shift leaves no pixel
    /// inside the frame or the error provably exceeds `bound`.
    fn match_error(&self, frame: &GrayFrame, template: &[f32], bbox: Box2D, dy: i64, dx: i64, bound: f64) -> Option<f64> {
        let stride = self.config.stride;
        let rows = inside(bbox.r0, bbox.height(), dy, frame.height());
        let cols = inside(bbox.c0, bbox.width(), dx, frame.width());
        let n = stepped_count(rows.clone(), stride) * stepped_count(cols.clone(), stride);
        if n == 0 {
            return None;
        }
        let limit = bound * n as f64;
        let first = |r: std::ops::Range<usize>| r.start.div_ceil(stride) * stride;
        let mut sum = 0.0f64;
        for i in (first(rows.clone())..rows.end).step_by(stride) {
            let fr = (bbox.r0 + i) as i64 + dy;
            for j in (first(cols.clone())..cols.end).step_by(stride) {
                let fc = (bbox.c0 + j) as i64 + dx;
                let t = template[i * bbox.width() + j] as f64;
                sum += (t - frame.get(fr as usize, fc as usize) as f64).abs();
            }
            if sum > limit {
                return None;
            }
        }
        Some(sum / n as f64)
    }

    fn track(&self, frame_idx: usize, frame: &GrayFrame, context: &ConditioningSet<'_>) -> Result<MaskCandidate> {
        let memory = context
            .entries()
            .filter(|e| e.frame_idx < frame_idx && !e.occluded && e.feature.is_some() && !e.mask.is_empty())
            .max_by_key(|e| e.frame_idx)
            .ok_or_else(|| {
                Error::Segmenter(format!("frame {frame_idx}: no prompt and no usable memory to track from"))
            })?;
        let mask = memory.mask.decode();
        let bbox = mask.bbox().expect("non-empty memory mask");
        let template = memory.feature.as_deref().expect("filtered on feature");
        if template.len() != bbox.area() {
            return Err(Error::Segmenter(format!(
                "memory of frame {} holds a {}-value template for a {}-pixel box",
                memory.frame_idx,
                template.len(),
                bbox.area()
            )));
        }
        let mut best: Option<(f64, (i64, i64))> = None;
        for &(dy, dx) in &self.offsets {
            let bound = best.map_or(f64::INFINITY, |(b, _)| b);
            if let Some(err) = self.match_error(frame, template, bbox, dy, dx, bound) {
                if err < bound {
                    best = Some((err, (dy, dx)));
                }
            }
        }
        let (err, (dy, dx)) = best.unwrap_or((255.0, (0, 0)));
        let normalized = (err / 255.0 / (2.0 * self.config.match_error_threshold)).min(1.0);
        let score = 1.0 - normalized;
        Ok(MaskCandidate {
            mask: mask.translate(dy, dx),
            predicted_iou: score,
            occlusion_score: score,
        })
    }
}

/// Offsets `k` in `0..len` with `start + k + shift` inside `0..extent`.
fn inside(start: usize, len: usize, shift: i64, extent: usize) -> std::ops::Range<usize> {
    let lo = (-(start as i64) - shift).max(0);
    let hi = (extent as i64 - start as i64 - shift).min(len as i64);
    if hi <= lo {
        0..0
    } else {
        lo as usize..hi as usize
    }
}

/// Multiples of `stride` in `r`.
fn stepped_count(r: std::ops::Range<usize>, stride: usize) -> usize {
    if r.is_empty() {
        return 0;
    }
    let first = r.start.div_ceil(stride) * stride;
    if first >= r.end {
        0
    } else {
        (r.end - 1 - first) / stride + 1
    }
}

fn patch(frame: &GrayFrame, bbox: Box2D) -> Vec<f32> {
    let mut out = Vec::with_capacity(bbox.area());
    for r in bbox.r0..bbox.r1 {
        for c in bbox.c0..bbox.c1 {
            out.push(frame.get(r, c) as f32);
        }
    }
    out
}

impl Segmenter for NaiveTracker {
    fn name(&self) -> &str {
        "naive"
    }

    fn reset(&mut self) {
        self.frames.clear();
    }

    fn observe_frame(&mut self, frame: FrameView<'_>) -> Result<()> {
        let pixels = frame
            .pixels
            .ok_or_else(|| Error::Segmenter(format!("naive tracker needs pixels for frame {}", frame.idx)))?;
        self.frames.entry(frame.idx).or_insert_with(|| pixels.clone());
        Ok(())
    }

    fn segment(&mut self, frame_idx: usize, prompts: &[Prompt], context: &ConditioningSet<'_>) -> Result<Vec<MaskCandidate>> {
        let frame = self.frame(frame_idx)?;
        if !prompts.is_empty() {
            let mask = self.segment_prompted(frame, prompts)?;
            let visible = if mask.is_empty() { 0.0 } else { 1.0 };
            return Ok(vec![MaskCandidate { mask, predicted_iou: 1.0, occlusion_score: visible }]);
        }
        Ok(vec![self.track(frame_idx, frame, context)?])
    }

    fn commit(
        &mut self,
        frame_idx: usize,
        selection: &Selection,
        prompts: &[Prompt],
    ) -> Result<(MemoryEntry, Option<ObjectPointer>)> {
        let frame = self.frame(frame_idx)?;
        let feature = selection.mask.bbox().map(|b| patch(frame, b));
        Ok((
            memory_entry(frame_idx, selection, prompts, feature),
            Some(summary_pointer(frame_idx, &selection.mask)),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::MemoryBank;
    use crate::prompt::Click;
    use crate::segmenter::{select_output, DEFAULT_OCCLUSION_THRESHOLD};

    fn render(h: usize, w: usize, obj: Option<Box2D>) -> (GrayFrame, BinaryMask) {
        let mask = BinaryMask::from_fn(h, w, |r, c| obj.is_some_and(|b| b.contains(r, c))).unwrap();
        let data = mask.bits().iter().map(|&b| if b { 200 } else { 50 }).collect();
        (GrayFrame::new(h, w, data).unwrap(), mask)
    }

    fn run(frames: &[(GrayFrame, BinaryMask)]) -> Vec<(BinaryMask, bool)> {
        let mut t = NaiveTracker::new(TrackerConfig::default()).unwrap();
        let mut bank = MemoryBank::default();
        let mut out = Vec::new();
        for (i, (f, gt)) in frames.iter().enumerate() {
            t.observe_frame(FrameView { idx: i, pixels: Some(f) }).unwrap();
            let prompts = if i == 0 { vec![Prompt::mask(0, gt.clone())] } else { vec![] };
            let c = t.segment(i, &prompts, &bank.context_for(i)).unwrap();
            let s = select_output(&c, DEFAULT_OCCLUSION_THRESHOLD).unwrap();
            let (e, p) = t.commit(i, &s, &prompts).unwrap();
            if prompts.is_empty() {
                bank.push_unprompted(e, p).unwrap();
            } else {
                bank.push_prompted(e, p).unwrap();
            }
            out.push((s.mask, s.occluded));
        }
        out
    }

    #[test]
    fn static_object_is_tracked_exactly() {
        let frames: Vec<_> = (0..5).map(|_| render(40, 40, Some(Box2D::new(10, 12, 20, 25)))).collect();
        for (i, (m, occ)) in run(&frames).into_iter().enumerate() {
            assert_eq!(m, frames[i].1);
            assert!(!occ);
        }
    }

    #[test]
    fn rigid_motion_is_recovered() {
        let frames: Vec<_> = (0..8)
            .map(|t| render(48, 80, Some(Box2D::new(10, 5 + 3 * t, 22, 17 + 3 * t))))
            .collect();
        for (i, (m, _)) in run(&frames).into_iter().enumerate() {
            assert_eq!(m, frames[i].1, "frame {i}");
        }
    }

    #[test]
    fn disappearance_sets_occlusion() {
        let b = Box2D::new(10, 10, 20, 20);
        let frames = vec![render(40, 40, Some(b)), render(40, 40, Some(b)), render(40, 40, None), render(40, 40, Some(b))];
        let out = run(&frames);
        assert!(out[2].1);
        assert!(out[2].0.is_empty());
        assert_eq!(out[3].0, frames[3].1);
    }

    #[test]
    fn click_and_box_grow_regions() {
        let (f, gt) = render(30, 30, Some(Box2D::new(5, 6, 15, 20)));
        let mut t = NaiveTracker::new(TrackerConfig::default()).unwrap();
        t.observe_frame(FrameView { idx: 0, pixels: Some(&f) }).unwrap();
        let bank = MemoryBank::default();
        let ctx = bank.context_for(0);
        let c = t.segment(0, &[Prompt::click(0, Click::positive(8, 8))], &ctx).unwrap();
        assert_eq!(c[0].mask, gt);
        let c = t.segment(0, &[Prompt::boxed(0, Box2D::new(5, 6, 15, 20))], &ctx).unwrap();
        assert_eq!(c[0].mask, gt);
        let p = [Prompt::click(0, Click::positive(8, 8)), Prompt::click(0, Click::negative(9, 9))];
        let c = t.segment(0, &p, &ctx).unwrap();
        assert!(!c[0].mask.get(9, 9));
        assert!(c[0].mask.get(8, 8));
    }

    #[test]
    fn unprompted_first_frame_is_an_error() {
        let (f, _) = render(10, 10, None);
        let mut t = NaiveTracker::new(TrackerConfig::default()).unwrap();
        t.observe_frame(FrameView { idx: 0, pixels: Some(&f) }).unwrap();
        assert!(t.segment(0, &[], &MemoryBank::default().context_for(0)).is_err());
        assert!(t.observe_frame(FrameView { idx: 1, pixels: None }).is_err());
    }

    #[test]
    fn pruned_match_error_agrees_with_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for stride in [1usize, 2, 3] {
            let t = NaiveTracker::new(TrackerConfig { stride, search_radius_px: 4, ..Default::default() }).unwrap();
            let frame = GrayFrame::new(9, 11, (0..99).map(|_| rng.gen()).collect()).unwrap();
            let bbox = Box2D::new(2, 3, 7, 9);
            let template: Vec<f32> = (0..bbox.area()).map(|_| rng.gen::<u8>() as f32).collect();
            for dy in -8i64..=8 {
                for dx in -12i64..=12 {
                    let (mut sum, mut n) = (0.0, 0usize);
                    for (i, r) in (bbox.r0..bbox.r1).enumerate().filter(|(i, _)| i % stride == 0) {
                        for (j, c) in (bbox.c0..bbox.c1).enumerate().filter(|(j, _)| j % stride == 0) {
                            let (fr, fc) = (r as i64 + dy, c as i64 + dx);
                            if (0..9).contains(&fr) && (0..11).contains(&fc) {
                                sum += (template[i * bbox.width() + j] as f64 - frame.get(fr as usize, fc as usize) as f64).abs();
                                n += 1;
                            }
                        }
                    }
                    let brute = (n > 0).then(|| sum / n as f64);
                    assert_eq!(t.match_error(&frame, &template, bbox, dy, dx, f64::INFINITY), brute);
                    if let Some(b) = brute {
                        assert_eq!(t.match_error(&frame, &template, bbox, dy, dx, b * (1.0 + 1e-9)), Some(b));
                        if b > 1.0 {
                            assert_eq!(t.match_error(&frame, &template, bbox, dy, dx, b / 2.0 - 0.5), None);
                        }
                    }
                }
            }
        }
    }
}
