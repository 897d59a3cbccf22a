//! Semi-supervised, offline and online interactive, and single-image
//! evaluation, plus the annotation-time model.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, VideoRecord};
use crate::error::{Error, Result};
use crate::frames::GrayFrame;
use crate::mask::{iou, BinaryMask};
use crate::memory::{MemoryBank, DEFAULT_PROMPTED_CAPACITY, DEFAULT_RECENT_CAPACITY};
use crate::metrics::{frame_score, score_masklet, FrameScore, GAveraging, MaskletScore, ScoreConfig};
use crate::prompt::{center_click, correction_click, first_frame_prompt, Prompt, PromptKind, PromptLog};
use crate::report::{DatasetReport, ObjectFailure, ObjectReport};
use crate::segmenter::{select_output, FrameView, Segmenter, Selection, DEFAULT_OCCLUSION_THRESHOLD};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Semi,
    Offline,
    Online,
    Image,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Semi => "semi",
            Protocol::Offline => "offline",
            Protocol::Online => "online",
            Protocol::Image => "image",
        })
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semi" => Ok(Protocol::Semi),
            "offline" => Ok(Protocol::Offline),
            "online" => Ok(Protocol::Online),
            "image" => Ok(Protocol::Image),
            _ => Err(Error::Config(format!("unknown protocol `{s}` (semi|offline|online|image)"))),
        }
    }
}

/// Seconds an annotator spends per action.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeModel {
    /// Locating the frame to correct.
    pub t_loc: f64,
    pub t_click: f64,
    /// Examining a 300-frame video.
    pub t_exam: f64,
}

impl Default for TimeModel {
    fn default() -> Self {
        Self {
            t_loc: 1.0,
            t_click: 1.5,
            t_exam: 30.0,
        }
    }
}

impl TimeModel {
    pub fn validate(&self) -> Result<()> {
        if [self.t_loc, self.t_click, self.t_exam].iter().all(|t| t.is_finite() && *t > 0.0) {
            Ok(())
        } else {
            Err(Error::Config(format!("time model entries must be positive: {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionMode {
    Offline,
    Online,
}

/// Seconds to annotate one object. Offline mode re-examines the video on
/// every pass; online mode examines it once.
pub fn annotation_time(mode: InteractionMode, frames: usize, n_click: usize, n_frame: usize, tm: &TimeModel) -> f64 {
    let exam = tm.t_exam * (frames as f64 / 300.0);
    let per_frame = tm.t_loc + tm.t_click * n_click as f64;
    match mode {
        InteractionMode::Offline => (exam + per_frame) * n_frame as f64,
        InteractionMode::Online => exam + per_frame * n_frame as f64,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Clicks per prompted frame in interactive modes.
    pub n_click: usize,
    /// Prompted-frame budget in interactive modes, including the first frame.
    pub n_frame_max: usize,
    /// Online mode pauses on frames with IoU below this.
    pub online_threshold: f64,
    /// First-frame prompt for semi-supervised runs.
    pub prompt_kind: PromptKind,
    /// Clicks per instance in the image protocol.
    pub image_clicks: usize,
    pub score: ScoreConfig,
    /// Leave prompted frames out of interactive scores.
    pub exclude_prompted: bool,
    pub occlusion_threshold: f64,
    pub recent_capacity: usize,
    pub prompted_capacity: usize,
    pub g_averaging: GAveraging,
    /// Record the score after every interaction round.
    pub per_round: bool,
    pub time_model: TimeModel,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n_click: 3,
            n_frame_max: 8,
            online_threshold: 0.75,
            prompt_kind: PromptKind::Click3,
            image_clicks: 1,
            score: ScoreConfig::default(),
            exclude_prompted: false,
            occlusion_threshold: DEFAULT_OCCLUSION_THRESHOLD,
            recent_capacity: DEFAULT_RECENT_CAPACITY,
            prompted_capacity: DEFAULT_PROMPTED_CAPACITY,
            g_averaging: GAveraging::PerObject,
            per_round: true,
            time_model: TimeModel::default(),
            seed: 0,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_click == 0 || self.n_frame_max == 0 || self.image_clicks == 0 {
            return Err(Error::Config("n_click, n_frame_max and image_clicks must be >= 1".into()));
        }
        if !(self.online_threshold > 0.0 && self.online_threshold < 1.0) {
            return Err(Error::Config(format!("online threshold must be in (0, 1), got {}", self.online_threshold)));
        }
        if !(0.0..=1.0).contains(&self.occlusion_threshold) {
            return Err(Error::Config(format!(
                "occlusion threshold must be in [0, 1], got {}",
                self.occlusion_threshold
            )));
        }
        if self.recent_capacity == 0 || self.prompted_capacity == 0 {
            return Err(Error::Config("memory bank capacities must be >= 1".into()));
        }
        self.time_model.validate()
    }
}

/// Ground truth and optional pixels of one object in one video.
#[derive(Clone, Copy, Debug)]
pub struct VideoInput<'a> {
    pub gt: &'a [BinaryMask],
    pub frames: Option<&'a [GrayFrame]>,
}

impl VideoInput<'_> {
    fn validate(&self) -> Result<()> {
        let first = self.gt.first().ok_or(Error::EmptyScoredSet)?;
        for m in self.gt {
            first.same_dims(m)?;
        }
        if let Some(frames) = self.frames {
            if frames.len() != self.gt.len() {
                return Err(Error::LengthMismatch(frames.len(), self.gt.len()));
            }
            if let Some(f) = frames.iter().find(|f| f.dims() != first.dims()) {
                return Err(Error::DimensionMismatch {
                    left_h: f.height(),
                    left_w: f.width(),
                    right_h: first.height(),
                    right_w: first.width(),
                });
            }
        }
        Ok(())
    }

    /// First frame with a visible object.
    pub fn start_frame(&self) -> Result<usize> {
        self.gt
            .iter()
            .position(|m| !m.is_empty())
            .ok_or(Error::EmptyMask("object is never visible"))
    }

    fn view(&self, idx: usize) -> FrameView<'_> {
        FrameView {
            idx,
            pixels: self.frames.map(|f| &f[idx]),
        }
    }
}

/// One streaming pass of a segmenter with its own memory bank.
struct Session<'s, 'v, S: Segmenter + ?Sized> {
    seg: &'s mut S,
    bank: MemoryBank,
    video: VideoInput<'v>,
    occlusion_threshold: f64,
}

impl<'s, 'v, S: Segmenter + ?Sized> Session<'s, 'v, S> {
    fn new(seg: &'s mut S, video: VideoInput<'v>, config: &EvalConfig) -> Result<Self> {
        video.validate()?;
        let mut s = Self {
            seg,
            bank: MemoryBank::new(config.recent_capacity, config.prompted_capacity)?,
            video,
            occlusion_threshold: config.occlusion_threshold,
        };
        s.reset();
        Ok(s)
    }

    fn reset(&mut self) {
        self.seg.reset();
        self.bank.clear();
    }

    fn observe(&mut self, t: usize) -> Result<()> {
        self.seg.observe_frame(self.video.view(t))
    }

    fn predict(&mut self, t: usize, prompts: &[Prompt]) -> Result<Selection> {
        let candidates = self.seg.segment(t, prompts, &self.bank.context_for(t))?;
        select_output(&candidates, self.occlusion_threshold)
    }

    fn commit(&mut self, t: usize, selection: &Selection, prompts: &[Prompt]) -> Result<()> {
        let (entry, pointer) = self.seg.commit(t, selection, prompts)?;
        if prompts.is_empty() {
            self.bank.push_unprompted(entry, pointer)
        } else {
            self.bank.push_prompted(entry, pointer)
        }
    }

    /// Adds up to `n` correction clicks on frame `t`, re-segmenting after each.
    /// `current` is the prediction the first click corrects.
    fn correct(&mut self, t: usize, prompts: &mut Vec<Prompt>, current: Selection, n: usize) -> Result<Selection> {
        let gt = &self.video.gt[t];
        let mut sel = current;
        for _ in 0..n {
            match correction_click(&sel.mask, gt) {
                Ok(click) => prompts.push(Prompt::click(t, click)),
                Err(Error::NoErrorRegion) => break,
                Err(e) => return Err(e),
            }
            sel = self.predict(t, prompts)?;
        }
        Ok(sel)
    }

    /// Center click plus up to `n - 1` corrections on frame `t`.
    fn click_from_scratch(&mut self, t: usize, n: usize) -> Result<(Vec<Prompt>, Selection)> {
        let mut prompts = vec![Prompt::click(t, center_click(&self.video.gt[t])?)];
        let first = self.predict(t, &prompts)?;
        let sel = self.correct(t, &mut prompts, first, n - 1)?;
        Ok((prompts, sel))
    }

    fn empty_masks(&self) -> Result<Vec<BinaryMask>> {
        let (h, w) = self.video.gt[0].dims();
        (0..self.video.gt.len()).map(|_| BinaryMask::new(h, w)).collect()
    }
}

/// Result of a single-pass semi-supervised run.
#[derive(Clone, Debug)]
pub struct SemiOutcome {
    pub start_frame: usize,
    pub prompts: PromptLog,
    pub predictions: Vec<BinaryMask>,
    pub occluded: Vec<bool>,
    /// Frames up to and including the prompted frame are not scored.
    pub score: MaskletScore,
}

/// First-frame prompting, then streaming propagation. An object that is
/// absent at frame 0 is prompted on its first visible frame instead.
pub fn run_semi_supervised<S: Segmenter + ?Sized>(
    segmenter: &mut S,
    video: VideoInput<'_>,
    config: &EvalConfig,
) -> Result<SemiOutcome> {
    config.validate()?;
    let mut s = Session::new(segmenter, video, config)?;
    let start = video.start_frame()?;
    let len = video.gt.len();
    let mut predictions = s.empty_masks()?;
    let mut occluded = vec![false; len];

    s.observe(start)?;
    let log = first_frame_prompt(start, &video.gt[start], config.prompt_kind, &mut |p: &[Prompt]| {
        Ok(s.predict(start, p)?.mask)
    })?;
    let prompts = log.prompts_on(start);
    let sel = s.predict(start, &prompts)?;
    s.commit(start, &sel, &prompts)?;
    occluded[start] = sel.occluded;
    predictions[start] = sel.mask;

    for t in start + 1..len {
        s.observe(t)?;
        let sel = s.predict(t, &[])?;
        s.commit(t, &sel, &[])?;
        occluded[t] = sel.occluded;
        predictions[t] = sel.mask;
    }
    let exclude: BTreeSet<usize> = (0..=start).collect();
    let score = score_masklet(&predictions, video.gt, &exclude, &config.score)?;
    Ok(SemiOutcome {
        start_frame: start,
        prompts: log,
        predictions,
        occluded,
        score,
    })
}

/// What happened in one interaction round.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundRecord {
    pub round: usize,
    /// `None` when the round found nothing to correct.
    pub frame: Option<usize>,
    pub prompts: Vec<Prompt>,
    /// Primary score of the whole video after the round (offline mode).
    pub score: Option<f64>,
    /// Scores of the frames before `frame` as they stood when the round
    /// began (online mode).
    pub prefix: Vec<FrameScore>,
}

#[derive(Clone, Debug)]
pub struct InteractionTrace {
    pub mode: InteractionMode,
    pub start_frame: usize,
    pub rounds: Vec<RoundRecord>,
    pub log: PromptLog,
    pub predictions: Vec<BinaryMask>,
    pub occluded: Vec<bool>,
    /// Every frame from `start_frame` on, regardless of exclusions.
    pub frame_scores: Vec<FrameScore>,
    pub score: MaskletScore,
}

impl InteractionTrace {
    pub fn prompted_frames(&self) -> Vec<usize> {
        self.rounds.iter().filter_map(|r| r.frame).collect()
    }

    pub fn round_scores(&self) -> Vec<f64> {
        self.rounds.iter().filter_map(|r| r.score).collect()
    }

    pub fn max_clicks_per_frame(&self) -> usize {
        self.rounds.iter().map(|r| r.prompts.len()).max().unwrap_or(0)
    }

    /// Checks that frames before each online correction kept the scores
    /// they had when the correction was made.
    pub fn check_causality(&self) -> std::result::Result<(), String> {
        for r in &self.rounds {
            for before in &r.prefix {
                let now = self
                    .frame_scores
                    .iter()
                    .find(|s| s.idx == before.idx)
                    .ok_or_else(|| format!("round {}: frame {} missing from final scores", r.round, before.idx))?;
                if now != before {
                    return Err(format!(
                        "round {} at frame {:?} changed frame {}: {:?} -> {:?}",
                        r.round, r.frame, before.idx, before, now
                    ));
                }
            }
        }
        Ok(())
    }
}

fn interactive_score(
    predictions: &[BinaryMask],
    gt: &[BinaryMask],
    start: usize,
    prompted: &BTreeSet<usize>,
    config: &EvalConfig,
) -> Result<MaskletScore> {
    let mut exclude: BTreeSet<usize> = (0..start).collect();
    if config.exclude_prompted {
        exclude.extend(prompted);
    }
    score_masklet(predictions, gt, &exclude, &config.score)
}

fn all_frame_scores(predictions: &[BinaryMask], gt: &[BinaryMask], start: usize, config: &EvalConfig) -> Result<Vec<FrameScore>> {
    (start..gt.len())
        .map(|t| frame_score(t, &predictions[t], &gt[t], &config.score))
        .collect()
}

/// Multi-pass interactive evaluation. Every pass prompts the worst
/// unprompted frame and re-runs the whole video from a clean state,
/// replaying the prompted frames in order before streaming the rest.
pub fn run_offline_interactive<S: Segmenter + ?Sized>(
    segmenter: &mut S,
    video: VideoInput<'_>,
    config: &EvalConfig,
) -> Result<InteractionTrace> {
    config.validate()?;
    let mut s = Session::new(segmenter, video, config)?;
    let start = video.start_frame()?;
    let len = video.gt.len();
    let mut prompted: BTreeMap<usize, Vec<Prompt>> = BTreeMap::new();
    let mut log = PromptLog::new();
    let mut rounds = Vec::new();

    s.observe(start)?;
    let (first, _) = s.click_from_scratch(start, config.n_click)?;
    for p in &first {
        log.push(0, p.clone())?;
    }
    prompted.insert(start, first.clone());
    let mut new_prompts = first;
    let mut new_frame = Some(start);

    let mut predictions;
    let mut occluded;
    let mut round = 1;
    loop {
        s.reset();
        predictions = s.empty_masks()?;
        occluded = vec![false; len];
        for (&t, p) in &prompted {
            s.observe(t)?;
            let sel = s.predict(t, p)?;
            s.commit(t, &sel, p)?;
            occluded[t] = sel.occluded;
            predictions[t] = sel.mask;
        }
        for t in (start..len).filter(|t| !prompted.contains_key(t)) {
            s.observe(t)?;
            let sel = s.predict(t, &[])?;
            s.commit(t, &sel, &[])?;
            occluded[t] = sel.occluded;
            predictions[t] = sel.mask;
        }
        let keys: BTreeSet<usize> = prompted.keys().copied().collect();
        let score = interactive_score(&predictions, video.gt, start, &keys, config)?;
        rounds.push(RoundRecord {
            round,
            frame: new_frame,
            prompts: std::mem::take(&mut new_prompts),
            score: Some(score.primary()),
            prefix: Vec::new(),
        });
        if round == config.n_frame_max {
            break;
        }
        round += 1;

        let mut worst: Option<(usize, f64)> = None;
        for t in (start..len).filter(|t| !prompted.contains_key(t)) {
            let j = iou(&predictions[t], &video.gt[t])?;
            if worst.is_none_or(|(_, w)| j < w) {
                worst = Some((t, j));
            }
        }
        new_frame = None;
        if let Some((t, _)) = worst.filter(|&(_, j)| j < 1.0) {
            let current = Selection {
                index: 0,
                mask: predictions[t].clone(),
                predicted_iou: 0.0,
                occlusion_score: 1.0,
                occluded: occluded[t],
            };
            let mut p = Vec::new();
            s.correct(t, &mut p, current, config.n_click)?;
            if !p.is_empty() {
                for q in &p {
                    log.push(round - 1, q.clone())?;
                }
                prompted.insert(t, p.clone());
                new_prompts = p;
                new_frame = Some(t);
            }
        }
        if new_frame.is_none() {
            // nothing left to fix: later rounds would repeat this one
            let last = rounds.last().expect("one round recorded").score;
            while round <= config.n_frame_max {
                rounds.push(RoundRecord {
                    round,
                    frame: None,
                    prompts: Vec::new(),
                    score: last,
                    prefix: Vec::new(),
                });
                round += 1;
            }
            break;
        }
    }
    let keys: BTreeSet<usize> = prompted.keys().copied().collect();
    Ok(InteractionTrace {
        mode: InteractionMode::Offline,
        start_frame: start,
        frame_scores: all_frame_scores(&predictions, video.gt, start, config)?,
        score: interactive_score(&predictions, video.gt, start, &keys, config)?,
        rounds,
        log,
        predictions,
        occluded,
    })
}

/// Single forward pass that pauses to correct any frame whose IoU drops
/// below the threshold while the prompted-frame budget lasts.
pub fn run_online_interactive<S: Segmenter + ?Sized>(
    segmenter: &mut S,
    video: VideoInput<'_>,
    config: &EvalConfig,
) -> Result<InteractionTrace> {
    config.validate()?;
    let mut s = Session::new(segmenter, video, config)?;
    let start = video.start_frame()?;
    let len = video.gt.len();
    let mut predictions = s.empty_masks()?;
    let mut occluded = vec![false; len];
    let mut log = PromptLog::new();
    let mut rounds = Vec::new();
    let mut frame_scores = Vec::with_capacity(len - start);
    let mut prompted = BTreeSet::new();

    s.observe(start)?;
    let (first, sel) = s.click_from_scratch(start, config.n_click)?;
    s.commit(start, &sel, &first)?;
    for p in &first {
        log.push(0, p.clone())?;
    }
    prompted.insert(start);
    rounds.push(RoundRecord {
        round: 1,
        frame: Some(start),
        prompts: first,
        score: None,
        prefix: Vec::new(),
    });
    frame_scores.push(frame_score(start, &sel.mask, &video.gt[start], &config.score)?);
    occluded[start] = sel.occluded;
    predictions[start] = sel.mask;

    for t in start + 1..len {
        s.observe(t)?;
        let mut sel = s.predict(t, &[])?;
        let mut prompts = Vec::new();
        if rounds.len() < config.n_frame_max && iou(&sel.mask, &video.gt[t])? < config.online_threshold {
            let prefix = frame_scores.clone();
            sel = s.correct(t, &mut prompts, sel, config.n_click)?;
            if !prompts.is_empty() {
                for p in &prompts {
                    log.push(rounds.len(), p.clone())?;
                }
                prompted.insert(t);
                rounds.push(RoundRecord {
                    round: rounds.len() + 1,
                    frame: Some(t),
                    prompts: prompts.clone(),
                    score: None,
                    prefix,
                });
            }
        }
        s.commit(t, &sel, &prompts)?;
        frame_scores.push(frame_score(t, &sel.mask, &video.gt[t], &config.score)?);
        occluded[t] = sel.occluded;
        predictions[t] = sel.mask;
    }
    Ok(InteractionTrace {
        mode: InteractionMode::Online,
        start_frame: start,
        score: MaskletScore::from_frames(
            config.score.mode,
            frame_scores
                .iter()
                .filter(|f| !(config.exclude_prompted && prompted.contains(&f.idx)))
                .cloned()
                .collect(),
        )?,
        rounds,
        log,
        predictions,
        occluded,
        frame_scores,
    })
}

/// Online scores for budgets `1..=n_frame_max`, one fresh pass each.
pub fn online_budget_curve<S: Segmenter + ?Sized>(
    segmenter: &mut S,
    video: VideoInput<'_>,
    config: &EvalConfig,
) -> Result<Vec<f64>> {
    (1..=config.n_frame_max)
        .map(|b| {
            let cfg = EvalConfig {
                n_frame_max: b,
                ..config.clone()
            };
            Ok(run_online_interactive(segmenter, video, &cfg)?.score.primary())
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct ImageOutcome {
    pub prompts: Vec<Prompt>,
    pub prediction: BinaryMask,
    pub iou: f64,
    pub score: FrameScore,
}

/// One instance of an image treated as a single-frame video: a center
/// click, then `k - 1` corrections against the running prediction.
pub fn run_image_instance<S: Segmenter + ?Sized>(
    segmenter: &mut S,
    frame: FrameView<'_>,
    gt: &BinaryMask,
    k: usize,
    config: &EvalConfig,
) -> Result<ImageOutcome> {
    config.validate()?;
    if k == 0 {
        return Err(Error::Config("image protocol needs at least one click".into()));
    }
    if gt.is_empty() {
        return Err(Error::EmptyMask("image instance has no pixels"));
    }
    segmenter.reset();
    segmenter.observe_frame(frame)?;
    let bank = MemoryBank::new(config.recent_capacity, config.prompted_capacity)?;
    let t = frame.idx;
    let predict = |seg: &mut S, p: &[Prompt]| -> Result<Selection> {
        select_output(&seg.segment(t, p, &bank.context_for(t))?, config.occlusion_threshold)
    };
    let mut prompts = vec![Prompt::click(t, center_click(gt)?)];
    let mut sel = predict(segmenter, &prompts)?;
    for _ in 1..k {
        match correction_click(&sel.mask, gt) {
            Ok(c) => prompts.push(Prompt::click(t, c)),
            Err(Error::NoErrorRegion) => break,
            Err(e) => return Err(e),
        }
        sel = predict(segmenter, &prompts)?;
    }
    let iou = iou(&sel.mask, gt)?;
    Ok(ImageOutcome {
        score: frame_score(t, &sel.mask, gt, &config.score)?,
        prompts,
        prediction: sel.mask,
        iou,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImageResult {
    pub ious: Vec<f64>,
    pub miou: f64,
}

/// Mean IoU over independent per-instance runs. `make` builds the
/// segmenter for instance `i`.
pub fn run_image_sa(
    make: &mut dyn FnMut(usize) -> Result<Box<dyn Segmenter>>,
    image: Option<&GrayFrame>,
    instances: &[BinaryMask],
    k: usize,
    config: &EvalConfig,
) -> Result<ImageResult> {
    if instances.is_empty() {
        return Err(Error::EmptyScoredSet);
    }
    let mut ious = Vec::with_capacity(instances.len());
    for (i, gt) in instances.iter().enumerate() {
        let mut seg = make(i)?;
        let view = FrameView { idx: 0, pixels: image };
        ious.push(run_image_instance(&mut seg, view, gt, k, config)?.iou);
    }
    let miou = ious.iter().sum::<f64>() / ious.len() as f64;
    Ok(ImageResult { ious, miou })
}

/// What a segmenter factory gets to see about the object it will track.
#[derive(Clone, Copy, Debug)]
pub struct ObjectTask<'a> {
    pub video: &'a VideoRecord,
    pub object: &'a str,
    pub masklet: &'a [BinaryMask],
    /// Every object of the video, in id order.
    pub all_objects: &'a [(String, Vec<BinaryMask>)],
}

pub type SegmenterFactory<'f> = dyn Fn(&ObjectTask<'_>) -> Result<Box<dyn Segmenter>> + Sync + 'f;

#[derive(Clone, Debug)]
pub struct RunSpec {
    pub protocol: Protocol,
    pub config: EvalConfig,
    pub segmenter: String,
    pub segmenter_config: serde_json::Value,
    /// Read frame files (segmenters that look at pixels need them).
    pub load_pixels: bool,
}

fn run_object(seg: &mut dyn Segmenter, video: VideoInput<'_>, record: &VideoRecord, spec: &RunSpec) -> Result<ObjectReport> {
    let cfg = &spec.config;
    let base = |score: MaskletScore, start: usize| ObjectReport {
        video: record.id.clone(),
        object: String::new(),
        category: None,
        split: None,
        start_frame: start,
        prompted_frames: Vec::new(),
        clicks: 0,
        occluded_frames: Vec::new(),
        rounds: Vec::new(),
        annotation_seconds: None,
        score,
    };
    let occluded_list = |o: &[bool]| o.iter().enumerate().filter(|(_, &x)| x).map(|(i, _)| i).collect();
    match spec.protocol {
        Protocol::Semi => {
            let out = run_semi_supervised(seg, video, cfg)?;
            Ok(ObjectReport {
                prompted_frames: vec![out.start_frame],
                clicks: out.prompts.click_count(),
                occluded_frames: occluded_list(&out.occluded),
                ..base(out.score, out.start_frame)
            })
        }
        Protocol::Offline | Protocol::Online => {
            let (trace, mode) = if spec.protocol == Protocol::Offline {
                (run_offline_interactive(seg, video, cfg)?, InteractionMode::Offline)
            } else {
                (run_online_interactive(seg, video, cfg)?, InteractionMode::Online)
            };
            let rounds = match (cfg.per_round, mode) {
                (false, _) => Vec::new(),
                (true, InteractionMode::Offline) => trace.round_scores(),
                (true, InteractionMode::Online) => online_budget_curve(seg, video, cfg)?,
            };
            let prompted = trace.prompted_frames();
            let seconds = annotation_time(mode, record.length, cfg.n_click, prompted.len(), &cfg.time_model);
            Ok(ObjectReport {
                clicks: trace.log.click_count(),
                occluded_frames: occluded_list(&trace.occluded),
                rounds,
                annotation_seconds: Some(seconds),
                prompted_frames: prompted,
                ..base(trace.score, trace.start_frame)
            })
        }
        Protocol::Image => {
            let start = video.start_frame()?;
            let out = run_image_instance(seg, video.view(start), &video.gt[start], cfg.image_clicks, cfg)?;
            Ok(ObjectReport {
                prompted_frames: vec![start],
                clicks: out.prompts.len(),
                ..base(MaskletScore::from_frames(cfg.score.mode, vec![out.score])?, start)
            })
        }
    }
}

fn run_video(
    record: &VideoRecord,
    dataset: &Dataset,
    spec: &RunSpec,
    factory: &SegmenterFactory<'_>,
) -> Vec<std::result::Result<ObjectReport, ObjectFailure>> {
    let fail_all = |e: &Error| {
        record
            .objects
            .keys()
            .map(|o| {
                Err(ObjectFailure {
                    video: record.id.clone(),
                    object: o.clone(),
                    error: e.to_string(),
                })
            })
            .collect()
    };
    let frames = if spec.load_pixels {
        match record.load_frames(&dataset.root) {
            Ok(f) => f,
            Err(e) => return fail_all(&e),
        }
    } else {
        None
    };
    let objects: Result<Vec<(String, Vec<BinaryMask>)>> = record
        .objects
        .keys()
        .map(|o| Ok((o.clone(), record.masklet(o)?)))
        .collect();
    let objects = match objects {
        Ok(o) => o,
        Err(e) => return fail_all(&e),
    };
    objects
        .par_iter()
        .map(|(oid, masklet)| {
            let task = ObjectTask {
                video: record,
                object: oid,
                masklet,
                all_objects: &objects,
            };
            let video = VideoInput {
                gt: masklet,
                frames: frames.as_deref(),
            };
            let meta = &record.objects[oid];
            factory(&task)
                .and_then(|mut seg| run_object(&mut *seg, video, record, spec))
                .map(|r| ObjectReport {
                    object: oid.clone(),
                    category: meta.category.clone(),
                    split: meta.split,
                    ..r
                })
                .map_err(|e| ObjectFailure {
                    video: record.id.clone(),
                    object: oid.clone(),
                    error: e.to_string(),
                })
        })
        .collect()
}

/// Runs `spec.protocol` on every object of the dataset, each with its own
/// segmenter and memory bank. Failures are recorded in the report.
pub fn run_dataset(dataset: &Dataset, spec: &RunSpec, factory: &SegmenterFactory<'_>) -> Result<DatasetReport> {
    spec.config.validate()?;
    let results: Vec<_> = dataset
        .manifest
        .videos
        .par_iter()
        .flat_map_iter(|v| run_video(v, dataset, spec, factory))
        .collect();
    let mut objects = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(o) => objects.push(o),
            Err(f) => failures.push(f),
        }
    }
    Ok(DatasetReport::assemble(
        &dataset.manifest.name,
        spec.protocol,
        &spec.segmenter,
        spec.segmenter_config.clone(),
        &spec.config,
        objects,
        failures,
    ))
}
