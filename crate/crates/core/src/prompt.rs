//! Prompts and the simulated annotator.
//!
//! Evaluation clicks are placed at mask "centers": the pixel farthest (in
//! Euclidean distance) from the region boundary. Correction clicks target the
//! largest connected error region, false negatives and false positives being
//! labelled separately so each region has a single polarity.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::mask::{distance_transform, label_components, BinaryMask, Box2D, Connectivity};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Click {
    pub row: usize,
    pub col: usize,
    pub polarity: Polarity,
}

impl Click {
    pub fn positive(row: usize, col: usize) -> Self {
        Self { row, col, polarity: Polarity::Positive }
    }

    pub fn negative(row: usize, col: usize) -> Self {
        Self { row, col, polarity: Polarity::Negative }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PromptPayload {
    Click(Click),
    Box(Box2D),
    Mask(BinaryMask),
}

/// A prompt bound to a frame.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Prompt {
    pub frame_idx: usize,
    pub payload: PromptPayload,
}

impl Prompt {
    pub fn click(frame_idx: usize, click: Click) -> Self {
        Self { frame_idx, payload: PromptPayload::Click(click) }
    }

    pub fn boxed(frame_idx: usize, b: Box2D) -> Self {
        Self { frame_idx, payload: PromptPayload::Box(b) }
    }

    pub fn mask(frame_idx: usize, m: BinaryMask) -> Self {
        Self { frame_idx, payload: PromptPayload::Mask(m) }
    }

    pub fn as_click(&self) -> Option<&Click> {
        match &self.payload {
            PromptPayload::Click(c) => Some(c),
            _ => None,
        }
    }

    /// Checks the payload against a `height x width` frame.
    pub fn validate(&self, height: usize, width: usize) -> Result<()> {
        match &self.payload {
            PromptPayload::Click(c) if c.row >= height || c.col >= width => Err(Error::InvalidPrompt(format!(
                "click ({}, {}) outside {height}x{width} frame {}",
                c.row, c.col, self.frame_idx
            ))),
            PromptPayload::Click(_) => Ok(()),
            PromptPayload::Box(b) => b.validate(height, width),
            PromptPayload::Mask(m) if m.dims() != (height, width) => Err(Error::InvalidPrompt(format!(
                "mask prompt is {}x{}, frame {} is {height}x{width}",
                m.height(),
                m.width(),
                self.frame_idx
            ))),
            PromptPayload::Mask(_) => Ok(()),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum PayloadTag {
    Click,
    Box,
    Mask,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PromptJson {
    frame: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    round: Option<usize>,
    #[serde(rename = "type")]
    kind: PayloadTag,
    data: serde_json::Value,
}

impl PromptJson {
    fn from_prompt(p: &Prompt, round: Option<usize>) -> std::result::Result<Self, serde_json::Error> {
        let (kind, data) = match &p.payload {
            PromptPayload::Click(c) => (PayloadTag::Click, serde_json::to_value(c)?),
            PromptPayload::Box(b) => (PayloadTag::Box, serde_json::to_value(b)?),
            PromptPayload::Mask(m) => (PayloadTag::Mask, serde_json::to_value(m)?),
        };
        Ok(Self { frame: p.frame_idx, round, kind, data })
    }

    fn into_prompt(self) -> std::result::Result<(Prompt, Option<usize>), serde_json::Error> {
        let payload = match self.kind {
            PayloadTag::Click => PromptPayload::Click(serde_json::from_value(self.data)?),
            PayloadTag::Box => PromptPayload::Box(serde_json::from_value(self.data)?),
            PayloadTag::Mask => PromptPayload::Mask(serde_json::from_value(self.data)?),
        };
        Ok((Prompt { frame_idx: self.frame, payload }, self.round))
    }
}

impl Serialize for Prompt {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PromptJson::from_prompt(self, None)
            .map_err(serde::ser::Error::custom)?
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Prompt {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = PromptJson::deserialize(deserializer)?;
        match raw.into_prompt().map_err(serde::de::Error::custom)? {
            (p, None) => Ok(p),
            (_, Some(_)) => Err(serde::de::Error::custom("unexpected field `round` in prompt")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoggedPrompt {
    pub round: usize,
    pub prompt: Prompt,
}

impl Serialize for LoggedPrompt {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PromptJson::from_prompt(&self.prompt, Some(self.round))
            .map_err(serde::ser::Error::custom)?
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LoggedPrompt {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = PromptJson::deserialize(deserializer)?;
        match raw.into_prompt().map_err(serde::de::Error::custom)? {
            (prompt, Some(round)) => Ok(LoggedPrompt { round, prompt }),
            (_, None) => Err(serde::de::Error::missing_field("round")),
        }
    }
}

/// Ordered record of every prompt issued during a run.
/// Serializes as a JSON array of `{frame, round, type, data}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PromptLog {
    entries: Vec<LoggedPrompt>,
}

impl PromptLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, round: usize, prompt: Prompt) -> Result<()> {
        if let Some(last) = self.entries.last() {
            if round < last.round {
                return Err(Error::InvalidPrompt(format!(
                    "round {round} logged after round {}",
                    last.round
                )));
            }
        }
        self.entries.push(LoggedPrompt { round, prompt });
        Ok(())
    }

    pub fn entries(&self) -> &[LoggedPrompt] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn prompts(&self) -> impl Iterator<Item = &Prompt> {
        self.entries.iter().map(|e| &e.prompt)
    }

    pub fn prompts_on(&self, frame_idx: usize) -> Vec<Prompt> {
        self.prompts().filter(|p| p.frame_idx == frame_idx).cloned().collect()
    }

    pub fn click_count(&self) -> usize {
        self.prompts().filter(|p| p.as_click().is_some()).count()
    }

    /// Checks ordering, bounds, and the per-(round, frame) click budget.
    pub fn validate(&self, height: usize, width: usize, max_clicks: usize) -> Result<()> {
        let mut per_round_frame = std::collections::BTreeMap::new();
        let mut last_round = 0;
        for e in &self.entries {
            if e.round < last_round {
                return Err(Error::InvalidPrompt(format!(
                    "round {} logged after round {last_round}",
                    e.round
                )));
            }
            last_round = e.round;
            e.prompt.validate(height, width)?;
            if e.prompt.as_click().is_some() {
                let n = per_round_frame.entry((e.round, e.prompt.frame_idx)).or_insert(0usize);
                *n += 1;
                if *n > max_clicks {
                    return Err(Error::InvalidPrompt(format!(
                        "more than {max_clicks} clicks on frame {} in round {}",
                        e.prompt.frame_idx, e.round
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Positive click at the pixel farthest from the mask boundary; ties go to
/// the first pixel in row-major order.
pub fn center_click(gt: &BinaryMask) -> Result<Click> {
    if gt.is_empty() {
        return Err(Error::EmptyMask("center click needs a non-empty mask"));
    }
    let (row, col) = distance_transform(gt).argmax();
    Ok(Click::positive(row, col))
}

/// A connected region where the prediction disagrees with the ground truth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErrorRegion {
    pub mask: BinaryMask,
    pub area: usize,
    /// Row-major index of the region's first pixel.
    pub first_pixel: usize,
    /// Positive for missed foreground, negative for spurious foreground.
    pub polarity: Polarity,
}

impl ErrorRegion {
    pub fn center_click(&self) -> Click {
        let (row, col) = distance_transform(&self.mask).argmax();
        Click { row, col, polarity: self.polarity }
    }
}

/// All 8-connected error regions, largest first, ties in scan order.
pub fn error_regions(pred: &BinaryMask, gt: &BinaryMask) -> Result<Vec<ErrorRegion>> {
    pred.same_dims(gt)?;
    let (h, w) = gt.dims();
    let mut regions = Vec::new();
    for polarity in [Polarity::Positive, Polarity::Negative] {
        let member = |i: usize| match polarity {
            Polarity::Positive => gt.bits()[i] && !pred.bits()[i],
            Polarity::Negative => pred.bits()[i] && !gt.bits()[i],
        };
        let comps = label_components(h, w, Connectivity::Eight, member);
        for label in 1..=comps.count() as u32 {
            regions.push(ErrorRegion {
                mask: comps.mask_of(label),
                area: comps.area(label),
                first_pixel: comps.first_pixel(label),
                polarity,
            });
        }
    }
    regions.sort_by(|a, b| b.area.cmp(&a.area).then(a.first_pixel.cmp(&b.first_pixel)));
    Ok(regions)
}

/// Click at the center of the largest error region.
pub fn correction_click(pred: &BinaryMask, gt: &BinaryMask) -> Result<Click> {
    error_regions(pred, gt)?
        .first()
        .map(ErrorRegion::center_click)
        .ok_or(Error::NoErrorRegion)
}

/// Up to `n` clicks on distinct error regions, largest first.
pub fn correction_clicks(pred: &BinaryMask, gt: &BinaryMask, n: usize) -> Result<Vec<Click>> {
    Ok(error_regions(pred, gt)?
        .iter()
        .take(n)
        .map(ErrorRegion::center_click)
        .collect())
}

/// Initial prompt type for first-frame (semi-supervised) prompting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Click1,
    #[default]
    Click3,
    Click5,
    Box,
    Mask,
}

impl PromptKind {
    pub const ALL: [PromptKind; 5] = [
        PromptKind::Click1,
        PromptKind::Click3,
        PromptKind::Click5,
        PromptKind::Box,
        PromptKind::Mask,
    ];

    pub fn clicks(self) -> Option<usize> {
        match self {
            PromptKind::Click1 => Some(1),
            PromptKind::Click3 => Some(3),
            PromptKind::Click5 => Some(5),
            PromptKind::Box | PromptKind::Mask => None,
        }
    }
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PromptKind::Click1 => "click1",
            PromptKind::Click3 => "click3",
            PromptKind::Click5 => "click5",
            PromptKind::Box => "box",
            PromptKind::Mask => "mask",
        })
    }
}

impl FromStr for PromptKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PromptKind::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown prompt kind `{s}` (click1|click3|click5|box|mask)")))
    }
}

/// Adds up to `n` correction clicks on `frame_idx`, asking `segment` for the
/// running prediction before each one. Stops early once the prediction is
/// exact. Returns the full prompt list.
pub fn interactive_corrections(
    frame_idx: usize,
    gt: &BinaryMask,
    mut prompts: Vec<Prompt>,
    n: usize,
    segment: &mut dyn FnMut(&[Prompt]) -> Result<BinaryMask>,
) -> Result<Vec<Prompt>> {
    for _ in 0..n {
        let pred = segment(&prompts)?;
        match correction_click(&pred, gt) {
            Ok(click) => prompts.push(Prompt::click(frame_idx, click)),
            Err(Error::NoErrorRegion) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(prompts)
}

/// Builds the first-frame prompts for `kind`. Click kinds start at the mask
/// center and add corrections against the segmenter's running prediction.
pub fn first_frame_prompt(
    frame_idx: usize,
    gt: &BinaryMask,
    kind: PromptKind,
    segment: &mut dyn FnMut(&[Prompt]) -> Result<BinaryMask>,
) -> Result<PromptLog> {
    if gt.is_empty() {
        return Err(Error::EmptyMask("first-frame prompt needs a visible object"));
    }
    let prompts = match kind {
        PromptKind::Mask => vec![Prompt::mask(frame_idx, gt.clone())],
        PromptKind::Box => vec![Prompt::boxed(frame_idx, gt.bbox().expect("non-empty"))],
        _ => {
            let k = kind.clicks().expect("click kind");
            let first = vec![Prompt::click(frame_idx, center_click(gt)?)];
            interactive_corrections(frame_idx, gt, first, k - 1, segment)?
        }
    };
    let mut log = PromptLog::new();
    for p in prompts {
        log.push(0, p)?;
    }
    Ok(log)
}

fn uniform_foreground_pixel<R: Rng + ?Sized>(rng: &mut R, m: &BinaryMask) -> Option<(usize, usize)> {
    let area = m.area();
    if area == 0 {
        return None;
    }
    let k = rng.gen_range(0..area);
    m.foreground().nth(k)
}

/// Training-style initial prompt: the mask with probability 0.5, a positive
/// click drawn uniformly from the mask with 0.25, its box with 0.25.
pub fn sample_training_prompt<R: Rng + ?Sized>(rng: &mut R, frame_idx: usize, gt: &BinaryMask) -> Result<Prompt> {
    if gt.is_empty() {
        return Err(Error::EmptyMask("training prompt needs a non-empty mask"));
    }
    let u: f64 = rng.gen();
    Ok(if u < 0.5 {
        Prompt::mask(frame_idx, gt.clone())
    } else if u < 0.75 {
        let (row, col) = uniform_foreground_pixel(rng, gt).expect("non-empty");
        Prompt::click(frame_idx, Click::positive(row, col))
    } else {
        Prompt::boxed(frame_idx, gt.bbox().expect("non-empty"))
    })
}

/// Training-style corrective click. With probability `random_click_prob`
/// the click is a positive one drawn uniformly from `gt`, ignoring `pred`;
/// otherwise it is [`correction_click`]. `None` when there is nothing to fix.
pub fn sample_corrective_click<R: Rng + ?Sized>(
    rng: &mut R,
    pred: &BinaryMask,
    gt: &BinaryMask,
    random_click_prob: f64,
) -> Result<Option<Click>> {
    pred.same_dims(gt)?;
    if random_click_prob > 0.0 && rng.gen::<f64>() < random_click_prob {
        return Ok(uniform_foreground_pixel(rng, gt).map(|(r, c)| Click::positive(r, c)));
    }
    match correction_click(pred, gt) {
        Ok(c) => Ok(Some(c)),
        Err(Error::NoErrorRegion) => Ok(None),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn block(h: usize, w: usize, r0: usize, c0: usize, r1: usize, c1: usize) -> BinaryMask {
        BinaryMask::from_fn(h, w, |r, c| (r0..r1).contains(&r) && (c0..c1).contains(&c)).unwrap()
    }

    #[test]
    fn center_click_examples() {
        assert_eq!(center_click(&block(5, 5, 1, 1, 4, 4)).unwrap(), Click::positive(2, 2));
        let mut single = BinaryMask::new(4, 4).unwrap();
        single.set(3, 0, true);
        assert_eq!(center_click(&single).unwrap(), Click::positive(3, 0));
        let twins = block(7, 12, 2, 1, 5, 4).or(&block(7, 12, 2, 7, 5, 10)).unwrap();
        assert_eq!(center_click(&twins).unwrap(), Click::positive(3, 2));
        assert!(matches!(center_click(&BinaryMask::new(3, 3).unwrap()), Err(Error::EmptyMask(_))));
    }

    #[test]
    fn correction_click_examples() {
        let gt = block(7, 7, 2, 2, 5, 5);
        let empty = BinaryMask::new(7, 7).unwrap();
        assert_eq!(correction_click(&empty, &gt).unwrap(), Click::positive(3, 3));

        let gt = block(12, 12, 1, 1, 4, 4);
        let pred = gt.or(&block(12, 12, 7, 7, 10, 10)).unwrap();
        assert_eq!(correction_click(&pred, &gt).unwrap(), Click::negative(8, 8));

        // FN area 9 vs FP area 4
        let gt = block(12, 12, 1, 1, 4, 4);
        let pred = block(12, 12, 8, 8, 10, 10);
        assert_eq!(correction_click(&pred, &gt).unwrap(), Click::positive(2, 2));

        assert!(matches!(correction_click(&gt, &gt), Err(Error::NoErrorRegion)));
    }

    #[test]
    fn correction_batch() {
        let gt = block(20, 20, 1, 1, 4, 4)
            .or(&block(20, 20, 8, 8, 10, 10))
            .unwrap()
            .or(&block(20, 20, 15, 15, 16, 16))
            .unwrap();
        let empty = BinaryMask::new(20, 20).unwrap();
        let clicks = correction_clicks(&empty, &gt, 3).unwrap();
        assert_eq!(
            clicks,
            vec![Click::positive(2, 2), Click::positive(8, 8), Click::positive(15, 15)]
        );
        assert!(correction_clicks(&gt, &gt, 3).unwrap().is_empty());
        let one = block(20, 20, 1, 1, 4, 4);
        assert_eq!(correction_clicks(&empty, &one, 3).unwrap().len(), 1);
    }

    #[test]
    fn first_frame_kinds() {
        let gt = block(6, 6, 1, 1, 4, 4);
        let mut never = |_: &[Prompt]| -> Result<BinaryMask> { panic!("not interactive") };
        let log = first_frame_prompt(0, &gt, PromptKind::Mask, &mut never).unwrap();
        assert_eq!(log.prompts().cloned().collect::<Vec<_>>(), vec![Prompt::mask(0, gt.clone())]);
        let log = first_frame_prompt(0, &gt, PromptKind::Box, &mut never).unwrap();
        assert_eq!(log.entries()[0].prompt.payload, PromptPayload::Box(Box2D::new(1, 1, 4, 4)));
        let log = first_frame_prompt(0, &gt, PromptKind::Click1, &mut never).unwrap();
        assert_eq!(log.entries()[0].prompt, Prompt::click(0, Click::positive(2, 2)));
        assert!(first_frame_prompt(0, &BinaryMask::new(6, 6).unwrap(), PromptKind::Mask, &mut never).is_err());
    }

    #[test]
    fn interactive_click3_queries_segmenter() {
        let gt = block(10, 10, 1, 1, 4, 9);
        let mut calls = 0;
        // returns only the left half of the object until two clicks exist
        let mut seg = |p: &[Prompt]| -> Result<BinaryMask> {
            calls += 1;
            Ok(if p.len() >= 2 { gt.clone() } else { block(10, 10, 1, 1, 4, 5) })
        };
        let log = first_frame_prompt(0, &gt, PromptKind::Click3, &mut seg).unwrap();
        assert_eq!(log.len(), 2);
        assert_eq!(calls, 2);
        assert_eq!(log.entries()[1].prompt.as_click().unwrap().polarity, Polarity::Positive);
    }

    #[test]
    fn prompt_log_json_shape() {
        let mut log = PromptLog::new();
        log.push(0, Prompt::click(0, Click::positive(1, 2))).unwrap();
        log.push(1, Prompt::boxed(4, Box2D::new(0, 0, 2, 2))).unwrap();
        let json = serde_json::to_string(&log).unwrap();
        assert_eq!(
            json,
            r#"[{"frame":0,"round":0,"type":"click","data":{"col":2,"polarity":"positive","row":1}},{"frame":4,"round":1,"type":"box","data":{"c0":0,"c1":2,"r0":0,"r1":2}}]"#
        );
        let back: PromptLog = serde_json::from_str(&json).unwrap();
        assert_eq!(back, log);
        assert!(log.push(0, Prompt::click(0, Click::positive(0, 0))).is_err());
    }

    #[test]
    fn prompt_log_validation() {
        let mut log = PromptLog::new();
        for _ in 0..4 {
            log.push(0, Prompt::click(0, Click::positive(1, 1))).unwrap();
        }
        assert!(log.validate(4, 4, 4).is_ok());
        assert!(log.validate(4, 4, 3).is_err());
        assert!(log.validate(1, 1, 4).is_err());
    }

    #[test]
    fn training_sampler_frequencies() {
        let gt = block(16, 16, 3, 4, 11, 13);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            match sample_training_prompt(&mut rng, 0, &gt).unwrap().payload {
                PromptPayload::Mask(m) => {
                    assert_eq!(m, gt);
                    counts[0] += 1
                }
                PromptPayload::Click(c) => {
                    assert!(gt.get(c.row, c.col));
                    assert_eq!(c.polarity, Polarity::Positive);
                    counts[1] += 1
                }
                PromptPayload::Box(b) => {
                    assert_eq!(b, gt.bbox().unwrap());
                    counts[2] += 1
                }
            }
        }
        for (got, want) in counts.iter().zip([0.5, 0.25, 0.25]) {
            let p = *got as f64 / n as f64;
            assert!((p - want).abs() < 0.01, "{p} vs {want}");
        }
        let a = sample_training_prompt(&mut ChaCha8Rng::seed_from_u64(3), 0, &gt).unwrap();
        let b = sample_training_prompt(&mut ChaCha8Rng::seed_from_u64(3), 0, &gt).unwrap();
        assert_eq!(a, b);
        assert!(sample_training_prompt(&mut rng, 0, &BinaryMask::new(2, 2).unwrap()).is_err());
    }

    #[test]
    fn corrective_sampler_default_is_deterministic_rule() {
        let gt = block(8, 8, 1, 1, 4, 4);
        let pred = BinaryMask::new(8, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(
            sample_corrective_click(&mut rng, &pred, &gt, 0.0).unwrap(),
            Some(correction_click(&pred, &gt).unwrap())
        );
        assert_eq!(sample_corrective_click(&mut rng, &gt, &gt, 0.0).unwrap(), None);
        for _ in 0..50 {
            let c = sample_corrective_click(&mut rng, &gt, &gt, 1.0).unwrap().unwrap();
            assert!(gt.get(c.row, c.col));
        }
    }
}
