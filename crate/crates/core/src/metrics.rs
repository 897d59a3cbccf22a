//! Frame, masklet, and dataset scores (J, F, J&F, G), plus the data-engine
//! statistics: disappearance rate, alignment score, and mask-area
//! distribution.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{boundary, iou, squared_distance_to_set, BinaryMask, Box2D, RleMask};

/// Which score a masklet is judged by.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricMode {
    /// Region and boundary accuracy.
    #[default]
    Jf,
    /// Region accuracy only; the boundary measure is not computed.
    JOnly,
}

/// Boundary-matching tolerance in pixels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryTolerance {
    /// `ceil(0.008 * image diagonal)`.
    #[default]
    Auto,
    Pixels(f64),
}

impl BoundaryTolerance {
    pub fn resolve(self, height: usize, width: usize) -> f64 {
        match self {
            BoundaryTolerance::Auto => {
                let diag = ((height * height + width * width) as f64).sqrt();
                (0.008 * diag).ceil()
            }
            BoundaryTolerance::Pixels(t) => t,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreConfig {
    pub mode: MetricMode,
    pub tolerance: BoundaryTolerance,
}

/// Share of `from` pixels within `tol2` (squared) of `to_dist2`'s seed set.
/// Both live in the `crop` window of a `width`-wide frame.
fn fraction_within(from: &BinaryMask, to_dist2: &[f64], crop: Box2D, tol2: f64) -> f64 {
    let w = from.width();
    let mut n = 0usize;
    let mut hit = 0usize;
    for r in crop.r0..crop.r1 {
        for c in crop.c0..crop.c1 {
            if from.bits()[r * w + c] {
                n += 1;
                hit += usize::from(to_dist2[(r - crop.r0) * crop.width() + c - crop.c0] <= tol2);
            }
        }
    }
    hit as f64 / n as f64
}

/// Boundary F-measure with a Euclidean matching tolerance of `tol` pixels.
pub fn boundary_f(pred: &BinaryMask, gt: &BinaryMask, tol: f64) -> Result<f64> {
    pred.same_dims(gt)?;
    if !(tol >= 0.0) {
        return Err(Error::Config(format!("boundary tolerance must be >= 0, got {tol}")));
    }
    let pb = boundary(pred);
    let gb = boundary(gt);
    let (Some(a), Some(b)) = (pb.bbox(), gb.bbox()) else {
        return Ok(if pb.is_empty() && gb.is_empty() { 1.0 } else { 0.0 });
    };
    if pb == gb {
        return Ok(1.0);
    }
    // every seed and every query pixel lies in the joint box
    let crop = Box2D::new(a.r0.min(b.r0), a.c0.min(b.c0), a.r1.max(b.r1), a.c1.max(b.c1));
    let (ch, cw, w) = (crop.height(), crop.width(), gt.width());
    let at = |i: usize| (crop.r0 + i / cw) * w + crop.c0 + i % cw;
    let tol2 = tol * tol;
    let to_gt = squared_distance_to_set(ch, cw, |i| gb.bits()[at(i)]);
    let to_pred = squared_distance_to_set(ch, cw, |i| pb.bits()[at(i)]);
    let precision = fraction_within(&pb, &to_gt, crop, tol2);
    let recall = fraction_within(&gb, &to_pred, crop, tol2);
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameScore {
    pub idx: usize,
    pub j: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jf: Option<f64>,
}

impl FrameScore {
    pub fn new(idx: usize, j: f64, f: Option<f64>) -> Self {
        Self {
            idx,
            j,
            f,
            jf: f.map(|f| (j + f) / 2.0),
        }
    }

    /// J&F, or J alone in J-only mode.
    pub fn primary(&self) -> f64 {
        self.jf.unwrap_or(self.j)
    }
}

pub fn frame_score(idx: usize, pred: &BinaryMask, gt: &BinaryMask, config: &ScoreConfig) -> Result<FrameScore> {
    let j = iou(pred, gt)?;
    let f = match config.mode {
        MetricMode::Jf => Some(boundary_f(pred, gt, config.tolerance.resolve(gt.height(), gt.width()))?),
        MetricMode::JOnly => None,
    };
    Ok(FrameScore::new(idx, j, f))
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Per-frame scores of one object and their means over the scored frames.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskletScore {
    pub mode: MetricMode,
    pub j_mean: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jf_mean: Option<f64>,
    pub frames: Vec<FrameScore>,
}

impl MaskletScore {
    pub fn from_frames(mode: MetricMode, frames: Vec<FrameScore>) -> Result<Self> {
        let j_mean = mean(frames.iter().map(|s| s.j)).ok_or(Error::EmptyScoredSet)?;
        let (f_mean, jf_mean) = match mode {
            MetricMode::Jf => {
                let f = frames
                    .iter()
                    .map(|s| s.f.ok_or_else(|| Error::Report(format!("frame {} has no F score", s.idx))))
                    .collect::<Result<Vec<_>>>()?;
                let f_mean = mean(f.into_iter());
                (f_mean, f_mean.map(|f| (j_mean + f) / 2.0))
            }
            MetricMode::JOnly => (None, None),
        };
        Ok(Self {
            mode,
            j_mean,
            f_mean,
            jf_mean,
            frames,
        })
    }

    /// The frame indices that entered the means.
    pub fn scored_frames(&self) -> Vec<usize> {
        self.frames.iter().map(|s| s.idx).collect()
    }

    pub fn primary(&self) -> f64 {
        self.jf_mean.unwrap_or(self.j_mean)
    }
}

/// Scores every frame not listed in `exclude`.
pub fn score_masklet(
    preds: &[BinaryMask],
    gts: &[BinaryMask],
    exclude: &BTreeSet<usize>,
    config: &ScoreConfig,
) -> Result<MaskletScore> {
    if preds.len() != gts.len() {
        return Err(Error::LengthMismatch(preds.len(), gts.len()));
    }
    let frames = preds
        .iter()
        .zip(gts)
        .enumerate()
        .filter(|(i, _)| !exclude.contains(i))
        .map(|(i, (p, g))| frame_score(i, p, g, config))
        .collect::<Result<Vec<_>>>()?;
    MaskletScore::from_frames(config.mode, frames)
}

/// YouTube-VOS style overall score: the mean of seen/unseen J and F.
pub fn g_mean(js: f64, fs: f64, ju: f64, fu: f64) -> f64 {
    (js + fs + ju + fu) / 4.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Seen,
    Unseen,
}

/// How objects are pooled before the seen/unseen means.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GAveraging {
    #[default]
    PerObject,
    /// Average objects within a category first, then across categories.
    PerCategory,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GScore {
    pub j_seen: f64,
    pub f_seen: f64,
    pub j_unseen: f64,
    pub f_unseen: f64,
    pub g: f64,
}

/// One scored object as seen by the dataset aggregator.
#[derive(Clone, Copy, Debug)]
pub struct ObjectEntry<'a> {
    pub score: &'a MaskletScore,
    pub split: Option<Split>,
    pub category: Option<&'a str>,
}

fn split_means(entries: &[ObjectEntry<'_>], split: Split, averaging: GAveraging) -> Option<(f64, f64)> {
    let members: Vec<_> = entries.iter().filter(|e| e.split == Some(split)).collect();
    let f_of = |e: &ObjectEntry<'_>| e.score.f_mean;
    match averaging {
        GAveraging::PerObject => {
            let j = mean(members.iter().map(|e| e.score.j_mean))?;
            let f = mean(members.iter().map(|e| f_of(e)).collect::<Option<Vec<_>>>()?.into_iter())?;
            Some((j, f))
        }
        GAveraging::PerCategory => {
            let mut by_cat: BTreeMap<&str, Vec<&ObjectEntry<'_>>> = BTreeMap::new();
            for e in &members {
                by_cat.entry(e.category.unwrap_or("")).or_default().push(e);
            }
            let mut js = Vec::new();
            let mut fs = Vec::new();
            for group in by_cat.values() {
                js.push(mean(group.iter().map(|e| e.score.j_mean))?);
                fs.push(mean(group.iter().map(|e| f_of(e)).collect::<Option<Vec<_>>>()?.into_iter())?);
            }
            Some((mean(js.into_iter())?, mean(fs.into_iter())?))
        }
    }
}

/// Computes G when both splits are populated and F scores are available.
pub fn g_score(entries: &[ObjectEntry<'_>], averaging: GAveraging) -> Option<GScore> {
    let (js, fs) = split_means(entries, Split::Seen, averaging)?;
    let (ju, fu) = split_means(entries, Split::Unseen, averaging)?;
    Some(GScore {
        j_seen: js,
        f_seen: fs,
        j_unseen: ju,
        f_unseen: fu,
        g: g_mean(js, fs, ju, fu),
    })
}

/// Unweighted means over objects.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeans {
    pub objects: usize,
    pub j_mean: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jf_mean: Option<f64>,
}

pub fn dataset_means(scores: &[&MaskletScore]) -> Option<DatasetMeans> {
    let j_mean = mean(scores.iter().map(|s| s.j_mean))?;
    let f_mean = scores
        .iter()
        .map(|s| s.f_mean)
        .collect::<Option<Vec<_>>>()
        .and_then(|f| mean(f.into_iter()));
    Some(DatasetMeans {
        objects: scores.len(),
        j_mean,
        f_mean,
        jf_mean: f_mean.map(|f| (j_mean + f) / 2.0),
    })
}

/// True when the sequence contains present, then absent, then present again.
pub fn disappears_and_reappears(presence: &[bool]) -> bool {
    let mut seen = false;
    let mut gap = false;
    for &p in presence {
        match (p, seen, gap) {
            (true, true, true) => return true,
            (true, _, _) => seen = true,
            (false, true, _) => gap = true,
            _ => {}
        }
    }
    false
}

/// Percent of masklets that disappear for at least one frame and re-appear.
pub fn disappearance_rate<P: AsRef<[bool]>>(presences: &[P]) -> f64 {
    if presences.is_empty() {
        return 0.0;
    }
    let n = presences.iter().filter(|p| disappears_and_reappears(p.as_ref())).count();
    100.0 * n as f64 / presences.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeBucket {
    Small,
    Medium,
    Large,
}

impl SizeBucket {
    pub const ALL: [SizeBucket; 3] = [SizeBucket::Small, SizeBucket::Medium, SizeBucket::Large];

    /// `[1, 32²)`, `[32², 96²)`, `[96², ∞)`; zero area has no bucket.
    pub fn of_area(area: u64) -> Option<SizeBucket> {
        match area {
            0 => None,
            a if a < 32 * 32 => Some(SizeBucket::Small),
            a if a < 96 * 96 => Some(SizeBucket::Medium),
            _ => Some(SizeBucket::Large),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MaskKey {
    pub video: String,
    pub object: String,
    pub frame: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BucketScore {
    pub pairs: usize,
    pub aligned: usize,
    pub percent: Option<f64>,
}

impl BucketScore {
    fn add(&mut self, aligned: bool) {
        self.pairs += 1;
        self.aligned += usize::from(aligned);
    }

    fn finish(&mut self) {
        self.percent = (self.pairs > 0).then(|| 100.0 * self.aligned as f64 / self.pairs as f64);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlignmentReport {
    pub threshold: f64,
    pub overall: BucketScore,
    pub buckets: BTreeMap<SizeBucket, BucketScore>,
    /// Pairs whose reference mask is empty; they have no size bucket.
    pub skipped_empty_reference: usize,
}

/// Percent of masks whose IoU with the paired reference exceeds `threshold`,
/// overall and per reference-area bucket.
pub fn alignment_score(
    masks: &BTreeMap<MaskKey, RleMask>,
    refs: &BTreeMap<MaskKey, RleMask>,
    threshold: f64,
) -> Result<AlignmentReport> {
    if let Some(k) = masks.keys().find(|k| !refs.contains_key(k)) {
        return Err(Error::Unpaired(format!("{k:?} has no reference mask")));
    }
    if let Some(k) = refs.keys().find(|k| !masks.contains_key(k)) {
        return Err(Error::Unpaired(format!("reference {k:?} has no mask")));
    }
    let mut overall = BucketScore::default();
    let mut buckets: BTreeMap<SizeBucket, BucketScore> =
        SizeBucket::ALL.iter().map(|&b| (b, BucketScore::default())).collect();
    let mut skipped = 0;
    for (key, mask) in masks {
        let reference = &refs[key];
        let Some(bucket) = SizeBucket::of_area(reference.area()) else {
            skipped += 1;
            continue;
        };
        let aligned = mask.iou(reference)? > threshold;
        overall.add(aligned);
        buckets.get_mut(&bucket).expect("all buckets present").add(aligned);
    }
    overall.finish();
    buckets.values_mut().for_each(BucketScore::finish);
    Ok(AlignmentReport {
        threshold,
        overall,
        buckets,
        skipped_empty_reference: skipped,
    })
}

/// Distribution of mask areas normalized by frame resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaStats {
    pub masks: usize,
    /// Ten equal bins over `[0, 1]`; the last bin is closed.
    pub histogram: Vec<usize>,
    pub percent_below_0_1: f64,
    pub normalized: Vec<f64>,
}

/// Statistics over the non-empty masks in `masks`.
pub fn area_stats<'a>(masks: impl IntoIterator<Item = &'a RleMask>) -> AreaStats {
    let normalized: Vec<f64> = masks
        .into_iter()
        .filter(|m| !m.is_empty())
        .map(|m| m.area() as f64 / (m.height() * m.width()) as f64)
        .collect();
    let mut histogram = vec![0usize; 10];
    for &a in &normalized {
        histogram[((a * 10.0) as usize).min(9)] += 1;
    }
    let below = normalized.iter().filter(|&&a| a < 0.1).count();
    AreaStats {
        masks: normalized.len(),
        histogram,
        percent_below_0_1: if normalized.is_empty() {
            0.0
        } else {
            100.0 * below as f64 / normalized.len() as f64
        },
        normalized,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(h: usize, w: usize, r0: usize, c0: usize, r1: usize, c1: usize) -> BinaryMask {
        BinaryMask::from_fn(h, w, |r, c| (r0..r1).contains(&r) && (c0..c1).contains(&c)).unwrap()
    }

    #[test]
    fn boundary_f_examples() {
        let m = block(20, 20, 5, 5, 12, 14);
        assert_eq!(boundary_f(&m, &m, 0.0).unwrap(), 1.0);
        assert_eq!(boundary_f(&m, &m, 3.0).unwrap(), 1.0);
        let e = BinaryMask::new(20, 20).unwrap();
        assert_eq!(boundary_f(&e, &m, 2.0).unwrap(), 0.0);
        assert_eq!(boundary_f(&e, &e, 2.0).unwrap(), 1.0);
        let shifted = m.translate(1, 0);
        assert_eq!(boundary_f(&shifted, &m, 2.0).unwrap(), 1.0);
        assert!(boundary_f(&shifted, &m, 0.0).unwrap() < 1.0);
        assert!(boundary_f(&m, &m, -1.0).is_err());
    }

    #[test]
    fn auto_tolerance() {
        // diagonal of 480x854 is ~979.7 -> 7.84 -> 8
        assert_eq!(BoundaryTolerance::Auto.resolve(480, 854), 8.0);
        assert_eq!(BoundaryTolerance::Auto.resolve(10, 10), 1.0);
        assert_eq!(BoundaryTolerance::Pixels(2.5).resolve(10, 10), 2.5);
    }

    #[test]
    fn masklet_mean_excludes_frames() {
        let frames = vec![FrameScore::new(1, 1.0, Some(1.0)), FrameScore::new(2, 0.5, Some(0.5))];
        let s = MaskletScore::from_frames(MetricMode::Jf, frames).unwrap();
        assert_eq!(s.jf_mean, Some(0.75));
        assert_eq!(s.scored_frames(), vec![1, 2]);
    }

    #[test]
    fn score_masklet_identity_and_errors() {
        let gts = vec![block(8, 8, 1, 1, 4, 4), block(8, 8, 2, 2, 5, 5), block(8, 8, 3, 3, 6, 6)];
        let cfg = ScoreConfig::default();
        let s = score_masklet(&gts, &gts, &BTreeSet::from([0]), &cfg).unwrap();
        assert_eq!(s.jf_mean, Some(1.0));
        assert_eq!(s.scored_frames(), vec![1, 2]);

        assert!(matches!(
            score_masklet(&gts[..2], &gts, &BTreeSet::new(), &cfg),
            Err(Error::LengthMismatch(2, 3))
        ));
        assert!(matches!(
            score_masklet(&gts, &gts, &BTreeSet::from([0, 1, 2]), &cfg),
            Err(Error::EmptyScoredSet)
        ));
    }

    #[test]
    fn j_only_mode_has_no_f() {
        let gts = vec![block(8, 8, 1, 1, 4, 4); 2];
        let cfg = ScoreConfig {
            mode: MetricMode::JOnly,
            ..Default::default()
        };
        let s = score_masklet(&gts, &gts, &BTreeSet::new(), &cfg).unwrap();
        assert_eq!(s.f_mean, None);
        assert_eq!(s.jf_mean, None);
        assert!(s.frames.iter().all(|f| f.f.is_none()));
        assert_eq!(s.primary(), 1.0);
        let json = serde_json::to_string(&s.frames[0]).unwrap();
        assert_eq!(json, r#"{"idx":0,"j":1.0}"#);
    }

    #[test]
    fn g_mean_examples() {
        assert_eq!(g_mean(1.0, 1.0, 1.0, 1.0), 1.0);
        assert_eq!(g_mean(0.0, 0.0, 0.0, 0.0), 0.0);
        let g = g_mean(0.875, 0.920, 0.848, 0.928);
        assert!((g - 0.89275).abs() < 1e-12);
        assert_eq!(format!("{:.1}", g * 100.0), "89.3");
    }

    #[test]
    fn g_score_averaging_orders() {
        let mk = |j: f64| MaskletScore::from_frames(MetricMode::Jf, vec![FrameScore::new(0, j, Some(j))]).unwrap();
        let (a, b, c, d) = (mk(1.0), mk(0.0), mk(0.0), mk(0.5));
        let entries = [
            ObjectEntry { score: &a, split: Some(Split::Seen), category: Some("cat") },
            ObjectEntry { score: &b, split: Some(Split::Seen), category: Some("cat") },
            ObjectEntry { score: &c, split: Some(Split::Seen), category: Some("dog") },
            ObjectEntry { score: &d, split: Some(Split::Unseen), category: Some("cow") },
        ];
        let per_obj = g_score(&entries, GAveraging::PerObject).unwrap();
        assert!((per_obj.j_seen - 1.0 / 3.0).abs() < 1e-15);
        let per_cat = g_score(&entries, GAveraging::PerCategory).unwrap();
        assert_eq!(per_cat.j_seen, 0.25);
        assert_eq!(per_cat.j_unseen, 0.5);
        assert!(g_score(&entries[..3], GAveraging::PerObject).is_none());
    }

    #[test]
    fn disappearance_examples() {
        assert!(!disappears_and_reappears(&[true, true, true]));
        assert!(disappears_and_reappears(&[true, false, true]));
        let set = [vec![true, false, true], vec![true, true, false], vec![false, true, true]];
        assert!((disappearance_rate(&set) - 100.0 / 3.0).abs() < 1e-12);
        assert_eq!(disappearance_rate::<Vec<bool>>(&[]), 0.0);
    }

    #[test]
    fn size_buckets() {
        assert_eq!(SizeBucket::of_area(0), None);
        assert_eq!(SizeBucket::of_area(1), Some(SizeBucket::Small));
        assert_eq!(SizeBucket::of_area(1023), Some(SizeBucket::Small));
        assert_eq!(SizeBucket::of_area(1024), Some(SizeBucket::Medium));
        assert_eq!(SizeBucket::of_area(9215), Some(SizeBucket::Medium));
        assert_eq!(SizeBucket::of_area(9216), Some(SizeBucket::Large));
    }

    fn key(frame: usize) -> MaskKey {
        MaskKey { video: "v".into(), object: "o".into(), frame }
    }

    #[test]
    fn alignment_examples() {
        // reference 10 px wide; IoU 0.8 (8/10) and 0.7 (7/10)
        let reference = block(4, 10, 0, 0, 1, 10).to_rle();
        let m08 = block(4, 10, 0, 0, 1, 8).to_rle();
        let m07 = block(4, 10, 0, 0, 1, 7).to_rle();
        let masks = BTreeMap::from([(key(0), m08), (key(1), m07)]);
        let refs = BTreeMap::from([(key(0), reference.clone()), (key(1), reference.clone())]);
        let rep = alignment_score(&masks, &refs, 0.75).unwrap();
        assert_eq!(rep.overall.percent, Some(50.0));
        assert_eq!(rep.buckets[&SizeBucket::Small].pairs, 2);

        let same = BTreeMap::from([(key(0), reference.clone())]);
        let rep = alignment_score(&same, &same, 0.75).unwrap();
        assert_eq!(rep.overall.percent, Some(100.0));

        let lonely = BTreeMap::from([(key(5), reference)]);
        assert!(matches!(alignment_score(&lonely, &refs, 0.75), Err(Error::Unpaired(_))));
    }

    #[test]
    fn area_stat_examples() {
        let ten = BinaryMask::from_fn(10, 10, |r, _| r == 0).unwrap().to_rle();
        let s = area_stats([&ten]);
        assert_eq!(s.normalized, vec![0.1]);
        assert_eq!(s.percent_below_0_1, 0.0);
        let full = BinaryMask::full(10, 10).unwrap().to_rle();
        assert_eq!(area_stats([&full]).normalized, vec![1.0]);
        assert_eq!(area_stats([&full]).histogram[9], 1);

        let small = BinaryMask::from_fn(10, 10, |r, c| r == 0 && c < 5).unwrap().to_rle();
        let mut set = vec![&small; 9];
        set.push(&full);
        assert_eq!(area_stats(set).percent_below_0_1, 90.0);
    }
}
