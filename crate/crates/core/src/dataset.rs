//! Dataset manifests, synthetic fixtures, and report files.
//!
//! A manifest is a JSON document:
//!
//! ```json
//! {
//!   "format": "pvs-manifest/1",
//!   "name": "demo",
//!   "videos": [{
//!     "id": "v000", "length": 3, "height": 4, "width": 4,
//!     "frames": ["frames/v000/00000.pgm", "..."],
//!     "objects": {"1": {"category": "rect", "split": "seen",
//!                       "masks": {"0": {"size": [4, 4], "counts": [5, 2, 2, 2, 5]}}}}
//!   }]
//! }
//! ```
//!
//! `frames`, `category` and `split` are optional. A frame missing from
//! `masks` means the object is not visible there.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::GrayFrame;
use crate::mask::{BinaryMask, RleJson, RleMask, MAX_PIXELS};
use crate::metrics::{area_stats, disappearance_rate, MaskKey, Split};
use crate::report::{DatasetReport, REPORT_FORMAT};

pub const MANIFEST_FORMAT: &str = "pvs-manifest/1";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub format: String,
    pub name: String,
    pub videos: Vec<VideoRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VideoRecord {
    pub id: String,
    pub length: usize,
    pub height: usize,
    pub width: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frames: Option<Vec<String>>,
    pub objects: BTreeMap<String, ObjectRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObjectRecord {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    /// Keyed by frame index; serialized with decimal string keys.
    #[serde(serialize_with = "ser_frame_map")]
    pub masks: BTreeMap<usize, RleMask>,
}

fn ser_frame_map<S: serde::Serializer>(m: &BTreeMap<usize, RleMask>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        map.serialize_entry(&k.to_string(), v)?;
    }
    map.end()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    format: String,
    name: String,
    videos: Vec<RawVideo>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVideo {
    id: String,
    length: usize,
    height: usize,
    width: usize,
    #[serde(default)]
    frames: Option<Vec<String>>,
    objects: BTreeMap<String, RawObject>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObject {
    #[serde(default)]
    category: Option<String>,
    #[serde(default)]
    split: Option<Split>,
    masks: BTreeMap<String, RleJson>,
}

fn parse_frame_key(key: &str) -> Option<usize> {
    let canonical = !key.is_empty() && key.bytes().all(|b| b.is_ascii_digit()) && (key == "0" || !key.starts_with('0'));
    if canonical && key.len() <= 12 {
        key.parse().ok()
    } else {
        None
    }
}

impl Manifest {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            format: MANIFEST_FORMAT.to_string(),
            name: name.into(),
            videos: Vec::new(),
        }
    }

    /// Parses and fully validates a manifest document.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawManifest = serde_json::from_str(text)?;
        let mut videos = Vec::with_capacity(raw.videos.len());
        for (vi, v) in raw.videos.into_iter().enumerate() {
            let vloc = format!("video `{}` (#{vi})", v.id);
            let mut objects = BTreeMap::new();
            for (oid, o) in v.objects {
                let mut masks = BTreeMap::new();
                for (key, rle) in o.masks {
                    let frame = parse_frame_key(&key).ok_or_else(|| {
                        Error::manifest(format!("{vloc} object `{oid}`"), format!("bad frame key `{key}`"))
                    })?;
                    let rle = rle.validate().map_err(|e| {
                        Error::manifest(format!("{vloc} object `{oid}` frame {frame}"), e.to_string())
                    })?;
                    masks.insert(frame, rle);
                }
                objects.insert(
                    oid,
                    ObjectRecord {
                        category: o.category,
                        split: o.split,
                        masks,
                    },
                );
            }
            videos.push(VideoRecord {
                id: v.id,
                length: v.length,
                height: v.height,
                width: v.width,
                frames: v.frames,
                objects,
            });
        }
        let m = Manifest {
            format: raw.format,
            name: raw.name,
            videos,
        };
        m.validate()?;
        Ok(m)
    }

    /// Checks every invariant; errors name the offending video, object and frame.
    pub fn validate(&self) -> Result<()> {
        if self.format != MANIFEST_FORMAT {
            return Err(Error::manifest("header", format!("format `{}`, expected `{MANIFEST_FORMAT}`", self.format)));
        }
        let mut ids = BTreeSet::new();
        for (vi, v) in self.videos.iter().enumerate() {
            let vloc = format!("video `{}` (#{vi})", v.id);
            if v.id.is_empty() {
                return Err(Error::manifest(vloc, "empty video id"));
            }
            if !ids.insert(v.id.as_str()) {
                return Err(Error::manifest(vloc, "duplicate video id"));
            }
            if v.length == 0 {
                return Err(Error::manifest(vloc, "length must be >= 1"));
            }
            if v.height == 0 || v.width == 0 || v.height.saturating_mul(v.width) > MAX_PIXELS {
                return Err(Error::manifest(vloc, format!("bad frame size {}x{}", v.height, v.width)));
            }
            if let Some(paths) = &v.frames {
                if paths.len() != v.length {
                    return Err(Error::manifest(
                        vloc,
                        format!("{} frame paths for length {}", paths.len(), v.length),
                    ));
                }
                if let Some(i) = paths.iter().position(|p| p.is_empty()) {
                    return Err(Error::manifest(format!("{vloc} frame {i}"), "empty frame path"));
                }
            }
            for (oid, o) in &v.objects {
                let oloc = format!("{vloc} object `{oid}`");
                if oid.is_empty() {
                    return Err(Error::manifest(oloc, "empty object id"));
                }
                for (&frame, rle) in &o.masks {
                    let loc = format!("{oloc} frame {frame}");
                    if frame >= v.length {
                        return Err(Error::manifest(loc, format!("frame index beyond length {}", v.length)));
                    }
                    if rle.dims() != (v.height, v.width) {
                        return Err(Error::manifest(
                            loc,
                            format!(
                                "mask is {}x{}, video is {}x{}",
                                rle.height(),
                                rle.width(),
                                v.height,
                                v.width
                            ),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn video(&self, id: &str) -> Option<&VideoRecord> {
        self.videos.iter().find(|v| v.id == id)
    }
}

impl VideoRecord {
    /// The object's mask on every frame, empty where absent.
    pub fn masklet(&self, object: &str) -> Result<Vec<BinaryMask>> {
        let o = self
            .objects
            .get(object)
            .ok_or_else(|| Error::manifest(format!("video `{}`", self.id), format!("no object `{object}`")))?;
        (0..self.length)
            .map(|t| match o.masks.get(&t) {
                Some(rle) => Ok(rle.decode()),
                None => BinaryMask::new(self.height, self.width),
            })
            .collect()
    }

    pub fn presence(&self, object: &str) -> Option<Vec<bool>> {
        let o = self.objects.get(object)?;
        Some(
            (0..self.length)
                .map(|t| o.masks.get(&t).is_some_and(|m| !m.is_empty()))
                .collect(),
        )
    }

    /// Reads the frame files, resolving relative paths against `root`.
    /// `None` when the record has no pixel paths.
    pub fn load_frames(&self, root: &Path) -> Result<Option<Vec<GrayFrame>>> {
        let Some(paths) = &self.frames else {
            return Ok(None);
        };
        let mut out = Vec::with_capacity(paths.len());
        for (t, p) in paths.iter().enumerate() {
            let path = root.join(p);
            let f = GrayFrame::read(&path)?;
            if f.dims() != (self.height, self.width) {
                return Err(Error::manifest(
                    format!("video `{}` frame {t}", self.id),
                    format!("{} is {}x{}, expected {}x{}", path.display(), f.height(), f.width(), self.height, self.width),
                ));
            }
            out.push(f);
        }
        Ok(Some(out))
    }
}

impl ObjectRecord {
    pub fn from_masklet(masks: &[BinaryMask]) -> Self {
        Self {
            category: None,
            split: None,
            masks: masks
                .iter()
                .enumerate()
                .filter(|(_, m)| !m.is_empty())
                .map(|(t, m)| (t, m.to_rle()))
                .collect(),
        }
    }
}

/// A manifest plus the directory its relative frame paths resolve against.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub manifest: Manifest,
    pub root: PathBuf,
}

pub fn load_manifest(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest = Manifest::from_json(&text).map_err(|e| match e {
        Error::Json(j) => Error::manifest(path.display().to_string(), j.to_string()),
        other => other,
    })?;
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Dataset { manifest, root })
}

pub fn save_manifest(manifest: &Manifest, path: &Path) -> Result<()> {
    manifest.validate()?;
    std::fs::write(path, manifest.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn save_report(report: &DatasetReport, path: &Path) -> Result<()> {
    std::fs::write(path, report.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn load_report(path: &Path) -> Result<DatasetReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    DatasetReport::from_json(&text).map_err(|e| match e {
        Error::Json(j) => Error::Report(format!("{}: {j} (expected {REPORT_FORMAT})", path.display())),
        other => other,
    })
}

/// Dataset-level annotation statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestStats {
    pub videos: usize,
    pub objects: usize,
    pub frames: usize,
    pub masks: usize,
    /// Percent of masklets that vanish and later reappear.
    pub disappearance_rate: f64,
    /// Normalized-area histogram over ten equal bins of `[0, 1]`.
    pub area_histogram: Vec<usize>,
    pub percent_area_below_0_1: f64,
}

pub fn manifest_stats(manifest: &Manifest) -> ManifestStats {
    let mut presences = Vec::new();
    for v in &manifest.videos {
        for oid in v.objects.keys() {
            presences.push(v.presence(oid).expect("listed object"));
        }
    }
    let area = area_stats(manifest.videos.iter().flat_map(|v| v.objects.values().flat_map(|o| o.masks.values())));
    ManifestStats {
        videos: manifest.videos.len(),
        objects: presences.len(),
        frames: manifest.videos.iter().map(|v| v.length).sum(),
        masks: area.masks,
        disappearance_rate: disappearance_rate(&presences),
        area_histogram: area.histogram,
        percent_area_below_0_1: area.percent_below_0_1,
    }
}

/// Pairs every mask of `masks` with `reference` by video, object and frame.
/// A frame annotated on one side only pairs with an empty mask; objects
/// missing from one side stay unpaired.
pub fn alignment_pairs(
    masks: &Manifest,
    reference: &Manifest,
) -> Result<(BTreeMap<MaskKey, RleMask>, BTreeMap<MaskKey, RleMask>)> {
    let collect = |m: &Manifest, other: &Manifest| -> Result<BTreeMap<MaskKey, RleMask>> {
        let mut out = BTreeMap::new();
        for v in &m.videos {
            let ov = other.video(&v.id);
            for (oid, o) in &v.objects {
                let theirs = ov.and_then(|ov| ov.objects.get(oid));
                let frames: BTreeSet<usize> = o.masks.keys().chain(theirs.into_iter().flat_map(|t| t.masks.keys())).copied().collect();
                for t in frames {
                    let rle = match o.masks.get(&t) {
                        Some(r) => r.clone(),
                        None => RleMask::empty(v.height, v.width)?,
                    };
                    out.insert(MaskKey { video: v.id.clone(), object: oid.clone(), frame: t }, rle);
                }
            }
        }
        Ok(out)
    };
    Ok((collect(masks, reference)?, collect(reference, masks)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Motion {
    Static,
    /// Pixels per frame.
    Linear { dy: i64, dx: i64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Rect,
    Disk,
}

impl Shape {
    fn name(self) -> &'static str {
        match self {
            Shape::Rect => "rect",
            Shape::Disk => "disk",
        }
    }
}

/// Frames `start..end` of one object are hidden.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Disappearance {
    pub video: usize,
    pub object: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub name: String,
    pub videos: usize,
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub objects_per_video: usize,
    /// Inclusive range of object side lengths.
    pub min_size: usize,
    pub max_size: usize,
    pub shapes: Vec<Shape>,
    pub motion: Motion,
    /// Minimum background gap between objects.
    pub min_gap: usize,
    pub disappearances: Vec<Disappearance>,
    /// Alternate objects between the seen and unseen splits.
    pub splits: bool,
    pub render: bool,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            name: "synth".into(),
            videos: 4,
            frames: 16,
            height: 96,
            width: 128,
            objects_per_video: 1,
            min_size: 12,
            max_size: 20,
            shapes: vec![Shape::Rect, Shape::Disk],
            motion: Motion::Static,
            min_gap: 20,
            disappearances: Vec::new(),
            splits: false,
            render: true,
        }
    }
}

/// Background and object intensities of rendered frames.
pub const BACKGROUND_LEVEL: u8 = 50;
pub const OBJECT_LEVEL: u8 = 200;

#[derive(Clone, Debug)]
pub struct SynthDataset {
    pub manifest: Manifest,
    /// Rendered frames per video, empty unless `render` is set.
    pub frames: Vec<Vec<GrayFrame>>,
}

impl SynthDataset {
    /// Writes `manifest.json` and the frame files below `dir`.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (v, frames) in self.manifest.videos.iter().zip(&self.frames) {
            let (Some(paths), false) = (&v.frames, frames.is_empty()) else {
                continue;
            };
            for (p, f) in paths.iter().zip(frames) {
                let path = dir.join(p);
                if let Some(parent) = path.parent() {
                    std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
                }
                f.write(&path)?;
            }
        }
        let path = dir.join("manifest.json");
        save_manifest(&self.manifest, &path)?;
        Ok(path)
    }
}

struct Placed {
    shape: Shape,
    h: usize,
    w: usize,
    r0: i64,
    c0: i64,
}

impl Placed {
    fn covers(&self, dr: usize, dc: usize) -> bool {
        match self.shape {
            Shape::Rect => true,
            Shape::Disk => {
                let y = (dr as f64 + 0.5) / self.h as f64 * 2.0 - 1.0;
                let x = (dc as f64 + 0.5) / self.w as f64 * 2.0 - 1.0;
                x * x + y * y <= 1.0
            }
        }
    }
}

fn validate_spec(spec: &SynthSpec) -> Result<()> {
    let bad = |m: String| Err(Error::Synth(m));
    if spec.videos == 0 || spec.frames == 0 || spec.objects_per_video == 0 {
        return bad("videos, frames and objects_per_video must be >= 1".into());
    }
    if spec.height == 0 || spec.width == 0 || spec.height.saturating_mul(spec.width) > MAX_PIXELS {
        return bad(format!("bad frame size {}x{}", spec.height, spec.width));
    }
    if spec.min_size == 0 || spec.min_size > spec.max_size {
        return bad(format!("bad object size range {}..={}", spec.min_size, spec.max_size));
    }
    if spec.max_size > spec.height.min(spec.width) {
        return bad(format!("objects up to {} px do not fit a {}x{} frame", spec.max_size, spec.height, spec.width));
    }
    if spec.shapes.is_empty() {
        return bad("no shapes to draw from".into());
    }
    for d in &spec.disappearances {
        if d.video >= spec.videos || d.object >= spec.objects_per_video || d.start >= d.end || d.end > spec.frames {
            return bad(format!("bad disappearance window {d:?}"));
        }
    }
    Ok(())
}

/// Feasible top-left range on one axis so the object stays inside `0..extent`
/// at every visible frame.
fn axis_range(extent: usize, size: usize, velocity: i64, visible: &[usize]) -> Option<(i64, i64)> {
    let (first, last) = (*visible.first()? as i64, *visible.last()? as i64);
    let lo = (-velocity * first).max(-velocity * last);
    let hi = (extent as i64 - size as i64 - velocity * first).min(extent as i64 - size as i64 - velocity * last);
    (lo <= hi).then_some((lo, hi))
}

/// Deterministic rigid-motion dataset with exact ground truth.
pub fn synth_dataset(spec: &SynthSpec, seed: u64) -> Result<SynthDataset> {
    validate_spec(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (vy, vx) = match spec.motion {
        Motion::Static => (0, 0),
        Motion::Linear { dy, dx } => (dy, dx),
    };
    let mut manifest = Manifest::new(spec.name.clone());
    let mut all_frames = Vec::with_capacity(spec.videos);
    for vi in 0..spec.videos {
        let vid = format!("v{vi:03}");
        let mut placed: Vec<Placed> = Vec::new();
        let mut hidden: Vec<Vec<bool>> = Vec::new();
        for oi in 0..spec.objects_per_video {
            let mut h_frames = vec![false; spec.frames];
            for d in spec.disappearances.iter().filter(|d| d.video == vi && d.object == oi) {
                h_frames[d.start..d.end].iter_mut().for_each(|x| *x = true);
            }
            let visible: Vec<usize> = (0..spec.frames).filter(|&t| !h_frames[t]).collect();
            let shape = *spec.shapes.choose(&mut rng).expect("non-empty");
            let h = rng.gen_range(spec.min_size..=spec.max_size);
            let w = if shape == Shape::Disk { h } else { rng.gen_range(spec.min_size..=spec.max_size) };
            let rows = axis_range(spec.height, h, vy, &visible);
            let cols = axis_range(spec.width, w, vx, &visible);
            let (Some((rlo, rhi)), Some((clo, chi))) = (rows, cols) else {
                return Err(Error::Synth(format!(
                    "video {vi} object {oi}: a {h}x{w} object moving ({vy},{vx}) px/frame leaves the frame \
                     outside its disappearance windows"
                )));
            };
            let gap = spec.min_gap as i64;
            let mut spot = None;
            for _ in 0..1000 {
                let r0 = rng.gen_range(rlo..=rhi);
                let c0 = rng.gen_range(clo..=chi);
                // all objects share the velocity, so frame-0 separation holds throughout
                let clear = placed.iter().all(|p| {
                    r0 + h as i64 + gap <= p.r0
                        || p.r0 + p.h as i64 + gap <= r0
                        || c0 + w as i64 + gap <= p.c0
                        || p.c0 + p.w as i64 + gap <= c0
                });
                if clear {
                    spot = Some((r0, c0));
                    break;
                }
            }
            let (r0, c0) = spot.ok_or_else(|| {
                Error::Synth(format!("video {vi}: no room for object {oi} with a {gap} px gap"))
            })?;
            placed.push(Placed { shape, h, w, r0, c0 });
            hidden.push(h_frames);
        }

        let mut frames = Vec::new();
        let mut masks: Vec<BTreeMap<usize, RleMask>> = vec![BTreeMap::new(); placed.len()];
        for t in 0..spec.frames {
            let mut frame = GrayFrame::filled(spec.height, spec.width, BACKGROUND_LEVEL)?;
            for (oi, p) in placed.iter().enumerate() {
                if hidden[oi][t] {
                    continue;
                }
                let top = p.r0 + vy * t as i64;
                let left = p.c0 + vx * t as i64;
                let mut m = BinaryMask::new(spec.height, spec.width)?;
                for dr in 0..p.h {
                    for dc in 0..p.w {
                        if p.covers(dr, dc) {
                            let (r, c) = ((top + dr as i64) as usize, (left + dc as i64) as usize);
                            m.set(r, c, true);
                            frame.set(r, c, OBJECT_LEVEL);
                        }
                    }
                }
                masks[oi].insert(t, m.to_rle());
            }
            if spec.render {
                frames.push(frame);
            }
        }
        let objects = placed
            .iter()
            .zip(masks)
            .enumerate()
            .map(|(oi, (p, masks))| {
                let split = spec.splits.then(|| if (vi + oi) % 2 == 0 { Split::Seen } else { Split::Unseen });
                (
                    (oi + 1).to_string(),
                    ObjectRecord {
                        category: Some(p.shape.name().to_string()),
                        split,
                        masks,
                    },
                )
            })
            .collect();
        let paths = spec
            .render
            .then(|| (0..spec.frames).map(|t| format!("frames/{vid}/{t:05}.pgm")).collect());
        manifest.videos.push(VideoRecord {
            id: vid,
            length: spec.frames,
            height: spec.height,
            width: spec.width,
            frames: paths,
            objects,
        });
        all_frames.push(frames);
    }
    manifest.validate()?;
    Ok(SynthDataset {
        manifest,
        frames: all_frames,
    })
}
