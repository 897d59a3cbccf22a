//! One check per acceptance criterion. Each writes a PASS/FAIL line to
//! stderr before asserting; the line bypasses libtest's output capture.

mod common;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{brute_iou, brute_squared_dt, entry, pointer, random_mask, QueueModel};
use pvskit::automask::{grid_prompts, postprocess_mask, GridSpec, MIN_REGION_AREA};
use pvskit::dataset::{load_manifest, synth_dataset, Disappearance, Motion, Shape, SynthSpec};
use pvskit::mask::{fill_small_holes, iou, remove_small_components, rle_decode, rle_encode, squared_distance_transform, BinaryMask};
use pvskit::memory::MemoryBank;
use pvskit::metrics::{alignment_score, disappearance_rate, disappears_and_reappears, MaskKey, SizeBucket};
use pvskit::prompt::PromptKind;
use pvskit::protocols::{
    annotation_time, run_dataset, run_offline_interactive, run_online_interactive, EvalConfig, InteractionMode, ObjectTask,
    Protocol, RunSpec, TimeModel, VideoInput,
};
use pvskit::segmenter::{NaiveTracker, OracleConfig, OracleSegmenter, Segmenter, TrackerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, name: &str, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {id:>2} {verdict}: {name} ({detail})");
}

fn within(elapsed: Duration, secs: u64) -> bool {
    elapsed < Duration::from_secs(secs)
}

#[test]
fn c01_mask_core_oracles() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0usize;
    let n = 1000;
    for _ in 0..n {
        let (h, w) = (rng.gen_range(32..=64), rng.gen_range(32..=64));
        let a = random_mask(&mut rng, h, w);
        let b = random_mask(&mut rng, h, w);
        let (ra, rb) = (rle_encode(&a), rle_encode(&b));
        if rle_decode(&ra).unwrap() != a {
            mismatches += 1;
        }
        let expect = brute_iou(&a, &b);
        if ra.iou(&rb).unwrap() != expect || iou(&a, &b).unwrap() != expect {
            mismatches += 1;
        }
        if squared_distance_transform(&a) != brute_squared_dt(&a) {
            mismatches += 1;
        }
    }
    let el = t0.elapsed();
    let ok = mismatches == 0 && within(el, 10);
    report(1, "mask-core oracle equivalence", ok, &format!("{n} masks, {mismatches} mismatches, {el:.2?}"));
    assert!(ok);
}

fn oracle_factory(task: &ObjectTask<'_>) -> pvskit::Result<Box<dyn Segmenter>> {
    Ok(Box::new(OracleSegmenter::new(task.masklet.to_vec(), OracleConfig::noiseless())?))
}

#[test]
fn c02_identity_law() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let spec = SynthSpec {
        videos: 20,
        frames: 10,
        height: 64,
        width: 96,
        objects_per_video: 2,
        min_size: 10,
        max_size: 16,
        min_gap: 4,
        motion: Motion::Linear { dy: 1, dx: 2 },
        disappearances: vec![Disappearance { video: 3, object: 1, start: 0, end: 3 }],
        render: false,
        ..Default::default()
    };
    let path = synth_dataset(&spec, 2).unwrap().write(dir.path()).unwrap();
    let ds = load_manifest(&path).unwrap();

    let mut runs = Vec::new();
    for kind in PromptKind::ALL {
        runs.push((Protocol::Semi, EvalConfig { prompt_kind: kind, ..Default::default() }));
    }
    for clicks in [1, 3, 5] {
        for p in [Protocol::Offline, Protocol::Online] {
            runs.push((p, EvalConfig { n_click: clicks, ..Default::default() }));
        }
        runs.push((Protocol::Image, EvalConfig { image_clicks: clicks, ..Default::default() }));
    }
    let mut worst = 0.0f64;
    let mut objects = 0;
    let mut failures = 0;
    for (protocol, config) in runs {
        let run = RunSpec {
            protocol,
            config,
            segmenter: "oracle".into(),
            segmenter_config: serde_json::Value::Null,
            load_pixels: false,
        };
        let rep = run_dataset(&ds, &run, &oracle_factory).unwrap();
        failures += rep.failures.len();
        for o in &rep.objects {
            objects += 1;
            for f in &o.score.frames {
                worst = worst.max((1.0 - f.j).abs()).max((1.0 - f.f.unwrap()).abs());
            }
            for r in &o.rounds {
                worst = worst.max((1.0 - r).abs());
            }
        }
        let m = rep.summary.means.unwrap();
        worst = worst.max((1.0 - m.j_mean).abs()).max((1.0 - m.f_mean.unwrap()).abs());
        if let Some(miou) = rep.summary.miou {
            worst = worst.max((1.0 - miou).abs());
        }
    }
    let el = t0.elapsed();
    let ok = worst <= 1e-12 && failures == 0 && within(el, 30);
    report(
        2,
        "identity law",
        ok,
        &format!("{objects} object runs, max |1 - score| = {worst:e}, {failures} failures, {el:.2?}"),
    );
    assert!(ok);
}

#[test]
fn c03_offline_monotonicity() {
    let spec = SynthSpec {
        videos: 1,
        frames: 24,
        height: 64,
        width: 128,
        min_size: 10,
        max_size: 18,
        motion: Motion::Linear { dy: 0, dx: 3 },
        render: false,
        ..Default::default()
    };
    let mut violations = Vec::new();
    let mut rounds_seen = 0;
    for seed in 0..50u64 {
        let ds = synth_dataset(&spec, seed).unwrap();
        let gt = ds.manifest.videos[0].masklet("1").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let oc = OracleConfig {
            dilation_px: rng.gen_range(2..=6),
            translation_px: rng.gen_range(0..=3),
            drop_prob: 0.1,
            decay: rng.gen_range(0.5..0.9),
            seed,
            ..Default::default()
        };
        let cfg = EvalConfig { n_click: 3, n_frame_max: 8, ..Default::default() };
        let mut o = OracleSegmenter::new(gt.clone(), oc).unwrap();
        let trace = run_offline_interactive(&mut o, VideoInput { gt: &gt, frames: None }, &cfg).unwrap();
        let curve = trace.round_scores();
        rounds_seen += curve.len();
        if curve.len() != 8 || curve.windows(2).any(|w| w[1] < w[0]) {
            violations.push((seed, curve));
        }
    }
    let ok = violations.is_empty();
    report(
        3,
        "offline per-round J&F non-decreasing",
        ok,
        &format!("50 runs, {rounds_seen} rounds, {} violations", violations.len()),
    );
    assert!(ok, "{violations:?}");
}

#[test]
fn c04_online_causality() {
    let spec = SynthSpec {
        videos: 1,
        frames: 100,
        height: 64,
        width: 96,
        min_size: 10,
        max_size: 14,
        motion: Motion::Linear { dy: 0, dx: 0 },
        disappearances: vec![Disappearance { video: 0, object: 0, start: 40, end: 48 }],
        render: false,
        ..Default::default()
    };
    let gt = synth_dataset(&spec, 4).unwrap().manifest.videos[0].masklet("1").unwrap();
    let video = VideoInput { gt: &gt, frames: None };
    let oc = OracleConfig {
        dilation_px: 4,
        translation_px: 3,
        drop_every: Some(7),
        decay: 0.8,
        ..Default::default()
    };
    let mut failures = Vec::new();
    let mut pauses = 0;
    let mut traces = Vec::new();
    for budget in 1..=12 {
        let cfg = EvalConfig { n_frame_max: budget, online_threshold: 0.9, ..Default::default() };
        let mut o = OracleSegmenter::new(gt.clone(), oc.clone()).unwrap();
        let trace = run_online_interactive(&mut o, video, &cfg).unwrap();
        pauses += trace.rounds.len() - 1;
        if let Err(e) = trace.check_causality() {
            failures.push(format!("budget {budget}: {e}"));
        }
        traces.push(trace);
    }
    // a larger budget only changes frames from its extra pause on
    for pair in traces.windows(2) {
        let (small, big) = (&pair[0], &pair[1]);
        let split = big.prompted_frames().last().copied().unwrap_or(gt.len());
        let split = if big.rounds.len() > small.rounds.len() { split } else { gt.len() };
        for t in 0..split {
            if small.predictions[t] != big.predictions[t] {
                failures.push(format!("frame {t} differs before the extra pause at {split}"));
                break;
            }
        }
    }
    let ok = failures.is_empty() && pauses > 0;
    report(4, "online causality", ok, &format!("100 frames, 12 budgets, {pauses} pauses, {} failures", failures.len()));
    assert!(ok, "{failures:?}");
}

#[test]
fn c05_annotation_time() {
    let tm = TimeModel::default();
    let off = annotation_time(InteractionMode::Offline, 300, 3, 8, &tm);
    let on = annotation_time(InteractionMode::Online, 300, 3, 8, &tm);
    let ok = off == 284.0 && on == 74.0;
    report(5, "annotation-time model", ok, &format!("offline {off} s, online {on} s"));
    assert!(ok);
}

fn block(h: usize, w: usize, cells: &[(usize, usize)]) -> BinaryMask {
    let mut m = BinaryMask::new(h, w).unwrap();
    for &(r, c) in cells {
        m.set(r, c, true);
    }
    m
}

/// `area` pixels filled row by row inside a 20-wide strip starting at (r0, c0).
fn strip(r0: usize, c0: usize, area: usize) -> Vec<(usize, usize)> {
    (0..area).map(|i| (r0 + i / 20, c0 + i % 20)).collect()
}

#[test]
fn c06_auto_masklet_thresholds() {
    let mut checks = Vec::new();
    for area in [199usize, 200, 201] {
        let m = block(64, 64, &strip(5, 5, area));
        let kept = !remove_small_components(&m, MIN_REGION_AREA).is_empty();
        checks.push((format!("component {area}"), kept == (area >= 200)));
        let pp = !postprocess_mask(&m).is_empty();
        checks.push((format!("postprocess component {area}"), pp == (area >= 200)));

        // a 40x40 square with an interior hole of `area` pixels
        let hole = strip(10, 10, area);
        let mut m = BinaryMask::from_fn(64, 64, |r, c| (5..45).contains(&r) && (5..45).contains(&c)).unwrap();
        for &(r, c) in &hole {
            m.set(r, c, false);
        }
        let filled = fill_small_holes(&m, MIN_REGION_AREA);
        let closed = hole.iter().all(|&(r, c)| filled.get(r, c));
        checks.push((format!("hole {area}"), closed == (area < 200)));
        let pp = postprocess_mask(&m);
        checks.push((format!("postprocess hole {area}"), hole.iter().all(|&(r, c)| pp.get(r, c)) == (area < 200)));
    }
    let g = grid_prompts(256, 256, &GridSpec::default()).unwrap();
    checks.push(("grid 2304".into(), g.generated == 2304));
    let bad: Vec<_> = checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| n.clone()).collect();
    let ok = bad.is_empty();
    report(6, "auto-masklet thresholds", ok, &format!("{} checks, grid points {}", checks.len(), g.generated));
    assert!(ok, "{bad:?}");
}

#[test]
fn c07_memory_bank_model_check() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut violations = 0usize;
    let runs = 10_000;
    for _ in 0..runs {
        let (n, m) = (rng.gen_range(1..=8), rng.gen_range(1..=10));
        let mut bank = MemoryBank::new(n, m).unwrap();
        let mut model = QueueModel::new(n, m);
        for _ in 0..rng.gen_range(1..40) {
            let frame = rng.gen_range(0..50);
            if rng.gen_bool(0.3) {
                bank.push_prompted(entry(frame, true), Some(pointer(frame))).unwrap();
                model.push_prompted(frame);
            } else {
                bank.push_unprompted(entry(frame, false), Some(pointer(frame))).unwrap();
                model.push_unprompted(frame);
            }
            let recent: Vec<usize> = bank.recent().map(|e| e.frame_idx).collect();
            let prompted: Vec<usize> = bank.prompted().map(|e| e.frame_idx).collect();
            let ptrs: Vec<usize> = bank.pointers().map(|p| p.frame_idx).collect();
            let same = recent.iter().eq(model.recent.iter())
                && prompted == model.prompted
                && ptrs.iter().eq(model.pointers.iter())
                && bank.pinned().map(|e| e.frame_idx) == model.first_prompt
                && prompted.first().copied() == model.first_prompt
                && recent.len() <= n
                && prompted.len() <= m
                && ptrs.len() <= n + m;
            if !same {
                violations += 1;
            }
        }
    }
    let el = t0.elapsed();
    let ok = violations == 0 && within(el, 5);
    report(7, "memory bank model check", ok, &format!("{runs} interleavings, {violations} violations, {el:.2?}"));
    assert!(ok);
}

fn rect(h: usize, w: usize) -> BinaryMask {
    BinaryMask::from_fn(128, 128, |r, c| r < h && c < w).unwrap()
}

#[test]
fn c08_data_engine_statistics() {
    // present, then absent, then present again
    let reappearing = ["0101", "1001", "1010", "1011", "1101"];
    let patterns: Vec<Vec<bool>> = (0..16u32).map(|b| (0..4).map(|i| b >> (3 - i) & 1 == 1).collect()).collect();
    let mut bad = Vec::new();
    for p in &patterns {
        let s: String = p.iter().map(|&x| if x { '1' } else { '0' }).collect();
        if disappears_and_reappears(p) != reappearing.contains(&s.as_str()) {
            bad.push(s);
        }
    }
    let rate = disappearance_rate(&patterns);
    let rate_ok = rate == 31.25 && bad.is_empty();

    // (reference rows, cols, mask rows, cols); masks share the top-left corner
    let pairs: [(usize, usize, usize, usize); 20] = [
        (10, 10, 10, 10),
        (20, 20, 20, 15),
        (20, 20, 20, 16),
        (10, 10, 10, 7),
        (30, 30, 30, 29),
        (31, 33, 31, 33),
        (8, 8, 4, 8),
        (32, 32, 32, 32),
        (40, 40, 40, 30),
        (40, 40, 40, 31),
        (50, 60, 50, 45),
        (95, 96, 95, 96),
        (64, 64, 64, 32),
        (60, 50, 60, 40),
        (96, 96, 96, 96),
        (100, 100, 100, 75),
        (100, 100, 100, 76),
        (128, 128, 128, 64),
        (120, 100, 120, 99),
        (128, 128, 0, 0),
    ];
    let mut masks = BTreeMap::new();
    let mut refs = BTreeMap::new();
    for (i, &(rh, rw, mh, mw)) in pairs.iter().enumerate() {
        let key = MaskKey { video: "v".into(), object: "1".into(), frame: i };
        refs.insert(key.clone(), rle_encode(&rect(rh, rw)));
        masks.insert(key, rle_encode(&rect(mh, mw)));
    }
    let rep = alignment_score(&masks, &refs, 0.75).unwrap();
    let b = |s: SizeBucket| &rep.buckets[&s];
    let align_ok = rep.overall.pairs == 20
        && rep.overall.aligned == 11
        && rep.overall.percent == Some(55.0)
        && (b(SizeBucket::Small).pairs, b(SizeBucket::Small).aligned) == (7, 4)
        && (b(SizeBucket::Medium).pairs, b(SizeBucket::Medium).aligned) == (7, 4)
        && (b(SizeBucket::Large).pairs, b(SizeBucket::Large).aligned) == (6, 3)
        && b(SizeBucket::Small).percent == Some(100.0 * 4.0 / 7.0)
        && b(SizeBucket::Large).percent == Some(50.0)
        && rep.skipped_empty_reference == 0;
    let ok = rate_ok && align_ok;
    report(
        8,
        "data-engine statistics",
        ok,
        &format!("disappearance {rate}% on 16 patterns, alignment {:?}% on 20 pairs", rep.overall.percent),
    );
    assert!(ok, "patterns {bad:?}, alignment {rep:?}");
}

fn naive_factory(_: &ObjectTask<'_>) -> pvskit::Result<Box<dyn Segmenter>> {
    let cfg = TrackerConfig { search_radius_px: 16, ..Default::default() };
    Ok(Box::new(NaiveTracker::new(cfg)?))
}

fn naive_run(dir: &Path, spec: &SynthSpec, seed: u64) -> pvskit::report::DatasetReport {
    let path = synth_dataset(spec, seed).unwrap().write(dir).unwrap();
    let ds = load_manifest(&path).unwrap();
    let run = RunSpec {
        protocol: Protocol::Semi,
        config: EvalConfig { prompt_kind: PromptKind::Mask, ..Default::default() },
        segmenter: "naive".into(),
        segmenter_config: serde_json::Value::Null,
        load_pixels: true,
    };
    run_dataset(&ds, &run, &naive_factory).unwrap()
}

#[test]
fn c09_naive_tracker_end_to_end() {
    let t0 = Instant::now();
    let base = SynthSpec {
        videos: 4,
        frames: 16,
        height: 96,
        width: 128,
        min_size: 12,
        max_size: 18,
        shapes: vec![Shape::Rect, Shape::Disk],
        motion: Motion::Linear { dy: 0, dx: 3 },
        ..Default::default()
    };
    let d1 = tempfile::tempdir().unwrap();
    let rep = naive_run(d1.path(), &base, 9);
    let jf = rep.summary.means.as_ref().and_then(|m| m.jf_mean).unwrap_or(0.0);
    let tracked = rep.failures.is_empty() && jf >= 0.99;

    let hidden = SynthSpec {
        videos: 1,
        disappearances: vec![Disappearance { video: 0, object: 0, start: 6, end: 10 }],
        ..base.clone()
    };
    let d2 = tempfile::tempdir().unwrap();
    let rep2 = naive_run(d2.path(), &hidden, 9);
    let obj = &rep2.objects[0];
    let flagged = (6..10).all(|t| obj.occluded_frames.contains(&t));
    let perfect = obj
        .score
        .frames
        .iter()
        .filter(|f| (6..10).contains(&f.idx))
        .all(|f| f.j == 1.0 && f.f == Some(1.0));
    let el = t0.elapsed();
    let ok = tracked && flagged && perfect && within(el, 60);
    report(
        9,
        "naive tracker end to end",
        ok,
        &format!("J&F {jf:.4}, occlusion flagged {flagged}, hidden frames 1.0 {perfect}, {el:.2?}"),
    );
    assert!(ok, "{:?}", obj.occluded_frames);
}

fn cli(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_pvskit")).args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn c10_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let p = |s: &str| dir.path().join(s).to_string_lossy().into_owned();
    let mut same = Vec::new();
    let compare = |a: &str, b: &str| std::fs::read(a).unwrap() == std::fs::read(b).unwrap();

    for d in ["a", "b"] {
        cli(&["synth", "--out", &p(d), "--videos", "3", "--frames", "8", "--dx", "2", "--seed", "11"]);
    }
    same.push(("synth", compare(&p("a/manifest.json"), &p("b/manifest.json"))));
    let manifest = p("a/manifest.json");

    let invocations: Vec<(&str, Vec<&str>)> = vec![
        ("eval semi naive", vec!["eval", "semi", "--manifest", &manifest, "--segmenter", "naive", "--prompt", "mask"]),
        (
            "eval offline oracle",
            vec!["eval", "offline", "--manifest", &manifest, "--dilation", "3", "--drop-prob", "0.3", "--decay", "0.7", "--seed", "5"],
        ),
        (
            "eval online oracle",
            vec!["eval", "online", "--manifest", &manifest, "--translation", "3", "--drop-every", "3", "--seed", "5"],
        ),
        ("eval image oracle", vec!["eval", "image", "--manifest", &manifest, "--dilation", "2", "--clicks", "3"]),
        ("automask oracle", vec!["automask", "--manifest", &manifest, "--video", "v001"]),
    ];
    for (i, (name, args)) in invocations.iter().enumerate() {
        let outs = [p(&format!("r{i}a.json")), p(&format!("r{i}b.json"))];
        for o in &outs {
            let mut a = args.clone();
            a.extend(["--out", o.as_str()]);
            cli(&a);
        }
        same.push((name, compare(&outs[0], &outs[1])));
    }
    let bad: Vec<_> = same.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    let ok = bad.is_empty();
    report(10, "CLI determinism", ok, &format!("{} invocations repeated, {} differ", same.len(), bad.len()));
    assert!(ok, "{bad:?}");
}
