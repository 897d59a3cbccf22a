#![allow(dead_code)]

use std::collections::VecDeque;

use pvskit::mask::{BinaryMask, RleMask};
use pvskit::memory::{MemoryEntry, ObjectPointer};
use rand::Rng;

/// Rectangles, disks and salt noise at a random density.
pub fn random_mask<R: Rng>(rng: &mut R, h: usize, w: usize) -> BinaryMask {
    let mut m = BinaryMask::new(h, w).unwrap();
    match rng.gen_range(0..5) {
        0 => {}
        1 => {
            let p: f64 = rng.gen();
            for r in 0..h {
                for c in 0..w {
                    m.set(r, c, rng.gen::<f64>() < p);
                }
            }
        }
        _ => {
            for _ in 0..rng.gen_range(1..5) {
                let (r0, c0) = (rng.gen_range(0..h), rng.gen_range(0..w));
                let (r1, c1) = (rng.gen_range(r0..=h), rng.gen_range(c0..=w));
                let disk = rng.gen_bool(0.5);
                let (cy, cx) = ((r0 + r1) as f64 / 2.0, (c0 + c1) as f64 / 2.0);
                let rad = ((r1 - r0).min(c1 - c0) as f64) / 2.0;
                for r in r0..r1 {
                    for c in c0..c1 {
                        let inside = !disk || {
                            let (dy, dx) = (r as f64 + 0.5 - cy, c as f64 + 0.5 - cx);
                            dy * dy + dx * dx <= rad * rad
                        };
                        if inside {
                            m.set(r, c, true);
                        }
                    }
                }
            }
            for _ in 0..rng.gen_range(0..6) {
                let (r, c) = (rng.gen_range(0..h), rng.gen_range(0..w));
                let v = m.get(r, c);
                m.set(r, c, !v);
            }
        }
    }
    m
}

/// Squared distance to the nearest background pixel, the ring outside the
/// image included. Scans square rings of growing Chebyshev radius around
/// each pixel; a ring at radius `r` cannot beat a best of `r * r` or less.
pub fn brute_squared_dt(m: &BinaryMask) -> Vec<f64> {
    let (h, w) = m.dims();
    let background = |r: i64, c: i64| r < 0 || c < 0 || r >= h as i64 || c >= w as i64 || !m.get(r as usize, c as usize);
    let mut out = vec![0.0; h * w];
    for r in 0..h as i64 {
        for c in 0..w as i64 {
            if background(r, c) {
                continue;
            }
            let mut best = i64::MAX;
            let mut k = 1i64;
            while best > k * k {
                for dr in -k..=k {
                    for dc in -k..=k {
                        if dr.abs() != k && dc.abs() != k {
                            continue;
                        }
                        if background(r + dr, c + dc) {
                            best = best.min(dr * dr + dc * dc);
                        }
                    }
                }
                k += 1;
            }
            out[(r * w as i64 + c) as usize] = best as f64;
        }
    }
    out
}

pub fn brute_iou(a: &BinaryMask, b: &BinaryMask) -> f64 {
    let inter = a.bits().iter().zip(b.bits()).filter(|(x, y)| **x && **y).count();
    let union = a.bits().iter().zip(b.bits()).filter(|(x, y)| **x || **y).count();
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn brute_boundary(m: &BinaryMask) -> Vec<(usize, usize)> {
    let (h, w) = m.dims();
    let mut out = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if !m.get(r, c) {
                continue;
            }
            let edge = r == 0
                || c == 0
                || r == h - 1
                || c == w - 1
                || !m.get(r - 1, c)
                || !m.get(r + 1, c)
                || !m.get(r, c - 1)
                || !m.get(r, c + 1);
            if edge {
                out.push((r, c));
            }
        }
    }
    out
}

pub fn brute_boundary_f(pred: &BinaryMask, gt: &BinaryMask, tol: f64) -> f64 {
    let pb = brute_boundary(pred);
    let gb = brute_boundary(gt);
    match (pb.is_empty(), gb.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let within = |from: &[(usize, usize)], to: &[(usize, usize)]| {
        let hit = from
            .iter()
            .filter(|&&(r, c)| {
                to.iter().any(|&(tr, tc)| {
                    let d = (r as f64 - tr as f64).powi(2) + (c as f64 - tc as f64).powi(2);
                    d <= tol * tol
                })
            })
            .count();
        hit as f64 / from.len() as f64
    };
    let p = within(&pb, &gb);
    let r = within(&gb, &pb);
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn entry(frame: usize, prompted: bool) -> MemoryEntry {
    MemoryEntry {
        frame_idx: frame,
        mask: RleMask::empty(2, 2).unwrap(),
        feature: None,
        occluded: false,
        is_prompted: prompted,
        prompts: Vec::new(),
    }
}

pub fn pointer(frame: usize) -> ObjectPointer {
    ObjectPointer {
        frame_idx: frame,
        vector: vec![frame as f32; 4],
    }
}

/// Plain-queue model of the memory bank, tracking frame indices only.
#[derive(Debug, Default)]
pub struct QueueModel {
    pub n: usize,
    pub m: usize,
    pub recent: VecDeque<usize>,
    pub prompted: Vec<usize>,
    pub pointers: VecDeque<usize>,
    pub first_prompt: Option<usize>,
}

impl QueueModel {
    pub fn new(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            ..Default::default()
        }
    }

    fn pointer(&mut self, f: usize) {
        self.pointers.push_back(f);
        if self.pointers.len() > self.n + self.m {
            self.pointers.pop_front();
        }
    }

    pub fn push_unprompted(&mut self, f: usize) {
        self.pointer(f);
        self.recent.push_back(f);
        if self.recent.len() > self.n {
            self.recent.pop_front();
        }
    }

    pub fn push_prompted(&mut self, f: usize) {
        self.pointer(f);
        self.first_prompt.get_or_insert(f);
        if self.prompted.contains(&f) {
            return;
        }
        self.prompted.push(f);
        if self.prompted.len() > self.m {
            // the first prompt stays; the oldest of the others goes
            self.prompted.remove(1);
        }
    }
}
