//! Per-object streaming memory: a FIFO of recent unprompted frames, a FIFO
//! of prompted frames whose first entry is pinned, and a FIFO of object
//! pointers.

use std::collections::VecDeque;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::RleMask;
use crate::prompt::Prompt;

pub const DEFAULT_RECENT_CAPACITY: usize = 6;
pub const DEFAULT_PROMPTED_CAPACITY: usize = 8;

/// Feature vectors travel as base64 of little-endian `f32`s.
mod feature_b64 {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn encode(v: &[f32]) -> String {
        let bytes: Vec<u8> = v.iter().flat_map(|x| x.to_le_bytes()).collect();
        B64.encode(bytes)
    }

    pub fn decode(s: &str) -> std::result::Result<Vec<f32>, String> {
        let bytes = B64.decode(s).map_err(|e| e.to_string())?;
        if bytes.len() % 4 != 0 {
            return Err(format!("{} bytes is not a whole number of f32s", bytes.len()));
        }
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }

    pub fn serialize<S: Serializer>(v: &[f32], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f32>, D::Error> {
        let s = String::deserialize(d)?;
        decode(&s).map_err(serde::de::Error::custom)
    }

    pub mod opt {
        use super::*;

        pub fn serialize<S: Serializer>(v: &Option<Vec<f32>>, s: S) -> std::result::Result<S::Ok, S::Error> {
            match v {
                Some(v) => s.serialize_some(&encode(v)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<f32>>, D::Error> {
            Option::<String>::deserialize(d)?
                .map(|s| decode(&s).map_err(serde::de::Error::custom))
                .transpose()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemoryEntry {
    pub frame_idx: usize,
    pub mask: RleMask,
    /// Segmenter-defined payload; opaque to the bank.
    #[serde(with = "feature_b64::opt", default)]
    pub feature: Option<Vec<f32>>,
    pub occluded: bool,
    pub is_prompted: bool,
    /// The prompts that produced a prompted entry.
    #[serde(default)]
    pub prompts: Vec<Prompt>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectPointer {
    pub frame_idx: usize,
    #[serde(with = "feature_b64")]
    pub vector: Vec<f32>,
}

/// A recent memory together with its distance in frames from the query frame.
#[derive(Clone, Copy, Debug)]
pub struct TemporalMemory<'a> {
    pub temporal_position: i64,
    pub entry: &'a MemoryEntry,
}

/// What one frame's prediction may condition on.
#[derive(Clone, Debug, Default)]
pub struct ConditioningSet<'a> {
    /// Ordered by frame index; no temporal position.
    pub prompted: Vec<&'a MemoryEntry>,
    /// Newest first.
    pub recent: Vec<TemporalMemory<'a>>,
    pub pointers: Vec<&'a ObjectPointer>,
}

impl ConditioningSet<'_> {
    pub fn is_empty(&self) -> bool {
        self.prompted.is_empty() && self.recent.is_empty() && self.pointers.is_empty()
    }

    /// All entries, prompted and recent.
    pub fn entries(&self) -> impl Iterator<Item = &MemoryEntry> {
        self.prompted.iter().copied().chain(self.recent.iter().map(|t| t.entry))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MemoryBank {
    recent_capacity: usize,
    prompted_capacity: usize,
    pointer_dim: Option<usize>,
    recent: VecDeque<MemoryEntry>,
    /// Front entry is pinned.
    prompted: VecDeque<MemoryEntry>,
    pointers: VecDeque<ObjectPointer>,
}

impl Default for MemoryBank {
    fn default() -> Self {
        Self::new(DEFAULT_RECENT_CAPACITY, DEFAULT_PROMPTED_CAPACITY).expect("valid defaults")
    }
}

impl MemoryBank {
    pub fn new(recent_capacity: usize, prompted_capacity: usize) -> Result<Self> {
        if recent_capacity == 0 || prompted_capacity == 0 {
            return Err(Error::MemoryBank(format!(
                "capacities must be >= 1, got N={recent_capacity} M={prompted_capacity}"
            )));
        }
        Ok(Self {
            recent_capacity,
            prompted_capacity,
            pointer_dim: None,
            recent: VecDeque::new(),
            prompted: VecDeque::new(),
            pointers: VecDeque::new(),
        })
    }

    pub fn recent_capacity(&self) -> usize {
        self.recent_capacity
    }

    pub fn prompted_capacity(&self) -> usize {
        self.prompted_capacity
    }

    pub fn pointer_capacity(&self) -> usize {
        self.recent_capacity.saturating_add(self.prompted_capacity)
    }

    pub fn recent(&self) -> impl Iterator<Item = &MemoryEntry> {
        self.recent.iter()
    }

    pub fn prompted(&self) -> impl Iterator<Item = &MemoryEntry> {
        self.prompted.iter()
    }

    pub fn pointers(&self) -> impl Iterator<Item = &ObjectPointer> {
        self.pointers.iter()
    }

    /// The earliest prompted entry, which is never evicted.
    pub fn pinned(&self) -> Option<&MemoryEntry> {
        self.prompted.front()
    }

    pub fn is_empty(&self) -> bool {
        self.recent.is_empty() && self.prompted.is_empty() && self.pointers.is_empty()
    }

    pub fn clear(&mut self) {
        self.recent.clear();
        self.prompted.clear();
        self.pointers.clear();
        self.pointer_dim = None;
    }

    fn push_pointer(&mut self, pointer: Option<ObjectPointer>) -> Result<()> {
        let Some(pointer) = pointer else {
            return Ok(());
        };
        match self.pointer_dim {
            Some(d) if d != pointer.vector.len() => {
                return Err(Error::MemoryBank(format!(
                    "object pointer has {} dims, bank holds {d}",
                    pointer.vector.len()
                )))
            }
            _ => self.pointer_dim = Some(pointer.vector.len()),
        }
        self.pointers.push_back(pointer);
        while self.pointers.len() > self.pointer_capacity() {
            self.pointers.pop_front();
        }
        Ok(())
    }

    pub fn push_unprompted(&mut self, entry: MemoryEntry, pointer: Option<ObjectPointer>) -> Result<()> {
        if entry.is_prompted {
            return Err(Error::MemoryBank("prompted entry pushed as unprompted".into()));
        }
        self.push_pointer(pointer)?;
        self.recent.push_back(entry);
        while self.recent.len() > self.recent_capacity {
            self.recent.pop_front();
        }
        Ok(())
    }

    /// Appends a prompted memory, evicting the oldest non-pinned one when
    /// full. A second push for the same frame replaces the earlier entry.
    pub fn push_prompted(&mut self, entry: MemoryEntry, pointer: Option<ObjectPointer>) -> Result<()> {
        if !entry.is_prompted {
            return Err(Error::MemoryBank("unprompted entry pushed as prompted".into()));
        }
        self.push_pointer(pointer)?;
        if let Some(slot) = self.prompted.iter_mut().find(|e| e.frame_idx == entry.frame_idx) {
            *slot = entry;
            return Ok(());
        }
        self.prompted.push_back(entry);
        if self.prompted.len() > self.prompted_capacity {
            self.prompted.remove(1);
        }
        Ok(())
    }

    pub fn context_for(&self, current_frame: usize) -> ConditioningSet<'_> {
        let mut prompted: Vec<_> = self.prompted.iter().collect();
        prompted.sort_by_key(|e| e.frame_idx);
        let recent = self
            .recent
            .iter()
            .rev()
            .map(|entry| TemporalMemory {
                temporal_position: current_frame as i64 - entry.frame_idx as i64,
                entry,
            })
            .collect();
        ConditioningSet {
            prompted,
            recent,
            pointers: self.pointers.iter().collect(),
        }
    }

    pub fn snapshot(&self) -> BankSnapshot {
        BankSnapshot {
            format: SNAPSHOT_FORMAT.to_string(),
            recent_capacity: self.recent_capacity,
            prompted_capacity: self.prompted_capacity,
            pointer_dim: self.pointer_dim,
            pinned_frame: self.pinned().map(|e| e.frame_idx),
            recent: self.recent.iter().cloned().collect(),
            prompted: self.prompted.iter().cloned().collect(),
            pointers: self.pointers.iter().cloned().collect(),
        }
    }

    pub fn restore(snapshot: BankSnapshot) -> Result<Self> {
        let bad = |m: String| Err(Error::MemoryBank(format!("snapshot: {m}")));
        if snapshot.format != SNAPSHOT_FORMAT {
            return bad(format!("unknown format `{}`", snapshot.format));
        }
        let mut bank = MemoryBank::new(snapshot.recent_capacity, snapshot.prompted_capacity)?;
        if snapshot.recent.len() > bank.recent_capacity
            || snapshot.prompted.len() > bank.prompted_capacity
            || snapshot.pointers.len() > bank.pointer_capacity()
        {
            return bad("queue exceeds its capacity".into());
        }
        if snapshot.recent.iter().any(|e| e.is_prompted) || snapshot.prompted.iter().any(|e| !e.is_prompted) {
            return bad("entry flag does not match its queue".into());
        }
        if snapshot.pinned_frame != snapshot.prompted.first().map(|e| e.frame_idx) {
            return bad("pinned frame is not the first prompted entry".into());
        }
        match (snapshot.pointer_dim, snapshot.pointers.is_empty()) {
            (None, false) => return bad("pointers present without a pointer dimension".into()),
            (Some(d), _) if snapshot.pointers.iter().any(|p| p.vector.len() != d) => {
                return bad("pointer dimension mismatch".into())
            }
            _ => {}
        }
        bank.pointer_dim = snapshot.pointer_dim;
        bank.recent = snapshot.recent.into();
        bank.prompted = snapshot.prompted.into();
        bank.pointers = snapshot.pointers.into();
        Ok(bank)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.snapshot())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::restore(serde_json::from_str(s)?)
    }
}

pub const SNAPSHOT_FORMAT: &str = "pvs-bank/1";

/// Serializable bank state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankSnapshot {
    pub format: String,
    pub recent_capacity: usize,
    pub prompted_capacity: usize,
    pub pointer_dim: Option<usize>,
    pub pinned_frame: Option<usize>,
    pub recent: Vec<MemoryEntry>,
    pub prompted: Vec<MemoryEntry>,
    pub pointers: Vec<ObjectPointer>,
}
