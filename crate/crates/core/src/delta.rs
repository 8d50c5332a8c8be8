//! XOR deltas between valid samples and the frequency-weighted pool drawn
//! from during mutation.

use std::collections::HashMap;
use std::ops::Deref;

use rand::Rng;

use crate::bits::BitVector;
use crate::cnf::Assignment;
use crate::error::{Error, Result};

/// Positions where two assignments disagree.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Delta(BitVector);

impl Delta {
    pub fn new(bits: BitVector) -> Self {
        Delta(bits)
    }

    pub fn bits(&self) -> &BitVector {
        &self.0
    }
}

impl Deref for Delta {
    type Target = BitVector;

    fn deref(&self) -> &BitVector {
        &self.0
    }
}

impl std::str::FromStr for Delta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse().map(Delta)
    }
}

impl std::fmt::Display for Delta {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

impl From<BitVector> for Delta {
    fn from(bits: BitVector) -> Self {
        Delta(bits)
    }
}

pub fn xor(a: &Assignment, b: &Assignment) -> Result<Delta> {
    a.bits().xor(b.bits()).map(Delta)
}

fn pair_counts(samples: &[Assignment]) -> Result<Vec<(Delta, u64)>> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    let n = samples[0].len();
    for s in samples {
        Error::check_len(n, s.len())?;
    }
    let mut counts: HashMap<BitVector, u64> = HashMap::new();
    for (i, a) in samples.iter().enumerate() {
        for b in &samples[i + 1..] {
            let d = a.bits().xor(b.bits())?;
            if !d.is_zero() {
                *counts.entry(d).or_insert(0) += 1;
            }
        }
    }
    // most frequent first; ties by bit pattern so order never depends on hashing
    let mut entries: Vec<(Delta, u64)> = counts.into_iter().map(|(d, w)| (Delta(d), w)).collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(entries)
}

/// Distinct nonzero deltas over all unordered sample pairs, weighted by how
/// many pairs produced them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaPool {
    entries: Vec<(Delta, u64)>,
    cumulative: Vec<u64>,
    total_weight: u64,
}

impl DeltaPool {
    pub fn build(samples: &[Assignment]) -> Result<DeltaPool> {
        Ok(DeltaPool::from_entries(pair_counts(samples)?))
    }

    /// A pool from explicit weights; entries are re-sorted by weight.
    pub fn from_weighted(mut entries: Vec<(Delta, u64)>) -> Result<DeltaPool> {
        if let Some((first, _)) = entries.first() {
            let n = first.len();
            for (d, w) in &entries {
                Error::check_len(n, d.len())?;
                if *w == 0 || d.is_zero() {
                    return Err(Error::InvalidArgument(
                        "pool entries need a nonzero delta and weight >= 1".into(),
                    ));
                }
            }
        }
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Ok(DeltaPool::from_entries(entries))
    }

    fn from_entries(entries: Vec<(Delta, u64)>) -> DeltaPool {
        let mut total = 0;
        let cumulative = entries
            .iter()
            .map(|(_, w)| {
                total += w;
                total
            })
            .collect();
        DeltaPool {
            entries,
            cumulative,
            total_weight: total,
        }
    }

    /// Entries sorted by descending weight.
    pub fn entries(&self) -> &[(Delta, u64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    pub fn weight_of(&self, d: &Delta) -> u64 {
        self.entries.iter().find(|(e, _)| e == d).map_or(0, |(_, w)| *w)
    }

    /// Draws an entry with probability proportional to its weight.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<&Delta> {
        if self.total_weight == 0 {
            return Err(Error::EmptyPool);
        }
        let r = rng.gen_range(0..self.total_weight);
        let idx = self.cumulative.partition_point(|&c| c <= r);
        Ok(&self.entries[idx].0)
    }
}

/// Multiplicity of each distinct delta pattern across all sample pairs,
/// most repeated first.
pub fn identical_delta_count(samples: &[Assignment]) -> Result<Vec<(Delta, u64)>> {
    pair_counts(samples)
}
