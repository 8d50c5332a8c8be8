//! Suite diversity: normalized compression distance and per-test Shannon
//! entropy.

use std::io::Write;

use flate2::{Compression, GzBuilder};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cnf::Assignment;
use crate::error::{Error, Result};

pub const COMPRESSION_LEVEL: u32 = 6;
pub const DEFAULT_NCD_CAP: usize = 500;

/// Length in bytes of the gzip stream for `data`: DEFLATE level 6 inside
/// a header with no name, no comment and mtime 0.
pub fn compressed_len(data: &[u8]) -> usize {
    let mut enc = GzBuilder::new()
        .mtime(0)
        .operating_system(255)
        .write(Vec::with_capacity(data.len() / 4 + 32), Compression::new(COMPRESSION_LEVEL));
    enc.write_all(data).expect("in-memory write");
    enc.finish().expect("in-memory write").len()
}

/// One row per test: ASCII `0`/`1`, variable 1 leftmost, then `\n`.
fn serialize_row(a: &Assignment) -> Vec<u8> {
    let mut row = Vec::with_capacity(a.len() + 1);
    a.write_ascii(&mut row);
    row.push(b'\n');
    row
}

fn ncd_rows(rows: &[Vec<u8>]) -> f64 {
    let whole: Vec<u8> = rows.concat();
    let c_all = compressed_len(&whole) as f64;
    let c_min = rows.iter().map(|r| compressed_len(r)).min().expect("non-empty") as f64;
    let mut buf = Vec::with_capacity(whole.len());
    let mut c_max_without = 0usize;
    for skip in 0..rows.len() {
        buf.clear();
        for (i, r) in rows.iter().enumerate() {
            if i != skip {
                buf.extend_from_slice(r);
            }
        }
        c_max_without = c_max_without.max(compressed_len(&buf));
    }
    (c_all - c_min) / c_max_without as f64
}

/// `(C(X) - min_x C(x)) / max_x C(X \ {x})` over the rows in order.
pub fn ncd(tests: &[Assignment]) -> Result<f64> {
    if tests.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "NCD needs at least 2 tests, got {}",
            tests.len()
        )));
    }
    let rows: Vec<Vec<u8>> = tests.iter().map(serialize_row).collect();
    Ok(ncd_rows(&rows))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NcdValue {
    pub value: f64,
    pub rows_used: usize,
    pub subsampled: bool,
}

/// NCD on at most `cap` rows: larger inputs are reduced to a seeded uniform
/// subsample that keeps the original relative order.
pub fn ncd_capped(tests: &[Assignment], cap: usize, seed: u64) -> Result<NcdValue> {
    if cap < 2 {
        return Err(Error::InvalidArgument("NCD subsample cap must be at least 2".into()));
    }
    if tests.len() <= cap {
        return Ok(NcdValue {
            value: ncd(tests)?,
            rows_used: tests.len(),
            subsampled: false,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, tests.len(), cap).into_vec();
    idx.sort_unstable();
    let picked: Vec<Assignment> = idx.into_iter().map(|i| tests[i].clone()).collect();
    Ok(NcdValue {
        value: ncd(&picked)?,
        rows_used: cap,
        subsampled: true,
    })
}

/// Binary entropy of the fraction of 1 bits.
pub fn entropy(a: &Assignment) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let p = a.count_ones() as f64 / a.len() as f64;
    binary_entropy(p)
}

pub fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.log2() };
    term(p) + term(1.0 - p)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramBucket {
    pub bucket_low: f64,
    pub bucket_high: f64,
    pub percent: f64,
}

/// Share of tests per equal-width entropy bucket over `[0, 1]`; the last
/// bucket is closed on the right.
pub fn entropy_histogram(suite: &[Assignment], bins: usize) -> Result<Vec<HistogramBucket>> {
    if suite.is_empty() {
        return Err(Error::InvalidArgument("entropy histogram of an empty suite".into()));
    }
    if bins == 0 {
        return Err(Error::InvalidArgument("need at least one bin".into()));
    }
    let mut counts = vec![0usize; bins];
    for a in suite {
        let h = entropy(a).clamp(0.0, 1.0);
        let b = ((h * bins as f64) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let n = suite.len() as f64;
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| HistogramBucket {
            bucket_low: i as f64 / bins as f64,
            bucket_high: (i + 1) as f64 / bins as f64,
            percent: 100.0 * c as f64 / n,
        })
        .collect())
}
