//! k-means over 0/1 vectors and per-bit majority centroids.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits::BitVector;
use crate::cnf::Assignment;
use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterModel {
    /// Effective cluster count, `min(k, |samples|)`.
    pub k: usize,
    /// Cluster id per sample.
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub binarized: Vec<Assignment>,
    /// Total within-cluster squared distance after each Lloyd iteration.
    pub sse_history: Vec<f64>,
}

impl ClusterModel {
    pub fn members<'a>(&'a self, samples: &'a [Assignment], cluster: usize) -> impl Iterator<Item = &'a Assignment> {
        self.labels
            .iter()
            .zip(samples)
            .filter(move |(&l, _)| l == cluster)
            .map(|(_, s)| s)
    }
}

/// Squared Euclidean distance from a 0/1 point to a real centroid, using
/// the centroid's precomputed squared norm.
fn sq_dist(x: &BitVector, c: &[f64], c_norm: f64) -> f64 {
    c_norm + x.ones_iter().map(|j| 1.0 - 2.0 * c[j]).sum::<f64>()
}

fn norm(c: &[f64]) -> f64 {
    c.iter().map(|v| v * v).sum()
}

fn nearest(x: &BitVector, centroids: &[Vec<f64>], norms: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, (c, &n)) in centroids.iter().zip(norms).enumerate() {
        let d = sq_dist(x, c, n);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Seeded farthest-first initialization: a random first sample, then each
/// next centroid is the sample farthest (Hamming) from all chosen so far.
fn init_centroids(samples: &[Assignment], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = samples.len();
    let first = rng.gen_range(0..n);
    let mut chosen = vec![first];
    let mut min_dist: Vec<usize> = samples
        .iter()
        .map(|s| s.hamming(&samples[first]).expect("equal lengths"))
        .collect();
    while chosen.len() < k {
        let mut pick = None;
        let mut best = 0;
        for (i, &d) in min_dist.iter().enumerate() {
            if !chosen.contains(&i) && (pick.is_none() || d > best) {
                pick = Some(i);
                best = d;
            }
        }
        let p = pick.expect("k <= n");
        chosen.push(p);
        for (i, s) in samples.iter().enumerate() {
            min_dist[i] = min_dist[i].min(s.hamming(&samples[p]).expect("equal lengths"));
        }
    }
    chosen
}

fn means(samples: &[Assignment], labels: &[usize], k: usize, dims: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; dims]; k];
    let mut counts = vec![0usize; k];
    for (s, &l) in samples.iter().zip(labels) {
        counts[l] += 1;
        for j in s.ones_iter() {
            sums[l][j] += 1.0;
        }
    }
    for (sum, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            for v in sum.iter_mut() {
                *v /= c as f64;
            }
        }
    }
    sums
}

/// Lloyd's algorithm with squared Euclidean distance on 0/1 coordinates.
///
/// At most [`MAX_ITERATIONS`] rounds, stopping early once labels are
/// stable. A cluster left empty by reassignment takes the sample farthest
/// from its own centroid.
pub fn kmeans(samples: &[Assignment], k: usize, seed: u64) -> Result<ClusterModel> {
    if k < 1 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if samples.is_empty() {
        return Err(Error::InvalidArgument("k-means needs at least one sample".into()));
    }
    let dims = samples[0].len();
    for s in samples {
        Error::check_len(dims, s.len())?;
    }
    let k = k.min(samples.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<Vec<f64>> = init_centroids(samples, k, &mut rng)
        .into_iter()
        .map(|i| samples[i].iter().map(|b| if b { 1.0 } else { 0.0 }).collect())
        .collect();

    let mut labels: Vec<usize> = Vec::new();
    let mut sse_history = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        let norms: Vec<f64> = centroids.iter().map(|c| norm(c)).collect();
        let mut next = Vec::with_capacity(samples.len());
        let mut dist = Vec::with_capacity(samples.len());
        for s in samples {
            let (j, d) = nearest(s, &centroids, &norms);
            next.push(j);
            dist.push(d);
        }
        let mut sizes = vec![0usize; k];
        for &l in &next {
            sizes[l] += 1;
        }
        for empty in 0..k {
            if sizes[empty] > 0 {
                continue;
            }
            let donor = (0..samples.len())
                .filter(|&i| sizes[next[i]] > 1)
                .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
                .expect("more samples than clusters");
            sizes[next[donor]] -= 1;
            next[donor] = empty;
            dist[donor] = 0.0;
            sizes[empty] = 1;
        }
        let stable = next == labels;
        labels = next;
        centroids = means(samples, &labels, k, dims);
        let norms: Vec<f64> = centroids.iter().map(|c| norm(c)).collect();
        let sse = samples
            .iter()
            .zip(&labels)
            .map(|(s, &l)| sq_dist(s, &centroids[l], norms[l]))
            .sum::<f64>();
        sse_history.push(sse);
        if stable {
            break;
        }
    }

    let mut binarized = Vec::with_capacity(k);
    for c in 0..k {
        let members: Vec<Assignment> = labels
            .iter()
            .zip(samples)
            .filter(|(&l, _)| l == c)
            .map(|(_, s)| s.clone())
            .collect();
        binarized.push(binarize_centroid(&members)?);
    }
    Ok(ClusterModel {
        k,
        labels,
        centroids,
        binarized,
        sse_history,
    })
}

/// Per-bit majority vote; an exact tie gives 0.
pub fn binarize_centroid(members: &[Assignment]) -> Result<Assignment> {
    let first = members
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty cluster".into()))?;
    let dims = first.len();
    let mut counts = vec![0usize; dims];
    for m in members {
        Error::check_len(dims, m.len())?;
        for j in m.ones_iter() {
            counts[j] += 1;
        }
    }
    let n = members.len();
    Ok(Assignment::new(BitVector::from_bools(counts.into_iter().map(|c| 2 * c > n))))
}
