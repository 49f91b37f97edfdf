//! Rank correlation between expected and realized scores.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two score sequences aligned by node.
#[derive(Clone, Debug, PartialEq)]
pub struct RankPairSet {
    pub labels: Vec<String>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl RankPairSet {
    /// Pairs positionally; labels are the indices.
    pub fn new(y: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        if y.len() != z.len() {
            return Err(Error::DimensionMismatch {
                expected: y.len(),
                got: z.len(),
            });
        }
        if y.iter().chain(&z).any(|v| v.is_nan()) {
            return Err(Error::InvalidParameter("scores contain NaN".into()));
        }
        let labels = (0..y.len()).map(|i| i.to_string()).collect();
        Ok(RankPairSet { labels, y, z })
    }

    /// Joins two labelled score lists; both must cover exactly the same labels. The order of
    /// `expected` is kept.
    pub fn align(expected: &[(String, f64)], realized: &[(String, f64)]) -> Result<Self> {
        let mut index: HashMap<&str, f64> = HashMap::with_capacity(realized.len());
        for (label, v) in realized {
            if index.insert(label, *v).is_some() {
                return Err(Error::LabelMismatch(format!("label `{label}` repeated in realized scores")));
            }
        }
        if expected.len() != realized.len() {
            return Err(Error::LabelMismatch(format!(
                "{} expected scores against {} realized",
                expected.len(),
                realized.len()
            )));
        }
        let mut labels = Vec::with_capacity(expected.len());
        let mut y = Vec::with_capacity(expected.len());
        let mut z = Vec::with_capacity(expected.len());
        for (label, v) in expected {
            let Some(&w) = index.get(label.as_str()) else {
                return Err(Error::LabelMismatch(format!("label `{label}` missing from realized scores")));
            };
            labels.push(label.clone());
            y.push(*v);
            z.push(w);
        }
        let mut set = RankPairSet::new(y, z)?;
        set.labels = labels;
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Which tie treatment to apply.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TauVariant {
    /// Ties contribute zero; normalised by all `n(n-1)/2` pairs.
    #[default]
    A,
    /// Normalised by the geometric mean of untied pairs in each ranking.
    B,
}

/// Pair counts behind a tau value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairCounts {
    pub pairs: u64,
    /// Concordant minus discordant pairs.
    pub s: i64,
    pub tied_y: u64,
    pub tied_z: u64,
}

impl PairCounts {
    pub fn tau(&self, variant: TauVariant) -> f64 {
        match variant {
            TauVariant::A => self.s as f64 / self.pairs as f64,
            TauVariant::B => {
                let d = ((self.pairs - self.tied_y) as f64 * (self.pairs - self.tied_z) as f64).sqrt();
                if d == 0.0 {
                    f64::NAN
                } else {
                    self.s as f64 / d
                }
            }
        }
    }
}

fn cmp(a: f64, b: f64) -> Ordering {
    a.partial_cmp(&b).expect("NaN rejected on construction")
}

fn check(pairs: &RankPairSet) -> Result<()> {
    if pairs.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "rank correlation needs at least two pairs, got {}",
            pairs.len()
        )));
    }
    Ok(())
}

fn tied_pairs(sorted: &[f64]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Pair counts in `O(n log n)`: sort by `(y, z)`, then count inversions of `z` by merge sort.
pub fn pair_counts(pairs: &RankPairSet) -> Result<PairCounts> {
    check(pairs)?;
    let n = pairs.len() as u64;
    let n0 = n * (n - 1) / 2;
    let mut idx: Vec<usize> = (0..pairs.len()).collect();
    idx.sort_by(|&a, &b| cmp(pairs.y[a], pairs.y[b]).then(cmp(pairs.z[a], pairs.z[b])));

    let mut tied_y = 0u64;
    let mut tied_both = 0u64;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && pairs.y[idx[j]] == pairs.y[idx[i]] {
            j += 1;
        }
        let run = (j - i) as u64;
        tied_y += run * (run - 1) / 2;
        let zs: Vec<f64> = idx[i..j].iter().map(|&k| pairs.z[k]).collect();
        tied_both += tied_pairs(&zs);
        i = j;
    }

    let mut z: Vec<f64> = idx.iter().map(|&k| pairs.z[k]).collect();
    let mut buf = z.clone();
    let swaps = merge_count(&mut z, &mut buf);
    let tied_z = tied_pairs(&z);

    let s = n0 as i64 - tied_y as i64 - tied_z as i64 + tied_both as i64 - 2 * swaps as i64;
    Ok(PairCounts {
        pairs: n0,
        s,
        tied_y,
        tied_z,
    })
}

/// Sorts `v` ascending and returns the number of strictly inverted pairs.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (a, b) = v.split_at_mut(mid);
        let (ba, bb) = buf.split_at_mut(mid);
        merge_count(a, ba) + merge_count(b, bb)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Pair counts straight from the definition, `O(n^2)`.
pub fn pair_counts_naive(pairs: &RankPairSet) -> Result<PairCounts> {
    check(pairs)?;
    let n = pairs.len();
    let mut c = PairCounts {
        pairs: (n * (n - 1) / 2) as u64,
        s: 0,
        tied_y: 0,
        tied_z: 0,
    };
    for i in 0..n {
        for j in i + 1..n {
            let a = cmp(pairs.y[i], pairs.y[j]);
            let b = cmp(pairs.z[i], pairs.z[j]);
            c.tied_y += (a == Ordering::Equal) as u64;
            c.tied_z += (b == Ordering::Equal) as u64;
            c.s += match (a, b) {
                (Ordering::Equal, _) | (_, Ordering::Equal) => 0,
                (x, y) if x == y => 1,
                _ => -1,
            };
        }
    }
    Ok(c)
}

/// Kendall's tau-a.
pub fn kendall_tau(pairs: &RankPairSet) -> Result<f64> {
    Ok(pair_counts(pairs)?.tau(TauVariant::A))
}

pub fn kendall_tau_with(pairs: &RankPairSet, variant: TauVariant) -> Result<f64> {
    Ok(pair_counts(pairs)?.tau(variant))
}

pub fn kendall_tau_naive(pairs: &RankPairSet) -> Result<f64> {
    Ok(pair_counts_naive(pairs)?.tau(TauVariant::A))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub measure: String,
    pub simulation: String,
    pub tau: f64,
    pub n: usize,
    pub omega_ratio: Option<f64>,
    pub kappa: Option<usize>,
    pub seed: Option<u64>,
}

/// Five-number summary plus mean, for box plots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("nothing to summarize".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("values contain NaN".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| cmp(*a, *b));
    Ok(Summary {
        count: v.len(),
        min: v[0],
        q1: quantile_sorted(&v, 0.25),
        median: quantile_sorted(&v, 0.5),
        q3: quantile_sorted(&v, 0.75),
        max: v[v.len() - 1],
        mean: v.iter().sum::<f64>() / v.len() as f64,
    })
}
