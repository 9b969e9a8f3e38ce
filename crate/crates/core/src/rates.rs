//! Merger rates `λ_{b,k→i}`, the consistency recursion and jump-chain
//! transition classes.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::measures::MergerMeasureSet;
use crate::{Error, Result};

/// Number of blocks of each type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlockCounts(pub Vec<usize>);

impl BlockCounts {
    pub fn new(counts: Vec<usize>) -> Self {
        Self(counts)
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![0; d])
    }

    /// The unit vector `e_i`.
    pub fn unit(d: usize, i: usize) -> Self {
        let mut v = vec![0; d];
        v[i] = 1;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// Coordinatewise `self ≤ other`.
    pub fn le(&self, other: &BlockCounts) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn plus_unit(&self, j: usize) -> Self {
        let mut v = self.0.clone();
        v[j] += 1;
        Self(v)
    }

    /// `self - k + e_i`, the state after `k` blocks merge into one of type `i`.
    pub fn after_merge(&self, k: &[usize], i: usize) -> Self {
        let mut v: Vec<usize> = self.0.iter().zip(k).map(|(n, k)| n - k).collect();
        v[i] += 1;
        Self(v)
    }
}

impl fmt::Display for BlockCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl From<Vec<usize>> for BlockCounts {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

/// `λ_{b,k→i}` without argument checks.
pub(crate) fn rate_unchecked(m: &MergerMeasureSet, b: &[usize], k: &[usize], i: usize) -> f64 {
    let d = b.len();
    let size: usize = k.iter().sum();
    let mut rate = 0.0;
    if size == 1 {
        if let Some(j) = k.iter().position(|&kj| kj == 1) {
            if j != i {
                rate += m.rho_change(j, i);
            }
        }
    } else if size == 2 && k[i] == 2 {
        rate += m.rho_pair(i);
    }
    for atom in m.q(i).atoms() {
        let mut prod = atom.weight;
        for j in 0..d {
            let s = atom.point[j];
            // powi(0) == 1 gives 0^0 = 1.
            prod *= s.powi(k[j] as i32) * (1.0 - s).powi((b[j] - k[j]) as i32);
            if prod == 0.0 {
                break;
            }
        }
        rate += prod;
    }
    rate
}

fn check_pair(m: &MergerMeasureSet, b: &BlockCounts, k: &BlockCounts, i: usize) -> Result<()> {
    let d = m.dim();
    m.check_type(i)?;
    if b.dim() != d || k.dim() != d {
        return Err(Error::InvalidArgument(format!("block counts must have dimension {d}")));
    }
    if !k.le(b) {
        return Err(Error::InvalidArgument(format!("k = {k} is not below b = {b}")));
    }
    if k.is_zero() || (k.total() == 1 && k.0[i] == 1) {
        return Err(Error::InvalidArgument(format!("k = {k} is not a merger into type {}", i + 1)));
    }
    Ok(())
}

/// Rate at which a given collection of `k` of the `b` blocks merges into a
/// single block of type `i`.
pub fn merger_rate(m: &MergerMeasureSet, b: &BlockCounts, k: &BlockCounts, i: usize) -> Result<f64> {
    check_pair(m, b, k, i)?;
    Ok(rate_unchecked(m, &b.0, &k.0, i))
}

/// `λ_{b,k→i} − λ_{b+e_j,k→i} − λ_{b+e_j,k+e_j→i}`.
pub fn recursion_residual(m: &MergerMeasureSet, b: &BlockCounts, k: &BlockCounts, i: usize, j: usize) -> Result<f64> {
    check_pair(m, b, k, i)?;
    m.check_type(j)?;
    let b1 = b.plus_unit(j);
    let k1 = k.plus_unit(j);
    Ok(rate_unchecked(m, &b.0, &k.0, i) - rate_unchecked(m, &b1.0, &k.0, i) - rate_unchecked(m, &b1.0, &k1.0, i))
}

/// One class of equivalent transitions: any `k` of the `n` blocks into type `target`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transition {
    pub k: BlockCounts,
    pub target: usize,
    /// `Π_j C(n_j, k_j)`.
    pub multiplicity: u128,
    pub rate: f64,
    pub class_rate: f64,
}

impl Transition {
    pub fn is_colour_change(&self) -> bool {
        self.k.total() == 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionTable {
    pub n: BlockCounts,
    pub entries: Vec<Transition>,
    pub total_rate: f64,
}

pub const DEFAULT_CAP: u128 = 1_000_000;

/// Number of `(k, i)` pairs the enumeration at `n` visits.
pub fn table_size(n: &BlockCounts) -> u128 {
    n.0.iter().fold(n.dim() as u128, |acc, &c| acc.saturating_mul(c as u128 + 1))
}

fn binomial(n: usize, k: usize) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc.checked_mul((n - j) as u128)? / (j as u128 + 1);
    }
    Some(acc)
}

pub(crate) fn binomial_f64(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc.round()
}

/// Visits every `k ≤ n` in odometer order.
pub(crate) fn for_each_sub<F: FnMut(&[usize])>(n: &[usize], mut f: F) {
    let d = n.len();
    let mut k = vec![0usize; d];
    loop {
        f(&k);
        let mut pos = 0;
        loop {
            if pos == d {
                return;
            }
            if k[pos] < n[pos] {
                k[pos] += 1;
                break;
            }
            k[pos] = 0;
            pos += 1;
        }
    }
}

/// Enumerates all merger and colour-change classes with positive rate at `n`.
pub fn transition_table(m: &MergerMeasureSet, n: &BlockCounts, cap: u128) -> Result<TransitionTable> {
    let d = m.dim();
    if n.dim() != d {
        return Err(Error::InvalidArgument(format!("block counts must have dimension {d}")));
    }
    if n.total() == 0 {
        return Err(Error::InvalidArgument("at least one block is required".into()));
    }
    let needed = table_size(n);
    if needed > cap {
        return Err(Error::CapExceeded { needed, cap });
    }
    let mut entries = Vec::new();
    let mut overflow = false;
    for_each_sub(&n.0, |k| {
        let size: usize = k.iter().sum();
        if size == 0 {
            return;
        }
        for i in 0..d {
            if size == 1 && k[i] == 1 {
                continue;
            }
            let rate = rate_unchecked(m, &n.0, k, i);
            if rate <= 0.0 {
                continue;
            }
            let mult = k
                .iter()
                .zip(&n.0)
                .try_fold(1u128, |acc, (&kj, &nj)| binomial(nj, kj).and_then(|c| acc.checked_mul(c)));
            let Some(multiplicity) = mult else {
                overflow = true;
                return;
            };
            entries.push(Transition {
                k: BlockCounts(k.to_vec()),
                target: i,
                multiplicity,
                rate,
                class_rate: multiplicity as f64 * rate,
            });
        }
    });
    if overflow {
        return Err(Error::InvalidArgument("transition multiplicity overflows u128".into()));
    }
    let total_rate = entries.iter().map(|e| e.class_rate).sum();
    Ok(TransitionTable { n: n.clone(), entries, total_rate })
}

/// Total outflow rate at `n` without materializing the table.
pub(crate) fn total_outflow(m: &MergerMeasureSet, n: &[usize]) -> f64 {
    let d = n.len();
    let mut total = 0.0;
    for_each_sub(n, |k| {
        let size: usize = k.iter().sum();
        if size == 0 {
            return;
        }
        let mult: f64 = k.iter().zip(n).map(|(&kj, &nj)| binomial_f64(nj, kj)).product();
        for i in 0..d {
            if size == 1 && k[i] == 1 {
                continue;
            }
            total += mult * rate_unchecked(m, n, k, i);
        }
    });
    total
}
