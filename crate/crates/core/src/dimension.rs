//! Dimension bounds for members of symmetric random closed sets, member-path
//! sampling, and an LZ78 compression rate used as a computable stand-in for
//! the Kolmogorov-complexity rate of a sequence.

use std::collections::HashMap;

use rand::Rng;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::intersection::degree_of_intersectability;
use crate::measures::RandomStream;

/// Minimum sequence length accepted by [`estimate_dim`].
pub const MIN_ESTIMATE_LENGTH: usize = 1024;

/// `-log2(1 - p)`: every member of a `mu*_p`-random closed set has at least
/// this dimension.
pub fn dim_lower_bound(p: f64) -> Result<f64> {
    if !(p.is_finite() && (0.0..=0.5).contains(&p)) {
        return Err(domain(format!("p={p} must lie in [0, 1/2]")));
    }
    Ok(-(-p).ln_1p() / std::f64::consts::LN_2)
}

/// `1 - 2^(-gamma)`, inverse of [`dim_lower_bound`].
pub fn gamma_to_p(gamma: f64) -> Result<f64> {
    if !(gamma.is_finite() && (0.0..=1.0).contains(&gamma)) {
        return Err(domain(format!("gamma={gamma} must lie in [0, 1]")));
    }
    Ok(-(-gamma * std::f64::consts::LN_2).exp_m1())
}

/// `1/(n+1)`: lower bound on the dimension of members of a random closed set
/// whose family has degree of intersectability `n`.
pub fn member_dim_bound(degree: u64) -> Result<f64> {
    if degree == 0 {
        return Err(domain("degree must be at least 1"));
    }
    Ok(1.0 / (degree as f64 + 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DimBoundReport {
    pub p: f64,
    pub gamma: f64,
    pub degree: u64,
    pub member_bound: f64,
}

impl DimBoundReport {
    pub fn for_p(p: f64) -> Result<Self> {
        let gamma = dim_lower_bound(p)?;
        let degree = degree_of_intersectability(p)?.degree;
        Ok(Self {
            p,
            gamma,
            degree,
            member_bound: member_dim_bound(degree)?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MinDegree {
    /// `floor(1/s)`.
    pub degree: u64,
    /// Set when `s = 1/n`; then families of degree `floor(1/s) - 1` are not
    /// ruled out.
    pub exceptional: bool,
}

/// Smallest degree of intersectability of a family that can contain a point
/// of dimension `s`.
pub fn min_degree_for_dim(s: f64) -> Result<MinDegree> {
    if !(s.is_finite() && s > 0.0 && s <= 1.0) {
        return Err(domain(format!("s={s} must lie in (0, 1]")));
    }
    let inv = 1.0 / s;
    let nearest = inv.round();
    // 1/s within rounding of an integer counts as the exceptional case
    let exceptional = (inv - nearest).abs() <= 1e-9 * inv.max(1.0);
    let degree = if exceptional { nearest } else { inv.floor() } as u64;
    Ok(MinDegree { degree, exceptional })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PathPolicy {
    /// Fair coin at nodes with two children.
    Uniform,
    /// Always the left child when it exists.
    Leftmost,
}

/// Walk `length` steps down a pruned `mu_p` tree, drawing each node's
/// branching (both with probability `1 - 2p`, left only `p`, right only `p`)
/// as the walk reaches it. Returns the path as bits 0/1.
pub fn sample_member_path(p: f64, length: usize, policy: PathPolicy, stream: RandomStream) -> Result<Vec<u8>> {
    if !(p.is_finite() && (0.0..0.5).contains(&p)) {
        return Err(domain(format!("p={p} must lie in [0, 1/2)")));
    }
    if length == 0 {
        return Err(domain("length must be at least 1"));
    }
    let mut rng = stream.rng();
    let path = (0..length)
        .map(|_| {
            let u: f64 = rng.random();
            if u < p {
                0
            } else if u < 2.0 * p {
                1
            } else {
                match policy {
                    PathPolicy::Leftmost => 0,
                    PathPolicy::Uniform => u8::from(rng.random::<bool>()),
                }
            }
        })
        .collect();
    Ok(path)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DimEstimate {
    pub sequence_length: usize,
    pub phrases: usize,
    pub code_length: u64,
    pub rate: f64,
    /// `rate <= 1 + overhead` for every binary input of this length.
    pub overhead: f64,
}

fn ceil_log2(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        u64::from(64 - (n - 1).leading_zeros())
    }
}

/// Bits spent on `c` phrases: `sum_{j=1..c} (ceil(log2 j) + 1)`.
fn lz78_code_length(c: u64) -> u64 {
    (1..=c).map(|j| ceil_log2(j) + 1).sum()
}

/// Largest number of phrases an LZ78 parse of `n` bits can have: distinct
/// phrases are shortest when they exhaust all strings of length 1, 2, ...
fn max_phrases(n: u64) -> u64 {
    let mut remaining = n;
    let mut count = 0;
    let mut len = 1u64;
    loop {
        let available = 1u64 << len.min(62);
        let fit = remaining / len;
        if fit <= available {
            // plus one trailing phrase that may repeat an earlier one
            return count + fit + u64::from(!remaining.is_multiple_of(len));
        }
        count += available;
        remaining -= available * len;
        len += 1;
    }
}

/// LZ78 parse of a bit string: each phrase is the longest previously seen
/// phrase plus one bit, costing `ceil(log2 j) + 1` bits for the `j`-th
/// phrase. A trailing incomplete phrase is charged as a phrase.
pub fn estimate_dim(bits: &[u8]) -> Result<DimEstimate> {
    if bits.len() < MIN_ESTIMATE_LENGTH {
        return Err(Error::InputTooShort {
            len: bits.len(),
            min: MIN_ESTIMATE_LENGTH,
        });
    }
    if let Some(&b) = bits.iter().find(|&&b| b > 1) {
        return Err(domain(format!("bit string contains symbol {b}")));
    }
    // trie of phrases: (node, bit) -> child node; node 0 is the empty phrase
    let mut trie: HashMap<(u32, u8), u32> = HashMap::with_capacity(bits.len() / 8);
    let mut next_id = 1u32;
    let mut node = 0u32;
    let mut phrases = 0u64;
    for &b in bits {
        match trie.get(&(node, b)) {
            Some(&child) => node = child,
            None => {
                trie.insert((node, b), next_id);
                next_id += 1;
                phrases += 1;
                node = 0;
            }
        }
    }
    if node != 0 {
        phrases += 1;
    }
    let n = bits.len() as u64;
    let code_length = lz78_code_length(phrases);
    Ok(DimEstimate {
        sequence_length: bits.len(),
        phrases: phrases as usize,
        code_length,
        rate: code_length as f64 / n as f64,
        overhead: lz78_code_length(max_phrases(n)) as f64 / n as f64 - 1.0,
    })
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    let h = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    h(p) + h(1.0 - p)
}
