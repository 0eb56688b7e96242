//! Independent oracles: string-based decoders, set intersection, and the
//! survival recurrence written out directly.

#![allow(dead_code)]

use std::collections::BTreeSet;

/// Nodes of the tree coded by `symbols` through `depth`, decoded with node
/// strings. `None` if the code runs out first.
pub fn naive_decode(symbols: &[u8], depth: usize) -> Option<BTreeSet<String>> {
    let mut nodes = BTreeSet::from([String::new()]);
    let mut level = vec![String::new()];
    let mut pos = 0;
    for _ in 0..depth {
        let mut next = Vec::new();
        for node in &level {
            let s = *symbols.get(pos)?;
            pos += 1;
            if s == 0 || s == 2 {
                next.push(format!("{node}0"));
            }
            if s == 1 || s == 2 {
                next.push(format!("{node}1"));
            }
        }
        next.sort();
        nodes.extend(next.iter().cloned());
        if next.is_empty() {
            break;
        }
        level = next;
    }
    Some(nodes)
}

/// Intersection of node sets.
pub fn set_intersection(sets: &[BTreeSet<String>]) -> BTreeSet<String> {
    let mut out = sets[0].clone();
    for s in &sets[1..] {
        out = out.intersection(s).cloned().collect();
    }
    out
}

/// `r_0 = 1`, `r_{k+1} = P(at least one child's subtree reaches k)`.
pub fn survival_oracle(a: [f64; 4], depth: usize) -> f64 {
    let [a0, a1, a2, _] = a;
    let mut r = 1.0f64;
    for _ in 0..depth {
        r = a0 * r + a1 * r + a2 * (1.0 - (1.0 - r) * (1.0 - r));
    }
    r
}

/// Offspring law of `n` independent symmetric `<p,p>` codes read in lockstep:
/// a child survives iff every input keeps it.
pub fn nfold_oracle(p: f64, n: u32) -> [f64; 4] {
    let keep = 1.0 - p;
    let both = (1.0 - 2.0 * p).powi(n as i32);
    let left = keep.powi(n as i32);
    let only = left - both;
    [only, only, both, 1.0 - both - 2.0 * only]
}

/// Xorshift generator for building test inputs without the library's RNG.
pub struct Xorshift(pub u64);

impl Xorshift {
    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    /// Trit symbols with probabilities (p, q, 1 - p - q).
    pub fn trits(&mut self, p: f64, q: f64, len: usize) -> Vec<u8> {
        (0..len)
            .map(|_| {
                let u = self.unit();
                if u < p {
                    0
                } else if u < p + q {
                    1
                } else {
                    2
                }
            })
            .collect()
    }
}
