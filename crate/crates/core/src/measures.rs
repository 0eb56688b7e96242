//! Bernoulli measures on trit codes, Galton-Watson measures on quad codes,
//! and the seeded samplers for both.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree_codec::{QuadCode, TritCode};

/// Slack allowed when checking that probabilities sum to one.
pub const SUM_TOLERANCE: f64 = 1e-12;

fn check_probability(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("{name}={x} is not a probability")))
    }
}

/// Parameters `(p, q)` of the measure putting mass `p` on symbol 0, `q` on
/// symbol 1 and `1 - p - q` on symbol 2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernoulliPair {
    pub p: f64,
    pub q: f64,
}

impl BernoulliPair {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        check_probability("p", p)?;
        check_probability("q", q)?;
        if p + q > 1.0 + SUM_TOLERANCE {
            return Err(Error::InvalidParams(format!("p + q = {} exceeds 1", p + q)));
        }
        Ok(Self { p, q })
    }

    /// The symmetric measure `p = q`.
    pub fn symmetric(p: f64) -> Result<Self> {
        Self::new(p, p)
    }

    /// Probability of symbol 2.
    pub fn both(&self) -> f64 {
        (1.0 - self.p - self.q).max(0.0)
    }

    pub fn symbol_prob(&self, symbol: u8) -> f64 {
        match symbol {
            0 => self.p,
            1 => self.q,
            2 => self.both(),
            _ => 0.0,
        }
    }
}

/// Survival probabilities of the left and right child.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalPair {
    pub beta0: f64,
    pub beta1: f64,
}

impl SurvivalPair {
    pub fn new(beta0: f64, beta1: f64) -> Result<Self> {
        let invalid = |reason: &str| Error::InvalidSurvival {
            beta0,
            beta1,
            reason: reason.into(),
        };
        let open = |b: f64| b.is_finite() && b > 0.0 && b < 1.0;
        if !open(beta0) || !open(beta1) {
            return Err(invalid("each beta must lie in the open interval (0,1)"));
        }
        if beta0 + beta1 < 1.0 - SUM_TOLERANCE {
            return Err(invalid("beta0 + beta1 must be at least 1"));
        }
        Ok(Self { beta0, beta1 })
    }
}

/// Per-node law over the four quad symbols: left only, right only, both,
/// neither. Not necessarily of product form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffspringLaw {
    probs: [f64; 4],
}

impl OffspringLaw {
    pub fn new(a0: f64, a1: f64, a2: f64, a3: f64) -> Result<Self> {
        let probs = [a0, a1, a2, a3];
        for (i, &a) in probs.iter().enumerate() {
            check_probability(&format!("a{i}"), a)?;
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidParams(format!(
                "offspring probabilities sum to {sum}, not 1"
            )));
        }
        Ok(Self { probs })
    }

    pub fn from_array(probs: [f64; 4]) -> Result<Self> {
        Self::new(probs[0], probs[1], probs[2], probs[3])
    }

    pub fn a0(&self) -> f64 {
        self.probs[0]
    }
    pub fn a1(&self) -> f64 {
        self.probs[1]
    }
    pub fn a2(&self) -> f64 {
        self.probs[2]
    }
    pub fn a3(&self) -> f64 {
        self.probs[3]
    }

    pub fn probs(&self) -> [f64; 4] {
        self.probs
    }

    /// Draw one quad symbol.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u8 {
        let [a0, a1, a2, _] = self.probs;
        let u: f64 = rng.random();
        if u < a0 {
            0
        } else if u < a0 + a1 {
            1
        } else if u < a0 + a1 + a2 {
            2
        } else {
            3
        }
    }

    /// Marginal probability that the left (resp. right) child exists.
    pub fn child_marginals(&self) -> (f64, f64) {
        let [a0, a1, a2, _] = self.probs;
        (a0 + a2, a1 + a2)
    }
}

/// Counter-based stream key. The same `(master_seed, stream_index)` always
/// yields the same random sequence, whatever thread draws it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RandomStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// Measure of the cylinder of codes extending `sigma`.
pub fn cylinder_measure(params: BernoulliPair, sigma: &TritCode) -> f64 {
    sigma.symbols().iter().map(|&s| params.symbol_prob(s)).product()
}

/// Offspring law of the Galton-Watson tree in which the left child survives
/// with probability `beta0` and the right with `beta1`, independently.
pub fn gw_offspring(params: SurvivalPair) -> OffspringLaw {
    let SurvivalPair { beta0: b0, beta1: b1 } = params;
    OffspringLaw {
        probs: [b0 * (1.0 - b1), b1 * (1.0 - b0), b0 * b1, (1.0 - b0) * (1.0 - b1)],
    }
}

/// `(1 - q, 1 - p)`: the survival pair whose pruned tree has trit law `(p, q)`.
pub fn survival_from_bernoulli(params: BernoulliPair) -> Result<SurvivalPair> {
    SurvivalPair::new(1.0 - params.q, 1.0 - params.p)
}

/// Endless i.i.d. trit symbols with law `(p, q, 1 - p - q)`.
#[derive(Clone, Debug)]
pub struct TritSymbols<R> {
    p: f64,
    pq: f64,
    rng: R,
}

impl<R: Rng> TritSymbols<R> {
    pub fn new(params: BernoulliPair, rng: R) -> Self {
        Self {
            p: params.p,
            pq: params.p + params.q,
            rng,
        }
    }

    pub fn into_rng(self) -> R {
        self.rng
    }
}

impl<R: Rng> Iterator for TritSymbols<R> {
    type Item = u8;

    #[inline]
    fn next(&mut self) -> Option<u8> {
        let u: f64 = self.rng.random();
        Some(if u < self.p {
            0
        } else if u < self.pq {
            1
        } else {
            2
        })
    }
}

/// Endless i.i.d. quad symbols with the given offspring law.
#[derive(Clone, Debug)]
pub struct QuadSymbols<R> {
    cumulative: [f64; 3],
    rng: R,
}

impl<R: Rng> QuadSymbols<R> {
    pub fn new(law: OffspringLaw, rng: R) -> Self {
        let [a0, a1, a2, _] = law.probs;
        Self {
            cumulative: [a0, a0 + a1, a0 + a1 + a2],
            rng,
        }
    }
}

impl<R: Rng> Iterator for QuadSymbols<R> {
    type Item = u8;

    #[inline]
    fn next(&mut self) -> Option<u8> {
        let u: f64 = self.rng.random();
        let [c0, c1, c2] = self.cumulative;
        Some(if u < c0 {
            0
        } else if u < c1 {
            1
        } else if u < c2 {
            2
        } else {
            3
        })
    }
}

pub fn sample_trit_code(params: BernoulliPair, count: usize, stream: RandomStream) -> TritCode {
    let symbols = TritSymbols::new(params, stream.rng()).take(count).collect();
    TritCode::new(symbols).expect("sampler emits trits")
}

pub fn sample_quad_code(law: OffspringLaw, count: usize, stream: RandomStream) -> QuadCode {
    let symbols = QuadSymbols::new(law, stream.rng()).take(count).collect();
    QuadCode::new(symbols).expect("sampler emits quads")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn freqs(symbols: &[u8], k: usize) -> Vec<f64> {
        let mut counts = vec![0usize; k];
        for &s in symbols {
            counts[s as usize] += 1;
        }
        counts.iter().map(|&c| c as f64 / symbols.len() as f64).collect()
    }

    #[test]
    fn cylinder_examples() {
        let sym = BernoulliPair::new(0.2, 0.2).unwrap();
        assert_eq!(cylinder_measure(sym, &"".parse().unwrap()), 1.0);
        assert_abs_diff_eq!(cylinder_measure(sym, &"2".parse().unwrap()), 0.6, epsilon = 1e-12);
        let asym = BernoulliPair::new(0.1, 0.3).unwrap();
        assert_abs_diff_eq!(cylinder_measure(asym, &"021".parse().unwrap()), 0.018, epsilon = 1e-12);
    }

    #[test]
    fn offspring_examples() {
        let law = gw_offspring(SurvivalPair::new(0.8, 0.8).unwrap());
        for (a, b) in law.probs().iter().zip([0.16, 0.16, 0.64, 0.04]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        let eps = 1e-6;
        let near_full = gw_offspring(SurvivalPair::new(1.0 - eps, 1.0 - eps).unwrap());
        assert_abs_diff_eq!(near_full.a2(), 1.0, epsilon = 1e-5);
        let critical = gw_offspring(SurvivalPair::new(0.5, 0.5).unwrap());
        assert_eq!(critical.probs(), [0.25; 4]);
    }

    #[test]
    fn survival_from_bernoulli_examples() {
        let s = survival_from_bernoulli(BernoulliPair::new(0.2, 0.2).unwrap()).unwrap();
        assert_abs_diff_eq!(s.beta0, 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(s.beta1, 0.8, epsilon = 1e-12);
        assert!(matches!(
            survival_from_bernoulli(BernoulliPair::new(0.0, 0.0).unwrap()),
            Err(Error::InvalidSurvival { .. })
        ));
        let s = survival_from_bernoulli(BernoulliPair::new(0.3, 0.1).unwrap()).unwrap();
        assert_abs_diff_eq!(s.beta0, 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(s.beta1, 0.7, epsilon = 1e-12);
    }

    #[test]
    fn parameter_validation() {
        assert!(BernoulliPair::new(0.6, 0.5).is_err());
        assert!(BernoulliPair::new(-0.1, 0.5).is_err());
        assert!(BernoulliPair::new(f64::NAN, 0.5).is_err());
        assert!(BernoulliPair::new(0.3, 0.7).is_ok());
        assert!(SurvivalPair::new(0.4, 0.5).is_err());
        assert!(SurvivalPair::new(1.0, 0.5).is_err());
        assert!(OffspringLaw::new(0.5, 0.5, 0.5, 0.0).is_err());
    }

    #[test]
    fn point_mass_samplers() {
        let stream = RandomStream::new(7, 0);
        let all_two = sample_trit_code(BernoulliPair::new(0.0, 0.0).unwrap(), 1000, stream);
        assert!(all_two.symbols().iter().all(|&s| s == 2));
        let all_zero = sample_trit_code(BernoulliPair::new(1.0, 0.0).unwrap(), 1000, stream);
        assert!(all_zero.symbols().iter().all(|&s| s == 0));
        let full = OffspringLaw::new(0.0, 0.0, 1.0, 0.0).unwrap();
        assert!(sample_quad_code(full, 1000, stream).symbols().iter().all(|&s| s == 2));
        let dead = OffspringLaw::new(0.0, 0.0, 0.0, 1.0).unwrap();
        assert!(sample_quad_code(dead, 1000, stream).symbols().iter().all(|&s| s == 3));
    }

    #[test]
    fn sampler_frequencies() {
        let code = sample_trit_code(
            BernoulliPair::new(0.2, 0.2).unwrap(),
            1_000_000,
            RandomStream::new(11, 3),
        );
        for (f, e) in freqs(code.symbols(), 3).iter().zip([0.2, 0.2, 0.6]) {
            assert_abs_diff_eq!(*f, e, epsilon = 0.002);
        }
        let law = OffspringLaw::new(0.16, 0.16, 0.64, 0.04).unwrap();
        let code = sample_quad_code(law, 1_000_000, RandomStream::new(11, 4));
        for (f, e) in freqs(code.symbols(), 4).iter().zip(law.probs()) {
            assert_abs_diff_eq!(*f, e, epsilon = 0.002);
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let params = BernoulliPair::new(0.3, 0.3).unwrap();
        let a = sample_trit_code(params, 500, RandomStream::new(42, 9));
        let b = sample_trit_code(params, 500, RandomStream::new(42, 9));
        let c = sample_trit_code(params, 500, RandomStream::new(42, 10));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn draw_matches_iterator() {
        let law = OffspringLaw::new(0.1, 0.2, 0.3, 0.4).unwrap();
        let mut rng = RandomStream::new(5, 5).rng();
        let drawn: Vec<u8> = (0..200).map(|_| law.sample(&mut rng)).collect();
        assert_eq!(drawn, sample_quad_code(law, 200, RandomStream::new(5, 5)).into_inner());
    }
}
