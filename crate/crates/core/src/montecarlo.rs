//! Seeded Monte Carlo experiments checked against exact finite-depth values.
//!
//! Every trial draws from its own counter-based stream `(seed, index)`, and
//! results are aggregated as counts, so a report depends only on its
//! parameters and seed, not on how rayon schedules the trials.

use std::collections::BTreeMap;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::galton_watson::{
    pruned_branch_probs_general, sample_pruned_prefix, survival_limit, survival_recurrence, survives_to,
};
use crate::intersection::{
    f_n, intersect_trees, nfold_emptiness_prob, nfold_symbol_law, pair_emptiness_prob, pair_nonempty_possible,
    pair_symbol_law, threshold,
};
use crate::measures::{BernoulliPair, OffspringLaw, RandomStream, TritSymbols};
use crate::stats::{chi_square_two_sample, wilson_interval, ChiSquare, Z_99};
use crate::tree_codec::{decode_trit_from, encode_trit, PrefixTree, MAX_DEPTH};

/// Allowance added to the CI half-width to form the default tolerance.
pub const SYSTEMATIC_ALLOWANCE: f64 = 0.005;
/// Tolerance on pruned-symbol frequencies.
pub const FREQUENCY_TOLERANCE: f64 = 0.01;
/// Largest admissible bias `r_{d-m} - l` for pruned-tree experiments.
pub const MAX_PRUNING_BIAS: f64 = 0.005;
/// Significance level of the distribution test.
pub const CONVERSE_ALPHA: f64 = 1e-3;
/// Fewest surviving trials the distribution test accepts.
pub const MIN_SURVIVORS: u64 = 1000;

/// Stream offset separating the second sample of a two-sample experiment.
const SECOND_SAMPLE_OFFSET: u64 = 1 << 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

/// A proportion estimate with its 99% Wilson interval and the exact value it
/// is checked against.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateRecord {
    pub name: String,
    pub value: f64,
    pub successes: u64,
    pub trials: u64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub master_seed: u64,
    pub exact: f64,
    /// Depth-infinity value, for context only.
    pub limit: Option<f64>,
    pub tolerance: f64,
    pub verdict: Verdict,
}

impl EstimateRecord {
    /// Record with the default tolerance: CI half-width plus
    /// [`SYSTEMATIC_ALLOWANCE`].
    pub fn new(name: impl Into<String>, successes: u64, trials: u64, master_seed: u64, exact: f64) -> Self {
        let (ci_low, ci_high) = wilson_interval(successes, trials, Z_99);
        let value = successes as f64 / trials as f64;
        let tolerance = (ci_high - ci_low) / 2.0 + SYSTEMATIC_ALLOWANCE;
        Self {
            name: name.into(),
            value,
            successes,
            trials,
            ci_low,
            ci_high,
            master_seed,
            exact,
            limit: None,
            tolerance,
            verdict: Verdict::from_bool((value - exact).abs() <= tolerance),
        }
    }

    pub fn with_limit(mut self, limit: Option<f64>) -> Self {
        self.limit = limit;
        self
    }

    /// Replace the tolerance and recompute the verdict.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.verdict = Verdict::from_bool(self.error() <= tolerance);
        self
    }

    pub fn error(&self) -> f64 {
        (self.value - self.exact).abs()
    }

    pub fn half_width(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }

    pub fn covers_exact(&self) -> bool {
        self.ci_low <= self.exact && self.exact <= self.ci_high
    }

    /// CSV column order used by [`records_to_csv`].
    pub const CSV_HEADER: &'static str =
        "name,value,successes,trials,ci_low,ci_high,master_seed,exact,limit,tolerance,verdict";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.name,
            self.value,
            self.successes,
            self.trials,
            self.ci_low,
            self.ci_high,
            self.master_seed,
            self.exact,
            self.limit.map(|l| l.to_string()).unwrap_or_default(),
            self.tolerance,
            match self.verdict {
                Verdict::Pass => "pass",
                Verdict::Fail => "fail",
            }
        )
    }
}

pub fn records_to_csv(records: &[EstimateRecord]) -> String {
    let mut out = String::from(EstimateRecord::CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NamedTest {
    pub name: String,
    #[serde(flatten)]
    pub result: ChiSquare,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
    pub horizon: usize,
    pub readable: usize,
    pub trials: u64,
    /// Trials dropped because the tree died before the horizon.
    pub discarded: u64,
    pub records: Vec<EstimateRecord>,
    pub tests: Vec<NamedTest>,
    pub verdict: Verdict,
    /// Wall-clock time; the only field not determined by the seed.
    pub runtime_ms: u64,
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        Err(domain("trials must be at least 1"))
    } else {
        Ok(())
    }
}

fn check_tree_depth(depth: usize) -> Result<()> {
    if depth > MAX_DEPTH {
        Err(Error::DepthTooLarge(depth))
    } else {
        Ok(())
    }
}

/// Number of trials in `offset..offset + trials` for which `trial` holds.
fn count_successes<F>(trials: u64, seed: u64, offset: u64, trial: F) -> Result<u64>
where
    F: Fn(&mut ChaCha8Rng) -> Result<bool> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = RandomStream::new(seed, offset + i).rng();
            trial(&mut rng).map(u64::from)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// Per-trial count vectors summed over all trials; `None` trials are counted
/// as discarded.
fn tally<const K: usize, F>(trials: u64, seed: u64, offset: u64, trial: F) -> Result<([u64; K], u64)>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Option<[u64; K]>> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = RandomStream::new(seed, offset + i).rng();
            Ok(match trial(&mut rng)? {
                Some(counts) => (counts, 0),
                None => ([0; K], 1),
            })
        })
        .try_reduce(
            || ([0; K], 0),
            |(mut a, da), (b, db)| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                Ok((a, da + db))
            },
        )
}

fn sample_trit_tree(params: BernoulliPair, depth: usize, rng: &mut ChaCha8Rng) -> Result<PrefixTree> {
    decode_trit_from(TritSymbols::new(params, rng), depth).map(|out| out.tree)
}

/// Fraction of processes with offspring law `law` that reach `depth`,
/// against the exact `r_depth`.
pub fn estimate_survival(law: OffspringLaw, depth: usize, trials: u64, seed: u64) -> Result<EstimateRecord> {
    check_trials(trials)?;
    let hits = count_successes(trials, seed, 0, |rng| Ok(survives_to(&law, depth, rng)))?;
    let exact = survival_recurrence(law, depth).last();
    Ok(EstimateRecord::new("survival", hits, trials, seed, exact).with_limit(survival_limit(law).ok()))
}

/// Intersect two sampled trees per trial and count those with no node at
/// `depth`; exact value `1 - r_depth` of the pair symbol law.
pub fn estimate_pair_emptiness(
    a: BernoulliPair,
    b: BernoulliPair,
    depth: usize,
    trials: u64,
    seed: u64,
) -> Result<EstimateRecord> {
    check_trials(trials)?;
    check_tree_depth(depth)?;
    if !pair_nonempty_possible(a.p, a.q, b.p, b.q) {
        return Err(domain(format!(
            "<{}, {}> and <{}, {}> always intersect emptily (p + q + r + s >= 1 + pr + qs)",
            a.p, a.q, b.p, b.q
        )));
    }
    let empty = count_successes(trials, seed, 0, |rng| {
        let x = sample_trit_tree(a, depth, rng)?;
        let y = sample_trit_tree(b, depth, rng)?;
        Ok(!intersect_trees(&[&x, &y])?.reaches_depth())
    })?;
    let exact = 1.0 - survival_recurrence(pair_symbol_law(a, b), depth).last();
    let limit = pair_emptiness_prob(a.p, a.q, b.p, b.q).ok();
    Ok(EstimateRecord::new("pair-emptiness", empty, trials, seed, exact).with_limit(limit))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NfoldMode {
    /// Sample `n` trees and intersect their node sets.
    Tree,
    /// Run the branching process of the n-fold symbol law directly.
    Process,
}

fn nfold_emptiness_trials(p: f64, n: u32, depth: usize, trials: u64, seed: u64, mode: NfoldMode) -> Result<u64> {
    let law = nfold_symbol_law(p, n)?;
    match mode {
        NfoldMode::Tree => {
            check_tree_depth(depth)?;
            let params = BernoulliPair::symmetric(p)?;
            count_successes(trials, seed, 0, |rng| {
                let trees = (0..n)
                    .map(|_| sample_trit_tree(params, depth, rng))
                    .collect::<Result<Vec<_>>>()?;
                let refs: Vec<&PrefixTree> = trees.iter().collect();
                Ok(!intersect_trees(&refs)?.reaches_depth())
            })
        }
        NfoldMode::Process => count_successes(trials, seed, 0, |rng| Ok(!survives_to(&law, depth, rng))),
    }
}

/// Empirical probability that `n` independent `mu_p` trees share no node at
/// `depth`, against the exact `1 - r_depth`. Requires `p` below the
/// threshold for `n`.
pub fn estimate_nfold_emptiness(
    p: f64,
    n: u32,
    depth: usize,
    trials: u64,
    seed: u64,
    mode: NfoldMode,
) -> Result<EstimateRecord> {
    check_trials(trials)?;
    let limit = nfold_emptiness_prob(p, n)?;
    let empty = nfold_emptiness_trials(p, n, depth, trials, seed, mode)?;
    let exact = 1.0 - survival_recurrence(nfold_symbol_law(p, n)?, depth).last();
    let name = match mode {
        NfoldMode::Tree => "nfold-emptiness-tree",
        NfoldMode::Process => "nfold-emptiness-process",
    };
    Ok(EstimateRecord::new(name, empty, trials, seed, exact).with_limit(Some(limit)))
}

/// The same measurement for `p` at or above the threshold, where the
/// intersection is empty in the limit.
pub fn estimate_nfold_emptiness_above_threshold(
    p: f64,
    n: u32,
    depth: usize,
    trials: u64,
    seed: u64,
    mode: NfoldMode,
) -> Result<EstimateRecord> {
    check_trials(trials)?;
    let cut = threshold(n)?;
    if p < cut {
        return Err(domain(format!("p={p} is below the threshold {cut}")));
    }
    let empty = nfold_emptiness_trials(p, n, depth, trials, seed, mode)?;
    let exact = 1.0 - survival_recurrence(nfold_symbol_law(p, n)?, depth).last();
    Ok(EstimateRecord::new("nfold-emptiness-above-threshold", empty, trials, seed, exact).with_limit(Some(1.0)))
}

/// Whether two estimates of the same quantity agree within the 99% interval
/// of their difference.
pub fn estimates_agree(a: &EstimateRecord, b: &EstimateRecord) -> bool {
    (a.value - b.value).abs() <= a.half_width().hypot(b.half_width())
}

/// `r_{d-m} - l`, the largest probability that a node at a readable level is
/// kept by pruning at horizon `d` but dies later.
pub fn pruning_bias(law: OffspringLaw, horizon: usize, readable: usize) -> Result<f64> {
    if readable > horizon {
        return Err(Error::LevelOutOfRange {
            level: readable,
            depth: horizon,
        });
    }
    let limit = survival_limit(law)?;
    Ok(survival_recurrence(law, horizon - readable).last() - limit)
}

fn check_bias(law: OffspringLaw, horizon: usize, readable: usize) -> Result<()> {
    pruned_branch_probs_general(law)?;
    let bias = pruning_bias(law, horizon, readable)?;
    if bias >= MAX_PRUNING_BIAS {
        return Err(domain(format!(
            "horizon {horizon} with readable depth {readable} leaves pruning bias {bias:.3e} (must be below {MAX_PRUNING_BIAS})"
        )));
    }
    Ok(())
}

fn symbol_counts(code: &[u8]) -> [u64; 3] {
    let mut counts = [0; 3];
    for &s in code {
        counts[s as usize] += 1;
    }
    counts
}

/// Pool the trit symbols of pruned surviving trees through `readable` levels
/// and compare their frequencies with the pruned branching law.
pub fn pruned_frequency_experiment(
    law: OffspringLaw,
    horizon: usize,
    readable: usize,
    trials: u64,
    seed: u64,
) -> Result<ExperimentReport> {
    check_trials(trials)?;
    check_bias(law, horizon, readable)?;
    let started = Instant::now();
    let expected = pruned_branch_probs_general(law)?;
    let (counts, discarded) = tally(trials, seed, 0, |rng| {
        match sample_pruned_prefix(&law, horizon, readable, rng) {
            Ok(tree) => Ok(Some(symbol_counts(encode_trit(&tree)?.symbols()))),
            Err(Error::Extinct { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    })?;
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::InsufficientSurvivors { survivors: 0, min: 1 });
    }
    let records: Vec<EstimateRecord> = [("both", 2usize), ("left_only", 0), ("right_only", 1)]
        .into_iter()
        .map(|(name, s)| {
            EstimateRecord::new(name, counts[s], total, seed, expected.by_symbol()[s])
                .with_tolerance(FREQUENCY_TOLERANCE)
        })
        .collect();
    let verdict = Verdict::from_bool(records.iter().all(|r| r.verdict.passed()));
    let [a0, a1, a2, a3] = law.probs();
    Ok(ExperimentReport {
        name: "pruned-freqs".into(),
        params: BTreeMap::from([
            ("a0".into(), a0),
            ("a1".into(), a1),
            ("a2".into(), a2),
            ("a3".into(), a3),
        ]),
        seed,
        horizon,
        readable,
        trials,
        discarded,
        records,
        tests: Vec::new(),
        verdict,
        runtime_ms: started.elapsed().as_millis() as u64,
    })
}

/// Symbol counts (cells 0..3) and first-three-symbol cylinder counts (cells
/// 3..30) of one trit code.
fn code_cells(code: &[u8]) -> [u64; 30] {
    let mut cells = [0; 30];
    for &s in code {
        cells[s as usize] += 1;
    }
    if code.len() >= 3 {
        let cylinder = 9 * code[0] as usize + 3 * code[1] as usize + code[2] as usize;
        cells[3 + cylinder] += 1;
    }
    cells
}

/// Compare codes drawn directly from `mu_{f_n(p)}` with pruned n-fold
/// intersections conditioned on reaching the horizon.
pub fn converse_distribution_test(
    p: f64,
    n: u32,
    horizon: usize,
    readable: usize,
    trials: u64,
    seed: u64,
) -> Result<ExperimentReport> {
    converse_distribution_test_against(p, p, n, horizon, readable, trials, seed)
}

/// Like [`converse_distribution_test`], but the intersections are sampled at
/// `intersect_p` while the reference codes use `f_n(reference_p)`. With
/// `intersect_p != reference_p` this measures the power of the test.
pub fn converse_distribution_test_against(
    reference_p: f64,
    intersect_p: f64,
    n: u32,
    horizon: usize,
    readable: usize,
    trials: u64,
    seed: u64,
) -> Result<ExperimentReport> {
    check_trials(trials)?;
    if readable < 2 {
        return Err(domain(
            "readable depth must be at least 2 to read three-symbol cylinders",
        ));
    }
    for p in [reference_p, intersect_p] {
        let cut = threshold(n)?;
        if !(p >= 0.0 && p < cut) {
            return Err(domain(format!("p={p} must lie in [0, {cut}) for n={n}")));
        }
    }
    let law = nfold_symbol_law(intersect_p, n)?;
    check_bias(law, horizon, readable)?;
    let started = Instant::now();
    let f = f_n(reference_p, n)?;
    let reference = BernoulliPair::symmetric(f)?;

    let (direct, _) = tally(trials, seed, 0, |rng| {
        let tree = sample_trit_tree(reference, readable, rng)?;
        Ok(Some(code_cells(encode_trit(&tree)?.symbols())))
    })?;
    let (pruned, discarded) = tally(trials, seed, SECOND_SAMPLE_OFFSET, |rng| {
        match sample_pruned_prefix(&law, horizon, readable, rng) {
            Ok(tree) => Ok(Some(code_cells(encode_trit(&tree)?.symbols()))),
            Err(Error::Extinct { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    })?;
    let survivors = trials - discarded;
    if survivors < MIN_SURVIVORS {
        return Err(Error::InsufficientSurvivors {
            survivors,
            min: MIN_SURVIVORS,
        });
    }

    let tests = vec![
        NamedTest {
            name: "symbol-counts".into(),
            result: chi_square_two_sample(&direct[..3], &pruned[..3]),
        },
        NamedTest {
            name: "cylinders-depth-3".into(),
            result: chi_square_two_sample(&direct[3..], &pruned[3..]),
        },
    ];
    let verdict = Verdict::from_bool(tests.iter().all(|t| t.result.p_value >= CONVERSE_ALPHA));

    let both_exact = 1.0 - 2.0 * f;
    let total = |c: &[u64; 30]| c[..3].iter().sum::<u64>();
    let records = vec![
        EstimateRecord::new("direct-both", direct[2], total(&direct), seed, both_exact)
            .with_tolerance(FREQUENCY_TOLERANCE),
        EstimateRecord::new("pruned-both", pruned[2], total(&pruned), seed, both_exact)
            .with_tolerance(FREQUENCY_TOLERANCE),
    ];
    Ok(ExperimentReport {
        name: "converse-test".into(),
        params: BTreeMap::from([
            ("p".into(), reference_p),
            ("intersect_p".into(), intersect_p),
            ("n".into(), f64::from(n)),
            ("f_n".into(), f),
        ]),
        seed,
        horizon,
        readable,
        trials,
        discarded,
        records,
        tests,
        verdict,
        runtime_ms: started.elapsed().as_millis() as u64,
    })
}

/// Fraction of `repetitions` independent survival estimates (seeds
/// `seed, seed + 1, ...`) whose 99% interval contains the exact value.
pub fn ci_coverage(law: OffspringLaw, depth: usize, trials: u64, repetitions: u64, seed: u64) -> Result<f64> {
    let covered = (0..repetitions)
        .map(|k| estimate_survival(law, depth, trials, seed.wrapping_add(k)).map(|r| u64::from(r.covers_exact())))
        .sum::<Result<u64>>()?;
    Ok(covered as f64 / repetitions as f64)
}
