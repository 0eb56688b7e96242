//! Command-line entry point.
//!
//! Exit status: 0 on success or a passing experiment, 2 when an experiment's
//! verdict is fail, 1 on usage or domain errors.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::dimension::{
    dim_lower_bound, estimate_dim, gamma_to_p, member_dim_bound, min_degree_for_dim, sample_member_path,
    DimBoundReport, PathPolicy,
};
use crate::error::Error;
use crate::galton_watson::{prune_code, pruned_branch_probs_general, survival_limit, survival_recurrence};
use crate::intersection::{
    degree_of_intersectability, f_n, f_n_inverse, induced_pair_params, intersect_many, nfold_emptiness_prob,
    nfold_symbol_law, pair_emptiness_prob, pair_nonempty_possible, pair_symbol_law, threshold,
};
use crate::measures::{cylinder_measure, gw_offspring, BernoulliPair, OffspringLaw, RandomStream, SurvivalPair};
use crate::montecarlo::{
    converse_distribution_test, converse_distribution_test_against, estimate_nfold_emptiness, estimate_pair_emptiness,
    estimate_survival, pruned_frequency_experiment, records_to_csv, EstimateRecord, ExperimentReport, NfoldMode,
    Verdict,
};
use crate::tree_codec::{decode_quad, decode_trit, encode_quad, encode_trit, PrefixTree, QuadCode, TritCode};

/// Environment variable naming the directory that relative `--output` paths
/// are resolved against.
pub const OUTPUT_DIR_ENV: &str = "RANDCLOSED_OUTPUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "randclosed", version, about = "Random closed subsets of Cantor space")]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Plain, global = true)]
    pub format: Format,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Cap on worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Plain,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Alphabet {
    Trit,
    Quad,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decode a code into its prefix tree.
    Decode {
        /// Code string, or @file.
        #[arg(long)]
        code: String,
        #[arg(long)]
        depth: usize,
        #[arg(long, value_enum, default_value_t = Alphabet::Trit)]
        alphabet: Alphabet,
    },
    /// Encode a tree given as JSON {"depth": d, "nodes": [...]}.
    Encode {
        /// Tree JSON, or @file.
        #[arg(long)]
        tree: String,
        #[arg(long, value_enum, default_value_t = Alphabet::Trit)]
        alphabet: Alphabet,
    },
    /// Intersect the trees of two or more trit codes.
    Intersect {
        /// Comma-separated trit codes, or @file with one code per line.
        #[arg(long)]
        codes: String,
        #[arg(long)]
        depth: usize,
    },
    /// Prune a quad code's tree at a horizon and re-encode the top levels.
    Prune {
        #[arg(long)]
        code: String,
        #[arg(long)]
        horizon: usize,
        #[arg(long)]
        readable: usize,
    },
    /// Closed-form quantities.
    #[command(subcommand)]
    Formulas(Formula),
    /// Seeded Monte Carlo experiments.
    #[command(subcommand)]
    Estimate(Estimate),
    /// Member paths and compression-rate estimates.
    #[command(subcommand)]
    Dim(Dim),
}

#[derive(Args, Debug, Clone, Default)]
pub struct LawArgs {
    /// Offspring law a0,a1,a2,a3.
    #[arg(long, conflicts_with_all = ["beta0", "nfold_p"])]
    pub law: Option<String>,
    #[arg(long, requires = "beta1")]
    pub beta0: Option<f64>,
    #[arg(long, requires = "beta0")]
    pub beta1: Option<f64>,
    /// Symmetric parameter of an n-fold intersection law.
    #[arg(long, requires = "nfold_n", conflicts_with = "beta0")]
    pub nfold_p: Option<f64>,
    #[arg(long, requires = "nfold_p")]
    pub nfold_n: Option<u32>,
}

#[derive(Args, Debug, Clone)]
pub struct PairArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub q: f64,
    #[arg(long)]
    pub r: f64,
    #[arg(long)]
    pub s: f64,
}

#[derive(Subcommand, Debug)]
pub enum Formula {
    /// 1 - (1-p)^n
    FN {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        n: u32,
    },
    /// 1 - (1-p)^(1/n)
    FNInverse {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        n: u32,
    },
    /// 1 - 2^(-1/n)
    Threshold {
        #[arg(long)]
        n: u32,
    },
    /// Thresholds for n = 1..=max.
    Thresholds {
        #[arg(long, default_value_t = 10)]
        max: u32,
    },
    /// Whether two sets with parameters <p,q>, <r,s> can intersect.
    NonemptyPossible(PairArgs),
    /// Emptiness probability of a pairwise intersection.
    PairEmptiness(PairArgs),
    /// Induced parameters of a pairwise intersection.
    Induced(PairArgs),
    /// Emptiness probability of an n-fold symmetric intersection.
    NfoldEmptiness {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        n: u32,
    },
    /// Offspring law of the n-fold intersection process.
    NfoldLaw {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        n: u32,
    },
    /// Degree of intersectability of the mu*_p family.
    Degree {
        #[arg(long)]
        p: f64,
    },
    /// -log2(1-p) with the degree-based member bound.
    DimBound {
        #[arg(long)]
        p: f64,
    },
    GammaToP {
        #[arg(long)]
        gamma: f64,
    },
    /// 1/(n+1) for degree n.
    MemberBound {
        #[arg(long)]
        degree: u64,
    },
    /// floor(1/s) with the s = 1/n caveat flag.
    MinDegree {
        #[arg(long)]
        s: f64,
    },
    /// Cylinder measure of a trit string.
    Cylinder {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        sigma: String,
    },
    /// Offspring law of the product process with survival pair (beta0, beta1).
    Offspring {
        #[arg(long)]
        beta0: f64,
        #[arg(long)]
        beta1: f64,
    },
    SurvivalLimit(LawArgs),
    SurvivalCurve {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long)]
        levels: usize,
    },
    /// Branching law of the pruned tree.
    PrunedProbs(LawArgs),
}

#[derive(Subcommand, Debug)]
pub enum Estimate {
    Survival {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long, default_value_t = 25)]
        depth: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    PairEmptiness {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, default_value_t = 12)]
        depth: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    NfoldEmptiness {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 60)]
        depth: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Process)]
        mode: ModeArg,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    PrunedFreqs {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long, default_value_t = 30)]
        horizon: usize,
        #[arg(long, default_value_t = 10)]
        readable: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
    ConverseTest {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        n: u32,
        /// Sample intersections at this parameter instead of p (power check).
        #[arg(long)]
        against: Option<f64>,
        #[arg(long, default_value_t = 30)]
        horizon: usize,
        #[arg(long, default_value_t = 8)]
        readable: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Tree,
    Process,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Uniform,
    Leftmost,
}

#[derive(Subcommand, Debug)]
pub enum Dim {
    /// Sample a path through a pruned mu_p tree.
    SamplePath {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        length: usize,
        #[arg(long, value_enum, default_value_t = PolicyArg::Leftmost)]
        policy: PolicyArg,
        #[arg(long)]
        seed: u64,
    },
    /// LZ78 compression rate of a bit string.
    Estimate {
        /// Bit string over {0,1}, or @file.
        #[arg(long)]
        bits: String,
    },
}

/// Error with the flag it concerns.
#[derive(Debug)]
pub struct UsageError {
    pub flag: String,
    pub message: String,
}

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.flag.is_empty() {
            write!(f, "error: {}", self.message)
        } else {
            write!(f, "error: {}: {}", self.flag, self.message)
        }
    }
}

type CliResult<T> = std::result::Result<T, UsageError>;

fn at<T>(flag: &str, result: crate::Result<T>) -> CliResult<T> {
    result.map_err(|e| UsageError {
        flag: flag.into(),
        message: e.to_string(),
    })
}

fn usage(flag: &str, message: impl Into<String>) -> UsageError {
    UsageError {
        flag: flag.into(),
        message: message.into(),
    }
}

/// What a command produced, renderable in each format.
struct Outcome {
    json: Value,
    plain: String,
    records: Vec<EstimateRecord>,
    verdict: Option<Verdict>,
}

impl Outcome {
    fn value(json: Value, plain: impl Into<String>) -> Self {
        Self {
            json,
            plain: plain.into(),
            records: Vec::new(),
            verdict: None,
        }
    }

    fn number(name: &str, x: f64) -> Self {
        Self::value(json!({ name: x }), format!("{x}"))
    }

    fn record(record: EstimateRecord) -> Self {
        let plain = format!(
            "{}: value={} exact={} ci=[{}, {}] trials={} seed={} limit={} tolerance={} verdict={}",
            record.name,
            record.value,
            record.exact,
            record.ci_low,
            record.ci_high,
            record.trials,
            record.master_seed,
            record.limit.map(|l| l.to_string()).unwrap_or_else(|| "-".into()),
            record.tolerance,
            verdict_word(record.verdict),
        );
        Self {
            json: to_json(&record),
            plain,
            verdict: Some(record.verdict),
            records: vec![record],
        }
    }

    fn report(report: ExperimentReport) -> Self {
        let mut plain = format!(
            "{}: seed={} horizon={} readable={} trials={} discarded={} verdict={}\n",
            report.name,
            report.seed,
            report.horizon,
            report.readable,
            report.trials,
            report.discarded,
            verdict_word(report.verdict)
        );
        for r in &report.records {
            plain.push_str(&format!(
                "  {}: value={} exact={} ci=[{}, {}] verdict={}\n",
                r.name,
                r.value,
                r.exact,
                r.ci_low,
                r.ci_high,
                verdict_word(r.verdict)
            ));
        }
        for t in &report.tests {
            plain.push_str(&format!(
                "  {}: chi2={} df={} p_value={}\n",
                t.name, t.result.statistic, t.result.df, t.result.p_value
            ));
        }
        Self {
            json: to_json(&report),
            plain: plain.trim_end().to_string(),
            verdict: Some(report.verdict),
            records: report.records,
        }
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => serde_json::to_string_pretty(&self.json).expect("serializable"),
            Format::Plain => self.plain.clone(),
            Format::Csv if !self.records.is_empty() => records_to_csv(&self.records).trim_end().to_string(),
            Format::Csv => flat_csv(&self.json),
        }
    }
}

fn verdict_word(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
    }
}

fn to_json<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("serializable")
}

/// `key,value` rows for the top-level fields of a JSON object.
fn flat_csv(json: &Value) -> String {
    let mut out = String::from("key,value");
    if let Value::Object(map) = json {
        for (k, v) in map {
            let cell = match v {
                Value::String(s) => s.clone(),
                other => other.to_string().replace(',', ";"),
            };
            out.push_str(&format!("\n{k},{cell}"));
        }
    }
    out
}

fn read_arg_file(flag: &str, value: &str) -> CliResult<String> {
    match value.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).map_err(|e| usage(flag, format!("cannot read {path}: {e}"))),
        None => Ok(value.to_string()),
    }
}

/// A single code: the literal, or the first non-empty line of `@file`.
fn code_arg(flag: &str, value: &str) -> CliResult<String> {
    let text = read_arg_file(flag, value)?;
    if value.starts_with('@') {
        Ok(text
            .lines()
            .map(str::trim)
            .find(|l| !l.is_empty())
            .unwrap_or("")
            .to_string())
    } else {
        Ok(text)
    }
}

fn codes_arg(flag: &str, value: &str) -> CliResult<Vec<String>> {
    let text = read_arg_file(flag, value)?;
    let items: Vec<String> = if value.starts_with('@') {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect()
    } else {
        text.split(',').map(|s| s.trim().to_string()).collect()
    };
    Ok(items)
}

fn resolve_law(args: &LawArgs) -> CliResult<OffspringLaw> {
    if let Some(text) = &args.law {
        let parts: Vec<f64> = text
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| usage("--law", format!("expected four numbers a0,a1,a2,a3: {e}")))?;
        let arr: [f64; 4] = parts
            .try_into()
            .map_err(|_| usage("--law", "expected exactly four numbers a0,a1,a2,a3"))?;
        return at("--law", OffspringLaw::from_array(arr));
    }
    if let (Some(b0), Some(b1)) = (args.beta0, args.beta1) {
        return at("--beta0/--beta1", SurvivalPair::new(b0, b1)).map(gw_offspring);
    }
    if let (Some(p), Some(n)) = (args.nfold_p, args.nfold_n) {
        return at("--nfold-p/--nfold-n", nfold_symbol_law(p, n));
    }
    Err(usage(
        "--law",
        "an offspring law is required: --law a0,a1,a2,a3, --beta0/--beta1, or --nfold-p/--nfold-n",
    ))
}

fn law_json(law: &OffspringLaw) -> Value {
    json!({ "a0": law.a0(), "a1": law.a1(), "a2": law.a2(), "a3": law.a3() })
}

fn check_positive(flag: &str, trials: u64) -> CliResult<()> {
    if trials == 0 {
        Err(usage(flag, "must be at least 1"))
    } else {
        Ok(())
    }
}

fn run_formula(formula: &Formula) -> CliResult<Outcome> {
    Ok(match formula {
        Formula::FN { p, n } => Outcome::number("f_n", at("--p/--n", f_n(*p, *n))?),
        Formula::FNInverse { p, n } => Outcome::number("f_n_inverse", at("--p/--n", f_n_inverse(*p, *n))?),
        Formula::Threshold { n } => Outcome::number("threshold", at("--n", threshold(*n))?),
        Formula::Thresholds { max } => {
            let values = (1..=*max).map(threshold).collect::<crate::Result<Vec<_>>>();
            let values = at("--max", values)?;
            let plain = values
                .iter()
                .enumerate()
                .map(|(i, t)| format!("{} {}", i + 1, t))
                .collect::<Vec<_>>()
                .join("\n");
            Outcome::value(json!({ "thresholds": values }), plain)
        }
        Formula::NonemptyPossible(PairArgs { p, q, r, s }) => {
            let possible = pair_nonempty_possible(*p, *q, *r, *s);
            Outcome::value(json!({ "nonempty_possible": possible }), possible.to_string())
        }
        Formula::PairEmptiness(PairArgs { p, q, r, s }) => Outcome::number(
            "pair_emptiness",
            at("--p/--q/--r/--s", pair_emptiness_prob(*p, *q, *r, *s))?,
        ),
        Formula::Induced(PairArgs { p, q, r, s }) => {
            let a = at("--p/--q", BernoulliPair::new(*p, *q))?;
            let b = at("--r/--s", BernoulliPair::new(*r, *s))?;
            let params = at("--p/--q/--r/--s", induced_pair_params(a, b))?;
            let law = pair_symbol_law(a, b);
            let plain = format!(
                "induced <{}, {}> survival ({}, {}) symbol law {:?}",
                params.induced.p,
                params.induced.q,
                params.survival.beta0,
                params.survival.beta1,
                law.probs()
            );
            let mut json = to_json(&params);
            json["symbol_law"] = law_json(&law);
            Outcome::value(json, plain)
        }
        Formula::NfoldEmptiness { p, n } => {
            Outcome::number("nfold_emptiness", at("--p/--n", nfold_emptiness_prob(*p, *n))?)
        }
        Formula::NfoldLaw { p, n } => {
            let law = at("--p/--n", nfold_symbol_law(*p, *n))?;
            Outcome::value(law_json(&law), format!("{:?}", law.probs()))
        }
        Formula::Degree { p } => {
            let report = at("--p", degree_of_intersectability(*p))?;
            let plain = format!(
                "degree {} interval [{}, {}{}",
                report.degree,
                report.interval_low,
                report.interval_high,
                if report.high_closed { "]" } else { ")" }
            );
            Outcome::value(to_json(&report), plain)
        }
        Formula::DimBound { p } => {
            let gamma = at("--p", dim_lower_bound(*p))?;
            let json = match DimBoundReport::for_p(*p) {
                Ok(report) => to_json(&report),
                // p = 0 has no finite degree
                Err(_) => json!({ "p": p, "gamma": gamma }),
            };
            Outcome::value(json, format!("{gamma}"))
        }
        Formula::GammaToP { gamma } => Outcome::number("p", at("--gamma", gamma_to_p(*gamma))?),
        Formula::MemberBound { degree } => Outcome::number("member_bound", at("--degree", member_dim_bound(*degree))?),
        Formula::MinDegree { s } => {
            let m = at("--s", min_degree_for_dim(*s))?;
            let plain = if m.exceptional {
                format!(
                    "{} (s = 1/n: degree {} not ruled out)",
                    m.degree,
                    m.degree.saturating_sub(1)
                )
            } else {
                m.degree.to_string()
            };
            Outcome::value(to_json(&m), plain)
        }
        Formula::Cylinder { p, q, sigma } => {
            let params = at("--p/--q", BernoulliPair::new(*p, *q))?;
            let sigma: TritCode = at("--sigma", sigma.parse())?;
            Outcome::number("measure", cylinder_measure(params, &sigma))
        }
        Formula::Offspring { beta0, beta1 } => {
            let law = gw_offspring(at("--beta0/--beta1", SurvivalPair::new(*beta0, *beta1))?);
            Outcome::value(law_json(&law), format!("{:?}", law.probs()))
        }
        Formula::SurvivalLimit(args) => {
            let law = resolve_law(args)?;
            Outcome::number("survival_limit", at("--law", survival_limit(law))?)
        }
        Formula::SurvivalCurve { law, levels } => {
            let curve = survival_recurrence(resolve_law(law)?, *levels);
            let plain = curve
                .values
                .iter()
                .enumerate()
                .map(|(k, r)| format!("{k} {r}"))
                .collect::<Vec<_>>()
                .join("\n");
            Outcome::value(json!({ "values": curve.values }), plain)
        }
        Formula::PrunedProbs(args) => {
            let probs = at("--law", pruned_branch_probs_general(resolve_law(args)?))?;
            let plain = format!(
                "both={} left_only={} right_only={}",
                probs.both, probs.left_only, probs.right_only
            );
            Outcome::value(to_json(&probs), plain)
        }
    })
}

fn run_estimate(estimate: &Estimate) -> CliResult<Outcome> {
    Ok(match estimate {
        Estimate::Survival {
            law,
            depth,
            trials,
            seed,
            tolerance,
        } => {
            check_positive("--trials", *trials)?;
            let law = resolve_law(law)?;
            let mut rec = at("--depth", estimate_survival(law, *depth, *trials, *seed))?;
            if let Some(t) = tolerance {
                rec = rec.with_tolerance(*t);
            }
            Outcome::record(rec)
        }
        Estimate::PairEmptiness {
            pair: PairArgs { p, q, r, s },
            depth,
            trials,
            seed,
            tolerance,
        } => {
            check_positive("--trials", *trials)?;
            let a = at("--p/--q", BernoulliPair::new(*p, *q))?;
            let b = at("--r/--s", BernoulliPair::new(*r, *s))?;
            let mut rec = at("--p/--q/--r/--s", estimate_pair_emptiness(a, b, *depth, *trials, *seed))?;
            if let Some(t) = tolerance {
                rec = rec.with_tolerance(*t);
            }
            Outcome::record(rec)
        }
        Estimate::NfoldEmptiness {
            p,
            n,
            depth,
            trials,
            seed,
            mode,
            tolerance,
        } => {
            check_positive("--trials", *trials)?;
            let mode = match mode {
                ModeArg::Tree => NfoldMode::Tree,
                ModeArg::Process => NfoldMode::Process,
            };
            let mut rec = at(
                "--p/--n",
                estimate_nfold_emptiness(*p, *n, *depth, *trials, *seed, mode),
            )?;
            if let Some(t) = tolerance {
                rec = rec.with_tolerance(*t);
            }
            Outcome::record(rec)
        }
        Estimate::PrunedFreqs {
            law,
            horizon,
            readable,
            trials,
            seed,
        } => {
            check_positive("--trials", *trials)?;
            let law = resolve_law(law)?;
            Outcome::report(at(
                "--horizon/--readable",
                pruned_frequency_experiment(law, *horizon, *readable, *trials, *seed),
            )?)
        }
        Estimate::ConverseTest {
            p,
            n,
            against,
            horizon,
            readable,
            trials,
            seed,
        } => {
            check_positive("--trials", *trials)?;
            let report = match against {
                Some(other) => converse_distribution_test_against(*p, *other, *n, *horizon, *readable, *trials, *seed),
                None => converse_distribution_test(*p, *n, *horizon, *readable, *trials, *seed),
            };
            Outcome::report(at("--p/--n", report)?)
        }
    })
}

fn run_dim(dim: &Dim) -> CliResult<Outcome> {
    Ok(match dim {
        Dim::SamplePath {
            p,
            length,
            policy,
            seed,
        } => {
            let policy = match policy {
                PolicyArg::Uniform => PathPolicy::Uniform,
                PolicyArg::Leftmost => PathPolicy::Leftmost,
            };
            let bits = at(
                "--p/--length",
                sample_member_path(*p, *length, policy, RandomStream::new(*seed, 0)),
            )?;
            let text: String = bits.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect();
            let ones = bits.iter().filter(|&&b| b == 1).count();
            Outcome::value(
                json!({ "p": p, "length": length, "seed": seed, "ones": ones, "path": text }),
                text,
            )
        }
        Dim::Estimate { bits } => {
            let text = read_arg_file("--bits", bits)?;
            let bits = text
                .chars()
                .filter(|c| !c.is_whitespace())
                .map(|c| match c {
                    '0' => Ok(0u8),
                    '1' => Ok(1u8),
                    other => Err(usage(
                        "--bits",
                        format!("unexpected character {other:?}; expected 0 or 1"),
                    )),
                })
                .collect::<CliResult<Vec<u8>>>()?;
            let est = at("--bits", estimate_dim(&bits))?;
            let plain = format!(
                "rate={} code_length={} phrases={} length={} overhead={}",
                est.rate, est.code_length, est.phrases, est.sequence_length, est.overhead
            );
            Outcome::value(to_json(&est), plain)
        }
    })
}

fn run_command(command: &Command) -> CliResult<Outcome> {
    match command {
        Command::Decode { code, depth, alphabet } => {
            let code = code_arg("--code", code)?;
            let out = match alphabet {
                Alphabet::Trit => decode_trit(&at("--code", code.parse::<TritCode>())?, *depth),
                Alphabet::Quad => decode_quad(&at("--code", code.parse::<QuadCode>())?, *depth),
            };
            let out = at("--code", out)?;
            let plain = format!(
                "{}\nconsumed={} extinct={}",
                out.tree
                    .nodes()
                    .iter()
                    .map(|n| if n.is_empty() { "ε" } else { n })
                    .collect::<Vec<_>>()
                    .join(" "),
                out.consumed,
                out.extinct
            );
            Ok(Outcome::value(to_json(&out), plain))
        }
        Command::Encode { tree, alphabet } => {
            let text = read_arg_file("--tree", tree)?;
            let tree: PrefixTree =
                serde_json::from_str(&text).map_err(|e| usage("--tree", format!("invalid tree JSON: {e}")))?;
            let code = match alphabet {
                Alphabet::Trit => at("--tree", encode_trit(&tree))?.to_string(),
                Alphabet::Quad => encode_quad(&tree).to_string(),
            };
            Ok(Outcome::value(json!({ "code": code }), code))
        }
        Command::Intersect { codes, depth } => {
            let codes = codes_arg("--codes", codes)?
                .iter()
                .map(|c| at("--codes", c.parse::<TritCode>()))
                .collect::<CliResult<Vec<_>>>()?;
            if codes.len() < 2 {
                return Err(usage("--codes", "at least two codes are required"));
            }
            let code = at("--codes", intersect_many(&codes, *depth))?;
            let empty = at("--codes", decode_quad(&code, *depth))?.extinct;
            let plain = format!(
                "{code}\n{}",
                if empty {
                    "empty intersection"
                } else {
                    "non-empty intersection"
                }
            );
            Ok(Outcome::value(
                json!({ "code": code.to_string(), "empty": empty }),
                plain,
            ))
        }
        Command::Prune {
            code,
            horizon,
            readable,
        } => {
            let code: QuadCode = at("--code", code_arg("--code", code)?.parse())?;
            match prune_code(&code, *horizon, *readable) {
                Ok(trit) => Ok(Outcome::value(
                    json!({ "code": trit.to_string(), "extinct": false }),
                    trit.to_string(),
                )),
                Err(Error::Extinct { .. }) => Ok(Outcome::value(json!({ "code": null, "extinct": true }), "extinct")),
                Err(e) => Err(usage("--code", e.to_string())),
            }
        }
        Command::Formulas(f) => run_formula(f),
        Command::Estimate(e) => run_estimate(e),
        Command::Dim(d) => run_dim(d),
    }
}

fn output_path(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

/// Parse `argv`, run the command, and write its output. Returns the exit
/// status.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let outcome = match cli.threads {
        Some(0) => Err(usage("--threads", "must be at least 1")),
        Some(threads) => match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(|| run_command(&cli.command)),
            Err(e) => Err(usage("--threads", e.to_string())),
        },
        None => run_command(&cli.command),
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            return 1;
        }
    };
    let mut text = outcome.render(cli.format);
    text.push('\n');
    match &cli.output {
        Some(path) => {
            let path = output_path(path);
            if let Err(e) = std::fs::write(&path, &text) {
                let _ = writeln!(err, "error: --output: cannot write {}: {e}", path.display());
                return 1;
            }
        }
        None => {
            let _ = out.write_all(text.as_bytes());
        }
    }
    match outcome.verdict {
        Some(Verdict::Fail) => 2,
        _ => 0,
    }
}
