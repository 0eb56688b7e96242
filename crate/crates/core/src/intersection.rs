//! Intersections of random closed sets: the code-level intersection machine,
//! the induced parameter algebra, and the closed forms for emptiness
//! probabilities, thresholds and degrees of intersectability.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::galton_watson::pruned_branch_probs;
use crate::measures::{BernoulliPair, OffspringLaw, SurvivalPair};
use crate::tree_codec::{decode_trit, encode_quad, PrefixTree, QuadCode, TritCode};

/// Tolerance used to treat a strict inequality between closed-form
/// expressions as an equality when they differ only by rounding.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

/// Node-set intersection of trees of equal depth.
pub fn intersect_trees(trees: &[&PrefixTree]) -> Result<PrefixTree> {
    let (first, rest) = trees
        .split_first()
        .ok_or_else(|| domain("at least one tree is required"))?;
    let depth = first.depth();
    if let Some(t) = rest.iter().find(|t| t.depth() != depth) {
        return Err(domain(format!(
            "trees of different depths ({} and {})",
            depth,
            t.depth()
        )));
    }
    let mut levels = first.levels().to_vec();
    for tree in rest {
        for (level, other) in levels.iter_mut().zip(tree.levels()) {
            level.retain(|v| other.binary_search(v).is_ok());
        }
    }
    Ok(PrefixTree::from_levels_unchecked(depth, levels))
}

/// Quad code of an intersection tree. Once the intersection has died the code
/// is padded with 3s to at least `depth` symbols; those trailing symbols
/// carry no information.
pub fn intersection_code(tree: &PrefixTree) -> QuadCode {
    let mut symbols = encode_quad(tree).into_inner();
    if !tree.reaches_depth() && symbols.len() < tree.depth() {
        symbols.resize(tree.depth(), 3);
    }
    QuadCode::new(symbols).expect("quad symbols")
}

/// Code for `T_x ∩ T_y` through `depth`: level by level, nodes in
/// lexicographic order, emitting 0/1/2 for the children the two trees share
/// and 3 when they share none.
pub fn intersect_codes(x: &TritCode, y: &TritCode, depth: usize) -> Result<QuadCode> {
    intersect_many(&[x.clone(), y.clone()], depth)
}

/// Code for the common part of all decoded trees.
pub fn intersect_many(codes: &[TritCode], depth: usize) -> Result<QuadCode> {
    if codes.len() < 2 {
        return Err(domain("at least two codes are required"));
    }
    let trees = codes
        .iter()
        .map(|c| decode_trit(c, depth).map(|out| out.tree))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&PrefixTree> = trees.iter().collect();
    Ok(intersection_code(&intersect_trees(&refs)?))
}

/// Parameters attached to the intersection of two relatively random closed
/// sets.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntersectionParams {
    pub inputs: Vec<BernoulliPair>,
    /// Trit law of the pruned intersection.
    pub induced: BernoulliPair,
    /// Child survival probabilities of the unpruned intersection process.
    pub survival: SurvivalPair,
}

/// Induced pair `<p + r - pr, q + s - qs>` and survival
/// `((1 - s)(1 - q), (1 - r)(1 - p))`.
pub fn induced_pair_params(a: BernoulliPair, b: BernoulliPair) -> Result<IntersectionParams> {
    let induced = BernoulliPair::new(a.p + b.p - a.p * b.p, a.q + b.q - a.q * b.q)?;
    let survival = SurvivalPair::new((1.0 - b.q) * (1.0 - a.q), (1.0 - b.p) * (1.0 - a.p))?;
    Ok(IntersectionParams {
        inputs: vec![a, b],
        induced,
        survival,
    })
}

/// Joint law of the shared-children symbol at a common node of two
/// independent trees with trit laws `a = <p,q>` and `b = <r,s>`.
pub fn pair_symbol_law(a: BernoulliPair, b: BernoulliPair) -> OffspringLaw {
    let (p, q, r, s) = (a.p, a.q, b.p, b.q);
    let (both_a, both_b) = (1.0 - p - q, 1.0 - r - s);
    OffspringLaw::new(
        p * r + p * both_b + r * both_a,
        q * s + q * both_b + s * both_a,
        both_a * both_b,
        p * s + q * r,
    )
    .expect("pair law sums to one")
}

/// Joint law of the shared-children symbol across `n` independent trees with
/// the symmetric law `<p,p>`: both children are common with probability
/// `(1-2p)^n`, the left one with `(1-p)^n`.
pub fn nfold_symbol_law(p: f64, n: u32) -> Result<OffspringLaw> {
    if !(0.0..0.5).contains(&p) {
        return Err(domain(format!("p={p} must lie in [0, 1/2)")));
    }
    if n == 0 {
        return Err(domain("n must be at least 1"));
    }
    let both = (1.0 - 2.0 * p).powi(n as i32);
    let left = (1.0 - p).powi(n as i32);
    let one_side = left - both;
    let neither = 1.0 - 2.0 * left + both;
    OffspringLaw::new(one_side, one_side, both, neither.max(0.0))
}

fn check_unit_half(p: f64) -> Result<()> {
    if p.is_finite() && (0.0..=0.5).contains(&p) {
        Ok(())
    } else {
        Err(domain(format!("p={p} must lie in [0, 1/2]")))
    }
}

/// `f_n(p) = 1 - (1 - p)^n`, the symmetric parameter of an n-fold
/// intersection.
pub fn f_n(p: f64, n: u32) -> Result<f64> {
    check_unit_half(p)?;
    if n == 0 {
        return Err(domain("n must be at least 1"));
    }
    Ok(-(f64::from(n) * (-p).ln_1p()).exp_m1())
}

/// `1 - (1 - p)^(1/n)`.
pub fn f_n_inverse(p: f64, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(domain("n must be at least 1"));
    }
    let upper = 1.0 - 0.5f64.powi(n as i32);
    if !p.is_finite() || p < 0.0 || p > upper + BOUNDARY_TOLERANCE {
        return Err(domain(format!("p={p} must lie in [0, 1 - 2^-{n}]")));
    }
    Ok(-((-p).ln_1p() / f64::from(n)).exp_m1())
}

/// `p_n = 1 - 2^(-1/n)`: at or above it, `n` mutually random closed sets
/// have empty intersection.
pub fn threshold(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(domain("n must be at least 1"));
    }
    Ok(-(-std::f64::consts::LN_2 / f64::from(n)).exp_m1())
}

fn check_pair(name: &str, x: f64, y: f64) -> Result<BernoulliPair> {
    BernoulliPair::new(x, y).map_err(|e| domain(format!("{name}: {e}")))
}

/// True iff `p + q + r + s < 1 + pr + qs`, i.e. the intersection can be
/// non-empty. Sums within [`BOUNDARY_TOLERANCE`] of each other count as
/// equal.
pub fn pair_nonempty_possible(p: f64, q: f64, r: f64, s: f64) -> bool {
    p + q + r + s < 1.0 + p * r + q * s - BOUNDARY_TOLERANCE
}

/// Probability that the intersection is empty,
/// `(ps + qr) / ((1 - p - q)(1 - r - s))`.
pub fn pair_emptiness_prob(p: f64, q: f64, r: f64, s: f64) -> Result<f64> {
    check_pair("<p,q>", p, q)?;
    check_pair("<r,s>", r, s)?;
    if !(p + q < 1.0 && r + s < 1.0) {
        return Err(domain("requires p + q < 1 and r + s < 1"));
    }
    if !pair_nonempty_possible(p, q, r, s) {
        return Err(domain(format!(
            "p + q + r + s = {} is not below 1 + pr + qs = {}: the intersection is always empty",
            p + q + r + s,
            1.0 + p * r + q * s
        )));
    }
    Ok((p * s + q * r) / ((1.0 - p - q) * (1.0 - r - s)))
}

/// `1 - (1 - 2 f_n(p)) / (1 - 2p)^n`, for `p` below the threshold.
pub fn nfold_emptiness_prob(p: f64, n: u32) -> Result<f64> {
    let cut = threshold(n)?;
    check_unit_half(p)?;
    if p >= cut {
        return Err(domain(format!(
            "p={p} is not below the threshold 1 - 2^(-1/{n}) = {cut}"
        )));
    }
    let f = f_n(p, n)?;
    Ok(1.0 - (1.0 - 2.0 * f) / (1.0 - 2.0 * p).powi(n as i32))
}

/// Degree of intersectability with the parameter interval that contains `p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DegreeReport {
    pub p: f64,
    pub degree: u64,
    /// `[threshold(degree + 1), threshold(degree))`; closed at `1/2` for
    /// degree 1.
    pub interval_low: f64,
    pub interval_high: f64,
    pub high_closed: bool,
}

fn threshold_u64(n: u64) -> f64 {
    -(-std::f64::consts::LN_2 / n as f64).exp_m1()
}

/// The `n` with `threshold(n + 1) <= p < threshold(n)`; degree 1 covers
/// `[1 - 1/sqrt 2, 1/2]`.
pub fn degree_of_intersectability(p: f64) -> Result<DegreeReport> {
    if !(p.is_finite() && p > 0.0 && p <= 0.5) {
        return Err(domain(format!("p={p} must lie in (0, 1/2]")));
    }
    // threshold(n) > p  <=>  n < 1/gamma with gamma = -log2(1 - p)
    let gamma = -(-p).ln_1p() / std::f64::consts::LN_2;
    let mut n = ((1.0 / gamma).ceil() as u64).saturating_sub(1).max(1);
    while n > 1 && threshold_u64(n) <= p {
        n -= 1;
    }
    while threshold_u64(n + 1) > p {
        n += 1;
    }
    Ok(DegreeReport {
        p,
        degree: n,
        interval_low: threshold_u64(n + 1),
        interval_high: threshold_u64(n),
        high_closed: n == 1,
    })
}

/// Check `f_{n+1}(p) = p + f_n(p) - p f_n(p)` within `1e-12`.
pub fn polynomial_recurrence_check(p: f64, n: u32) -> Result<bool> {
    let next = f_n(p, n + 1)?;
    let current = f_n(p, n)?;
    Ok((next - (p + current - p * current)).abs() <= 1e-12)
}

/// Child survival pair of the product-form process with the same child
/// marginals as `law`.
pub fn marginal_survival(law: &OffspringLaw) -> Result<SurvivalPair> {
    let (b0, b1) = law.child_marginals();
    SurvivalPair::new(b0, b1)
}

/// Pruned law of the product-form process with the marginals of `law`; equal
/// to the general pruned law whenever `law` is supercritical.
pub fn marginal_pruned_probs(law: &OffspringLaw) -> Result<crate::galton_watson::BranchProbs> {
    marginal_survival(law).map(pruned_branch_probs)
}
