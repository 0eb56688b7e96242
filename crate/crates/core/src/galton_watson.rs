//! Galton-Watson trees coded by quad sequences: exact finite-depth survival,
//! the extinction and pruned-branching closed forms, samplers, and pruning of
//! dead ends at a finite horizon.
//!
//! Pruning keeps the nodes that have a descendant at the horizon `d`. A node
//! at level `k` that is kept this way dies out later with probability
//! `r_{d-k} - l`, where `r_n` is the survival curve and `l` its limit, so the
//! horizon controls the bias of every statistic read from pruned trees.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{OffspringLaw, QuadSymbols, RandomStream, SurvivalPair};
use crate::tree_codec::{decode_quad, decode_quad_from, encode_trit, PrefixTree, QuadCode, TritCode};

/// Node budget used when materializing sampled trees.
pub const DEFAULT_NODE_BUDGET: usize = 10_000_000;

/// `r_0, ..., r_n`: probability that the process has a node at each level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurvivalCurve {
    pub values: Vec<f64>,
    pub law: OffspringLaw,
}

impl SurvivalCurve {
    pub fn at(&self, level: usize) -> f64 {
        self.values[level]
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("curve always holds r_0")
    }
}

/// One step of the survival recurrence.
#[inline]
pub fn survival_step(law: &OffspringLaw, r: f64) -> f64 {
    (law.a0() + law.a1()) * r + law.a2() * (2.0 * r - r * r)
}

/// Exact survival probabilities through level `n`: `r_0 = 1` and
/// `r_{k+1} = (a0 + a1) r_k + a2 (2 r_k - r_k^2)`.
pub fn survival_recurrence(law: OffspringLaw, n: usize) -> SurvivalCurve {
    let mut values = Vec::with_capacity(n + 1);
    let mut r = 1.0;
    values.push(r);
    for _ in 0..n {
        r = survival_step(&law, r);
        values.push(r);
    }
    SurvivalCurve { values, law }
}

/// Probability that the tree is infinite, `max(0, (a2 - a3) / a2)`.
pub fn survival_limit(law: OffspringLaw) -> Result<f64> {
    if law.a2() <= 0.0 {
        return Err(Error::DegenerateLaw);
    }
    Ok(((law.a2() - law.a3()) / law.a2()).max(0.0))
}

/// Law of a node of the pruned tree: both children, left only, right only.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BranchProbs {
    pub both: f64,
    pub left_only: f64,
    pub right_only: f64,
}

impl BranchProbs {
    /// Probabilities indexed by trit symbol (0 left, 1 right, 2 both).
    pub fn by_symbol(&self) -> [f64; 3] {
        [self.left_only, self.right_only, self.both]
    }
}

/// Pruned-tree branching law for a product-form process:
/// `(b0 + b1 - 1, 1 - b1, 1 - b0)`.
pub fn pruned_branch_probs(params: SurvivalPair) -> BranchProbs {
    BranchProbs {
        both: params.beta0 + params.beta1 - 1.0,
        left_only: 1.0 - params.beta1,
        right_only: 1.0 - params.beta0,
    }
}

/// Pruned-tree branching law for any supercritical offspring law:
/// `(a2 - a3, a0 + a3, a1 + a3)`.
///
/// With `l` the survival probability, a node of the pruned tree has both
/// children with probability `a2 l^2 / l = a2 l = a2 - a3`, and only a left
/// child with probability `(a0 l + a2 l (1 - l)) / l = a0 + a2 (1 - l) =
/// a0 + a3`. For a product law this reduces to the `beta` form above.
pub fn pruned_branch_probs_general(law: OffspringLaw) -> Result<BranchProbs> {
    if law.a2() <= law.a3() {
        return Err(Error::SubcriticalLaw {
            a2: law.a2(),
            a3: law.a3(),
        });
    }
    Ok(BranchProbs {
        both: law.a2() - law.a3(),
        left_only: law.a0() + law.a3(),
        right_only: law.a1() + law.a3(),
    })
}

/// Breadth-first sample of a tree through `depth`, by decoding a random quad
/// code drawn symbol by symbol.
pub fn sample_gw_tree(law: OffspringLaw, depth: usize, stream: RandomStream) -> Result<PrefixTree> {
    sample_gw_tree_with_budget(law, depth, &mut stream.rng(), DEFAULT_NODE_BUDGET)
}

pub fn sample_gw_tree_with_budget<R: Rng + ?Sized>(
    law: OffspringLaw,
    depth: usize,
    rng: &mut R,
    budget: usize,
) -> Result<PrefixTree> {
    decode_quad_from(QuadSymbols::new(law, rng), depth, budget).map(|out| out.tree)
}

/// Whether a fresh process started at one node has a descendant `levels`
/// generations down. Depth-first with early exit, so only the part of the
/// tree needed to decide is generated.
pub fn survives_to<R: Rng + ?Sized>(law: &OffspringLaw, levels: usize, rng: &mut R) -> bool {
    let mut stack = vec![levels];
    while let Some(remaining) = stack.pop() {
        if remaining == 0 {
            return true;
        }
        match law.sample(rng) {
            0 | 1 => stack.push(remaining - 1),
            2 => {
                stack.push(remaining - 1);
                stack.push(remaining - 1);
            }
            _ => {}
        }
    }
    false
}

/// A tree with its dead ends (relative to `horizon`) removed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PrunedTree {
    pub tree: PrefixTree,
    pub horizon: usize,
    pub readable_depth: usize,
}

impl PrunedTree {
    /// The pruned tree cut at the readable depth.
    pub fn readable(&self) -> PrefixTree {
        self.tree
            .restrict(self.readable_depth)
            .expect("readable depth never exceeds the horizon")
    }
}

/// Keep the nodes of each level that have a child among the kept nodes of the
/// level below, starting from the `bottom` level as given.
fn keep_extendible(levels: &[Vec<u64>]) -> Vec<Vec<u64>> {
    let mut kept: Vec<Vec<u64>> = vec![Vec::new(); levels.len()];
    let bottom = levels.len() - 1;
    kept[bottom] = levels[bottom].clone();
    for k in (0..bottom).rev() {
        let below = &kept[k + 1];
        let mut j = 0;
        let mut level = Vec::new();
        for &v in &levels[k] {
            while j < below.len() && below[j] >> 1 < v {
                j += 1;
            }
            if j < below.len() && below[j] >> 1 == v {
                level.push(v);
            }
        }
        kept[k] = level;
    }
    kept
}

/// Remove every node without a descendant at level `tree.depth()`.
pub fn prune_to_depth(tree: &PrefixTree, readable_depth: usize) -> Result<PrunedTree> {
    let horizon = tree.depth();
    if readable_depth > horizon {
        return Err(Error::LevelOutOfRange {
            level: readable_depth,
            depth: horizon,
        });
    }
    if !tree.reaches_depth() {
        return Err(Error::Extinct { horizon });
    }
    let kept = keep_extendible(tree.levels());
    Ok(PrunedTree {
        tree: PrefixTree::from_levels_unchecked(horizon, kept),
        horizon,
        readable_depth,
    })
}

/// Decode a quad code to the horizon, prune, and re-encode the first
/// `readable_depth` levels as a trit code.
pub fn prune_code(code: &QuadCode, horizon: usize, readable_depth: usize) -> Result<TritCode> {
    if readable_depth > horizon {
        return Err(Error::LevelOutOfRange {
            level: readable_depth,
            depth: horizon,
        });
    }
    let decoded = decode_quad(code, horizon)?;
    let pruned = prune_to_depth(&decoded.tree, readable_depth)?;
    encode_trit(&pruned.readable())
}

/// Sample the pruned tree through `readable_depth`, certified against
/// `horizon`, without materializing levels below `readable_depth`: the top
/// levels are generated breadth-first and each bottom node is then checked
/// for a descendant at the horizon with [`survives_to`].
///
/// Has the same distribution as `prune_to_depth(sample_gw_tree(..))` cut at
/// `readable_depth`.
pub fn sample_pruned_prefix<R: Rng + ?Sized>(
    law: &OffspringLaw,
    horizon: usize,
    readable_depth: usize,
    rng: &mut R,
) -> Result<PrefixTree> {
    if readable_depth > horizon {
        return Err(Error::LevelOutOfRange {
            level: readable_depth,
            depth: horizon,
        });
    }
    let top = decode_quad_from(QuadSymbols::new(*law, &mut *rng), readable_depth, DEFAULT_NODE_BUDGET)?.tree;
    let mut levels = top.levels().to_vec();
    let remaining = horizon - readable_depth;
    levels[readable_depth].retain(|_| survives_to(law, remaining, rng));
    if levels[readable_depth].is_empty() {
        return Err(Error::Extinct { horizon });
    }
    let kept = keep_extendible(&levels);
    Ok(PrefixTree::from_levels_unchecked(readable_depth, kept))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::gw_offspring;
    use approx::assert_abs_diff_eq;

    fn law(a: [f64; 4]) -> OffspringLaw {
        OffspringLaw::from_array(a).unwrap()
    }

    const PRODUCT_08: [f64; 4] = [0.16, 0.16, 0.64, 0.04];
    const NFOLD_02_2: [f64; 4] = [0.28, 0.28, 0.36, 0.08];

    #[test]
    fn recurrence_examples() {
        let full = survival_recurrence(law([0.0, 0.0, 1.0, 0.0]), 5);
        assert!(full.values.iter().all(|&r| r == 1.0));
        let curve = survival_recurrence(law(PRODUCT_08), 200);
        assert_abs_diff_eq!(curve.at(1), 0.96, epsilon = 1e-12);
        assert_abs_diff_eq!(curve.last(), 0.9375, epsilon = 1e-9);
        assert_eq!(curve.values.len(), 201);
        assert_eq!(curve.at(0), 1.0);
    }

    #[test]
    fn limit_examples() {
        assert_abs_diff_eq!(survival_limit(law(PRODUCT_08)).unwrap(), 0.9375, epsilon = 1e-12);
        let critical = gw_offspring(SurvivalPair::new(0.4, 0.6).unwrap());
        assert_abs_diff_eq!(survival_limit(critical).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(survival_limit(law(NFOLD_02_2)).unwrap(), 7.0 / 9.0, epsilon = 1e-12);
        assert_eq!(survival_limit(law([0.5, 0.5, 0.0, 0.0])), Err(Error::DegenerateLaw));
        // subcritical clamps at zero
        assert_eq!(survival_limit(law([0.2, 0.2, 0.2, 0.4])).unwrap(), 0.0);
    }

    #[test]
    fn limit_is_fixed_point() {
        for a2 in [0.3, 0.5, 0.64, 0.9] {
            for a3 in [0.0, 0.05, 0.2] {
                if a3 >= a2 || a2 + a3 > 1.0 {
                    continue;
                }
                let rest = (1.0 - a2 - a3) / 2.0;
                let l = law([rest, rest, a2, a3]);
                let limit = survival_limit(l).unwrap();
                assert_abs_diff_eq!(survival_step(&l, limit), limit, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn pruned_probs_examples() {
        let b = pruned_branch_probs(SurvivalPair::new(0.8, 0.8).unwrap());
        assert_abs_diff_eq!(b.both, 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(b.left_only, 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(b.right_only, 0.2, epsilon = 1e-12);
        let (p, q) = (0.3, 0.1);
        let b = pruned_branch_probs(SurvivalPair::new(1.0 - q, 1.0 - p).unwrap());
        assert_abs_diff_eq!(b.both, 1.0 - p - q, epsilon = 1e-12);
        assert_abs_diff_eq!(b.left_only, p, epsilon = 1e-12);
        assert_abs_diff_eq!(b.right_only, q, epsilon = 1e-12);
        let b = pruned_branch_probs(SurvivalPair::new(0.5, 0.5).unwrap());
        assert_eq!(b.by_symbol(), [0.5, 0.5, 0.0]);
    }

    #[test]
    fn general_pruned_probs() {
        let g = pruned_branch_probs_general(law(PRODUCT_08)).unwrap();
        assert_abs_diff_eq!(g.both, 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(g.left_only, 0.2, epsilon = 1e-12);
        let g = pruned_branch_probs_general(law(NFOLD_02_2)).unwrap();
        assert_abs_diff_eq!(g.both, 0.28, epsilon = 1e-12);
        assert_abs_diff_eq!(g.left_only, 0.36, epsilon = 1e-12);
        assert_abs_diff_eq!(g.right_only, 0.36, epsilon = 1e-12);
        let g = pruned_branch_probs_general(law([0.0, 0.0, 1.0, 0.0])).unwrap();
        assert_eq!(g.by_symbol(), [0.0, 0.0, 1.0]);
        assert!(matches!(
            pruned_branch_probs_general(law([0.25; 4])),
            Err(Error::SubcriticalLaw { .. })
        ));
    }

    #[test]
    fn sample_gw_tree_degenerate_laws() {
        let stream = RandomStream::new(1, 0);
        let full = sample_gw_tree(law([0.0, 0.0, 1.0, 0.0]), 3, stream).unwrap();
        assert_eq!(full.node_count(), 15);
        let dead = sample_gw_tree(law([0.0, 0.0, 0.0, 1.0]), 7, stream).unwrap();
        assert_eq!(dead.nodes(), [""]);
    }

    #[test]
    fn sample_gw_tree_budget() {
        let err = sample_gw_tree_with_budget(law([0.0, 0.0, 1.0, 0.0]), 20, &mut RandomStream::new(1, 0).rng(), 1000)
            .unwrap_err();
        assert_eq!(err, Error::BudgetExceeded { level: 9, budget: 1000 });
    }

    #[test]
    fn sampled_survival_matches_recurrence() {
        let l = law(PRODUCT_08);
        let trials = 10_000;
        let hits = (0..trials)
            .filter(|&i| sample_gw_tree(l, 12, RandomStream::new(99, i)).unwrap().reaches_depth())
            .count();
        let r12 = survival_recurrence(l, 12).at(12);
        assert_abs_diff_eq!(hits as f64 / trials as f64, r12, epsilon = 0.015);
    }

    #[test]
    fn prune_examples() {
        let full = PrefixTree::full(5).unwrap();
        let pruned = prune_to_depth(&full, 5).unwrap();
        assert_eq!(pruned.tree, full);
        assert_eq!(pruned.horizon, 5);

        let t = PrefixTree::from_nodes(2, ["", "0", "1", "00"]).unwrap();
        let pruned = prune_to_depth(&t, 1).unwrap();
        assert_eq!(pruned.readable().nodes(), ["", "0"]);
        assert_eq!(pruned.tree.nodes(), ["", "0", "00"]);

        let t = PrefixTree::from_nodes(2, ["", "0", "1"]).unwrap();
        assert_eq!(prune_to_depth(&t, 1).unwrap_err(), Error::Extinct { horizon: 2 });
        assert!(matches!(prune_to_depth(&t, 3), Err(Error::LevelOutOfRange { .. })));
    }

    #[test]
    fn prune_is_idempotent() {
        let l = law([0.2, 0.2, 0.45, 0.15]);
        for i in 0..200 {
            let tree = sample_gw_tree(l, 10, RandomStream::new(3, i)).unwrap();
            let Ok(once) = prune_to_depth(&tree, 10) else {
                continue;
            };
            let twice = prune_to_depth(&once.tree, 10).unwrap();
            assert_eq!(once, twice);
            assert!(once.tree.is_dead_end_free());
        }
    }

    #[test]
    fn prune_code_examples() {
        let full_code = QuadCode::repeat(2, 63).unwrap();
        assert_eq!(prune_code(&full_code, 5, 3).unwrap(), TritCode::repeat(2, 7).unwrap());
        // the 3 sits on node "0": the left subtree dies and the right one continues
        let code: QuadCode = "2300000".parse().unwrap();
        assert_eq!(prune_code(&code, 4, 2).unwrap().to_string(), "10");
        // killing node "1" instead leaves the left path
        let code: QuadCode = "2030000".parse().unwrap();
        assert_eq!(prune_code(&code, 4, 2).unwrap().to_string(), "00");
        let code: QuadCode = "3".parse().unwrap();
        assert_eq!(prune_code(&code, 4, 2).unwrap_err(), Error::Extinct { horizon: 4 });
    }

    #[test]
    fn lazy_pruning_agrees_with_materialized_pruning() {
        // Same law, different randomness: compare symbol-2 frequencies.
        let l = law(NFOLD_02_2);
        let (horizon, readable) = (14, 4);
        let mut lazy = [0u64; 3];
        let mut full = [0u64; 3];
        for i in 0..4000 {
            let mut rng = RandomStream::new(21, i).rng();
            if let Ok(t) = sample_pruned_prefix(&l, horizon, readable, &mut rng) {
                for s in encode_trit(&t).unwrap().symbols() {
                    lazy[*s as usize] += 1;
                }
            }
            let tree = sample_gw_tree(l, horizon, RandomStream::new(22, i)).unwrap();
            if let Ok(p) = prune_to_depth(&tree, readable) {
                for s in encode_trit(&p.readable()).unwrap().symbols() {
                    full[*s as usize] += 1;
                }
            }
        }
        let frac = |c: [u64; 3]| c[2] as f64 / c.iter().sum::<u64>() as f64;
        assert_abs_diff_eq!(frac(lazy), frac(full), epsilon = 0.02);
        assert_abs_diff_eq!(frac(lazy), 0.28, epsilon = 0.02);
    }

    #[test]
    fn survives_to_trivial_cases() {
        let mut rng = RandomStream::new(0, 0).rng();
        assert!(survives_to(&law([0.0, 0.0, 0.0, 1.0]), 0, &mut rng));
        assert!(!survives_to(&law([0.0, 0.0, 0.0, 1.0]), 1, &mut rng));
        assert!(survives_to(&law([1.0, 0.0, 0.0, 0.0]), 500, &mut rng));
    }
}
