mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use common::{naive_decode, nfold_oracle, set_intersection, survival_oracle};
use randclosed::dimension::{dim_lower_bound, estimate_dim, gamma_to_p};
use randclosed::galton_watson::{
    prune_to_depth, pruned_branch_probs, pruned_branch_probs_general, sample_gw_tree, survival_limit,
    survival_recurrence,
};
use randclosed::intersection::{
    f_n, f_n_inverse, intersect_codes, intersect_many, nfold_emptiness_prob, nfold_symbol_law, threshold,
};
use randclosed::measures::{gw_offspring, RandomStream, SurvivalPair};
use randclosed::tree_codec::{decode_quad, decode_trit, encode_quad, encode_trit, PrefixTree};
use randclosed::{QuadCode, TritCode};

fn trit_code(max_depth: usize) -> impl Strategy<Value = (Vec<u8>, usize)> {
    (1..=max_depth).prop_flat_map(|d| (prop::collection::vec(0u8..3, (1 << d) - 1), Just(d)))
}

fn quad_code(max_depth: usize) -> impl Strategy<Value = (Vec<u8>, usize)> {
    (1..=max_depth).prop_flat_map(|d| (prop::collection::vec(0u8..4, (1 << d) - 1), Just(d)))
}

fn node_set(tree: &PrefixTree) -> BTreeSet<String> {
    tree.nodes().into_iter().collect()
}

fn is_prefix_closed(nodes: &BTreeSet<String>) -> bool {
    nodes.contains("") && nodes.iter().all(|n| n.is_empty() || nodes.contains(&n[..n.len() - 1]))
}

proptest! {
    #[test]
    fn trit_decode_matches_oracle((symbols, depth) in trit_code(10)) {
        let code = TritCode::new(symbols.clone()).unwrap();
        let out = decode_trit(&code, depth).unwrap();
        prop_assert_eq!(Some(node_set(&out.tree)), naive_decode(&symbols, depth));
        prop_assert!(out.tree.is_dead_end_free());
        prop_assert!(is_prefix_closed(&node_set(&out.tree)));
    }

    #[test]
    fn trit_roundtrip((symbols, depth) in trit_code(10)) {
        let code = TritCode::new(symbols).unwrap();
        let out = decode_trit(&code, depth).unwrap();
        let encoded = encode_trit(&out.tree).unwrap();
        prop_assert!(encoded.is_prefix_of(&code));
        prop_assert_eq!(encoded.len(), out.consumed);
        prop_assert_eq!(decode_trit(&encoded, depth).unwrap().tree, out.tree);
    }

    #[test]
    fn trit_restriction_is_shallower_decode((symbols, depth) in trit_code(10), cut in 0usize..10) {
        let cut = cut.min(depth);
        let code = TritCode::new(symbols).unwrap();
        let deep = decode_trit(&code, depth).unwrap().tree;
        prop_assert_eq!(deep.restrict(cut).unwrap(), decode_trit(&code, cut).unwrap().tree);
    }

    #[test]
    fn quad_roundtrip((symbols, depth) in quad_code(10), cut in 0usize..10) {
        let code = QuadCode::new(symbols.clone()).unwrap();
        let out = decode_quad(&code, depth).unwrap();
        prop_assert_eq!(Some(node_set(&out.tree)), naive_decode(&symbols, depth));
        prop_assert_eq!(out.extinct, !out.tree.reaches_depth());
        let encoded = encode_quad(&out.tree);
        prop_assert!(encoded.is_prefix_of(&code));
        prop_assert_eq!(decode_quad(&encoded, depth).unwrap().tree, out.tree.clone());
        let cut = cut.min(depth);
        prop_assert_eq!(out.tree.restrict(cut).unwrap(), decode_quad(&code, cut).unwrap().tree);
    }

    #[test]
    fn intersection_matches_set_oracle(
        (a, depth) in trit_code(8),
        seed_b in prop::collection::vec(0u8..3, 255),
        seed_c in prop::collection::vec(0u8..3, 255),
    ) {
        let len = (1 << depth) - 1;
        let inputs = [a, seed_b[..len].to_vec(), seed_c[..len].to_vec()];
        let codes: Vec<TritCode> = inputs.iter().map(|s| TritCode::new(s.clone()).unwrap()).collect();
        let sets: Vec<_> = inputs.iter().map(|s| naive_decode(s, depth).unwrap()).collect();
        let decoded = |q: &QuadCode| node_set(&decode_quad(q, depth).unwrap().tree);

        let pair = decoded(&intersect_codes(&codes[0], &codes[1], depth).unwrap());
        prop_assert_eq!(&pair, &set_intersection(&sets[..2]));
        let all = decoded(&intersect_many(&codes, depth).unwrap());
        prop_assert_eq!(&all, &set_intersection(&sets));
        prop_assert!(is_prefix_closed(&all));

        for order in [[1, 0, 2], [2, 1, 0], [1, 2, 0]] {
            let permuted: Vec<TritCode> = order.iter().map(|&i| codes[i].clone()).collect();
            prop_assert_eq!(&decoded(&intersect_many(&permuted, depth).unwrap()), &all);
        }
        let swapped = decoded(&intersect_codes(&codes[1], &codes[0], depth).unwrap());
        prop_assert_eq!(swapped, pair);
    }

    #[test]
    fn intersecting_with_full_code_is_identity((symbols, depth) in trit_code(9)) {
        let code = TritCode::new(symbols).unwrap();
        let full = TritCode::repeat(2, (1 << depth) - 1).unwrap();
        let result = intersect_codes(&code, &full, depth).unwrap();
        prop_assert_eq!(
            decode_quad(&result, depth).unwrap().tree,
            decode_trit(&code, depth).unwrap().tree
        );
    }

    #[test]
    fn pruning_keeps_only_extendible_nodes(seed in any::<u64>(), m in 0usize..6) {
        let law = gw_offspring(SurvivalPair::new(0.7, 0.75).unwrap());
        let tree = sample_gw_tree(law, 8, RandomStream::new(seed, 0)).unwrap();
        match prune_to_depth(&tree, m) {
            Ok(pruned) => {
                let readable = pruned.readable();
                prop_assert!(readable.is_dead_end_free());
                for node in readable.nodes() {
                    // some extension of the node reaches the horizon
                    let deep = tree.nodes().into_iter().any(|n| n.len() == 8 && n.starts_with(&node));
                    prop_assert!(deep);
                }
                let again = prune_to_depth(&pruned.tree, m).unwrap();
                prop_assert_eq!(again.tree, pruned.tree);
            }
            Err(_) => prop_assert!(!tree.reaches_depth()),
        }
    }

    #[test]
    fn f_n_inverse_is_inverse(p in 0.0f64..0.5, n in 1u32..40) {
        let f = f_n(p, n).unwrap();
        // recovering p from f loses the digits of 1 - f = (1 - p)^n
        let tol = 1e-14 / (1.0 - f);
        prop_assert!((f_n_inverse(f, n).unwrap() - p).abs() < tol.max(1e-12));
        prop_assert!((f - (1.0 - (1.0 - p).powi(n as i32))).abs() < 1e-12);
    }

    #[test]
    fn lem_poly2_equivalence(p in 0.0f64..=0.5, n in 1u32..=20) {
        let cut = threshold(n).unwrap();
        prop_assume!((p - cut).abs() > 1e-12);
        prop_assert_eq!(f_n(p, n).unwrap() < 0.5, p < cut);
    }

    #[test]
    fn nfold_consistency_chain(u in 0.0f64..0.999, n in 1u32..=10) {
        let p = u * threshold(n).unwrap();
        let law = nfold_symbol_law(p, n).unwrap();
        let oracle = nfold_oracle(p, n);
        for (x, y) in law.probs().iter().zip(oracle) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        let closed = nfold_emptiness_prob(p, n).unwrap();
        prop_assert!((closed - (1.0 - survival_limit(law).unwrap())).abs() < 1e-12);
        let pruned = pruned_branch_probs_general(law).unwrap();
        let f = f_n(p, n).unwrap();
        prop_assert!((pruned.both - (1.0 - 2.0 * f)).abs() < 1e-12);
        prop_assert!((pruned.left_only - f).abs() < 1e-12);
        prop_assert!((pruned.right_only - f).abs() < 1e-12);
    }

    #[test]
    fn survival_recurrence_matches_oracle(b0 in 0.5f64..1.0, b1 in 0.5f64..1.0, depth in 0usize..80) {
        prop_assume!(b0 + b1 > 1.0 && b0 < 1.0 && b1 < 1.0);
        let pair = SurvivalPair::new(b0, b1).unwrap();
        let law = gw_offspring(pair);
        let curve = survival_recurrence(law, depth);
        prop_assert!((curve.last() - survival_oracle(law.probs(), depth)).abs() < 1e-12);
        let limit = survival_limit(law).unwrap();
        prop_assert!(curve.values.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        prop_assert!(curve.last() >= limit - 1e-12);
        let general = pruned_branch_probs_general(law).unwrap();
        let product = pruned_branch_probs(pair);
        prop_assert!((general.both - product.both).abs() < 1e-12);
        prop_assert!((general.left_only - product.left_only).abs() < 1e-12);
    }

    #[test]
    fn dim_bound_and_gamma_are_inverse(p in 0.0f64..=0.5) {
        let gamma = dim_lower_bound(p).unwrap();
        prop_assert!((gamma_to_p(gamma).unwrap() - p).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lz78_self_concatenation(bits in prop::collection::vec(0u8..2, 1024..4096)) {
        let once = estimate_dim(&bits).unwrap();
        let doubled: Vec<u8> = bits.iter().chain(&bits).copied().collect();
        let twice = estimate_dim(&doubled).unwrap();
        prop_assert!(twice.rate <= once.rate + twice.overhead.max(0.0) + 1e-12);
        prop_assert!(once.rate <= 1.0 + once.overhead + 1e-12);
    }
}
