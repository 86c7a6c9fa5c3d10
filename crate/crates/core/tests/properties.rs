use proptest::prelude::*;

use fiberwalk::movesets::{
    bivariate_lifted_moves, bivariate_logistic_config, bivariate_unit_moves, lawrence_lifting, poisson_moves,
    segre_markov_basis, segre_product, univariate_adjacent_moves, univariate_poisson_config,
};
use fiberwalk::tables::{apply_move, is_move, sufficient_statistic};
use fiberwalk::{Count, Move, Sign, Table};

fn bivariate_case() -> impl Strategy<Value = (usize, usize, Vec<Count>, usize, bool)> {
    (1usize..=4, 1usize..=3)
        .prop_filter("need at least three cells", |(j, k)| j * k >= 3)
        .prop_flat_map(|(j, k)| {
            (
                Just(j),
                Just(k),
                prop::collection::vec(0..4i64, 2 * j * k),
                any::<prop::sample::Index>().prop_map(|i| i.index(usize::MAX)),
                any::<bool>(),
            )
        })
}

proptest! {
    #[test]
    fn moves_preserve_statistic_and_stay_nonnegative((j, k, counts, pick, plus) in bivariate_case()) {
        let config = bivariate_logistic_config(j, k).unwrap();
        let moves = bivariate_lifted_moves(j, k).unwrap();
        let x = Table::new(vec![2, j, k], counts).unwrap();
        let z = &moves.moves()[pick % moves.len()];
        let sign = if plus { Sign::Plus } else { Sign::Minus };
        if let Some(y) = apply_move(&x, z, sign).unwrap() {
            prop_assert!(y.counts().iter().all(|&c| c >= 0));
            prop_assert_eq!(sufficient_statistic(&config, &y).unwrap(), sufficient_statistic(&config, &x).unwrap());
        } else {
            let s = sign.factor();
            prop_assert!(z.entries().iter().any(|&(p, d)| x.counts()[p] + s * d < 0));
        }
    }

    #[test]
    fn lifted_moves_balance_degrees(j in 1usize..=5, k in 1usize..=4) {
        prop_assume!(j * k >= 3);
        for z in bivariate_unit_moves(j, k).unwrap().moves() {
            prop_assert_eq!(z.degree(), z.negative_degree());
            prop_assert_eq!(z.entries().iter().map(|&(_, d)| d).sum::<Count>(), 0);
        }
    }

    #[test]
    fn segre_moves_are_kernel_elements(j in 2usize..=4, k in 2usize..=4) {
        let ab = segre_product(&univariate_poisson_config(j).unwrap(), &univariate_poisson_config(k).unwrap()).unwrap();
        let basis = segre_markov_basis(&poisson_moves(j).unwrap(), &poisson_moves(k).unwrap(), j, k).unwrap();
        for z in basis.moves() {
            prop_assert!(is_move(&ab, z).unwrap());
        }
    }

    #[test]
    fn random_dense_vectors_rarely_in_kernel(deltas in prop::collection::vec(-2i64..=2, 5)) {
        // membership agrees with the two defining sums
        let a = univariate_poisson_config(5).unwrap();
        let z = Move::from_dense(vec![5], &deltas).unwrap();
        let expected = deltas.iter().sum::<i64>() == 0
            && deltas.iter().enumerate().map(|(i, d)| (i as i64 + 1) * d).sum::<i64>() == 0;
        prop_assert_eq!(is_move(&a, &z).unwrap(), expected);
    }
}

#[test]
fn poisson_moves_have_degree_two_and_equal_gaps() {
    for j in 2..=7 {
        for z in poisson_moves(j).unwrap().moves() {
            assert_eq!(z.degree(), 2);
            assert_eq!(z.negative_degree(), 2);
            let dense = z.to_dense();
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for (i, &d) in dense.iter().enumerate() {
                let level = i as i64 + 1;
                pos.extend(std::iter::repeat_n(level, d.max(0) as usize));
                neg.extend(std::iter::repeat_n(level, (-d).max(0) as usize));
            }
            assert_eq!(pos.iter().sum::<i64>(), neg.iter().sum::<i64>());
            // the outer pair is positive, the inner pair negative, or the reverse
            let (lo, hi) = (pos.iter().min().unwrap(), pos.iter().max().unwrap());
            let (nlo, nhi) = (neg.iter().min().unwrap(), neg.iter().max().unwrap());
            assert!((lo < nlo && nhi < hi) || (nlo < lo && hi < nhi));
        }
    }
}

fn kernel_vectors(levels: usize, max_norm: i64) -> Vec<Vec<i64>> {
    fn extend(prefix: &mut Vec<i64>, levels: usize, budget: i64, out: &mut Vec<Vec<i64>>) {
        if prefix.len() == levels {
            let sum: i64 = prefix.iter().sum();
            let first: i64 = prefix.iter().enumerate().map(|(i, d)| (i as i64 + 1) * d).sum();
            if sum == 0 && first == 0 && prefix.iter().any(|&d| d != 0) {
                out.push(prefix.clone());
            }
            return;
        }
        for d in -budget..=budget {
            prefix.push(d);
            extend(prefix, levels, budget - d.abs(), out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::new(), levels, max_norm, &mut out);
    out
}

#[test]
fn lifted_kernel_sign_pattern() {
    for levels in 3..=5 {
        let lifted = lawrence_lifting(&univariate_poisson_config(levels).unwrap());
        // a lifted kernel element is (z, -z); its L1 norm is twice that of z
        let vectors = kernel_vectors(levels, 4);
        assert!(!vectors.is_empty());
        for z in vectors {
            let mut dense = z.clone();
            dense.extend(z.iter().map(|d| -d));
            assert!(is_move(&lifted, &Move::from_dense(vec![2, levels], &dense).unwrap()).unwrap());
            let pattern = (0..levels).any(|a| (a + 1..levels).any(|b| z[a] > 0 && z[b] < 0))
                && (0..levels).any(|a| (a + 1..levels).any(|b| z[a] < 0 && z[b] > 0));
            assert!(pattern, "{z:?}");
        }
    }
}

#[test]
fn adjacent_moves_are_lifted_unit_gaps() {
    for levels in 3..=7 {
        let mut expected = std::collections::BTreeSet::new();
        for a in 0..levels - 1 {
            for b in a + 1..levels - 1 {
                let mut layer = vec![0; levels];
                layer[a] += 1;
                layer[a + 1] -= 1;
                layer[b] -= 1;
                layer[b + 1] += 1;
                expected.insert(layer);
            }
        }
        let set = univariate_adjacent_moves(levels).unwrap();
        assert_eq!(set.len(), expected.len());
        for z in set.moves() {
            let dense = z.to_dense();
            let (top, bottom) = dense.split_at(levels);
            assert!(top.iter().zip(bottom).all(|(a, b)| a + b == 0));
            let negated: Vec<Count> = top.iter().map(|d| -d).collect();
            assert!(expected.contains(top) || expected.contains(&negated));
        }
    }
}

#[test]
fn bivariate_moves_lie_in_kernel() {
    for (j, k) in [(3, 1), (2, 2), (3, 3), (4, 2), (7, 8)] {
        let config = bivariate_logistic_config(j, k).unwrap();
        bivariate_lifted_moves(j, k).unwrap().validate(&config).unwrap();
        bivariate_unit_moves(j, k).unwrap().validate(&config).unwrap();
    }
}
