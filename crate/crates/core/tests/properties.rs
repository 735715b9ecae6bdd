//! Randomized property suites for the singular value function, long products
//! and stopping families. Run alone with `cargo test -p dimest-core --test properties`.

use proptest::prelude::*;

use dimest::shift::{stopping_family, Subshift, Word};
use dimest::svf::{product_spectrum, singular_values, SmallMatrix};

fn matrix(d: usize) -> impl Strategy<Value = SmallMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, d * d)
        .prop_map(move |e| SmallMatrix::new(d, &e).unwrap())
        .prop_filter("well conditioned enough to factor", |m| m.log_abs_det() > -20.0)
}

fn pair() -> impl Strategy<Value = (SmallMatrix<f64>, SmallMatrix<f64>, f64)> {
    (1usize..=4).prop_flat_map(|d| (matrix(d), matrix(d), 0.0..(d as f64 + 1.0)))
}

fn chain() -> impl Strategy<Value = (Vec<SmallMatrix<f64>>, usize)> {
    (1usize..=4).prop_flat_map(|d| (prop::collection::vec(matrix(d), 1..=6), 1usize..=3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn phi_is_submultiplicative((a, b, s) in pair()) {
        let la = singular_values(&a).unwrap().log_phi(s);
        let lb = singular_values(&b).unwrap().log_phi(s);
        let lab = singular_values(&a.matmul(&b)).unwrap().log_phi(s);
        prop_assert!(lab <= la + lb + 1e-9 * (1.0 + la.abs() + lb.abs()), "{lab} > {la} + {lb}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn product_matches_dense_oracle((mats, renorm) in chain()) {
        let dense = mats[1..].iter().fold(mats[0], |acc, m| acc.matmul(m));
        let want = singular_values(&dense).unwrap();
        let got = product_spectrum(&mats, renorm).unwrap();
        let top = want.log_alpha()[0];
        for (g, w) in got.log_alpha().iter().zip(want.log_alpha()) {
            // the dense factorization only resolves alpha_i to about eps * alpha_1
            let tol = 1e-10 + 64.0 * f64::EPSILON * (top - w).exp();
            prop_assert!((g - w).abs() <= tol, "{g} vs {w}");
        }
    }
}

fn admissible_tail(x: &Subshift, start: usize, choices: &[bool]) -> Vec<usize> {
    let mut out = Vec::with_capacity(choices.len());
    let mut prev = start;
    for &c in choices {
        let succ: Vec<usize> = x.successors(prev).collect();
        prev = succ[usize::from(c) % succ.len()];
        out.push(prev);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn stopping_family_partitions_deep_words(start in 0usize..2, choices in prop::collection::vec(any::<bool>(), 40..80)) {
        let x = Subshift::golden_mean();
        let h = [-0.4f64, -0.9];
        let fam = stopping_family(&x, |w: &Word| w.letters().iter().map(|&a| h[a]).sum(), 1e-3).unwrap();
        prop_assume!(fam.max_len() < choices.len());
        let mut letters = vec![start];
        letters.extend(admissible_tail(&x, start, &choices));
        let w = Word::new(letters);
        prop_assert_eq!(fam.prefixes_of(&w).count(), 1);
        prop_assert!(fam.find_prefix(&w).is_some());
    }
}
