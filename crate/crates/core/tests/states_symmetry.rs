use distilkit::linalg::{max_abs_entry, CMat};
use distilkit::states::{
    partial_trace, partial_transpose, random_induced, random_multi_pair, tensor, werner,
    BipartiteState,
};
use distilkit::symmetry::{
    best_product_mixture_distance, mixture_of_powers, symmetrize, symmetry_residual, Ensemble,
    MixtureSearch,
};

/// Digits of `i` in the mixed radix `dims`, most significant first.
fn digits(mut i: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (k, &d) in dims.iter().enumerate().rev() {
        out[k] = i % d;
        i /= d;
    }
    out
}

fn index(ds: &[usize], dims: &[usize]) -> usize {
    ds.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

#[test]
fn partial_trace_matches_index_sum() {
    let mut rng = distilkit::seeded_rng(1);
    let (da, db) = (2, 3);
    let s = random_multi_pair(&mut rng, da, db, 2);
    let dims = [da, db, da, db];
    let n = s.dim();
    for keep in [0usize, 1] {
        let mut oracle = CMat::zeros(da * db, da * db);
        for r in 0..n {
            for c in 0..n {
                let (x, y) = (digits(r, &dims), digits(c, &dims));
                let other = 1 - keep;
                if x[2 * other] == y[2 * other] && x[2 * other + 1] == y[2 * other + 1] {
                    let i = x[2 * keep] * db + x[2 * keep + 1];
                    let j = y[2 * keep] * db + y[2 * keep + 1];
                    oracle[(i, j)] += s.matrix()[(r, c)];
                }
            }
        }
        let ours = partial_trace(&s, &[keep]).unwrap();
        assert!(max_abs_entry(&(ours.matrix() - oracle)) < 1e-14);
    }
}

#[test]
fn partial_transpose_swaps_every_b_index() {
    let mut rng = distilkit::seeded_rng(2);
    let s = random_multi_pair(&mut rng, 2, 2, 2);
    let dims = [2, 2, 2, 2];
    let pt = partial_transpose(&s);
    for r in 0..16 {
        for c in 0..16 {
            let (mut x, mut y) = (digits(r, &dims), digits(c, &dims));
            for k in [1, 3] {
                std::mem::swap(&mut x[k], &mut y[k]);
            }
            let z = s.matrix()[(index(&x, &dims), index(&y, &dims))];
            assert!((pt[(r, c)] - z).norm() < 1e-15);
        }
    }
}

#[test]
fn two_pair_symmetrization_is_average_with_swap() {
    let mut rng = distilkit::seeded_rng(3);
    let s = random_multi_pair(&mut rng, 2, 3, 2);
    let dims = [2, 3, 2, 3];
    let n = s.dim();
    let mut swap = CMat::zeros(n, n);
    for i in 0..n {
        let x = digits(i, &dims);
        let y = [x[2], x[3], x[0], x[1]];
        swap[(index(&y, &dims), i)] = distilkit::linalg::ONE;
    }
    let oracle = (s.matrix() + &swap * s.matrix() * swap.adjoint()).scale(0.5);
    let ours = symmetrize(&s);
    assert!(max_abs_entry(&(ours.matrix() - oracle)) < 1e-14);
    assert!(symmetry_residual(&ours) < 1e-14);
    assert!(symmetry_residual(&s) > 1e-3);
}

#[test]
fn tensor_of_werner_states_has_product_marginals() {
    let a = werner(2, 0.2);
    let b = werner(2, 0.9);
    let t = tensor(&a, &b).unwrap();
    assert!(max_abs_entry(&(partial_trace(&t, &[0]).unwrap().matrix() - a.matrix())) < 1e-15);
    assert!(max_abs_entry(&(partial_trace(&t, &[1]).unwrap().matrix() - b.matrix())) < 1e-15);
}

#[test]
fn state_json_round_trip_and_validation() {
    let mut rng = distilkit::seeded_rng(4);
    let s = random_induced(&mut rng, 2, 3, 4);
    let text = serde_json::to_string(&s).unwrap();
    let back: BipartiteState = serde_json::from_str(&text).unwrap();
    assert!(max_abs_entry(&(back.matrix() - s.matrix())) < 1e-15);
    let bad = text.replace("\"pairs\":1", "\"pairs\":2");
    assert!(serde_json::from_str::<BipartiteState>(&bad).is_err());
}

#[test]
fn mixtures_of_powers_are_close_to_themselves() {
    let mut rng = distilkit::seeded_rng(5);
    let ens = Ensemble::new(
        vec![0.4, 0.6],
        vec![random_induced(&mut rng, 2, 2, 4), random_induced(&mut rng, 2, 2, 4)],
    )
    .unwrap();
    let s = mixture_of_powers(&ens, 2).unwrap();
    let opts = MixtureSearch {
        restarts: 2,
        iters: 60,
        support: None,
        seed: 5,
    };
    let (dist, fit) = best_product_mixture_distance(&s, &opts).unwrap();
    assert!(dist <= 1e-3, "{dist}");
    let refit = mixture_of_powers(&fit, 2).unwrap();
    let td = distilkit::states::trace_distance(&refit, &s).unwrap();
    assert!((td - dist).abs() < 1e-9);
}
