//! Independent oracles shared by integration tests.
#![allow(dead_code)]

use distilkit::linalg::{c, eigh, trace_norm_hermitian, CMat, CVec};
use distilkit::states::random_hermitian;

pub fn unit_trace_hermitian(seed: u64, n: usize) -> CMat {
    unit_trace_hermitian_scaled(seed, n, 0.3)
}

/// Random Hermitian matrix of spread `scale`, shifted to unit trace.
pub fn unit_trace_hermitian_scaled(seed: u64, n: usize, scale: f64) -> CMat {
    let mut rng = distilkit::seeded_rng(seed);
    let h = random_hermitian(&mut rng, n).scale(scale);
    let shift = (1.0 - h.trace().re) / n as f64;
    h + CMat::identity(n, n).scale(shift)
}

fn simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (j, &x) in u.iter().enumerate() {
        acc += x;
        let t = (acc - 1.0) / (j + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

fn project_spectrahedron(y: &CMat) -> CMat {
    let (vals, vecs) = eigh(y);
    let p = simplex(&vals);
    let d = CMat::from_diagonal(&CVec::from_iterator(p.len(), p.iter().map(|&x| c(x, 0.0))));
    &vecs * d * vecs.adjoint()
}

/// Gradient of the Huber-smoothed trace norm at `y`.
fn huber_grad(y: &CMat, mu: f64) -> CMat {
    let (vals, vecs) = eigh(y);
    let d = CMat::from_diagonal(&CVec::from_iterator(
        vals.len(),
        vals.iter().map(|&x| c((x / mu).clamp(-1.0, 1.0), 0.0)),
    ));
    &vecs * d * vecs.adjoint()
}

/// Accelerated projected gradient on the smoothed objective with
/// continuation in the smoothing width; returns the best true objective.
pub fn fista_closest(x: &CMat) -> f64 {
    let n = x.nrows();
    let mut s = CMat::identity(n, n).scale(1.0 / n as f64);
    let mut best = trace_norm_hermitian(&(&s - x));
    let mut mu = 1e-1;
    while mu > 1e-9 {
        let mut y = s.clone();
        let mut t = 1.0f64;
        for _ in 0..3000 {
            let g = huber_grad(&(&y - x), mu);
            let next = project_spectrahedron(&(&y - g.scale(mu)));
            let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            y = &next + (&next - &s).scale((t - 1.0) / t_next);
            s = next;
            t = t_next;
            best = best.min(trace_norm_hermitian(&(&s - x)));
        }
        mu *= 0.1;
    }
    best
}
