//! Numerical distance from a symmetric k-pair state to the mixtures of
//! k-th tensor powers.
//!
//! Members are parametrized by factors `G_i` with `X_i = G_i G_i†`, the weight
//! folded in as `w_i ρ_i^{⊗k} = X_i^{⊗k}`. Each iteration runs
//!
//! 1. an exact weight update: the Hilbert–Schmidt residual is a quadratic in
//!    the weights, minimized over the simplex;
//! 2. a damped Gauss–Newton (Levenberg–Marquardt) step on the factors.
//!
//! The Gauss–Newton residual starts as the plain Hilbert–Schmidt difference
//! and is then reweighted, `M (ω − T) M` with `M = (D² + ε²)^{-1/4}`, so that
//! its squared norm approaches the trace norm as ε shrinks. The trace distance
//! of every iterate is measured and the best ensemble is returned.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{project_simplex, symmetry_residual, Ensemble};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};
use crate::states::{self, BipartiteState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureSearch {
    pub restarts: usize,
    pub iters: usize,
    /// Candidate ensemble size; `None` means `k·(dA·dB)²`.
    pub support: Option<usize>,
    pub seed: u64,
}

impl Default for MixtureSearch {
    fn default() -> Self {
        Self {
            restarts: 8,
            iters: 100,
            support: None,
            seed: 0,
        }
    }
}

/// Largest normal-equation system solved jointly; beyond it each member is
/// updated as its own block.
const JOINT_SYSTEM_LIMIT: usize = 2048;

/// Upper bound on the trace distance between a symmetric k-pair state and the
/// set of mixtures of k-th tensor powers, with the ensemble attaining it.
/// Restarts run in parallel; the lowest value wins, ties to the lowest
/// restart index.
pub fn best_product_mixture_distance(
    state: &BipartiteState,
    opts: &MixtureSearch,
) -> Result<(f64, Ensemble)> {
    let k = state.pairs();
    if k < 2 {
        return Err(Error::param("mixture search needs a state on k >= 2 pairs"));
    }
    if opts.restarts == 0 {
        return Err(Error::param("restarts must be >= 1"));
    }
    let residual = symmetry_residual(state);
    if residual > 1e-9 {
        return Err(Error::param(format!(
            "input is not permutation-symmetric (residual {residual:e}); symmetrize first"
        )));
    }
    let pd = state.pair_dim();
    let support = opts.support.unwrap_or(k * pd * pd).max(1);
    let results: Vec<(f64, Ensemble)> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = crate::seeded_rng(crate::derive_seed(opts.seed, r as u64));
            Fit::new(state, support, r == 0, &mut rng).run(opts.iters)
        })
        .collect();
    let mut best = 0;
    for (i, (v, _)) in results.iter().enumerate() {
        if *v < results[best].0 {
            best = i;
        }
    }
    Ok(results.into_iter().nth(best).expect("restarts >= 1"))
}

struct Fit<'a> {
    target: &'a BipartiteState,
    k: usize,
    members: Vec<CMat>,
    weights: Vec<f64>,
}

/// Hermitian matrix → real vector with `‖v‖₂ = ‖M‖_F`.
fn herm_vec(m: &CMat, out: &mut [f64]) {
    let n = m.nrows();
    let mut p = 0;
    for i in 0..n {
        out[p] = m[(i, i)].re;
        p += 1;
    }
    let s = std::f64::consts::SQRT_2;
    for i in 0..n {
        for j in i + 1..n {
            out[p] = s * m[(i, j)].re;
            out[p + 1] = s * m[(i, j)].im;
            p += 2;
        }
    }
}

fn psd_sqrt(m: &CMat) -> CMat {
    let (vals, vecs) = linalg::eigh(m);
    let mut g = vecs.clone();
    for (j, v) in vals.iter().enumerate() {
        g.column_mut(j).scale_mut(v.max(0.0).sqrt());
    }
    g * vecs.adjoint()
}

impl<'a> Fit<'a> {
    fn new<R: rand::Rng + ?Sized>(
        target: &'a BipartiteState,
        support: usize,
        seed_with_marginal: bool,
        rng: &mut R,
    ) -> Self {
        let pd = target.pair_dim();
        let mut members = Vec::with_capacity(support);
        if seed_with_marginal {
            members.push(states::partial_trace(target, &[0]).expect("k >= 2").into_matrix());
        }
        while members.len() < support {
            members.push(states::random_induced(rng, target.dim_a(), target.dim_b(), pd).into_matrix());
        }
        let weights = vec![1.0 / members.len() as f64; members.len()];
        Self {
            target,
            k: target.pairs(),
            members,
            weights,
        }
    }

    fn power(&self, m: &CMat) -> CMat {
        let mut p = m.clone();
        for _ in 1..self.k {
            p = p.kronecker(m);
        }
        p
    }

    fn approximant(&self) -> CMat {
        let n = self.target.dim();
        let mut t = CMat::zeros(n, n);
        for (w, m) in self.weights.iter().zip(&self.members) {
            if *w > 0.0 {
                t += self.power(m).scale(*w);
            }
        }
        t
    }

    fn trace_distance(&self) -> f64 {
        0.5 * linalg::trace_norm_hermitian(&(self.target.matrix() - self.approximant()))
    }

    fn ensemble(&self) -> Ensemble {
        let total: f64 = self.weights.iter().sum();
        Ensemble {
            weights: self.weights.iter().map(|w| w / total).collect(),
            members: self
                .members
                .iter()
                .map(|m| {
                    BipartiteState::from_parts(self.target.dim_a(), self.target.dim_b(), 1, m.clone())
                })
                .collect(),
        }
    }

    /// Exact simplex-constrained minimization of the Hilbert–Schmidt residual
    /// over the weights (accelerated projected gradient on a convex quadratic).
    fn update_weights(&mut self) {
        let s = self.members.len();
        let k = self.k as i32;
        let mut q = vec![vec![0.0; s]; s];
        for i in 0..s {
            for j in i..s {
                let t = linalg::trace_product(&self.members[i], &self.members[j]).re.powi(k);
                q[i][j] = t;
                q[j][i] = t;
            }
        }
        let b: Vec<f64> = self
            .members
            .iter()
            .map(|m| linalg::trace_product(self.target.matrix(), &self.power(m)).re)
            .collect();
        let objective = |w: &[f64]| -> f64 {
            let mut f = 0.0;
            for i in 0..s {
                f -= 2.0 * w[i] * b[i];
                for j in 0..s {
                    f += w[i] * w[j] * q[i][j];
                }
            }
            f
        };
        let lip = 2.0
            * q.iter()
                .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
                .fold(0.0, f64::max);
        if lip <= 0.0 {
            return;
        }
        let mut w = self.weights.clone();
        let mut y = w.clone();
        let mut t = 1.0f64;
        for _ in 0..500 {
            let step: Vec<f64> = (0..s)
                .map(|i| {
                    let g = 2.0 * (0..s).map(|j| q[i][j] * y[j]).sum::<f64>() - 2.0 * b[i];
                    y[i] - g / lip
                })
                .collect();
            let next = project_simplex(&step);
            let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            let momentum = (t - 1.0) / t_next;
            y = (0..s).map(|i| next[i] + momentum * (next[i] - w[i])).collect();
            let moved: f64 = (0..s).map(|i| (next[i] - w[i]).abs()).sum();
            w = next;
            t = t_next;
            if moved < 1e-16 {
                break;
            }
        }
        if objective(&w) <= objective(&self.weights) {
            // members at zero weight would have zero factors and never move
            // again under the factor step
            let floor = 1e-8 / s as f64;
            let total: f64 = w.iter().map(|x| x.max(floor)).sum();
            self.weights = w.iter().map(|x| x.max(floor) / total).collect();
        }
    }

    /// Folded factors `G_i` with `G_i G_i† = w_i^{1/k} ρ_i`.
    fn factors(&self, active: &[usize]) -> Vec<CMat> {
        active
            .iter()
            .map(|&i| {
                let scale = self.weights[i].powf(1.0 / self.k as f64);
                psd_sqrt(&self.members[i].scale(scale))
            })
            .collect()
    }

    fn folded_sum(&self, factors: &[CMat], active: &[usize]) -> CMat {
        let n = self.target.dim();
        let mut t = CMat::zeros(n, n);
        let mut is_active = vec![false; self.members.len()];
        for &i in active {
            is_active[i] = true;
        }
        for (i, (w, m)) in self.weights.iter().zip(&self.members).enumerate() {
            if !is_active[i] && *w > 0.0 {
                t += self.power(m).scale(*w);
            }
        }
        for g in factors {
            t += self.power(&(g * g.adjoint()));
        }
        t
    }

    fn weighted(&self, d: &CMat, weight: Option<&CMat>) -> CMat {
        match weight {
            None => d.clone(),
            Some(m) => m * d * m,
        }
    }

    fn objective(&self, factors: &[CMat], active: &[usize], weight: Option<&CMat>) -> f64 {
        let d = self.target.matrix() - self.folded_sum(factors, active);
        self.weighted(&d, weight).norm_squared()
    }

    /// Levenberg–Marquardt step on the factors of `active`; returns whether
    /// the weighted objective decreased.
    fn lm_step(&mut self, active: &[usize], weight: Option<&CMat>, damping: &mut f64) -> bool {
        if active.is_empty() {
            return false;
        }
        let pd = self.target.pair_dim();
        let n = self.target.dim();
        let rows = n * n;
        let per = 2 * pd * pd;
        let cols = per * active.len();
        let factors = self.factors(active);

        let d = self.target.matrix() - self.folded_sum(&factors, active);
        let mut r0 = vec![0.0; rows];
        herm_vec(&self.weighted(&d, weight), &mut r0);
        let f0: f64 = r0.iter().map(|x| x * x).sum();

        let mut jac = DMatrix::<f64>::zeros(rows, cols);
        let mut col = vec![0.0; rows];
        for (slot, g) in factors.iter().enumerate() {
            let x = g * g.adjoint();
            let powers: Vec<CMat> = {
                let mut v = vec![CMat::identity(1, 1)];
                for p in 1..self.k {
                    let next = v[p - 1].kronecker(&x);
                    v.push(next);
                }
                v
            };
            for a in 0..pd {
                for b in 0..pd {
                    for part in 0..2 {
                        let z = if part == 0 { c(1.0, 0.0) } else { c(0.0, 1.0) };
                        // dX = dG G† + G dG†, dG = z e_a e_bᵀ
                        let mut dx = CMat::zeros(pd, pd);
                        for cc in 0..pd {
                            dx[(a, cc)] += z * g[(cc, b)].conj();
                            dx[(cc, a)] += g[(cc, b)] * z.conj();
                        }
                        let mut dt = CMat::zeros(n, n);
                        for pos in 0..self.k {
                            let left = &powers[pos];
                            let right = &powers[self.k - 1 - pos];
                            dt += left.kronecker(&dx).kronecker(right);
                        }
                        herm_vec(&self.weighted(&dt, weight), &mut col);
                        let j = slot * per + (a * pd + b) * 2 + part;
                        jac.column_mut(j).copy_from_slice(&col);
                    }
                }
            }
        }

        let r = nalgebra::DVector::from_vec(r0);
        let small_rows = rows <= cols;
        let gram = if small_rows {
            &jac * jac.transpose()
        } else {
            jac.transpose() * &jac
        };
        let scale = (gram.trace() / gram.nrows() as f64).max(1e-300);
        for _ in 0..12 {
            let mut sys = gram.clone();
            for i in 0..sys.nrows() {
                sys[(i, i)] += *damping * scale;
            }
            let Some(chol) = sys.cholesky() else {
                *damping *= 10.0;
                continue;
            };
            let delta = if small_rows {
                jac.transpose() * chol.solve(&r)
            } else {
                chol.solve(&(jac.transpose() * &r))
            };
            let trial: Vec<CMat> = factors
                .iter()
                .enumerate()
                .map(|(slot, g)| {
                    let mut out = g.clone();
                    for a in 0..pd {
                        for b in 0..pd {
                            let j = slot * per + (a * pd + b) * 2;
                            out[(a, b)] += c(delta[j], delta[j + 1]);
                        }
                    }
                    out
                })
                .collect();
            let f1 = self.objective(&trial, active, weight);
            if f1 < f0 {
                self.unfold(&trial, active);
                *damping = (*damping / 3.0).max(1e-12);
                return true;
            }
            *damping *= 4.0;
        }
        false
    }

    fn unfold(&mut self, factors: &[CMat], active: &[usize]) {
        for (g, &i) in factors.iter().zip(active) {
            let x = g * g.adjoint();
            let t = x.trace().re;
            if t > 1e-300 {
                self.members[i] = linalg::hermitian_part(&x.scale(1.0 / t));
                self.weights[i] = t.powi(self.k as i32);
            } else {
                self.weights[i] = 0.0;
            }
        }
        let total: f64 = self.weights.iter().sum();
        for w in &mut self.weights {
            *w /= total;
        }
    }

    fn reweighting(&self, eps: f64) -> CMat {
        let d = self.target.matrix() - self.approximant();
        let (vals, vecs) = linalg::eigh(&d);
        let mut m = vecs.clone();
        for (j, v) in vals.iter().enumerate() {
            m.column_mut(j).scale_mut((v * v + eps * eps).powf(-0.25));
        }
        m * vecs.adjoint()
    }

    fn run(mut self, iters: usize) -> (f64, Ensemble) {
        let mut best = (self.trace_distance(), self.ensemble());
        let pd = self.target.pair_dim();
        let rows = self.target.dim() * self.target.dim();
        let mut damping = 1e-3;
        let mut eps: Option<f64> = None;
        let mut stalled = 0;
        for _ in 0..iters {
            if best.0 < 1e-12 {
                break;
            }
            self.update_weights();
            let active: Vec<usize> = (0..self.members.len())
                .filter(|&i| self.weights[i] > 0.0)
                .collect();
            let weight = eps.map(|e| self.reweighting(e));
            let joint = rows.min(2 * pd * pd * active.len()) <= JOINT_SYSTEM_LIMIT;
            let improved = if joint {
                self.lm_step(&active, weight.as_ref(), &mut damping)
            } else {
                let mut any = false;
                for &i in &active {
                    any |= self.lm_step(&[i], weight.as_ref(), &mut damping);
                }
                any
            };
            let value = self.trace_distance();
            if value < best.0 {
                best = (value, self.ensemble());
            }
            stalled = if improved { 0 } else { stalled + 1 };
            // switch from Hilbert–Schmidt to reweighted residuals once the
            // plain fit stops moving, then keep tightening ε
            match eps {
                None if stalled >= 2 || damping > 1e6 => {
                    eps = Some((best.0 * 0.1).max(1e-12));
                    damping = 1e-3;
                    stalled = 0;
                }
                Some(e) => eps = Some((e * 0.5).max(best.0 * 1e-3).max(1e-13)),
                None => {}
            }
            if stalled >= 5 {
                break;
            }
        }
        best
    }
}
