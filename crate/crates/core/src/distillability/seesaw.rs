//! SLOCC singlet fraction by alternating maximization.
//!
//! With `a_i = A†|i⟩` and `b_i = B†|i⟩` the overlap of the filtered state with
//! φ_D is `v†ρv / tr[(A⊗B)ρ(A⊗B)†]` where `v = D^{-1/2} Σ_i a_i ⊗ b_i`. For a
//! fixed `B`, both numerator and denominator are quadratic in the stacked
//! vector `(a_0, …, a_{D−1})`:
//!
//! ```text
//! num = x† M_B† ρ M_B x,    M_B = D^{-1/2} [I⊗b_0 | … | I⊗b_{D−1}]
//! den = x† (I_D ⊗ R_B) x,   R_B = Σ_j (I⊗b_j)† ρ (I⊗b_j)
//! ```
//!
//! so each half-step is a generalized Hermitian eigenproblem.

use rayon::prelude::*;

use super::{Certificate, FilterPair, SearchOptions, WitnessReport, VIOLATION_TOL};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec, ONE};
use crate::states::{phi_projector, BipartiteState};

/// Smallest accepted post-selection weight `tr[(A⊗B)ρ(A⊗B)†]`.
const MIN_WEIGHT: f64 = 1e-14;
const REDRAWS: usize = 16;

/// Lower bound on the SLOCC singlet fraction F₂.
pub fn f2(state: &BipartiteState, opts: &SearchOptions, seed: u64) -> Result<WitnessReport> {
    search(state, 2, 0.5, opts, seed)
}

/// Lower bound on F_D, the fraction with target φ_D; the report flags whether
/// the bound exceeds `lambda`.
pub fn fd(
    state: &BipartiteState,
    d: usize,
    lambda: f64,
    opts: &SearchOptions,
    seed: u64,
) -> Result<WitnessReport> {
    if d < 2 {
        return Err(Error::param("target dimension D must be >= 2"));
    }
    if !(lambda >= 1.0 / d as f64 - 1e-12 && lambda < 1.0) {
        return Err(Error::param(format!(
            "lambda must lie in [1/D, 1), got {lambda}"
        )));
    }
    search(state, d, lambda, opts, seed)
}

/// Overlap of the normalized filtered state with φ_D.
pub fn filter_value(state: &BipartiteState, filters: &FilterPair) -> Result<f64> {
    let (na, nb) = state.cut_dims();
    let d = filters.target_dim();
    if filters.a.ncols() != na || filters.b.ncols() != nb || filters.b.nrows() != d {
        return Err(Error::dim(format!(
            "filters {}x{} and {}x{} do not fit a {na}x{nb} cut",
            filters.a.nrows(),
            filters.a.ncols(),
            filters.b.nrows(),
            filters.b.ncols()
        )));
    }
    let out = filters.apply(&state.ab_cut_matrix());
    let weight = out.trace().re;
    if weight < MIN_WEIGHT {
        return Err(Error::DegeneratePostSelection(weight));
    }
    Ok(linalg::trace_product(&out, &phi_projector(d)).re / weight)
}

fn search(
    state: &BipartiteState,
    d: usize,
    lambda: f64,
    opts: &SearchOptions,
    seed: u64,
) -> Result<WitnessReport> {
    opts.check()?;
    let problem = Problem::new(state, d);
    let runs: Vec<Option<(f64, FilterPair)>> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = crate::seeded_rng(crate::derive_seed(seed, r as u64));
            problem.run(r, opts, &mut rng).map(|(v, f, _)| (v, f))
        })
        .collect();
    if runs.iter().all(Option::is_none) {
        return Err(Error::Optimization(
            "every see-saw restart hit a degenerate post-selection".into(),
        ));
    }

    // the product filter onto the heaviest diagonal entry always scores 1/D
    let mut best = problem.product_candidate();
    let mut best_value = filter_value(state, &best)?;
    for (value, filters) in runs.into_iter().flatten() {
        if value > best_value + 1e-12 {
            best_value = value;
            best = filters;
        }
    }
    let best = best.normalized();
    let value = filter_value(state, &best)?;
    Ok(WitnessReport {
        value,
        certificate: Certificate::from(&best),
        budget_exhausted: value <= lambda + VIOLATION_TOL,
        seed,
        restarts: opts.restarts,
    })
}

pub(super) struct Problem {
    rho: CMat,
    na: usize,
    nb: usize,
    d: usize,
}

impl Problem {
    fn new(state: &BipartiteState, d: usize) -> Self {
        let (na, nb) = state.cut_dims();
        Self {
            rho: state.ab_cut_matrix(),
            na,
            nb,
            d,
        }
    }

    fn product_candidate(&self) -> FilterPair {
        let n = self.na * self.nb;
        let best = (0..n)
            .max_by(|&i, &j| self.rho[(i, i)].re.total_cmp(&self.rho[(j, j)].re))
            .unwrap_or(0);
        let mut a = CMat::zeros(self.d, self.na);
        let mut b = CMat::zeros(self.d, self.nb);
        a[(0, best / self.nb)] = ONE;
        b[(0, best % self.nb)] = ONE;
        FilterPair { a, b }
    }

    /// Rows of the identity embedding C^n → C^D (truncated when n > D).
    fn embedding(&self, n: usize) -> CMat {
        CMat::from_fn(self.d, n, |i, j| if i == j { ONE } else { linalg::ZERO })
    }

    /// `I_n ⊗ v` (when `v_right`) or `v ⊗ I_n`, as an `(n·len v) × n` matrix.
    pub(super) fn lift(v: &CVec, n: usize, v_right: bool) -> CMat {
        let m = v.len();
        let mut out = CMat::zeros(n * m, n);
        for k in 0..n {
            for l in 0..m {
                let row = if v_right { k * m + l } else { l * n + k };
                out[(row, k)] = v[l];
            }
        }
        out
    }

    /// Maximizes over one factor with the other fixed. `update_a` selects the
    /// factor being optimized; returns the new filter rows and the value.
    fn half_step(&self, fixed: &CMat, update_a: bool) -> Option<(f64, CMat)> {
        let (n, m) = if update_a {
            (self.na, self.nb)
        } else {
            (self.nb, self.na)
        };
        let d = self.d;
        let lifts: Vec<CMat> = (0..d)
            .map(|i| {
                let v: CVec = fixed.row(i).adjoint();
                debug_assert_eq!(v.len(), m);
                Self::lift(&v, n, update_a)
            })
            .collect();
        let mut r = CMat::zeros(n, n);
        for l in &lifts {
            r += l.adjoint() * &self.rho * l;
        }
        let mut big = CMat::zeros(n * m, d * n);
        let s = c(1.0 / (d as f64).sqrt(), 0.0);
        for (i, l) in lifts.iter().enumerate() {
            big.view_mut((0, i * n), (n * m, n)).copy_from(&(l * s));
        }
        let num = big.adjoint() * &self.rho * &big;
        let mut den = CMat::zeros(d * n, d * n);
        for i in 0..d {
            den.view_mut((i * n, i * n), (n, n)).copy_from(&r);
        }
        let (value, x) = linalg::extreme_generalized(&num, &den, true)?;
        let rows = CMat::from_fn(d, n, |i, k| x[i * n + k].conj());
        Some((value, rows))
    }

    /// One see-saw run; returns the best value, its filters and the value
    /// after every half-step.
    fn run<R: rand::Rng + ?Sized>(
        &self,
        restart: usize,
        opts: &SearchOptions,
        rng: &mut R,
    ) -> Option<(f64, FilterPair, Vec<f64>)> {
        let mut b = if restart == 0 {
            self.embedding(self.nb)
        } else {
            linalg::ginibre(rng, self.d, self.nb)
        };
        let mut first = self.half_step(&b, true);
        let mut redraws = 0;
        while first.is_none() && redraws < REDRAWS {
            b = linalg::ginibre(rng, self.d, self.nb);
            first = self.half_step(&b, true);
            redraws += 1;
        }
        let (mut value, mut a) = first?;
        let mut history = vec![value];
        let mut best = (value, FilterPair { a: a.clone(), b: b.clone() });
        for _ in 0..opts.iters {
            let before = value;
            let (vb, nb) = self.half_step(&a, false)?;
            b = nb;
            let (va, na) = self.half_step(&b, true)?;
            a = na;
            history.push(vb);
            history.push(va);
            value = va;
            if value > best.0 {
                best = (value, FilterPair { a: a.clone(), b: b.clone() });
            }
            if value - before < opts.tol {
                break;
            }
        }
        Some((best.0, best.1, history))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{max_entangled, tensor, werner};

    fn quick() -> SearchOptions {
        SearchOptions {
            restarts: 8,
            iters: 300,
            tol: 1e-12,
        }
    }

    #[test]
    fn f2_examples() {
        let r = f2(&max_entangled(2), &quick(), 1).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
        assert!(!r.budget_exhausted);

        let mut v = CVec::zeros(4);
        v[0] = ONE;
        let r = f2(&BipartiteState::pure(2, 2, &v).unwrap(), &quick(), 1).unwrap();
        assert!((r.value - 0.5).abs() < 1e-9);
        assert!(r.budget_exhausted);

        let r = f2(&werner(2, 0.75), &quick(), 2).unwrap();
        assert!((r.value - 0.75).abs() < 1e-6, "{}", r.value);
    }

    #[test]
    fn fd_examples() {
        let r = fd(&max_entangled(3), 3, 0.9, &quick(), 0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);

        let r = fd(&max_entangled(2), 4, 0.25, &quick(), 0).unwrap();
        assert!((r.value - 0.5).abs() < 1e-6, "{}", r.value);

        let mut v = CVec::zeros(9);
        v[4] = ONE;
        let r = fd(&BipartiteState::pure(3, 3, &v).unwrap(), 3, 1.0 / 3.0, &quick(), 0).unwrap();
        assert!((r.value - 1.0 / 3.0).abs() < 1e-9);
        assert!(r.budget_exhausted);

        assert!(fd(&max_entangled(2), 1, 0.5, &quick(), 0).is_err());
        assert!(fd(&max_entangled(2), 3, 0.2, &quick(), 0).is_err());
        assert!(fd(&max_entangled(2), 3, 1.0, &quick(), 0).is_err());
    }

    #[test]
    fn certificate_reproduces_value() {
        let mut rng = crate::seeded_rng(9);
        for _ in 0..5 {
            let s = crate::states::random_induced(&mut rng, 2, 3, 6);
            let r = f2(&s, &quick(), 4).unwrap();
            let fp = r.certificate.filter_pair().unwrap().unwrap();
            assert!((filter_value(&s, &fp).unwrap() - r.value).abs() < 1e-9);
            assert!(r.value >= 0.5 - 1e-9 && r.value <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn seesaw_history_is_monotone() {
        let mut rng = crate::seeded_rng(10);
        let s = crate::states::random_induced(&mut rng, 3, 3, 4);
        let p = Problem::new(&s, 2);
        let (_, _, hist) = p.run(1, &quick(), &mut rng).unwrap();
        for w in hist.windows(2) {
            assert!(w[1] >= w[0] - 1e-10, "{w:?}");
        }
    }

    #[test]
    fn tensoring_does_not_lower_f2() {
        let mut rng = crate::seeded_rng(12);
        let a = crate::states::random_induced(&mut rng, 2, 2, 4);
        let b = werner(2, 0.8);
        let fa = f2(&a, &quick(), 0).unwrap().value;
        let fb = f2(&b, &quick(), 0).unwrap().value;
        let fab = f2(&tensor(&a, &b).unwrap(), &quick(), 0).unwrap().value;
        assert!(fab >= fa.max(fb) - 1e-6, "{fab} {fa} {fb}");
    }
}
