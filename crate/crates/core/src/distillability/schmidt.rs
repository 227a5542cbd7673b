//! Single-copy distillability as negativity of the partial transpose on
//! Schmidt-rank-2 vectors.
//!
//! `ψ = a_0⊗b_0 + a_1⊗b_1` is linear in `(a_0, a_1)` for fixed `b`, so
//! minimizing `⟨ψ|ρ^Γ|ψ⟩/⟨ψ|ψ⟩` alternates between two generalized
//! eigenproblems of size `2·dA` and `2·dB`.

use rayon::prelude::*;

use super::seesaw::Problem;
use super::{Certificate, FilterPair, SearchOptions, WitnessReport, VIOLATION_TOL};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, MatrixJson};
use crate::states::{self, BipartiteState};

/// Minimizes the partial-transpose expectation over Schmidt-rank-2 vectors
/// across the A|B cut (all A factors against all B factors).
pub fn single_copy_distillable(
    state: &BipartiteState,
    opts: &SearchOptions,
    seed: u64,
) -> Result<WitnessReport> {
    opts.check()?;
    let search = RankTwo::new(state);
    let runs: Vec<(f64, CVec)> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = crate::seeded_rng(crate::derive_seed(seed, r as u64));
            let (v, psi, _) = search.run(r, opts, &mut rng);
            (v, psi)
        })
        .collect();
    let mut best: Option<(f64, CVec)> = None;
    for (value, psi) in runs {
        if best.as_ref().is_none_or(|(b, _)| value < b - 1e-12) {
            best = Some((value, psi));
        }
    }
    let (_, psi) = best.expect("restarts >= 1");
    let value = search.expectation(&psi);
    Ok(WitnessReport {
        value,
        certificate: Certificate::SchmidtVector {
            vector: MatrixJson::from(&psi),
            dim_a: search.na,
            dim_b: search.nb,
        },
        budget_exhausted: value >= -VIOLATION_TOL,
        seed,
        restarts: opts.restarts,
    })
}

/// [`single_copy_distillable`] on `ρ^{⊗n}`.
pub fn n_copy_distillable(
    state: &BipartiteState,
    n: usize,
    opts: &SearchOptions,
    seed: u64,
) -> Result<WitnessReport> {
    let power = states::tensor_power(state, n)?;
    single_copy_distillable(&power, opts, seed)
}

/// Recomputes `⟨ψ|ρ^Γ|ψ⟩` from a Schmidt-vector or eigenvector certificate.
pub fn certificate_value(state: &BipartiteState, cert: &Certificate) -> Result<f64> {
    let vector = match cert {
        Certificate::SchmidtVector { vector, .. } | Certificate::Eigenvector { vector, .. } => {
            vector
        }
        Certificate::FilterPair { .. } => {
            return Err(Error::param("filter certificates are scored by filter_value"))
        }
    };
    let m = CMat::try_from(vector)?;
    if m.ncols() != 1 || m.nrows() != state.dim() {
        return Err(Error::dim(format!(
            "certificate vector has shape {}x{}, state is {}",
            m.nrows(),
            m.ncols(),
            state.dim()
        )));
    }
    let psi: CVec = m.column(0).into_owned();
    Ok(RankTwo::new(state).expectation(&psi))
}

/// Filters turning a Schmidt-rank-2 certificate into a two-qubit output whose
/// overlap with φ₂ is `(1 − ⟨ψ|ρ^Γ|ψ⟩/w)/2`, `w` the post-selection weight.
///
/// With `ψ = Σ_i a_i⊗b_i`, the filters `A'†|i⟩ = a_i`, `B'†|i⟩ = b_i` give
/// `⟨ψ|ρ^Γ|ψ⟩ = tr[τ·SWAP]` for `τ = (A'⊗B̄')ρ(A'⊗B̄')†`; a local rotation on
/// B maps the singlet onto φ₂.
pub fn schmidt_filter(cert: &Certificate) -> Result<FilterPair> {
    let Certificate::SchmidtVector {
        vector,
        dim_a,
        dim_b,
    } = cert
    else {
        return Err(Error::param("expected a Schmidt-vector certificate"));
    };
    let m = CMat::try_from(vector)?;
    if m.ncols() != 1 || m.nrows() != dim_a * dim_b {
        return Err(Error::dim("certificate vector does not match its dimensions"));
    }
    let psi = CMat::from_fn(*dim_a, *dim_b, |i, j| m[(i * dim_b + j, 0)]);
    let svd = psi.svd(true, true);
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let terms = svd.singular_values.len().min(2);
    let mut a = CMat::zeros(2, *dim_a);
    let mut b_conj = CMat::zeros(2, *dim_b);
    for k in 0..terms {
        let s = svd.singular_values[k];
        for i in 0..*dim_a {
            a[(k, i)] = (u[(i, k)] * linalg::c(s, 0.0)).conj();
        }
        // row k of B' is b_k† = (row k of V†)^*, conjugated once more
        for j in 0..*dim_b {
            b_conj[(k, j)] = vt[(k, j)];
        }
    }
    let rot = CMat::from_row_slice(2, 2, &[linalg::ZERO, linalg::ONE, -linalg::ONE, linalg::ZERO]);
    Ok(FilterPair {
        a,
        b: rot * b_conj,
    }
    .normalized())
}

struct RankTwo {
    gamma: CMat,
    na: usize,
    nb: usize,
}

impl RankTwo {
    fn new(state: &BipartiteState) -> Self {
        let (na, nb) = state.cut_dims();
        let gamma = states::partial_transpose_operator(&state.ab_cut_matrix(), &[na, nb]);
        Self { gamma, na, nb }
    }

    fn expectation(&self, psi: &CVec) -> f64 {
        let norm = psi.norm_squared();
        (psi.adjoint() * &self.gamma * psi)[(0, 0)].re / norm
    }

    /// Best Schmidt-rank-2 vector with one side's two vectors fixed.
    fn half_step(&self, fixed: &[CVec; 2], update_a: bool) -> Option<(f64, [CVec; 2], CVec)> {
        let n = if update_a { self.na } else { self.nb };
        let n_total = self.na * self.nb;
        let mut big = CMat::zeros(n_total, 2 * n);
        for (i, v) in fixed.iter().enumerate() {
            big.view_mut((0, i * n), (n_total, n))
                .copy_from(&Problem::lift(v, n, update_a));
        }
        let num = big.adjoint() * &self.gamma * &big;
        let den = big.adjoint() * &big;
        let (value, x) = linalg::extreme_generalized(&num, &den, false)?;
        let halves = [x.rows(0, n).into_owned(), x.rows(n, n).into_owned()];
        let mut psi = &big * &x;
        let norm = psi.norm();
        psi /= linalg::c(norm, 0.0);
        Some((value, halves, psi))
    }

    fn initial_b<R: rand::Rng + ?Sized>(&self, restart: usize, rng: &mut R) -> [CVec; 2] {
        let mut b = [
            linalg::random_unit_vector(rng, self.nb),
            linalg::random_unit_vector(rng, self.nb),
        ];
        if restart == 0 {
            // Schmidt vectors of the most negative eigenvector
            let (_, vecs) = linalg::eigh(&self.gamma);
            let v = vecs.column(0);
            let psi = CMat::from_fn(self.na, self.nb, |i, j| v[i * self.nb + j]);
            let svd = psi.svd(false, true);
            if let Some(vt) = svd.v_t {
                for (k, slot) in b.iter_mut().enumerate().take(vt.nrows().min(2)) {
                    *slot = vt.row(k).transpose();
                }
            }
        }
        b
    }

    /// One alternating run: `(best value, best ψ, value after each half-step)`.
    fn run<R: rand::Rng + ?Sized>(
        &self,
        restart: usize,
        opts: &SearchOptions,
        rng: &mut R,
    ) -> (f64, CVec, Vec<f64>) {
        let mut b = self.initial_b(restart, rng);
        let mut history = Vec::new();
        let mut best: Option<(f64, CVec)> = None;
        let mut value = f64::INFINITY;
        for _ in 0..opts.iters.max(1) {
            let before = value;
            let Some((va, a, _)) = self.half_step(&b, true) else {
                b = self.initial_b(1, rng);
                continue;
            };
            let Some((vb, nb, psi)) = self.half_step(&a, false) else {
                break;
            };
            b = nb;
            history.push(va);
            history.push(vb);
            value = vb;
            if best.as_ref().is_none_or(|(v, _)| value < *v) {
                best = Some((value, psi));
            }
            if before - value < opts.tol {
                break;
            }
        }
        match best {
            Some((v, psi)) => (v, psi, history),
            None => {
                // only reachable for a zero operator; any product vector is a valid answer
                let psi = linalg::random_unit_vector(rng, self.na * self.nb);
                (self.expectation(&psi), psi, history)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distillability::{f2, is_ppt};
    use crate::states::{max_entangled, random_induced, random_ppt, werner};

    fn quick() -> SearchOptions {
        SearchOptions {
            restarts: 8,
            iters: 200,
            tol: 1e-12,
        }
    }

    #[test]
    fn examples() {
        let r = single_copy_distillable(&max_entangled(2), &quick(), 0).unwrap();
        assert!((r.value + 0.5).abs() < 1e-9);
        assert!(!r.budget_exhausted);
        assert!((certificate_value(&max_entangled(2), &r.certificate).unwrap() - r.value).abs() < 1e-9);

        let w = werner(2, 0.6);
        let r = single_copy_distillable(&w, &quick(), 0).unwrap();
        assert!(r.value < 0.0);
        assert!(f2(&w, &quick(), 0).unwrap().value > 0.5);

        let r = n_copy_distillable(&max_entangled(2), 2, &quick(), 0).unwrap();
        assert!(r.value < -VIOLATION_TOL);
    }

    #[test]
    fn schmidt_filter_turns_negativity_into_singlet_fraction() {
        let r = single_copy_distillable(&max_entangled(2), &quick(), 0).unwrap();
        let f = schmidt_filter(&r.certificate).unwrap();
        let fid = crate::distillability::filter_value(&max_entangled(2), &f).unwrap();
        assert!((fid - 1.0).abs() < 1e-9);

        let mut rng = crate::seeded_rng(23);
        for (da, db) in [(2, 2), (3, 3), (2, 3), (3, 3)] {
            let s = random_induced(&mut rng, da, db, 2);
            let r = single_copy_distillable(&s, &quick(), 0).unwrap();
            let f = schmidt_filter(&r.certificate).unwrap();
            let fid = crate::distillability::filter_value(&s, &f).unwrap();
            assert_eq!(fid > 0.5 + 1e-9, r.value < -1e-9, "{fid} {}", r.value);
        }
    }

    #[test]
    fn ppt_states_never_violate() {
        let mut rng = crate::seeded_rng(21);
        for _ in 0..3 {
            let s = random_ppt(&mut rng, 3, 18, 100_000).unwrap();
            assert!(is_ppt(&s).0);
            for n in 1..=2 {
                let r = n_copy_distillable(&s, n, &quick(), 7).unwrap();
                assert!(r.value >= -VIOLATION_TOL && r.budget_exhausted);
            }
        }
    }

    #[test]
    fn two_qubit_value_is_min_eigenvalue() {
        let mut rng = crate::seeded_rng(22);
        for _ in 0..10 {
            let s = random_induced(&mut rng, 2, 2, 4);
            let min = is_ppt(&s).1;
            let r = single_copy_distillable(&s, &quick(), 1).unwrap();
            assert!((r.value - min).abs() < 1e-9, "{} {}", r.value, min);
        }
    }

    #[test]
    fn history_is_monotone_and_runs_reproduce() {
        let w = werner(3, 0.55);
        let search = RankTwo::new(&w);
        let mut rng = crate::seeded_rng(3);
        let (_, _, hist) = search.run(2, &quick(), &mut rng);
        for pair in hist.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-10);
        }
        let a = single_copy_distillable(&w, &quick(), 11).unwrap();
        let b = single_copy_distillable(&w, &quick(), 12).unwrap();
        assert!((a.value - b.value).abs() < 1e-6);
    }
}
