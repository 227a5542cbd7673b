//! Single-copy activation by maximally entangled projections.
//!
//! The activator `ρ` lives on `A₁B₁ = C^d ⊗ C^d`; the target `σ` is a state
//! on `(A₂A₃) ⊗ (B₂B₃)` with `A₂ = B₂ = C^d` and `A₃ = B₃ = C²`, stored as a
//! single pair of local dimension `2d` with `A₂` the more significant digit.
//! Each side projects its first two factors onto the unnormalized
//! `|φ⟩ = Σ_i |i,i⟩`, leaving a two-qubit operator on `A₃B₃`:
//!
//! ```text
//! out[(a,b),(a',b')] = Σ_{ijkl} ρ[(i,j),(k,l)] σ[((i,a),(j,b)),((k,a'),(l,b'))]
//! ```
//!
//! With `σ^Γ` the transpose of σ on `A₂B₂` (computational basis),
//! `tr[out·Z] = tr[(ρ⊗Z)·σ^Γ]` for every `Z` on `A₃B₃`, so the
//! proportionality constant of the Jamiolkowski relation is 1.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distillability::FilterPair;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, ONE};
use crate::states::{self, BipartiteState};

/// Activator/target pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationInstance {
    rho: BipartiteState,
    sigma: BipartiteState,
    d: usize,
}

impl ActivationInstance {
    pub fn new(rho: BipartiteState, sigma: BipartiteState) -> Result<Self> {
        let d = check_dims(&rho, &sigma)?;
        Ok(Self { rho, sigma, d })
    }

    pub fn rho(&self) -> &BipartiteState {
        &self.rho
    }

    pub fn sigma(&self) -> &BipartiteState {
        &self.sigma
    }

    pub fn d(&self) -> usize {
        self.d
    }
}

fn check_dims(rho: &BipartiteState, sigma: &BipartiteState) -> Result<usize> {
    let d = rho.dim_a();
    if rho.pairs() != 1 || rho.dim_b() != d || d < 2 {
        return Err(Error::dim(format!(
            "activator must be one pair of C^d ⊗ C^d with d >= 2, got {}x{} on {} pairs",
            rho.dim_a(),
            rho.dim_b(),
            rho.pairs()
        )));
    }
    if sigma.pairs() != 1 || sigma.dim_a() != 2 * d || sigma.dim_b() != 2 * d {
        return Err(Error::dim(format!(
            "target must be one pair of C^{0} ⊗ C^{0} for d = {d}, got {1}x{2} on {3} pairs",
            2 * d,
            sigma.dim_a(),
            sigma.dim_b(),
            sigma.pairs()
        )));
    }
    Ok(d)
}

/// The projections `A = ⟨φ|_{A₁A₂} ⊗ I_{A₃}` and likewise for B, as
/// `2 × 2d²` operators on `A₁A₂A₃` (A₁ most significant).
pub fn activation_filters(d: usize) -> Result<FilterPair> {
    if d < 2 {
        return Err(Error::param("activation needs d >= 2"));
    }
    let mut a = CMat::zeros(2, 2 * d * d);
    for i in 0..d {
        for s in 0..2 {
            a[(s, (i * d + i) * 2 + s)] = ONE;
        }
    }
    Ok(FilterPair { b: a.clone(), a })
}

/// Target `outer ⊗ inner` with `outer` on `A₂B₂` and `inner` on `A₃B₃`.
pub fn compose_target(outer: &BipartiteState, inner: &BipartiteState) -> Result<BipartiteState> {
    let d = outer.dim_a();
    if outer.pairs() != 1 || outer.dim_b() != d {
        return Err(Error::dim("outer factor must be one pair of C^d ⊗ C^d"));
    }
    if inner.pairs() != 1 || inner.dim_a() != 2 || inner.dim_b() != 2 {
        return Err(Error::dim("inner factor must be a two-qubit state"));
    }
    // A₂ B₂ A₃ B₃ → A₂ A₃ B₂ B₃
    let m = linalg::permute_factors(
        &outer.matrix().kronecker(inner.matrix()),
        &[d, d, 2, 2],
        &[0, 2, 1, 3],
    );
    BipartiteState::new(2 * d, 2 * d, 1, m)
}

/// The unnormalized two-qubit output and its trace (the success weight).
pub fn apply_activation(instance: &ActivationInstance) -> Result<(CMat, f64)> {
    let out = contract(instance.rho.matrix(), instance.sigma.matrix(), instance.d);
    let weight = out.trace().re;
    if weight <= 1e-14 {
        return Err(Error::DegeneratePostSelection(weight));
    }
    Ok((out, weight))
}

fn contract(rho: &CMat, sigma: &CMat, d: usize) -> CMat {
    let n = 2 * d;
    let idx = |i: usize, a: usize, j: usize, b: usize| (i * 2 + a) * n + j * 2 + b;
    let mut out = CMat::zeros(4, 4);
    for a in 0..2 {
        for b in 0..2 {
            for ap in 0..2 {
                for bp in 0..2 {
                    let mut acc = linalg::ZERO;
                    for i in 0..d {
                        for j in 0..d {
                            for k in 0..d {
                                for l in 0..d {
                                    acc += rho[(i * d + j, k * d + l)]
                                        * sigma[(idx(i, a, j, b), idx(k, ap, l, bp))];
                                }
                            }
                        }
                    }
                    out[(a * 2 + b, ap * 2 + bp)] = acc;
                }
            }
        }
    }
    linalg::hermitian_part(&out)
}

/// `tr[(ρ⊗Z)·σ^Γ]` evaluated on the full `A₂A₃B₂B₃` space.
fn jam_pairing(rho: &CMat, sigma: &CMat, z: &CMat, d: usize) -> f64 {
    let dims = [d, 2, d, 2];
    let sigma_t = linalg::partial_transpose_factors(sigma, &dims, &[true, false, true, false]);
    let rz = linalg::permute_factors(&rho.kronecker(z), &[d, d, 2, 2], &[0, 2, 1, 3]);
    linalg::trace_product(&rz, &sigma_t).re
}

/// `tr[(ρ⊗(I/2 − φ₂))·σ^Γ]`; negative exactly when the protocol's filtered
/// output has singlet fraction above 1/2.
pub fn activation_witness(rho: &BipartiteState, sigma: &BipartiteState) -> Result<f64> {
    let d = check_dims(rho, sigma)?;
    Ok(jam_pairing(rho.matrix(), sigma.matrix(), &half_minus_phi(), d))
}

fn half_minus_phi() -> CMat {
    linalg::identity(4).scale(0.5) - states::phi_projector(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JamCheck {
    /// Mean ratio `tr[out·Z] / tr[(ρ⊗Z)σ^Γ]`.
    pub c: f64,
    pub max_relative_deviation: f64,
    pub used: usize,
    pub skipped: usize,
}

/// Checks the Jamiolkowski proportionality on `trials` random positive `Z`.
pub fn jam_check(instance: &ActivationInstance, trials: usize, seed: u64) -> Result<JamCheck> {
    if trials == 0 {
        return Err(Error::param("jam_check needs trials >= 1"));
    }
    let d = instance.d;
    let out = contract(instance.rho.matrix(), instance.sigma.matrix(), d);
    let mut rng = crate::seeded_rng(seed);
    let mut ratios = Vec::with_capacity(trials);
    let mut skipped = 0;
    for _ in 0..trials {
        let g = linalg::ginibre(&mut rng, 4, 4);
        let z = &g * g.adjoint();
        let den = jam_pairing(instance.rho.matrix(), instance.sigma.matrix(), &z, d);
        if den.abs() < 1e-14 {
            skipped += 1;
            continue;
        }
        ratios.push(linalg::trace_product(&out, &z).re / den);
    }
    if ratios.is_empty() {
        return Err(Error::DegeneratePostSelection(0.0));
    }
    let c = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let max_relative_deviation = ratios
        .iter()
        .map(|r| ((r - c) / c).abs())
        .fold(0.0, f64::max);
    Ok(JamCheck {
        c,
        max_relative_deviation,
        used: ratios.len(),
        skipped,
    })
}

/// Where a candidate activator came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Candidate {
    MaxEntangled,
    Isotropic { f: f64 },
    Werner { p: f64 },
    Random { index: usize },
    Perturbation { round: usize, index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Total number of candidate activators evaluated.
    pub candidates: usize,
    /// Points in each of the isotropic and Werner sweeps.
    pub sweep_points: usize,
    /// Share of the remaining budget spent on random states; the rest goes to
    /// perturbations of the incumbent.
    pub random_fraction: f64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            candidates: 2000,
            sweep_points: 21,
            random_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationReport {
    pub witness: f64,
    pub fidelity: f64,
    pub success_weight: f64,
    pub rho: BipartiteState,
    pub c: f64,
    pub candidate: Candidate,
    pub evaluated: usize,
    /// True when no candidate gave a negative witness.
    pub budget_exhausted: bool,
    pub seed: u64,
}

struct Scored {
    witness: f64,
    rho: BipartiteState,
    candidate: Candidate,
}

const PERTURB_BATCH: usize = 64;

/// Searches activators in a fixed order (maximally entangled, isotropic and
/// Werner sweeps, Hilbert–Schmidt random states, perturbations of the best)
/// and returns the most negative witness found.
pub fn search_activator(
    sigma: &BipartiteState,
    budget: &SearchBudget,
    seed: u64,
) -> Result<ActivationReport> {
    if sigma.pairs() != 1 || sigma.dim_a() != sigma.dim_b() || sigma.dim_a() % 2 != 0 {
        return Err(Error::dim("target must be one pair of C^2d ⊗ C^2d"));
    }
    let d = sigma.dim_a() / 2;
    if d < 2 {
        return Err(Error::dim("target needs d >= 2"));
    }
    if budget.candidates == 0 {
        return Err(Error::param("search budget must allow at least one candidate"));
    }
    if !(0.0..=1.0).contains(&budget.random_fraction) {
        return Err(Error::param("random_fraction must lie in [0, 1]"));
    }
    let score = |rho: BipartiteState, candidate: Candidate| -> Result<Scored> {
        let witness = activation_witness(&rho, sigma)?;
        Ok(Scored {
            witness,
            rho,
            candidate,
        })
    };

    let mut structured: Vec<(BipartiteState, Candidate)> =
        vec![(states::max_entangled(d), Candidate::MaxEntangled)];
    let pts = budget.sweep_points.max(2);
    for s in 0..pts {
        let f = 1.0 - s as f64 / (pts - 1) as f64;
        structured.push((states::isotropic(d, f), Candidate::Isotropic { f }));
    }
    for s in 0..pts {
        let p = 1.0 - s as f64 / (pts - 1) as f64;
        structured.push((states::werner(d, p), Candidate::Werner { p }));
    }
    structured.truncate(budget.candidates);
    let left = budget.candidates - structured.len();
    let n_random = (left as f64 * budget.random_fraction).round() as usize;
    let n_perturb = left - n_random;

    let mut evaluated = 0;
    let mut best: Option<Scored> = None;
    let mut consider = |batch: Vec<Result<Scored>>, best: &mut Option<Scored>| -> Result<()> {
        for s in batch {
            let s = s?;
            evaluated += 1;
            if best.as_ref().is_none_or(|b| s.witness < b.witness) {
                *best = Some(s);
            }
        }
        Ok(())
    };

    let batch = structured
        .into_par_iter()
        .map(|(rho, c)| score(rho, c))
        .collect();
    consider(batch, &mut best)?;

    let batch = (0..n_random)
        .into_par_iter()
        .map(|i| {
            let mut rng = crate::seeded_rng(crate::derive_seed(seed, i as u64));
            score(
                states::random_induced(&mut rng, d, d, d * d),
                Candidate::Random { index: i },
            )
        })
        .collect();
    consider(batch, &mut best)?;

    let mut done = 0;
    let mut round = 0;
    let mut scale = 0.3;
    while done < n_perturb {
        let size = PERTURB_BATCH.min(n_perturb - done);
        let centre = best.as_ref().expect("at least one candidate").rho.clone();
        let root = psd_sqrt(centre.matrix());
        let before = best.as_ref().map(|b| b.witness);
        let batch = (0..size)
            .into_par_iter()
            .map(|i| {
                let mut rng = crate::seeded_rng(crate::derive_seed(
                    seed ^ 0x5EED_0000_0000_0000,
                    (round * PERTURB_BATCH + i) as u64,
                ));
                let g = &root + linalg::ginibre(&mut rng, d * d, d * d).scale(scale);
                let m = &g * g.adjoint();
                let tr = m.trace().re;
                score(
                    BipartiteState::new(d, d, 1, m.scale(1.0 / tr))?,
                    Candidate::Perturbation { round, index: i },
                )
            })
            .collect();
        consider(batch, &mut best)?;
        if best.as_ref().map(|b| b.witness) == before {
            scale *= 0.5;
        }
        done += size;
        round += 1;
    }

    let best = best.expect("at least one candidate");
    let instance = ActivationInstance::new(best.rho.clone(), sigma.clone())?;
    let (out, weight) = apply_activation(&instance)?;
    let fidelity = linalg::trace_product(&out, &states::phi_projector(2)).re / weight;
    let jam = jam_check(&instance, 8, seed)?;
    Ok(ActivationReport {
        witness: best.witness,
        fidelity,
        success_weight: weight,
        rho: best.rho,
        c: jam.c,
        candidate: best.candidate,
        evaluated,
        budget_exhausted: best.witness >= -1e-9,
        seed,
    })
}

fn psd_sqrt(m: &CMat) -> CMat {
    let (vals, vecs) = linalg::eigh(m);
    let d = CMat::from_diagonal(&crate::linalg::CVec::from_iterator(
        vals.len(),
        vals.iter().map(|&x| linalg::c(x.max(0.0).sqrt(), 0.0)),
    ));
    &vecs * d * vecs.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{max_entangled, random_induced};

    /// `(A⊗B)(ρ⊗σ)(A⊗B)†` by explicit Kronecker products on `A₁A₂A₃B₁B₂B₃`.
    fn explicit(rho: &CMat, sigma: &CMat, d: usize) -> CMat {
        // ρ⊗σ is stored A₁ B₁ (A₂A₃) (B₂B₃); bring it to A₁ A₂A₃ B₁ B₂B₃
        let joint = linalg::permute_factors(&rho.kronecker(sigma), &[d, d, 2 * d, 2 * d], &[0, 2, 1, 3]);
        let f = activation_filters(d).unwrap();
        f.apply(&joint)
    }

    #[test]
    fn filters_have_norm_d() {
        for d in 2..=3 {
            let f = activation_filters(d).unwrap();
            assert_eq!((f.a.nrows(), f.a.ncols()), (2, 2 * d * d));
            let g = &f.a * f.a.adjoint();
            assert!(linalg::max_abs_entry(&(g - linalg::identity(2).scale(d as f64))) < 1e-15);
        }
    }

    #[test]
    fn contraction_matches_explicit_filters() {
        let mut rng = crate::seeded_rng(1);
        for d in 2..=3 {
            let rho = random_induced(&mut rng, d, d, 3);
            let sigma = random_induced(&mut rng, 2 * d, 2 * d, 5);
            let inst = ActivationInstance::new(rho.clone(), sigma.clone()).unwrap();
            let (out, w) = apply_activation(&inst).unwrap();
            let oracle = explicit(rho.matrix(), sigma.matrix(), d);
            assert!(linalg::max_abs_entry(&(&out - &oracle)) < 1e-13);
            assert!((w - oracle.trace().re).abs() < 1e-13);
        }
    }

    #[test]
    fn maximally_entangled_activator_teleports() {
        let mut rng = crate::seeded_rng(2);
        for d in 2..=3 {
            let outer = random_induced(&mut rng, d, d, 2);
            let inner = random_induced(&mut rng, 2, 2, 3);
            let sigma = compose_target(&outer, &inner).unwrap();
            let inst = ActivationInstance::new(max_entangled(d), sigma).unwrap();
            let (out, w) = apply_activation(&inst).unwrap();
            let normalized = out.scale(1.0 / w);
            assert!(linalg::max_abs_entry(&(normalized - inner.matrix())) < 1e-12);
            let overlap = linalg::trace_product(outer.matrix(), &states::phi_projector(d)).re;
            assert!((w - overlap).abs() < 1e-12);
        }
        let sigma = compose_target(&BipartiteState::maximally_mixed(2, 2, 1), &max_entangled(2)).unwrap();
        let inst = ActivationInstance::new(max_entangled(2), sigma.clone()).unwrap();
        let (out, w) = apply_activation(&inst).unwrap();
        let fid = linalg::trace_product(&out, &states::phi_projector(2)).re / w;
        assert!((fid - 1.0).abs() < 1e-12);
        assert!(activation_witness(&max_entangled(2), &sigma).unwrap() < 0.0);
    }

    #[test]
    fn product_activator_weights_the_inner_block() {
        let mut rng = crate::seeded_rng(3);
        let d = 2;
        let r1 = random_induced(&mut rng, 1, d, 2);
        let r2 = random_induced(&mut rng, 1, d, 2);
        let rho = BipartiteState::new(d, d, 1, r1.matrix().kronecker(r2.matrix())).unwrap();
        let sigma = random_induced(&mut rng, 2 * d, 2 * d, 4);
        let inst = ActivationInstance::new(rho.clone(), sigma.clone()).unwrap();
        let (out, _) = apply_activation(&inst).unwrap();
        // index contraction with the factorized activator
        let n = 2 * d;
        let mut oracle = CMat::zeros(4, 4);
        for r in 0..4 {
            for c in 0..4 {
                let (a, b, ap, bp) = (r / 2, r % 2, c / 2, c % 2);
                for i in 0..d {
                    for k in 0..d {
                        for j in 0..d {
                            for l in 0..d {
                                oracle[(r, c)] += r1.matrix()[(i, k)]
                                    * r2.matrix()[(j, l)]
                                    * sigma.matrix()[((i * 2 + a) * n + j * 2 + b, (k * 2 + ap) * n + l * 2 + bp)];
                            }
                        }
                    }
                }
            }
        }
        assert!(linalg::max_abs_entry(&(out - oracle)) < 1e-13);
    }

    #[test]
    fn jam_identity_holds_with_unit_constant() {
        let mut rng = crate::seeded_rng(4);
        for d in 2..=3 {
            let inst = ActivationInstance::new(
                random_induced(&mut rng, d, d, 2),
                random_induced(&mut rng, 2 * d, 2 * d, 3),
            )
            .unwrap();
            let j = jam_check(&inst, 20, 7).unwrap();
            assert!((j.c - 1.0).abs() < 1e-9 && j.max_relative_deviation < 1e-9);
            let (out, w) = apply_activation(&inst).unwrap();
            let id = jam_pairing(inst.rho.matrix(), inst.sigma.matrix(), &linalg::identity(4), d);
            assert!((w / id - j.c).abs() < 1e-9);
            let z = linalg::identity(4).scale(3.0);
            let z3 = jam_pairing(inst.rho.matrix(), inst.sigma.matrix(), &z, d);
            assert!((linalg::trace_product(&out, &z).re / z3 - j.c).abs() < 1e-9);
        }
    }

    #[test]
    fn maximally_mixed_target_gives_quarter_fidelity() {
        let sigma = BipartiteState::maximally_mixed(4, 4, 1);
        let rho = BipartiteState::maximally_mixed(2, 2, 1);
        let w = activation_witness(&rho, &sigma).unwrap();
        // weight 1/4, fidelity 1/4
        assert!((w - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn search_finds_embedded_target_immediately() {
        let sigma = compose_target(&BipartiteState::maximally_mixed(2, 2, 1), &max_entangled(2)).unwrap();
        let r = search_activator(&sigma, &SearchBudget { candidates: 50, ..Default::default() }, 0).unwrap();
        assert!(r.fidelity >= 1.0 - 1e-9);
        assert_eq!(r.candidate, Candidate::MaxEntangled);
        assert!(!r.budget_exhausted);
        assert!((activation_witness(&r.rho, &sigma).unwrap() - r.witness).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let rho = max_entangled(2);
        let sigma = max_entangled(3);
        assert!(activation_witness(&rho, &sigma).is_err());
        assert!(ActivationInstance::new(rho, sigma).is_err());
    }
}
