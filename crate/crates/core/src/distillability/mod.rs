//! Distillability tests.
//!
//! Verdicts are one-sided: a negative Schmidt-rank-2 expectation or a
//! singlet fraction above threshold is a certificate of distillability, while
//! the absence of one is only ever reported as "no violation within budget".

mod schmidt;
mod seesaw;

pub use schmidt::{certificate_value, n_copy_distillable, schmidt_filter, single_copy_distillable};
pub use seesaw::{f2, fd, filter_value};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, MatrixJson};
use crate::states::{self, BipartiteState, STATE_TOL};
use crate::symmetry;

/// Threshold below which a Schmidt-rank-2 expectation counts as a violation.
pub const VIOLATION_TOL: f64 = 1e-9;

/// Budget shared by the see-saw and the Schmidt-rank-2 search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub restarts: usize,
    pub iters: usize,
    pub tol: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            restarts: 32,
            iters: 500,
            tol: 1e-9,
        }
    }
}

impl SearchOptions {
    pub(crate) fn check(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::param("restarts must be >= 1"));
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(Error::param("tol must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// Local filters `A: D×dA`, `B: D×dB` acting across the A|B cut.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterPair {
    pub a: CMat,
    pub b: CMat,
}

impl FilterPair {
    pub fn target_dim(&self) -> usize {
        self.a.nrows()
    }

    /// Rescales both factors to unit operator norm.
    pub fn normalized(mut self) -> Self {
        for m in [&mut self.a, &mut self.b] {
            let n = linalg::operator_norm(m);
            if n > 0.0 {
                *m /= linalg::c(n, 0.0);
            }
        }
        self
    }

    /// `(A⊗B) ρ (A⊗B)†`, unnormalized.
    pub fn apply(&self, cut_matrix: &CMat) -> CMat {
        let k = self.a.kronecker(&self.b);
        &k * cut_matrix * k.adjoint()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    FilterPair { a: MatrixJson, b: MatrixJson },
    /// Normalized `ψ` on the A|B cut, with its two Schmidt terms.
    SchmidtVector {
        vector: MatrixJson,
        dim_a: usize,
        dim_b: usize,
    },
    Eigenvector { vector: MatrixJson, eigenvalue: f64 },
}

impl Certificate {
    pub fn filter_pair(&self) -> Option<Result<FilterPair>> {
        match self {
            Certificate::FilterPair { a, b } => Some((|| {
                Ok(FilterPair {
                    a: CMat::try_from(a)?,
                    b: CMat::try_from(b)?,
                })
            })()),
            _ => None,
        }
    }
}

impl From<&FilterPair> for Certificate {
    fn from(f: &FilterPair) -> Self {
        Certificate::FilterPair {
            a: MatrixJson::from(&f.a),
            b: MatrixJson::from(&f.b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub value: f64,
    pub certificate: Certificate,
    /// True when the search ended without exhibiting a violation.
    pub budget_exhausted: bool,
    pub seed: u64,
    pub restarts: usize,
}

/// PPT test: `(min eig ρ^{T_B} ≥ −1e-9, min eig)`.
pub fn is_ppt(state: &BipartiteState) -> (bool, f64) {
    let min = linalg::min_eigenvalue(&states::partial_transpose(state));
    (min >= -STATE_TOL, min)
}

/// `tr[X ρ]` for a Hermitian `X`.
pub fn witness_pairing(x: &CMat, state: &BipartiteState) -> Result<f64> {
    if x.nrows() != state.dim() || x.ncols() != state.dim() {
        return Err(Error::dim(format!(
            "operator is {}x{}, state is {}",
            x.nrows(),
            x.ncols(),
            state.dim()
        )));
    }
    if linalg::anti_hermitian_norm(x) > STATE_TOL {
        return Err(Error::param("witness operator is not Hermitian"));
    }
    state.expectation(x)
}

/// Outcome of [`symmetric_dual_positive`].
#[derive(Debug, Clone, PartialEq)]
pub struct DualCheck {
    pub positive: bool,
    /// Smallest eigenvalue of the symmetrized operator.
    pub min_eigenvalue: f64,
    /// Smallest pairing over the sampled symmetric states.
    pub sampled_min: f64,
    /// Symmetric state with negative pairing, when one exists.
    pub witness_state: Option<BipartiteState>,
}

/// Number of random symmetric states sampled by [`symmetric_dual_positive`].
pub const DUAL_SAMPLES: usize = 100;

/// Whether `q` (on `k` pairs of C^dA ⊗ C^dB) lies in the dual of the
/// symmetric states, i.e. whether its symmetrization is positive.
pub fn symmetric_dual_positive(
    q: &CMat,
    dim_a: usize,
    dim_b: usize,
    k: usize,
    seed: u64,
) -> Result<DualCheck> {
    if dim_a == 0 || dim_b == 0 || k == 0 {
        return Err(Error::param("dimensions and k must be >= 1"));
    }
    let pd = dim_a * dim_b;
    let n = pd
        .checked_pow(k as u32)
        .filter(|&n| n <= states::DEFAULT_DIM_CAP)
        .ok_or(Error::Capacity {
            requested: usize::MAX,
            cap: states::DEFAULT_DIM_CAP,
        })?;
    if q.nrows() != n || q.ncols() != n {
        return Err(Error::dim(format!(
            "operator is {}x{}, expected {n}x{n}",
            q.nrows(),
            q.ncols()
        )));
    }
    if linalg::anti_hermitian_norm(q) > STATE_TOL {
        return Err(Error::param("operator is not Hermitian"));
    }
    let sym = linalg::hermitian_part(&symmetry::symmetrize_operator(q, pd, k));
    let (vals, vecs) = linalg::eigh(&sym);
    let min_eigenvalue = vals[0];

    let mut rng = crate::seeded_rng(seed);
    let mut sampled_min = f64::INFINITY;
    for _ in 0..DUAL_SAMPLES {
        let omega = symmetry::symmetrize(&states::random_multi_pair(&mut rng, dim_a, dim_b, k));
        sampled_min = sampled_min.min(omega.expectation(q)?);
    }

    let witness_state = if min_eigenvalue < -STATE_TOL {
        let v = vecs.column(0).into_owned();
        let omega = BipartiteState::from_parts(dim_a, dim_b, k, linalg::projector(&v));
        Some(symmetry::symmetrize(&omega))
    } else {
        None
    };
    Ok(DualCheck {
        positive: min_eigenvalue >= -STATE_TOL && sampled_min >= -STATE_TOL,
        min_eigenvalue,
        sampled_min,
        witness_state,
    })
}
