//! Linear-inversion tomography with minimal informationally complete POVMs,
//! and the estimate-then-filter pipeline built on it.
//!
//! Trace-norm convention: `∥X∥₁` is the sum of singular values; distances
//! reported as "trace distance" are half of it.

mod pipeline;
mod sampling;

pub use pipeline::{estimation_pipeline, PipelineOptions, PipelineReport, Source, Verdict};
pub use sampling::{chernoff_tail, reconstruct, simulate_measurements, Chernoff, OutcomeCounts};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec, ONE};
use crate::states::{BipartiteState, STATE_TOL};

/// An informationally complete POVM with its canonical dual frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    dim: usize,
    elements: Vec<CMat>,
    duals: Vec<CMat>,
}

impl Frame {
    /// Builds a frame from POVM elements, checking positivity, completeness
    /// and the resolution of the identity.
    pub fn new(elements: Vec<CMat>) -> Result<Self> {
        let dim = elements
            .first()
            .map(|e| e.nrows())
            .ok_or_else(|| Error::Frame("no elements".into()))?;
        for (i, e) in elements.iter().enumerate() {
            if e.nrows() != dim || e.ncols() != dim {
                return Err(Error::Frame(format!("element {i} is not {dim}x{dim}")));
            }
            if linalg::anti_hermitian_norm(e) > STATE_TOL || linalg::min_eigenvalue(e) < -STATE_TOL
            {
                return Err(Error::Frame(format!("element {i} is not positive semidefinite")));
            }
        }
        let sum = elements.iter().fold(CMat::zeros(dim, dim), |acc, e| acc + e);
        if linalg::max_abs_entry(&(sum - linalg::identity(dim))) > 1e-10 {
            return Err(Error::Frame("elements do not sum to the identity".into()));
        }
        let duals = dual_frame(&elements)?;
        Ok(Self {
            dim,
            elements,
            duals,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[CMat] {
        &self.elements
    }

    pub fn duals(&self) -> &[CMat] {
        &self.duals
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Born probabilities `tr[M_k X]` (real parts).
    pub fn probabilities(&self, x: &CMat) -> Vec<f64> {
        self.elements
            .iter()
            .map(|e| linalg::trace_product(e, x).re)
            .collect()
    }

    /// `Σ_k p_k M_k*`.
    pub fn invert(&self, p: &[f64]) -> CMat {
        let mut x = CMat::zeros(self.dim, self.dim);
        for (d, &pk) in self.duals.iter().zip(p) {
            x += d.scale(pk);
        }
        x
    }
}

/// Orthonormal Hermitian basis of the `m×m` operators: diagonal units, then
/// symmetric and antisymmetric off-diagonal pairs.
pub fn hermitian_basis(m: usize) -> Vec<CMat> {
    let mut basis = Vec::with_capacity(m * m);
    for j in 0..m {
        let mut e = CMat::zeros(m, m);
        e[(j, j)] = ONE;
        basis.push(e);
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..m {
        for k in (j + 1)..m {
            let mut s = CMat::zeros(m, m);
            s[(j, k)] = c(r, 0.0);
            s[(k, j)] = c(r, 0.0);
            basis.push(s);
            let mut a = CMat::zeros(m, m);
            a[(j, k)] = c(0.0, r);
            a[(k, j)] = c(0.0, -r);
            basis.push(a);
        }
    }
    basis
}

/// Canonical dual of a spanning family: with `F[i, α] = tr[A_i E_α]` in an
/// orthonormal Hermitian basis, `A_i* = Σ_α F⁺[α, i] E_α`.
pub fn dual_frame(elements: &[CMat]) -> Result<Vec<CMat>> {
    let m = elements
        .first()
        .map(|e| e.nrows())
        .ok_or_else(|| Error::Frame("no elements".into()))?;
    let basis = hermitian_basis(m);
    let n = elements.len();
    if n < m * m {
        return Err(Error::Frame(format!(
            "{n} elements cannot span the {}-dimensional operator space",
            m * m
        )));
    }
    let f = DMatrix::<f64>::from_fn(n, m * m, |i, a| linalg::trace_product(&elements[i], &basis[a]).re);
    let sv = f.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if !(smin > 1e-10 * smax) {
        return Err(Error::Frame(format!(
            "elements are rank deficient (singular values {smin:e} .. {smax:e})"
        )));
    }
    // canonical dual: F⁺ = (FᵀF)⁻¹Fᵀ, full column rank checked above
    let gram = f.transpose() * &f;
    let pinv = gram
        .cholesky()
        .ok_or_else(|| Error::Frame("frame operator is not positive definite".into()))?
        .solve(&f.transpose());
    Ok((0..n)
        .map(|i| {
            let mut d = CMat::zeros(m, m);
            for (a, e) in basis.iter().enumerate() {
                d += e.scale(pinv[(a, i)]);
            }
            d
        })
        .collect())
}

/// Minimal IC-POVM on C^m: the `m²` projectors onto `|e_j⟩`,
/// `(|e_j⟩+|e_k⟩)/√2` and `(|e_j⟩+i|e_k⟩)/√2`, conjugated by `S^{-1/2}` with
/// `S` their sum.
pub fn minimal_ic_povm(m: usize) -> Result<Frame> {
    if m < 2 {
        return Err(Error::param("POVM dimension must be >= 2"));
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut vectors: Vec<CVec> = Vec::with_capacity(m * m);
    for j in 0..m {
        let mut v = CVec::zeros(m);
        v[j] = ONE;
        vectors.push(v);
    }
    for j in 0..m {
        for k in (j + 1)..m {
            let mut v = CVec::zeros(m);
            v[j] = c(r, 0.0);
            v[k] = c(r, 0.0);
            vectors.push(v);
            let mut w = CVec::zeros(m);
            w[j] = c(r, 0.0);
            w[k] = c(0.0, r);
            vectors.push(w);
        }
    }
    let projectors: Vec<CMat> = vectors.iter().map(linalg::projector).collect();
    let s = projectors.iter().fold(CMat::zeros(m, m), |acc, p| acc + p);
    let (vals, vecs) = linalg::eigh(&s);
    let inv_sqrt = CMat::from_diagonal(&CVec::from_iterator(
        m,
        vals.iter().map(|&x| c(1.0 / x.sqrt(), 0.0)),
    ));
    let t = &vecs * inv_sqrt * vecs.adjoint();
    let elements = projectors
        .iter()
        .map(|p| linalg::hermitian_part(&(&t * p * &t)))
        .collect();
    Frame::new(elements)
}

/// `M_{ij} = A_i ⊗ B_j`, flattened as `k = i·|B| + j`; the duals are the
/// products of the duals.
pub fn product_frame(a: &Frame, b: &Frame) -> Frame {
    let mut elements = Vec::with_capacity(a.len() * b.len());
    let mut duals = Vec::with_capacity(a.len() * b.len());
    for (ea, da) in a.elements.iter().zip(&a.duals) {
        for (eb, db) in b.elements.iter().zip(&b.duals) {
            elements.push(ea.kronecker(eb));
            duals.push(da.kronecker(db));
        }
    }
    Frame {
        dim: a.dim * b.dim,
        elements,
        duals,
    }
}

/// Frame for one pair: the product of the minimal frames on each side.
pub fn pair_frame(dim_a: usize, dim_b: usize) -> Result<Frame> {
    Ok(product_frame(&minimal_ic_povm(dim_a)?, &minimal_ic_povm(dim_b)?))
}

/// Density operator closest to `x` in trace norm, together with the trace
/// distance `½∥σ − x∥₁`.
///
/// An optimum commutes with `x`. In its eigenbasis, negative eigenvalues are
/// set to zero and the positive ones lowered by exactly the removed mass,
/// each staying within `[0, x_i]`; among those optima the flattest spectrum
/// (maximal entropy) is `s_i = min(x_i, t)` with `Σ s_i = 1`.
pub fn closest_density(x: &CMat) -> Result<(CMat, f64)> {
    if x.nrows() != x.ncols() || x.nrows() == 0 {
        return Err(Error::dim("closest_state needs a nonempty square operator"));
    }
    if linalg::anti_hermitian_norm(x) > STATE_TOL {
        return Err(Error::param("operator is not Hermitian"));
    }
    let tr = x.trace().re;
    if (tr - 1.0).abs() > STATE_TOL {
        return Err(Error::param(format!("trace must be 1 within 1e-9, got {tr}")));
    }
    let (vals, vecs) = linalg::eigh(x);
    let spectrum = water_fill(&vals);
    let diag = CMat::from_diagonal(&CVec::from_iterator(
        vals.len(),
        spectrum.iter().map(|&s| c(s, 0.0)),
    ));
    let sigma = linalg::hermitian_part(&(&vecs * diag * vecs.adjoint()));
    let dist = 0.5 * linalg::trace_norm_hermitian(&(&sigma - x));
    Ok((sigma, dist))
}

/// [`closest_density`] wrapped as a state of `pairs` copies of C^dA ⊗ C^dB.
pub fn closest_state(x: &CMat, dim_a: usize, dim_b: usize, pairs: usize) -> Result<(BipartiteState, f64)> {
    let (sigma, dist) = closest_density(x)?;
    Ok((BipartiteState::new(dim_a, dim_b, pairs, sigma)?, dist))
}

/// Largest-entropy spectrum `s_i = min(x_i⁺, t)` with unit sum.
fn water_fill(x: &[f64]) -> Vec<f64> {
    let mut pos: Vec<f64> = x.iter().copied().filter(|&v| v > 0.0).collect();
    pos.sort_by(|a, b| b.total_cmp(a));
    // find t with Σ min(p_i, t) = 1 over the positive part
    let total: f64 = pos.iter().sum();
    let mut t = pos.first().copied().unwrap_or(0.0);
    let mut tail = total;
    for (j, &p) in pos.iter().enumerate() {
        tail -= p;
        let cand = (1.0 - tail) / (j + 1) as f64;
        let next = pos.get(j + 1).copied().unwrap_or(0.0);
        if cand >= next && cand <= p + 1e-15 {
            t = cand;
            break;
        }
    }
    x.iter().map(|&v| if v > 0.0 { v.min(t) } else { 0.0 }).collect()
}
