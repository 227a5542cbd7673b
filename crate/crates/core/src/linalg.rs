//! Dense complex linear algebra shared by every module: Hermitian spectra,
//! tensor-factor bookkeeping (permute / partial trace / partial transpose on
//! an arbitrary list of factors) and the generalized Rayleigh-quotient solver
//! used by the alternating optimizers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn eigvalsh(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    eigvalsh(m).first().copied().unwrap_or(0.0)
}

/// Sum of absolute eigenvalues of a Hermitian operator (unhalved).
pub fn trace_norm_hermitian(m: &CMat) -> f64 {
    eigvalsh(m).iter().map(|x| x.abs()).sum()
}

/// Operator norm of the anti-Hermitian part `(m - m†)/2`.
pub fn anti_hermitian_norm(m: &CMat) -> f64 {
    let k = (m - m.adjoint()).scale(0.5);
    let ik = k * c(0.0, 1.0);
    eigvalsh(&ik).iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Largest singular value.
pub fn operator_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().fold(0.0f64, |acc, &x| acc.max(x))
}

pub fn trace(m: &CMat) -> Complex64 {
    m.trace()
}

/// `tr[a b]` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> Complex64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

pub fn max_abs_entry(m: &CMat) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

pub fn projector(v: &CVec) -> CMat {
    v * v.adjoint()
}

/// Unnormalized `Σ_i |i,i⟩` on C^d ⊗ C^d.
pub fn max_entangled_vector(d: usize) -> CVec {
    let mut v = CVec::zeros(d * d);
    for i in 0..d {
        v[i * d + i] = ONE;
    }
    v
}

/// Complex Ginibre matrix with i.i.d. standard normal real and imaginary parts.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    let g = ginibre(rng, n, 1);
    let v = g.column(0).into_owned();
    let norm = v.norm();
    v / c(norm, 0.0)
}

/// Mixed-radix layout of a tensor product of factors, most significant first.
#[derive(Debug, Clone)]
pub struct FactorLayout {
    dims: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl FactorLayout {
    pub fn new(dims: &[usize]) -> Self {
        let mut strides = vec![1; dims.len()];
        for f in (0..dims.len().saturating_sub(1)).rev() {
            strides[f] = strides[f + 1] * dims[f + 1];
        }
        let total = dims.iter().product();
        Self {
            dims: dims.to_vec(),
            strides,
            total,
        }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    #[inline]
    pub fn digit(&self, index: usize, factor: usize) -> usize {
        (index / self.strides[factor]) % self.dims[factor]
    }

    /// Contribution of the selected factors' digits to `index`.
    fn offset_of(&self, index: usize, selected: &[bool]) -> usize {
        (0..self.dims.len())
            .filter(|&f| selected[f])
            .map(|f| self.digit(index, f) * self.strides[f])
            .sum()
    }
}

/// Reorders tensor factors: new slot `s` holds old factor `order[s]`.
/// Returns `U m U†` where `U` is the corresponding permutation unitary.
pub fn permute_factors(m: &CMat, dims: &[usize], order: &[usize]) -> CMat {
    let map = factor_permutation_map(dims, order);
    let n = map.len();
    let mut out = CMat::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            out[(map[i], map[j])] = m[(i, j)];
        }
    }
    out
}

/// `map[old_index] = new_index` for the factor reordering `order`.
pub fn factor_permutation_map(dims: &[usize], order: &[usize]) -> Vec<usize> {
    let old = FactorLayout::new(dims);
    let new_dims: Vec<usize> = order.iter().map(|&f| dims[f]).collect();
    let new = FactorLayout::new(&new_dims);
    (0..old.total())
        .map(|i| {
            order
                .iter()
                .enumerate()
                .map(|(slot, &f)| old.digit(i, f) * new.strides[slot])
                .sum()
        })
        .collect()
}

/// Partial trace keeping the factors listed in `keep` (output in ascending
/// factor order).
pub fn partial_trace_factors(m: &CMat, dims: &[usize], keep: &[usize]) -> CMat {
    let layout = FactorLayout::new(dims);
    let nf = dims.len();
    let mut kept = vec![false; nf];
    for &f in keep {
        kept[f] = true;
    }
    let traced: Vec<bool> = kept.iter().map(|k| !k).collect();
    let keep_dims: Vec<usize> = (0..nf).filter(|&f| kept[f]).map(|f| dims[f]).collect();
    let trace_dims: Vec<usize> = (0..nf).filter(|&f| traced[f]).map(|f| dims[f]).collect();
    let keep_layout = FactorLayout::new(&keep_dims);
    let trace_layout = FactorLayout::new(&trace_dims);

    // offsets into the full index for each kept / traced multi-index
    let embed = |sub: &FactorLayout, mask: &[bool], idx: usize| -> usize {
        let mut pos = 0;
        let mut full = 0;
        for f in 0..nf {
            if mask[f] {
                full += sub.digit(idx, pos) * layout.strides[f];
                pos += 1;
            }
        }
        full
    };
    let keep_off: Vec<usize> = (0..keep_layout.total())
        .map(|i| embed(&keep_layout, &kept, i))
        .collect();
    let trace_off: Vec<usize> = (0..trace_layout.total())
        .map(|t| embed(&trace_layout, &traced, t))
        .collect();

    let nk = keep_off.len();
    let mut out = CMat::zeros(nk, nk);
    for j in 0..nk {
        for i in 0..nk {
            let mut acc = ZERO;
            for &t in &trace_off {
                acc += m[(keep_off[i] + t, keep_off[j] + t)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Transposes the factors flagged in `which` (basis of the layout).
pub fn partial_transpose_factors(m: &CMat, dims: &[usize], which: &[bool]) -> CMat {
    let layout = FactorLayout::new(dims);
    let n = layout.total();
    let t_part: Vec<usize> = (0..n).map(|i| layout.offset_of(i, which)).collect();
    let mut out = CMat::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            let ii = i - t_part[i] + t_part[j];
            let jj = j - t_part[j] + t_part[i];
            out[(ii, jj)] = m[(i, j)];
        }
    }
    out
}

/// Solves `max_x (x† N x)/(x† D x)` (or min when `maximize` is false) for
/// Hermitian `num` and positive semidefinite `den`, restricted to the range of
/// `den`. Directions where `den` is numerically null are discarded; returns
/// `None` when the whole range is null.
pub fn extreme_generalized(num: &CMat, den: &CMat, maximize: bool) -> Option<(f64, CVec)> {
    let n = den.nrows();
    let reg = den + identity(n).scale(1e-14);
    let (s, u) = eigh(&reg);
    let smax = s.last().copied().unwrap_or(0.0);
    if smax <= 1e-14 {
        return None;
    }
    let cols: Vec<usize> = (0..n).filter(|&i| s[i] > 1e-12 * smax).collect();
    if cols.is_empty() {
        return None;
    }
    let mut w = CMat::zeros(n, cols.len());
    for (dst, &src) in cols.iter().enumerate() {
        let scale = 1.0 / s[src].sqrt();
        w.set_column(dst, &(u.column(src) * c(scale, 0.0)));
    }
    let reduced = w.adjoint() * num * &w;
    let (vals, vecs) = eigh(&reduced);
    let pick = if maximize { vals.len() - 1 } else { 0 };
    let x = &w * vecs.column(pick);
    Some((vals[pick], x))
}

/// JSON form of a dense complex matrix: row-major `[re, im]` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&CMat> for MatrixJson {
    fn from(m: &CMat) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push([m[(i, j)].re, m[(i, j)].im]);
            }
        }
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

impl From<&CVec> for MatrixJson {
    fn from(v: &CVec) -> Self {
        MatrixJson {
            rows: v.len(),
            cols: 1,
            data: v.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl TryFrom<&MatrixJson> for CMat {
    type Error = crate::Error;

    fn try_from(m: &MatrixJson) -> crate::Result<CMat> {
        if m.data.len() != m.rows * m.cols {
            return Err(crate::Error::param(format!(
                "matrix data has {} entries, expected {}x{}",
                m.data.len(),
                m.rows,
                m.cols
            )));
        }
        Ok(CMat::from_fn(m.rows, m.cols, |i, j| {
            let [re, im] = m.data[i * m.cols + j];
            c(re, im)
        }))
    }
}
