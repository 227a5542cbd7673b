//! Bipartite density operators and named state families.
//!
//! A state on `pairs` copies of C^dimA ⊗ C^dimB is stored as one dense
//! operator whose basis index is pair-major with the A factor before the B
//! factor inside each pair:
//!
//! ```text
//! |a1 b1 a2 b2 ... ak bk>,   a1 most significant
//! ```
//!
//! Every module relies on this ordering; pair permutations act on whole
//! `(a_i, b_i)` blocks.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, ONE};

/// Validity tolerance for Hermiticity, trace and positivity.
pub const STATE_TOL: f64 = 1e-9;
/// Tolerance for identities that hold exactly in exact arithmetic.
pub const EXACT_TOL: f64 = 1e-12;
/// Default bound on the total operator dimension of a stored state.
pub const DEFAULT_DIM_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    dim_a: usize,
    dim_b: usize,
    pairs: usize,
    data: CMat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Invariant {
    Shape,
    Finite,
    Hermiticity,
    Trace,
    Positivity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub invariant: Invariant,
    /// Measured size of the violation (norm, deviation or eigenvalue).
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn flags(&self, invariant: Invariant) -> bool {
        self.violations.iter().any(|v| v.invariant == invariant)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| format!("{:?} ({:e})", v.invariant, v.magnitude).to_lowercase())
            .collect();
        write!(f, "{}", parts.join(", "))
    }
}

/// Checks every state invariant and either returns the state or a report
/// listing each violation with its magnitude.
pub fn validate_state(
    dim_a: usize,
    dim_b: usize,
    pairs: usize,
    data: CMat,
) -> std::result::Result<BipartiteState, ValidationReport> {
    let mut report = ValidationReport::default();
    let expected = (dim_a * dim_b).checked_pow(pairs as u32).unwrap_or(usize::MAX);
    if dim_a == 0 || dim_b == 0 || pairs == 0 || data.nrows() != expected || data.ncols() != expected
    {
        report.violations.push(Violation {
            invariant: Invariant::Shape,
            magnitude: (data.nrows().max(data.ncols()) as f64 - expected as f64).abs(),
        });
        return Err(report);
    }
    if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        report.violations.push(Violation {
            invariant: Invariant::Finite,
            magnitude: f64::NAN,
        });
        return Err(report);
    }
    let anti = linalg::anti_hermitian_norm(&data);
    if anti > STATE_TOL {
        report.violations.push(Violation {
            invariant: Invariant::Hermiticity,
            magnitude: anti,
        });
    }
    let tr = data.trace().re;
    if (tr - 1.0).abs() > STATE_TOL {
        report.violations.push(Violation {
            invariant: Invariant::Trace,
            magnitude: tr - 1.0,
        });
    }
    let min = linalg::min_eigenvalue(&data);
    if min < -STATE_TOL {
        report.violations.push(Violation {
            invariant: Invariant::Positivity,
            magnitude: min,
        });
    }
    if report.violations.is_empty() {
        Ok(BipartiteState {
            dim_a,
            dim_b,
            pairs,
            data,
        })
    } else {
        Err(report)
    }
}

fn check_cap(dim: usize, cap: usize) -> Result<()> {
    if dim > cap {
        Err(Error::Capacity {
            requested: dim,
            cap,
        })
    } else {
        Ok(())
    }
}

impl BipartiteState {
    pub fn new(dim_a: usize, dim_b: usize, pairs: usize, data: CMat) -> Result<Self> {
        validate_state(dim_a, dim_b, pairs, data).map_err(Error::InvalidState)
    }

    /// Wraps an operator that is a state by construction. The Hermitian
    /// part is taken so downstream eigensolvers see exact symmetry.
    pub(crate) fn from_parts(dim_a: usize, dim_b: usize, pairs: usize, data: CMat) -> Self {
        debug_assert_eq!(data.nrows(), (dim_a * dim_b).pow(pairs as u32));
        Self {
            dim_a,
            dim_b,
            pairs,
            data: linalg::hermitian_part(&data),
        }
    }

    /// Normalized `v v†`.
    pub fn pure(dim_a: usize, dim_b: usize, vector: &crate::linalg::CVec) -> Result<Self> {
        let norm = vector.norm();
        if norm == 0.0 || vector.len() != dim_a * dim_b {
            return Err(Error::param("pure state vector must be nonzero of length dimA*dimB"));
        }
        let v = vector / c(norm, 0.0);
        Ok(Self::from_parts(dim_a, dim_b, 1, linalg::projector(&v)))
    }

    pub fn maximally_mixed(dim_a: usize, dim_b: usize, pairs: usize) -> Self {
        let n = (dim_a * dim_b).pow(pairs as u32);
        Self::from_parts(dim_a, dim_b, pairs, CMat::identity(n, n).scale(1.0 / n as f64))
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn pairs(&self) -> usize {
        self.pairs
    }

    /// Dimension of one pair, `dimA * dimB`.
    pub fn pair_dim(&self) -> usize {
        self.dim_a * self.dim_b
    }

    /// Total operator dimension.
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.data
    }

    pub fn into_matrix(self) -> CMat {
        self.data
    }

    /// Local factor dimensions in storage order: `[dA, dB, dA, dB, ...]`.
    pub fn factor_dims(&self) -> Vec<usize> {
        (0..self.pairs).flat_map(|_| [self.dim_a, self.dim_b]).collect()
    }

    /// The operator regrouped as (A1 ... Ak) | (B1 ... Bk), i.e. as a single
    /// bipartite operator on C^(dA^k) ⊗ C^(dB^k).
    pub fn ab_cut_matrix(&self) -> CMat {
        if self.pairs == 1 {
            return self.data.clone();
        }
        let order: Vec<usize> = (0..self.pairs)
            .map(|p| 2 * p)
            .chain((0..self.pairs).map(|p| 2 * p + 1))
            .collect();
        linalg::permute_factors(&self.data, &self.factor_dims(), &order)
    }

    /// Total local dimensions across the A|B cut.
    pub fn cut_dims(&self) -> (usize, usize) {
        (
            self.dim_a.pow(self.pairs as u32),
            self.dim_b.pow(self.pairs as u32),
        )
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.dim_a == other.dim_a && self.dim_b == other.dim_b && self.pairs == other.pairs
    }

    /// Expectation `tr[X ρ]` of a Hermitian observable.
    pub fn expectation(&self, observable: &CMat) -> Result<f64> {
        if observable.nrows() != self.dim() || observable.ncols() != self.dim() {
            return Err(Error::dim(format!(
                "observable is {}x{}, state is {}",
                observable.nrows(),
                observable.ncols(),
                self.dim()
            )));
        }
        Ok(linalg::trace_product(observable, &self.data).re)
    }
}

/// `a ⊗ b` with the pair counts added, under the default capacity.
pub fn tensor(a: &BipartiteState, b: &BipartiteState) -> Result<BipartiteState> {
    tensor_capped(a, b, DEFAULT_DIM_CAP)
}

pub fn tensor_capped(a: &BipartiteState, b: &BipartiteState, cap: usize) -> Result<BipartiteState> {
    if a.dim_a != b.dim_a || a.dim_b != b.dim_b {
        return Err(Error::dim(format!(
            "pair dimensions differ: {}x{} vs {}x{}",
            a.dim_a, a.dim_b, b.dim_a, b.dim_b
        )));
    }
    check_cap(a.dim().saturating_mul(b.dim()), cap)?;
    Ok(BipartiteState::from_parts(
        a.dim_a,
        a.dim_b,
        a.pairs + b.pairs,
        a.data.kronecker(&b.data),
    ))
}

/// `ρ^{⊗n}`.
pub fn tensor_power(state: &BipartiteState, n: usize) -> Result<BipartiteState> {
    tensor_power_capped(state, n, DEFAULT_DIM_CAP)
}

pub fn tensor_power_capped(state: &BipartiteState, n: usize, cap: usize) -> Result<BipartiteState> {
    if n == 0 {
        return Err(Error::param("tensor power needs n >= 1"));
    }
    let total = state
        .dim()
        .checked_pow(n as u32)
        .ok_or(Error::Capacity {
            requested: usize::MAX,
            cap,
        })?;
    check_cap(total, cap)?;
    let mut out = state.clone();
    for _ in 1..n {
        out = tensor_capped(&out, state, cap)?;
    }
    Ok(out)
}

/// Reduced state on the pairs listed in `keep` (0-based, any order; output
/// keeps ascending pair order).
pub fn partial_trace(state: &BipartiteState, keep: &[usize]) -> Result<BipartiteState> {
    if keep.is_empty() {
        return Err(Error::param("keep set must be nonempty"));
    }
    let mut pairs: Vec<usize> = keep.to_vec();
    pairs.sort_unstable();
    pairs.dedup();
    if let Some(&bad) = pairs.iter().find(|&&p| p >= state.pairs) {
        return Err(Error::param(format!(
            "pair index {bad} out of range for {} pairs",
            state.pairs
        )));
    }
    if pairs.len() == state.pairs {
        return Ok(state.clone());
    }
    let factors: Vec<usize> = pairs.iter().flat_map(|&p| [2 * p, 2 * p + 1]).collect();
    let reduced = linalg::partial_trace_factors(&state.data, &state.factor_dims(), &factors);
    Ok(BipartiteState::from_parts(
        state.dim_a,
        state.dim_b,
        pairs.len(),
        reduced,
    ))
}

/// Transpose on every B factor, in the computational basis.
pub fn partial_transpose(state: &BipartiteState) -> CMat {
    partial_transpose_operator(&state.data, &state.factor_dims())
}

/// Partial transpose of an arbitrary operator laid out as alternating
/// A/B factors `dims`; odd-position factors are transposed.
pub fn partial_transpose_operator(m: &CMat, dims: &[usize]) -> CMat {
    let which: Vec<bool> = (0..dims.len()).map(|f| f % 2 == 1).collect();
    linalg::partial_transpose_factors(m, dims, &which)
}

/// Half the trace norm of `a - b`.
pub fn trace_distance(a: &BipartiteState, b: &BipartiteState) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::dim("trace distance needs states of equal shape"));
    }
    Ok(0.5 * linalg::trace_norm_hermitian(&(&a.data - &b.data)))
}

/// Named families. `d` is the local dimension on both sides.
#[derive(Debug, Clone, PartialEq)]
pub enum StateFamily {
    /// `p` is the weight of the antisymmetric subspace, p ∈ [0, 1].
    Werner { d: usize, p: f64 },
    /// `f` is the overlap with φ_d, f ∈ [0, 1].
    Isotropic { d: usize, f: f64 },
    MaxEntangled { d: usize },
    /// Computational-basis product `|a⟩⊗|b⟩`.
    ProductPure { d: usize, a: usize, b: usize },
    /// Induced measure `G G† / tr`, `G` of size d² × env_dim. `env_dim = d²`
    /// is the Hilbert–Schmidt measure.
    RandomMixed { d: usize, env_dim: Option<usize> },
    /// Rejection-sampled from the induced measure until PPT.
    RandomPpt {
        d: usize,
        env_dim: Option<usize>,
        max_attempts: Option<usize>,
    },
    Explicit(BipartiteState),
}

pub const DEFAULT_PPT_ATTEMPTS: usize = 100_000;

impl StateFamily {
    pub fn needs_seed(&self) -> bool {
        matches!(
            self,
            StateFamily::RandomMixed { .. } | StateFamily::RandomPpt { .. }
        )
    }

    fn local_dim(&self) -> Option<usize> {
        match self {
            StateFamily::Werner { d, .. }
            | StateFamily::Isotropic { d, .. }
            | StateFamily::MaxEntangled { d }
            | StateFamily::ProductPure { d, .. }
            | StateFamily::RandomMixed { d, .. }
            | StateFamily::RandomPpt { d, .. } => Some(*d),
            StateFamily::Explicit(_) => None,
        }
    }
}

pub fn construct_state(spec: &StateFamily, seed: Option<u64>) -> Result<BipartiteState> {
    if let Some(d) = spec.local_dim() {
        if d < 2 {
            return Err(Error::param(format!("local dimension must be >= 2, got {d}")));
        }
    }
    if spec.needs_seed() && seed.is_none() {
        return Err(Error::param("random families require a seed"));
    }
    match *spec {
        StateFamily::Werner { d, p } => {
            check_unit(p, "werner p")?;
            Ok(werner(d, p))
        }
        StateFamily::Isotropic { d, f } => {
            check_unit(f, "isotropic f")?;
            Ok(isotropic(d, f))
        }
        StateFamily::MaxEntangled { d } => Ok(max_entangled(d)),
        StateFamily::ProductPure { d, a, b } => {
            if a >= d || b >= d {
                return Err(Error::param("product basis labels must be < d"));
            }
            let mut v = crate::linalg::CVec::zeros(d * d);
            v[a * d + b] = ONE;
            BipartiteState::pure(d, d, &v)
        }
        StateFamily::RandomMixed { d, env_dim } => {
            let mut rng = crate::seeded_rng(seed.unwrap_or_default());
            Ok(random_induced(&mut rng, d, d, env_dim.unwrap_or(d * d)))
        }
        StateFamily::RandomPpt {
            d,
            env_dim,
            max_attempts,
        } => {
            let mut rng = crate::seeded_rng(seed.unwrap_or_default());
            random_ppt(
                &mut rng,
                d,
                env_dim.unwrap_or(2 * d * d),
                max_attempts.unwrap_or(DEFAULT_PPT_ATTEMPTS),
            )
        }
        StateFamily::Explicit(ref s) => Ok(s.clone()),
    }
}

fn check_unit(x: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::param(format!("{what} must lie in [0, 1], got {x}")))
    }
}

/// SWAP on C^d ⊗ C^d.
pub fn swap_operator(d: usize) -> CMat {
    let mut s = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            s[(j * d + i, i * d + j)] = ONE;
        }
    }
    s
}

/// Normalized maximally entangled projector φ_d = (1/d) Σ_ij |ii⟩⟨jj|.
pub fn phi_projector(d: usize) -> CMat {
    let v = linalg::max_entangled_vector(d);
    linalg::projector(&v).scale(1.0 / d as f64)
}

pub fn max_entangled(d: usize) -> BipartiteState {
    BipartiteState::from_parts(d, d, 1, phi_projector(d))
}

pub fn werner(d: usize, p: f64) -> BipartiteState {
    let n = d * d;
    let id = CMat::identity(n, n);
    let swap = swap_operator(d);
    let anti = (&id - &swap).scale(0.5);
    let sym = (&id + &swap).scale(0.5);
    let da = (d * (d - 1) / 2) as f64;
    let ds = (d * (d + 1) / 2) as f64;
    BipartiteState::from_parts(d, d, 1, anti.scale(p / da) + sym.scale((1.0 - p) / ds))
}

pub fn isotropic(d: usize, f: f64) -> BipartiteState {
    let n = d * d;
    let phi = phi_projector(d);
    let rest = (CMat::identity(n, n) - &phi).scale((1.0 - f) / (n as f64 - 1.0));
    BipartiteState::from_parts(d, d, 1, phi.scale(f) + rest)
}

pub fn random_induced<R: Rng + ?Sized>(
    rng: &mut R,
    dim_a: usize,
    dim_b: usize,
    env_dim: usize,
) -> BipartiteState {
    let g = linalg::ginibre(rng, dim_a * dim_b, env_dim.max(1));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    BipartiteState::from_parts(dim_a, dim_b, 1, m.scale(1.0 / tr))
}

/// Hilbert–Schmidt random state on `pairs` copies, treated as one operator.
pub fn random_multi_pair<R: Rng + ?Sized>(
    rng: &mut R,
    dim_a: usize,
    dim_b: usize,
    pairs: usize,
) -> BipartiteState {
    let n = (dim_a * dim_b).pow(pairs as u32);
    let g = linalg::ginibre(rng, n, n);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    BipartiteState::from_parts(dim_a, dim_b, pairs, m.scale(1.0 / tr))
}

pub fn random_ppt<R: Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    env_dim: usize,
    max_attempts: usize,
) -> Result<BipartiteState> {
    for _ in 0..max_attempts {
        let s = random_induced(rng, d, d, env_dim);
        if linalg::min_eigenvalue(&partial_transpose(&s)) >= -STATE_TOL {
            return Ok(s);
        }
    }
    Err(Error::Sampling(format!(
        "no PPT sample in {max_attempts} attempts (d = {d}, env = {env_dim})"
    )))
}

/// Random Hermitian matrix with Gaussian entries (GUE-like, unnormalized).
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    linalg::hermitian_part(&linalg::ginibre(rng, n, n))
}

/// On-disk JSON form of a state: flat row-major list of `[re, im]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    #[serde(rename = "dimA")]
    pub dim_a: usize,
    #[serde(rename = "dimB")]
    pub dim_b: usize,
    #[serde(default = "one")]
    pub pairs: usize,
    pub matrix: Vec<[f64; 2]>,
}

fn one() -> usize {
    1
}

impl From<&BipartiteState> for StateFile {
    fn from(s: &BipartiteState) -> Self {
        StateFile {
            dim_a: s.dim_a,
            dim_b: s.dim_b,
            pairs: s.pairs,
            matrix: matrix_to_pairs(&s.data),
        }
    }
}

impl TryFrom<StateFile> for BipartiteState {
    type Error = Error;

    fn try_from(f: StateFile) -> Result<Self> {
        let n = (f.dim_a * f.dim_b)
            .checked_pow(f.pairs as u32)
            .ok_or_else(|| Error::param("state dimensions overflow"))?;
        let data = matrix_from_pairs(n, &f.matrix)?;
        BipartiteState::new(f.dim_a, f.dim_b, f.pairs, data)
    }
}

impl Serialize for BipartiteState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StateFile::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for BipartiteState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = StateFile::deserialize(d)?;
        BipartiteState::try_from(file).map_err(serde::de::Error::custom)
    }
}

pub fn matrix_to_pairs(m: &CMat) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            out.push([z.re, z.im]);
        }
    }
    out
}

pub fn matrix_from_pairs(n: usize, entries: &[[f64; 2]]) -> Result<CMat> {
    if entries.len() != n * n {
        return Err(Error::param(format!(
            "matrix has {} entries, expected {}",
            entries.len(),
            n * n
        )));
    }
    Ok(CMat::from_fn(n, n, |i, j| {
        let [re, im] = entries[i * n + j];
        c(re, im)
    }))
}
