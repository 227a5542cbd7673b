//! Pair permutations, the symmetrization channel and finite mixtures of
//! tensor powers.
//!
//! A [`Permutation`] `π` on k pairs is represented by the unitary `P_π` that
//! moves the content of pair `j` into slot `π(j)`, so that
//! `P_π P_σ = P_{π∘σ}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, ONE};
use crate::states::{self, BipartiteState, StateFile, DEFAULT_DIM_CAP};

mod fit;

pub use fit::{best_product_mixture_distance, MixtureSearch};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    /// `mapping[j] = π(j)`, 0-based.
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let k = mapping.len();
        let mut seen = vec![false; k];
        for &m in &mapping {
            if m >= k || seen[m] {
                return Err(Error::param(format!("{mapping:?} is not a bijection")));
            }
            seen[m] = true;
        }
        Ok(Self { mapping })
    }

    pub fn identity(k: usize) -> Self {
        Self {
            mapping: (0..k).collect(),
        }
    }

    /// Transposition of pairs `i` and `j`.
    pub fn swap(k: usize, i: usize, j: usize) -> Self {
        let mut mapping: Vec<usize> = (0..k).collect();
        mapping.swap(i, j);
        Self { mapping }
    }

    pub fn k(&self) -> usize {
        self.mapping.len()
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn apply(&self, j: usize) -> usize {
        self.mapping[j]
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            mapping: other.mapping.iter().map(|&j| self.mapping[j]).collect(),
        }
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.k()];
        for (j, &m) in self.mapping.iter().enumerate() {
            inv[m] = j;
        }
        Self { mapping: inv }
    }

    /// All k! permutations in lexicographic order.
    pub fn all(k: usize) -> Vec<Self> {
        let mut out = Vec::new();
        let mut current: Vec<usize> = (0..k).collect();
        loop {
            out.push(Self {
                mapping: current.clone(),
            });
            // next lexicographic permutation
            let Some(i) = (1..k).rev().find(|&i| current[i - 1] < current[i]) else {
                break;
            };
            let j = (i..k).rev().find(|&j| current[j] > current[i - 1]).unwrap();
            current.swap(i - 1, j);
            current[i..].reverse();
        }
        out
    }

    /// Index map `old → new` of `P_π` on `k` factors of dimension `dim`.
    fn index_map(&self, dim: usize) -> Vec<usize> {
        let order = self.inverse().mapping;
        linalg::factor_permutation_map(&vec![dim; self.k()], &order)
    }
}

/// Dense unitary `P_π` on k pairs of C^dA ⊗ C^dB.
pub fn permutation_operator(perm: &Permutation, dim_a: usize, dim_b: usize) -> Result<CMat> {
    let pair = dim_a * dim_b;
    let n = pair
        .checked_pow(perm.k() as u32)
        .filter(|&n| n <= DEFAULT_DIM_CAP)
        .ok_or(Error::Capacity {
            requested: pair.saturating_pow(perm.k() as u32),
            cap: DEFAULT_DIM_CAP,
        })?;
    let map = perm.index_map(pair);
    let mut u = CMat::zeros(n, n);
    for (old, &new) in map.iter().enumerate() {
        u[(new, old)] = ONE;
    }
    Ok(u)
}

/// `P_π ρ P_π†`.
pub fn conjugate(perm: &Permutation, state: &BipartiteState) -> Result<BipartiteState> {
    if perm.k() != state.pairs() {
        return Err(Error::dim(format!(
            "permutation on {} pairs applied to {}-pair state",
            perm.k(),
            state.pairs()
        )));
    }
    let map = perm.index_map(state.pair_dim());
    Ok(BipartiteState::from_parts(
        state.dim_a(),
        state.dim_b(),
        state.pairs(),
        remap(state.matrix(), &map),
    ))
}

fn remap(m: &CMat, map: &[usize]) -> CMat {
    let n = map.len();
    let mut out = CMat::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            out[(map[i], map[j])] = m[(i, j)];
        }
    }
    out
}

/// Average of `m` over the conjugations given by `maps`.
fn group_average(m: &CMat, maps: &[Vec<usize>]) -> CMat {
    let n = m.nrows();
    let mut acc = CMat::zeros(n, n);
    for map in maps {
        for j in 0..n {
            for i in 0..n {
                acc[(map[i], map[j])] += m[(i, j)];
            }
        }
    }
    acc.scale(1.0 / maps.len() as f64)
}

/// Group average over all pair permutations: `(1/k!) Σ_π P_π ω P_π†`.
pub fn symmetrize(state: &BipartiteState) -> BipartiteState {
    let maps: Vec<Vec<usize>> = Permutation::all(state.pairs())
        .iter()
        .map(|p| p.index_map(state.pair_dim()))
        .collect();
    BipartiteState::from_parts(
        state.dim_a(),
        state.dim_b(),
        state.pairs(),
        group_average(state.matrix(), &maps),
    )
}

/// Same average for an arbitrary operator on `k` pairs of dimension
/// `pair_dim` (used for dual-cone tests on non-states).
pub fn symmetrize_operator(m: &CMat, pair_dim: usize, k: usize) -> CMat {
    let maps: Vec<Vec<usize>> = Permutation::all(k)
        .iter()
        .map(|p| p.index_map(pair_dim))
        .collect();
    group_average(m, &maps)
}

/// Independent permutations of the A factors and of the B factors:
/// `(1/k!²) Σ_{π,π'} (P_π ⊗ P_π') ω (P_π ⊗ P_π')†`.
pub fn double_symmetrize(state: &BipartiteState) -> BipartiteState {
    let k = state.pairs();
    let perms = Permutation::all(k);
    let dims = state.factor_dims();
    let mut maps = Vec::with_capacity(perms.len() * perms.len());
    for pa in &perms {
        let ia = pa.inverse();
        for pb in &perms {
            let ib = pb.inverse();
            let order: Vec<usize> = (0..k)
                .flat_map(|s| [2 * ia.apply(s), 2 * ib.apply(s) + 1])
                .collect();
            maps.push(linalg::factor_permutation_map(&dims, &order));
        }
    }
    BipartiteState::from_parts(
        state.dim_a(),
        state.dim_b(),
        k,
        group_average(state.matrix(), &maps),
    )
}

/// Largest trace distance between `state` and its conjugate under any
/// adjacent transposition (these generate S_k).
pub fn symmetry_residual(state: &BipartiteState) -> f64 {
    let k = state.pairs();
    (0..k.saturating_sub(1))
        .map(|i| {
            let swapped = conjugate(&Permutation::swap(k, i, i + 1), state).expect("same k");
            states::trace_distance(state, &swapped).expect("same shape")
        })
        .fold(0.0, f64::max)
}

/// Finite de Finetti bound `4 d⁴ k / n` on the trace-norm distance between
/// the k-pair marginal of an n-pair symmetric state and the nearest mixture
/// of product powers.
pub fn definetti_bound(d: usize, k: usize, n: usize) -> Result<f64> {
    if k == 0 || n == 0 || k > n {
        return Err(Error::param(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let d = d as f64;
    Ok(4.0 * d.powi(4) * k as f64 / n as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    weights: Vec<f64>,
    members: Vec<BipartiteState>,
}

impl Ensemble {
    pub fn new(weights: Vec<f64>, members: Vec<BipartiteState>) -> Result<Self> {
        if weights.is_empty() || weights.len() != members.len() {
            return Err(Error::param("ensemble needs equally many (>0) weights and members"));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::param("ensemble weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::param(format!("ensemble weights sum to {total}, not 1")));
        }
        let first = &members[0];
        if members
            .iter()
            .any(|m| m.pairs() != 1 || m.dim_a() != first.dim_a() || m.dim_b() != first.dim_b())
        {
            return Err(Error::dim("ensemble members must be single pairs of equal dimensions"));
        }
        Ok(Self { weights, members })
    }

    pub fn singleton(state: BipartiteState) -> Result<Self> {
        Self::new(vec![1.0], vec![state])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn members(&self) -> &[BipartiteState] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `Σ w_i ρ_i`, the common single-pair marginal of every mixture of powers.
    pub fn average(&self) -> BipartiteState {
        let first = &self.members[0];
        let mut acc = CMat::zeros(first.dim(), first.dim());
        for (w, m) in self.weights.iter().zip(&self.members) {
            acc += m.matrix().scale(*w);
        }
        BipartiteState::from_parts(first.dim_a(), first.dim_b(), 1, acc)
    }

    /// Draws a member index according to the weights.
    pub fn sample_index<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        self.weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
    }
}

/// Member of an ensemble file: inline state or a path to a state file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MemberRef {
    Path(String),
    Inline(StateFile),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleFile {
    pub weights: Vec<f64>,
    pub members: Vec<MemberRef>,
}

impl EnsembleFile {
    /// Resolves path references relative to `base`.
    pub fn load(self, base: &std::path::Path) -> Result<Ensemble> {
        let members = self
            .members
            .into_iter()
            .map(|m| {
                let file = match m {
                    MemberRef::Inline(f) => f,
                    MemberRef::Path(p) => {
                        let text = std::fs::read_to_string(base.join(&p))
                            .map_err(|e| Error::param(format!("reading {p}: {e}")))?;
                        serde_json::from_str(&text)
                            .map_err(|e| Error::param(format!("parsing {p}: {e}")))?
                    }
                };
                BipartiteState::try_from(file)
            })
            .collect::<Result<Vec<_>>>()?;
        Ensemble::new(self.weights, members)
    }
}

impl From<&Ensemble> for EnsembleFile {
    fn from(e: &Ensemble) -> Self {
        EnsembleFile {
            weights: e.weights.clone(),
            members: e
                .members
                .iter()
                .map(|m| MemberRef::Inline(StateFile::from(m)))
                .collect(),
        }
    }
}

/// `Σ_i w_i ρ_i^{⊗k}`.
pub fn mixture_of_powers(ensemble: &Ensemble, k: usize) -> Result<BipartiteState> {
    let first = &ensemble.members[0];
    let mut acc: Option<CMat> = None;
    for (w, m) in ensemble.weights.iter().zip(&ensemble.members) {
        let power = states::tensor_power(m, k)?;
        let term = power.into_matrix().scale(*w);
        acc = Some(match acc {
            None => term,
            Some(a) => a + term,
        });
    }
    Ok(BipartiteState::from_parts(
        first.dim_a(),
        first.dim_b(),
        k,
        acc.expect("nonempty ensemble"),
    ))
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        cumsum += x;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}
