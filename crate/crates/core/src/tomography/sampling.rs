use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::Frame;
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::states::BipartiteState;

/// Outcome histogram of repeated frame measurements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    counts: Vec<u64>,
    shots: u64,
}

impl OutcomeCounts {
    pub fn new(counts: Vec<u64>) -> Self {
        let shots = counts.iter().sum();
        Self { counts, shots }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Empirical distribution; all zeros when no shots were taken.
    pub fn frequencies(&self) -> Vec<f64> {
        if self.shots == 0 {
            return vec![0.0; self.counts.len()];
        }
        let n = self.shots as f64;
        self.counts.iter().map(|&k| k as f64 / n).collect()
    }

    /// `Σ_k |f_k − p_k|`.
    pub fn l1_deviation(&self, p: &[f64]) -> f64 {
        self.frequencies()
            .iter()
            .zip(p)
            .map(|(f, q)| (f - q).abs())
            .sum()
    }
}

/// Born probabilities of `x` under `frame`, clipped at zero and renormalized.
pub(crate) fn born(frame: &Frame, x: &CMat) -> Result<Vec<f64>> {
    let raw = frame.probabilities(x);
    if let Some((k, &p)) = raw.iter().enumerate().find(|(_, &p)| p < -1e-12) {
        return Err(Error::Numerical(format!(
            "outcome {k} has negative probability {p:e}"
        )));
    }
    let total: f64 = raw.iter().sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::Numerical(format!(
            "outcome probabilities sum to {total}"
        )));
    }
    Ok(raw.iter().map(|&p| p.max(0.0) / total).collect())
}

/// `shots` i.i.d. measurements of `frame` on `state`.
pub fn simulate_measurements(
    state: &BipartiteState,
    frame: &Frame,
    shots: u64,
    seed: u64,
) -> Result<OutcomeCounts> {
    if frame.dim() != state.dim() {
        return Err(Error::dim(format!(
            "frame acts on dimension {}, state has {}",
            frame.dim(),
            state.dim()
        )));
    }
    let p = born(frame, state.matrix())?;
    let mut rng = crate::seeded_rng(seed);
    Ok(OutcomeCounts::new(multinomial(&mut rng, shots, &p)?))
}

/// Multinomial draw as a chain of conditional binomials.
fn multinomial<R: rand::Rng + ?Sized>(rng: &mut R, shots: u64, p: &[f64]) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; p.len()];
    let mut left = shots;
    let mut mass = 1.0f64;
    for (k, &pk) in p.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k + 1 == p.len() {
            counts[k] = left;
            break;
        }
        let q = if mass > 0.0 { (pk / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = Binomial::new(left, q)
            .map_err(|e| Error::Sampling(e.to_string()))?
            .sample(rng);
        counts[k] = draw;
        left -= draw;
        mass -= pk;
    }
    Ok(counts)
}

/// Linear-inversion estimate `X = Σ_k f_k M_k*`: Hermitian with unit trace,
/// not necessarily positive.
pub fn reconstruct(counts: &OutcomeCounts, frame: &Frame) -> Result<CMat> {
    if counts.len() != frame.len() {
        return Err(Error::dim(format!(
            "{} outcome counts for a frame with {} outcomes",
            counts.len(),
            frame.len()
        )));
    }
    if counts.shots() == 0 {
        return Err(Error::Sampling("no shots to reconstruct from".into()));
    }
    Ok(crate::linalg::hermitian_part(&frame.invert(&counts.frequencies())))
}

/// Large-deviation bound `2^{−n(δ²/(2 ln 2) − |X| log₂(n+1)/n)}` on the
/// probability that an empirical distribution deviates by more than `δ` in
/// L1 from the true one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chernoff {
    /// `log₂` of the raw bound.
    pub exponent: f64,
    pub raw: f64,
    /// `raw` clipped to `[0, 1]`.
    pub bound: f64,
}

pub fn chernoff_tail(delta: f64, n: u64, cardinality: usize) -> Result<Chernoff> {
    if !(delta > 0.0 && delta.is_finite()) || n == 0 || cardinality == 0 {
        return Err(Error::param(
            "chernoff_tail needs delta > 0, n >= 1, cardinality >= 1",
        ));
    }
    let nf = n as f64;
    let rate = delta * delta / (2.0 * std::f64::consts::LN_2)
        - cardinality as f64 * (nf + 1.0).log2() / nf;
    let exponent = -nf * rate;
    let raw = exponent.exp2();
    Ok(Chernoff {
        exponent,
        raw,
        bound: raw.clamp(0.0, 1.0),
    })
}
