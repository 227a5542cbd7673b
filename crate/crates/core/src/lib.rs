//! # distilkit
//!
//! Numerical toolkit for bipartite entanglement distillability.
//!
//! - [`states`]: density operators on k copies of C^dA ⊗ C^dB, named
//!   families, tensor products, partial traces and transposes.
//! - [`symmetry`]: pair permutations, the symmetrization channel, mixtures of
//!   tensor powers and the finite de Finetti bound.
//! - [`distillability`]: SLOCC singlet fraction by see-saw, Schmidt-rank-2
//!   single-copy tests, PPT checks and dual-cone pairings.
//! - [`tomography`]: minimal informationally complete POVMs, dual frames,
//!   simulated measurement, trace-norm projection and the
//!   estimate-then-distill pipeline.
//! - [`activation`]: the maximally-entangled-projection activation protocol
//!   and activator search.
//!
//! All randomness is driven by explicit `u64` seeds through [`seeded_rng`];
//! parallel optimizers reduce deterministically, so results do not depend on
//! the thread count.

#![forbid(unsafe_code)]

pub mod activation;
pub mod distillability;
pub mod error;
pub mod linalg;
pub mod states;
pub mod symmetry;
pub mod tomography;

pub use error::{Error, Result};
pub use states::BipartiteState;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed for the `index`-th independent sub-task of a run seeded by `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
