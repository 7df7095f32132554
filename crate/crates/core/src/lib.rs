//! Numerical comparison geometry: tube volumes around submanifolds, shape
//! operator transport along normal geodesics, k-Ricci curvature and checks of
//! the associated volume bounds on model manifolds.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod linalg;
pub mod model_kernels;
pub mod quadrature;
pub mod ray;
pub mod submanifolds;
pub mod tube;
pub mod verification;

pub use error::{GeomError, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The one RNG used throughout, seeded from the scenario seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
